// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <doctest.h>

#include "defeat/element.hpp"
#include "defeat/errors.hpp"
#include "defeat/fem.hpp"
#include "defeat/sparse.hpp"

using namespace defeat;

namespace {

// Unit square, meshed as the simplified domain of the corner notch.
MeshSet unit_square(int res) { return generate_pair(build_domain(Family::SquareCornerNeg, {0.25}), {res, 0.7}); }

ScalarField interpolate(const Mesh& m, const ScalarFn& fn) {
  std::vector<double> v(m.vertex_count());
  for (int i = 0; i < m.vertex_count(); ++i) v[i] = fn(m.vertex(i));
  return ScalarField(m, std::move(v));
}

PoissonSetup all_dirichlet(const Mesh& m, const ScalarFn& h) {
  PoissonSetup s;
  s.source = [](const Vec3&, Region) { return 0.0; };
  for (const BoundaryFace& f : m.faces()) {
    bool have = false;
    for (const auto& d : s.dirichlet) have |= d.tag == f.tag.tag;
    if (!have) s.dirichlet.push_back({f.tag.tag, h, nullptr});
  }
  return s;
}

// |u_h - u|_1 against an analytic gradient.
double h1_error(const ScalarField& uh, const std::function<Vec3(const Vec3&)>& grad) {
  const Mesh& m = uh.mesh();
  const GaussRule& g = gauss_rule(3);
  double sum = 0;
  for (int e = 0; e < m.element_count(); ++e) {
    std::vector<Vec3> c;
    for (int k = 0; k < 4; ++k) c.push_back(m.vertex(m.element_vertex(e, k)));
    for (std::size_t i = 0; i < g.points.size(); ++i)
      for (std::size_t j = 0; j < g.points.size(); ++j) {
        Vec3 ref{g.points[i], g.points[j]};
        ElementEval ev = evaluate_element(2, c, ref);
        Vec3 d = uh.gradient_at(m.universe_element(e), ref) - grad(ev.point);
        sum += g.weights[i] * g.weights[j] * ev.det * dot(d, d);
      }
  }
  return std::sqrt(sum);
}

double max_diameter(const Mesh& m) {
  double h = 0;
  for (int e = 0; e < m.element_count(); ++e) h = std::max(h, element_diameter(m.universe(), m.universe_element(e)));
  return h;
}

SparseMatrix laplacian_1d(int n) {
  TripletBuilder b(n);
  for (int i = 0; i < n; ++i) {
    b.add(i, i, 2.0);
    if (i > 0) b.add(i, i - 1, -1.0);
    if (i + 1 < n) b.add(i, i + 1, -1.0);
  }
  return b.build();
}

// u = 2y - y^2 solves -u'' = 2 with u = 0 at the bottom and zero flux elsewhere.
PoissonSetup manufactured(const Mesh& m) {
  PoissonSetup s;
  s.source = [](const Vec3&, Region) { return 2.0; };
  s.dirichlet.push_back({PieceTag::Dirichlet, [](const Vec3&) { return 0.0; }, nullptr});
  for (const BoundaryFace& f : m.faces()) {
    if (f.tag.tag == PieceTag::Dirichlet) continue;
    bool have = false;
    for (const auto& d : s.neumann) have |= d.tag == f.tag.tag;
    if (!have) s.neumann.push_back({f.tag.tag, [](const Vec3&) { return 0.0; }, nullptr});
  }
  return s;
}

} // namespace

TEST_CASE("linear fields are reproduced exactly") {
  SUBCASE("unit square") {
    MeshSet ms = unit_square(16);
    ScalarFn h = [](const Vec3& p) { return p.x; };
    ScalarField u = solve_poisson(ms.defeatured, all_dirichlet(ms.defeatured, h));
    for (int v = 0; v < ms.defeatured.vertex_count(); ++v)
      CHECK(std::abs(u.values[v] - ms.defeatured.vertex(v).x) < 1e-10);
  }
  SUBCASE("every 2D family") {
    for (Family f : {Family::DiskStarHole, Family::ComplexAdjacent, Family::TwoHoles, Family::Round, Family::Fillet}) {
      CAPTURE(to_string(f));
      DomainDescription d = build_domain(f, {default_size(f)});
      MeshSet ms = generate_pair(d, {64, 0.7});
      ScalarFn h = [](const Vec3& p) { return 0.3 + p.x - 2 * p.y; };
      ScalarField u = solve_poisson(ms.exact, all_dirichlet(ms.exact, h));
      double worst = 0;
      for (int v = 0; v < ms.exact.vertex_count(); ++v) worst = std::max(worst, std::abs(u.values[v] - h(ms.exact.vertex(v))));
      CHECK(worst < 1e-10);
    }
  }
  SUBCASE("trilinear, CG backend") {
    MeshSet ms = generate_pair(build_domain(Family::CubeEdgeNeg, {0.1}), {4, 0.7});
    ScalarFn h = [](const Vec3& p) { return p.x + 2 * p.y - p.z; };
    ScalarField u = solve_poisson(ms.exact, all_dirichlet(ms.exact, h), {1e-13, 0, LinearSolver::ConjugateGradient});
    double worst = 0;
    for (int v = 0; v < ms.exact.vertex_count(); ++v) worst = std::max(worst, std::abs(u.values[v] - h(ms.exact.vertex(v))));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("manufactured solution converges at first order in energy") {
  std::vector<double> hs, errs, flux_errs;
  for (int res : {16, 32, 64}) {
    MeshSet ms = unit_square(res);
    const Mesh& m = ms.defeatured;
    ScalarField u = solve_poisson(m, manufactured(m));
    // Dirichlet values are interpolated exactly.
    for (int v : m.tagged_vertices(PieceTag::Dirichlet)) CHECK(u.values[v] == 0.0);
    hs.push_back(max_diameter(m));
    errs.push_back(h1_error(u, [](const Vec3& p) { return Vec3{0, 2 - 2 * p.y}; }));

    // Outward normal at the bottom is -y, so the flux is -u'(0) = -2.
    auto q = boundary_quadrature(m, PieceTag::Dirichlet, 2);
    double worst = 0;
    for (double v : flux_trace(u, q)) worst = std::max(worst, std::abs(v + 2));
    flux_errs.push_back(worst);
  }
  double slope = std::log(errs.front() / errs.back()) / std::log(hs.front() / hs.back());
  CHECK(slope == doctest::Approx(1.0).epsilon(0.15));
  CHECK(flux_errs.back() < flux_errs.front());
  CHECK(flux_errs.back() < 2 * hs.back());
}

TEST_CASE("flux of the field x on the square walls") {
  MeshSet ms = unit_square(16);
  ScalarField u = interpolate(ms.defeatured, [](const Vec3& p) { return p.x; });
  auto q = boundary_quadrature(ms.defeatured, PieceTag::NeumannRest, 2);
  auto flux = flux_trace(u, q);
  int right = 0, top = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i].normal.x > 0.5) {
      CHECK(flux[i] == doctest::Approx(1.0).epsilon(1e-12));
      ++right;
    } else if (q[i].normal.y > 0.5) {
      CHECK(std::abs(flux[i]) < 1e-12);
      ++top;
    } else {
      CHECK(flux[i] == doctest::Approx(-1.0).epsilon(1e-12));
    }
  }
  CHECK(right > 0);
  CHECK(top > 0);
}

TEST_CASE("H1 seminorm difference") {
  MeshSet ms = unit_square(16);
  const Mesh& m = ms.defeatured;
  ScalarField x = interpolate(m, [](const Vec3& p) { return p.x; });
  ScalarField zero = interpolate(m, [](const Vec3&) { return 0.0; });
  CHECK(h1_seminorm_diff(x, zero) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h1_seminorm_diff(x, x) == 0.0);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  auto random_field = [&] {
    std::vector<double> v(m.vertex_count());
    for (double& a : v) a = U(rng);
    return ScalarField(m, std::move(v));
  };
  for (int trial = 0; trial < 10; ++trial) {
    ScalarField a = random_field(), b = random_field(), c = random_field();
    CHECK(h1_seminorm_diff(a, b) == h1_seminorm_diff(b, a));
    CHECK(h1_seminorm_diff(a, c) <= h1_seminorm_diff(a, b) + h1_seminorm_diff(b, c) + 1e-12);
  }
}

TEST_CASE("stiffness is symmetric and assembly is repeatable") {
  for (Family f : {Family::DiskStarHole, Family::CubeCenterPos}) {
    DomainDescription d = build_domain(f, {default_size(f)});
    MeshSet ms = generate_pair(d, {d.dim == 2 ? 64 : 4, 0.7});
    SparseMatrix a = assemble_stiffness(ms.exact);
    CHECK(a.max_asymmetry() <= 1e-14);
    SparseMatrix b = assemble_stiffness(ms.exact);
    CHECK(a.val == b.val);
  }
}

TEST_CASE("sparse solvers") {
  SUBCASE("identity") {
    std::vector<double> b{1, -2, 3.5, 0};
    CHECK(solve_spd(SparseMatrix::identity(4), b) == b);
  }
  SUBCASE("1D Laplacian against dense elimination") {
    const int n = 10;
    SparseMatrix a = laplacian_1d(n);
    std::vector<double> ones(n, 1.0);
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dense(i, j) = a.at(i, j);
    Eigen::VectorXd oracle = dense.partialPivLu().solve(Eigen::VectorXd::Ones(n));
    std::vector<double> cg = solve_spd(a, ones, 1e-14);
    std::vector<double> direct = solve_spd_direct(a, ones);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(cg[i] - oracle(i)) < 1e-10);
      CHECK(std::abs(direct[i] - oracle(i)) < 1e-10);
    }
  }
  SUBCASE("iteration cap reports the residual") {
    SparseMatrix a = laplacian_1d(50);
    try {
      solve_spd(a, std::vector<double>(50, 1.0), 1e-12, 2);
      FAIL("expected a solver failure");
    } catch (const SolverFailure& e) {
      CHECK(e.residual() > 1e-12);
    }
  }
}

TEST_CASE("a problem without Dirichlet vertices needs a gauge") {
  MeshSet ms = unit_square(16);
  PoissonSetup s;
  s.source = [](const Vec3&, Region) { return 0.0; };
  CHECK_THROWS_AS(solve_poisson(ms.defeatured, s), GaugeRequired);
  s.pure_neumann = true;
  ScalarField u = solve_poisson(ms.defeatured, s);
  for (double v : u.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("extension problem on a positive bump is well posed") {
  DomainDescription d = build_domain(Family::SquareHalfDiskPos, {0.01});
  MeshSet ms = generate_pair(d, {32, 0.7});
  ProblemData data = zero_data();
  data.f = [](const Vec3&) { return 1.0; };
  data.f_positive = data.f;
  data.f_negative = data.f;
  ScalarField u0 = solve_poisson(ms.defeatured, defeatured_problem(data));
  ScalarField ut = solve_poisson(*ms.extension, extension_problem(data, u0));
  // The trace on gamma_0p is copied from u0.
  for (int v : ms.extension->tagged_vertices(PieceTag::Gamma0P))
    CHECK(ut.values[v] == u0.vertex_value(ms.extension->universe_vertex(v)));
  for (double v : ut.values) CHECK(std::isfinite(v));
}

TEST_CASE("unset data roles are reported") {
  ProblemData data = zero_data();
  CHECK_NOTHROW(data.validate());
  data.g0 = nullptr;
  CHECK_THROWS_AS(data.validate(), ConfigurationError);
}
