// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Dense>
#include <doctest.h>

#include "defeat/defeaturing.hpp"
#include "defeat/element.hpp"
#include "defeat/errors.hpp"

using namespace defeat;
using std::numbers::pi;

namespace {

// Trace on the segment [0, len] of the x axis, split into `cells` partition
// cells, each sampled by `sub` Gauss panels of 6 points.
SigmaTrace line_trace(double len, int cells, const std::function<double(double)>& d, int sub = 8) {
  SigmaTrace t;
  t.dim = 2;
  t.measure = len;
  const GaussRule& g = gauss_rule(6);
  const double hc = len / cells, hs = hc / sub;
  for (int c = 0; c < cells; ++c) {
    t.partition.push_back({{c * hc, 0}, {hc, 0}, {}});
    for (int s = 0; s < sub; ++s)
      for (std::size_t i = 0; i < g.points.size(); ++i) {
        double x = c * hc + (s + g.points[i]) * hs;
        t.points.push_back({x, 0});
        t.weights.push_back(g.weights[i] * hs);
        t.normals.push_back({0, 1});
        t.defect.push_back(d(x));
      }
  }
  return t;
}

double l2(const SigmaTrace& t, const std::vector<double>& v) {
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += t.weights[i] * v[i] * v[i];
  return std::sqrt(s);
}

double bisect_eta() {
  double lo = 0.1, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (mid + std::log(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("eta and c_sigma") {
  const double e = eta();
  CHECK(std::abs(e + std::log(e)) < 1e-12);
  CHECK(e == doctest::Approx(bisect_eta()).epsilon(1e-12));
  CHECK(e == doctest::Approx(0.5671433).epsilon(1e-7));

  CHECK(c_sigma(3, 0.37) == 1.0);
  CHECK(c_sigma(2, std::exp(-2.0)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(c_sigma(2, 1.0) == doctest::Approx(0.7530891).epsilon(1e-7));
  CHECK(c_sigma(2, 1.0) == doctest::Approx(std::sqrt(bisect_eta())).epsilon(1e-12));

  const double knee = std::exp(-e);
  CHECK(std::abs(c_sigma(2, knee * (1 + 1e-13)) - c_sigma(2, knee * (1 - 1e-13))) < 1e-10);

  CHECK_THROWS_AS(c_sigma(2, 0.0), DomainError);
  CHECK_THROWS_AS(c_sigma(2, -1.0), DomainError);
  CHECK_THROWS_AS(c_sigma(4, 1.0), DomainError);
}

TEST_CASE("estimator of a constant defect") {
  SigmaTrace t = line_trace(0.5, 2, [](double) { return 2.0; });
  CHECK(t.quadrature_measure() == doctest::Approx(0.5).epsilon(1e-14));
  EstimatorReport r = estimator({t}, 2);
  CHECK(r.sigmas.at(0).fluctuation < 1e-14);
  CHECK(r.sigmas.at(0).c == doctest::Approx(std::sqrt(std::log(2.0))).epsilon(1e-14));
  CHECK(r.estimator == doctest::Approx(0.8325546).epsilon(1e-7));
  // Simplified indicator: c |sigma|^(1/2) ||d|| with ||d|| = 2 sqrt(0.5).
  CHECK(estimator_tilde({t}, 2) == doctest::Approx(0.8325546 * std::sqrt(0.5) * 2 * std::sqrt(0.5)).epsilon(1e-7));
  CHECK_THROWS_AS(estimator({t}, 4), DomainError);
  CHECK_THROWS_AS(estimator({}, 2), DomainError);
}

TEST_CASE("estimator vanishes exactly when the defects do") {
  SigmaTrace t = line_trace(0.3, 2, [](double) { return 0.0; });
  CHECK(estimator({t}, 2).estimator == 0.0);
  CHECK(estimator_tilde({t}, 2) == 0.0);
  t.defect[5] = 1e-9;
  CHECK(estimator({t}, 2).estimator > 0.0);
  t.defect[5] = 0;
  t.defect.back() = -1e-9;
  CHECK(estimator({t}, 2).estimator > 0.0);
}

TEST_CASE("zero-mean defect in 3D: simplified indicator equals the estimator") {
  SigmaTrace t = line_trace(1.0, 2, [](double x) { return std::cos(2 * pi * x); });
  t.dim = 3;
  EstimatorReport r = estimator({t}, 3);
  CHECK(std::abs(r.sigmas[0].mean) < 1e-14);
  CHECK(estimator_tilde({t}, 3) == doctest::Approx(r.estimator).epsilon(1e-12));
}

TEST_CASE("squared estimator is additive over disjoint pieces") {
  SigmaTrace a = line_trace(0.2, 2, [](double x) { return 1 + x * x; });
  SigmaTrace b = line_trace(0.7, 2, [](double x) { return std::sin(5 * x) - 0.3; });
  b.tag = PieceTag::GammaR;
  double ea = estimator({a}, 2).estimator, eb = estimator({b}, 2).estimator;
  EstimatorReport both = estimator({a, b}, 2);
  CHECK(std::abs(both.estimator * both.estimator - (ea * ea + eb * eb)) <= 1e-14 * (ea * ea + eb * eb));
  double sum = both.sigmas[0].contribution2 + both.sigmas[1].contribution2;
  CHECK(std::abs(both.estimator_rss * both.estimator_rss - sum) <= 1e-14 * sum);

  // Separate features add plainly.
  b.feature = 1;
  EstimatorReport split = estimator({a, b}, 2);
  REQUIRE(split.features.size() == 2);
  CHECK(split.estimator == doctest::Approx(ea + eb).epsilon(1e-14));
}

TEST_CASE("simplified indicator bounds the estimator on random defects") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  std::uniform_real_distribution<double> L(1e-3, 2.0);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 50; ++trial) {
      const double c0 = U(rng), c1 = U(rng), c2 = U(rng);
      SigmaTrace t = line_trace(L(rng), 3, [&](double x) { return c0 + c1 * std::sin(7 * x) + c2 * x * x; }, 2);
      t.dim = n;
      const double c = c_sigma(n, t.measure);
      CHECK(c >= std::sqrt(eta()) - 1e-15);
      // ||d||^2 = ||d - mean||^2 + |sigma| mean^2, so only the fluctuation
      // weight can differ, by the factor c^2.
      double e = estimator({t}, n).estimator, et = estimator_tilde({t}, n);
      CHECK(e <= std::max(1.0, 1.0 / c) * et * (1 + 1e-12));
    }
  }
}

TEST_CASE("projection onto continuous piecewise polynomials vanishing at the ends") {
  SUBCASE("hat function is reproduced") {
    SigmaTrace t = line_trace(1.0, 2, [](double x) { return 1 - std::abs(2 * x - 1); });
    auto p = clement_project(t, 1);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - t.defect[i]) < 1e-12);
    CHECK(oscillation({t}, 1, 2) < 1e-12);
  }
  SUBCASE("constant against a dense least-squares oracle") {
    SigmaTrace t = line_trace(1.0, 2, [](double) { return 1.0; });
    // Normal equations for the single hat on a 200-point midpoint grid.
    const int n = 200;
    Eigen::MatrixXd A(n, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) A(i, 0) = 1 - std::abs(2 * (i + 0.5) / n - 1);
    double c = (A.transpose() * A).ldlt().solve(A.transpose() * y)(0);
    CHECK(c == doctest::Approx(1.5).epsilon(1e-4));
    auto p = clement_project(t, 1);
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(p[i] == doctest::Approx(c * (1 - std::abs(2 * t.points[i].x - 1))).epsilon(1e-4));
  }
  SUBCASE("single cell: quadratic bubble") {
    SigmaTrace t = line_trace(1.0, 1, [](double) { return 1.0; });
    CHECK(l2(t, clement_project(t, 1)) < 1e-14);
    auto p = clement_project(t, 2);
    // <1, b> / <b, b> with b = 4 s (1 - s)
    for (std::size_t i = 0; i < p.size(); ++i) {
      double s = t.points[i].x;
      CHECK(p[i] == doctest::Approx(1.25 * 4 * s * (1 - s)).epsilon(1e-10));
    }
  }
  SUBCASE("degree zero with one cell is the zero space") {
    SigmaTrace t = line_trace(0.36, 1, [](double x) { return 3 + x; });
    CHECK(l2(t, clement_project(t, 0)) == 0.0);
    CHECK(oscillation({t}, 0, 2) == doctest::Approx(std::sqrt(0.36) * l2(t, t.defect)).epsilon(1e-14));
  }
  SUBCASE("empty partition") {
    SigmaTrace t = line_trace(1.0, 1, [](double) { return 1.0; });
    t.partition.clear();
    CHECK_THROWS_AS(clement_project(t, 1), ConfigurationError);
  }
}

TEST_CASE("oscillation decays at order m + 1 under partition refinement") {
  for (int m : {1, 2}) {
    std::vector<double> osc;
    for (int cells : {4, 8, 16}) {
      SigmaTrace t = line_trace(1.0, cells, [](double x) { return std::sin(pi * x) + x * (1 - x) * std::exp(x); });
      osc.push_back(oscillation({t}, m, 2));
    }
    double slope = std::log2(osc.front() / osc.back()) / 2;
    CAPTURE(m);
    CHECK(slope >= m + 1 - 0.15);
  }
}

TEST_CASE("defect signs on every face orientation") {
  SUBCASE("square hole, u = x") {
    const double r = 5e-2;
    DomainDescription d = build_domain(Family::DiskSquareHole, {r});
    MeshSet ms = generate_pair(d, {32, 0.7});
    std::vector<double> vals(ms.exact.vertex_count());
    for (int v = 0; v < ms.exact.vertex_count(); ++v) vals[v] = ms.exact.vertex(v).x;
    ScalarField ud(ms.exact, vals);
    auto traces = sigma_defects(ud, d, zero_data(), ms);
    REQUIRE(traces.size() == 1);
    const SigmaTrace& t = traces[0];
    int left = 0, right = 0, flat = 0;
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const Vec3& p = t.points[i];
      if (std::abs(p.x + r) < 1e-12 && std::abs(p.y) < r - 1e-12) {
        CHECK(t.defect[i] == doctest::Approx(-1.0).epsilon(1e-12));
        ++left;
      } else if (std::abs(p.x - r) < 1e-12 && std::abs(p.y) < r - 1e-12) {
        CHECK(t.defect[i] == doctest::Approx(1.0).epsilon(1e-12));
        ++right;
      } else {
        CHECK(std::abs(t.defect[i]) < 1e-12);
        ++flat;
      }
    }
    CHECK(left > 0);
    CHECK(right > 0);
    CHECK(flat > 0);
  }
  SUBCASE("box notch, u = x, y, z") {
    DomainDescription d = build_domain(Family::CubeCenterNeg, {0.1});
    MeshSet ms = generate_pair(d, {4, 0.7});
    // Bounding box of the notch from its pieces.
    Vec3 lo{1e9, 1e9, 1e9}, hi{-1e9, -1e9, -1e9};
    for (PieceTag tag : {PieceTag::GammaN, PieceTag::Gamma0N})
      for (const Component& c : d.piece(tag).components)
        for (Vec3 p : {c.a, c.a + c.b, c.a + c.c, c.a + c.b + c.c})
          for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
          }
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<double> vals(ms.exact.vertex_count());
      for (int v = 0; v < ms.exact.vertex_count(); ++v) vals[v] = ms.exact.vertex(v)[axis];
      ScalarField ud(ms.exact, vals);
      auto traces = sigma_defects(ud, d, zero_data(), ms);
      REQUIRE(traces.size() == 1);
      const SigmaTrace& t = traces[0];
      std::set<int> seen;
      for (std::size_t i = 0; i < t.points.size(); ++i) {
        // Outward normal of the notch, from the face the point lies on.
        Vec3 nf;
        int face = -1;
        for (int k = 0; k < 3; ++k) {
          if (std::abs(t.points[i][k] - lo[k]) < 1e-12) nf[k] = -1, face = 2 * k;
          if (std::abs(t.points[i][k] - hi[k]) < 1e-12) nf[k] = 1, face = 2 * k + 1;
        }
        REQUIRE(face >= 0);
        CHECK(t.defect[i] == doctest::Approx(nf[axis]).epsilon(1e-12));
        seen.insert(face);
      }
      CHECK(seen.size() == 4);
    }
  }
}

TEST_CASE("negative features: the general estimator is the negative one") {
  DomainDescription d = build_domain(Family::SquareHalfDiskNeg, {0.02});
  MeshSet ms = generate_pair(d, {32, 0.7});
  ProblemData data = zero_data();
  data.f = [](const Vec3& p) { return 10 * std::cos(3 * pi * p.x) * std::sin(5 * pi * p.y); };
  data.f_negative = data.f;
  data.f_positive = data.f;
  ScalarField u0 = solve_poisson(ms.defeatured, defeatured_problem(data));
  ScalarField ud = assemble_ud(u0, nullptr, ms.exact);
  EstimatorReport r = estimator(sigma_defects(ud, d, data, ms), 2);

  // Independent path: d = g + du0/dn_F with n_F = -n, straight from u0 on the simplified mesh.
  auto q = boundary_quadrature(ms.exact, PieceTag::GammaN, 4);
  auto flux = flux_trace(u0, q);
  double area = 0, mean = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    area += q[i].weight;
    mean += q[i].weight * -flux[i];
  }
  mean /= area;
  double fl2 = 0;
  for (std::size_t i = 0; i < q.size(); ++i) fl2 += q[i].weight * std::pow(-flux[i] - mean, 2);
  const double g = d.measure(PieceTag::GammaN);
  const double c = c_sigma(2, g);
  const double en = std::sqrt(g * fl2 + c * c * g * g * mean * mean);
  CHECK(std::abs(r.estimator - en) <= 1e-14 * en);
}

TEST_CASE("extended defeatured solution") {
  SUBCASE("negative feature: restriction of u0") {
    DomainDescription d = build_domain(Family::SquareCornerNeg, {0.05});
    MeshSet ms = generate_pair(d, {32, 0.7});
    ProblemData data = zero_data();
    data.f = [](const Vec3&) { return 1.0; };
    data.f_negative = data.f;
    data.f_positive = data.f;
    ScalarField u0 = solve_poisson(ms.defeatured, defeatured_problem(data));
    ScalarField ud = assemble_ud(u0, nullptr, ms.exact);
    for (int v = 0; v < ms.exact.vertex_count(); ++v)
      CHECK(ud.values[v] == u0.vertex_value(ms.exact.universe_vertex(v)));
  }
  SUBCASE("positive feature with constant data stays constant") {
    DomainDescription d = build_domain(Family::SquareHalfDiskPos, {0.05});
    MeshSet ms = generate_pair(d, {32, 0.7});
    ProblemData data = zero_data();
    data.h = [](const Vec3&) { return 0.75; };
    ScalarField u0 = solve_poisson(ms.defeatured, defeatured_problem(data));
    ScalarField ut = solve_poisson(*ms.extension, extension_problem(data, u0));
    ScalarField ud = assemble_ud(u0, &ut, ms.exact);
    for (double v : ud.values) CHECK(v == doctest::Approx(0.75).epsilon(1e-10));
  }
  SUBCASE("complex feature: both branches") {
    DomainDescription d = build_domain(Family::ComplexAdjacent, {0.01});
    MeshSet ms = generate_pair(d, {32, 0.7});
    ProblemData data = zero_data();
    data.f = [](const Vec3& p) { return 10 * std::cos(3 * pi * p.x) * std::sin(5 * pi * p.y); };
    data.f_negative = data.f;
    data.f_positive = data.f;
    ScalarField u0 = solve_poisson(ms.defeatured, defeatured_problem(data));
    ScalarField ut = solve_poisson(*ms.extension, extension_problem(data, u0));
    ScalarField ud = assemble_ud(u0, &ut, ms.exact);
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> pick(0, ms.exact.element_count() - 1);
    std::uniform_real_distribution<double> U(0, 1);
    int star = 0, pos = 0;
    for (int k = 0; k < 4000 && (star < 100 || pos < 100); ++k) {
      int e = pick(rng);
      int ue = ms.exact.universe_element(e);
      Vec3 ref{U(rng), U(rng)};
      if (ms.exact.label(e).region == Region::Positive) {
        if (pos++ >= 100) continue;
        CHECK(ud.value_at(ue, ref) == doctest::Approx(ut.value_at(ue, ref)).epsilon(1e-14));
      } else {
        if (star++ >= 100) continue;
        CHECK(ud.value_at(ue, ref) == doctest::Approx(u0.value_at(ue, ref)).epsilon(1e-14));
      }
    }
    CHECK(star >= 100);
    CHECK(pos >= 100);
  }
}

TEST_CASE("data-only defect means") {
  SUBCASE("no data, no defect") {
    DomainDescription d = build_domain(Family::DiskCircleHole, {0.05});
    MeshSet ms = generate_pair(d, {32, 0.7});
    for (const FluxPrediction& p : flux_residual(d, zero_data(), ms)) CHECK(p.predicted_mean == 0.0);
  }
  SUBCASE("unit flux out of a disk hole with unit source") {
    const double eps = 0.05;
    DomainDescription d = build_domain(Family::DiskCircleHole, {eps});
    ProblemData data = zero_data();
    data.f = [](const Vec3&) { return 1.0; };
    data.f_negative = data.f;
    data.f_positive = data.f;
    data.g_feature = [](const Vec3&) { return 1.0; };
    std::vector<double> gaps;
    for (int res : {16, 32, 64}) {
      MeshSet ms = generate_pair(d, {res, 0.7});
      auto pred = flux_residual(d, data, ms);
      REQUIRE(pred.size() == 1);
      // Polygonal hole: the prediction carries the chord error, second order.
      CHECK(pred[0].predicted_mean == doctest::Approx(1 - eps / 2).epsilon(2.0 / (res * res)));

      ScalarField u0 = solve_poisson(ms.defeatured, defeatured_problem(data));
      ScalarField ud = assemble_ud(u0, nullptr, ms.exact);
      auto traces = sigma_defects(ud, d, data, ms);
      gaps.push_back(std::abs(traces.at(0).mean() - (1 - eps / 2)));
    }
    // Each step halves the mesh size; the discrete mean approaches the
    // closed-form value at order one or better.
    CHECK(std::log2(gaps[0] / gaps[2]) / 2 >= 1.0);
  }
}
