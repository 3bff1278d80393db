// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include <doctest.h>

#include "defeat/element.hpp"
#include "defeat/errors.hpp"
#include "defeat/mesh.hpp"

using namespace defeat;
using std::numbers::pi;

namespace {

double weight_sum(const std::vector<QuadPoint>& q) {
  double s = 0;
  for (const QuadPoint& p : q) s += p.weight;
  return s;
}

std::vector<Vec3> element_coords(const Universe& u, int e) {
  std::vector<Vec3> c;
  for (int v : u.element(e)) c.push_back(u.vertices[v]);
  return c;
}

} // namespace

TEST_CASE("negative corner: the exact mesh is the simplified mesh minus the hole") {
  DomainDescription d = build_domain(Family::SquareCornerNeg, {0.01});
  MeshSet ms = generate_pair(d, {32, 0.7});
  CHECK_FALSE(ms.extension);

  std::set<int> exact, simplified;
  for (int e = 0; e < ms.exact.element_count(); ++e) exact.insert(ms.exact.universe_element(e));
  for (int e = 0; e < ms.defeatured.element_count(); ++e) simplified.insert(ms.defeatured.universe_element(e));
  for (int e : exact) CHECK(simplified.count(e) == 1);
  for (int e : simplified) {
    if (exact.count(e)) continue;
    CHECK(ms.universe->labels[e].region == Region::Negative);
  }
  CHECK(simplified.size() > exact.size());
  CHECK(ms.feature_adjacent_diameter <= 0.01 / 4);

  // Corresponding elements carry bit-identical vertex coordinates.
  for (int e = 0; e < ms.exact.element_count(); ++e) {
    int ue = ms.exact.universe_element(e);
    int de = ms.defeatured.local_element(ue);
    REQUIRE(de >= 0);
    for (int k = 0; k < 4; ++k)
      CHECK(ms.exact.vertex(ms.exact.element_vertex(e, k)) ==
            ms.defeatured.vertex(ms.defeatured.element_vertex(de, k)));
  }
}

TEST_CASE("graded 3D notch meets the feature-adjacent bound") {
  DomainDescription d = build_domain(Family::CubeCenterNeg, {0.1});
  MeshSet ms = generate_pair(d, {4, 0.7});
  CHECK(ms.universe->dim == 3);
  CHECK(ms.feature_adjacent_diameter <= 0.025 + 1e-12);
  // Every element touching the notch floor is at most a quarter of eps across.
  for (const BoundaryFace& f : ms.exact.faces()) {
    if (f.tag.tag != PieceTag::GammaN) continue;
    CHECK(element_diameter(*ms.universe, ms.exact.universe_element(f.element)) <= 0.025 + 1e-12);
  }
}

TEST_CASE("positive half-disk gets an extension mesh resolving gamma") {
  DomainDescription d = build_domain(Family::SquareHalfDiskPos, {0.01});
  MeshSet ms = generate_pair(d, {32, 0.7});
  REQUIRE(ms.extension);
  CHECK(ms.extension->tagged_vertices(PieceTag::GammaS).size() >= 8);
  CHECK(ms.extension->has_tag(PieceTag::Gamma0P));
  for (int e = 0; e < ms.extension->element_count(); ++e)
    CHECK(ms.extension->label(e).region == Region::Positive);
}

TEST_CASE("too coarse a mesh is refused with a usable minimum") {
  DomainDescription d = build_domain(Family::SquareCornerNeg, {0.01});
  CHECK_THROWS_AS(generate_pair(d, {1, 0.7}), ResolutionTooCoarse);
  DomainDescription cube = build_domain(Family::CubeEdgeNeg, {0.1});
  CHECK_THROWS_AS(generate_pair(cube, {4, 1.5}), ConfigurationError);
  DomainDescription disk = build_domain(Family::DiskStarHole, {1.83e-2});
  try {
    generate_pair(disk, {2, 0.7});
    FAIL("expected a refusal");
  } catch (const ResolutionTooCoarse& e) {
    CHECK(e.required_resolution() > 2);
    CHECK_NOTHROW(generate_pair(disk, {e.required_resolution(), 0.7}));
  }
}

TEST_CASE("boundary quadrature weights sum to the piece measure") {
  SUBCASE("bottom edge of the unit square") {
    MeshSet ms = generate_pair(build_domain(Family::SquareHalfDiskNeg, {0.01}), {16, 0.7});
    CHECK(weight_sum(boundary_quadrature(ms.defeatured, PieceTag::Dirichlet, 2)) ==
          doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("circle hole on a fine mesh") {
    const double r = 6.37e-2;
    MeshSet ms = generate_pair(build_domain(Family::DiskCircleHole, {r}), {128, 0.7});
    CHECK(std::abs(weight_sum(boundary_quadrature(ms.exact, PieceTag::GammaN, 4)) - 2 * pi * r) < 1e-4);
  }
  SUBCASE("flat 3D faces") {
    DomainDescription d = build_domain(Family::CubeCenterNeg, {0.1});
    MeshSet ms = generate_pair(d, {4, 0.7});
    for (PieceTag t : {PieceTag::GammaN, PieceTag::Dirichlet}) {
      CHECK(weight_sum(boundary_quadrature(ms.exact, t, 2)) == doctest::Approx(d.measure(t)).epsilon(1e-10));
    }
    CHECK(weight_sum(boundary_quadrature(ms.defeatured, PieceTag::Gamma0N, 2)) ==
          doctest::Approx(d.measure(PieceTag::Gamma0N)).epsilon(1e-10));
  }
}

TEST_CASE("hole normals point into the hole") {
  const double r = 6.37e-2;
  DomainDescription d = build_domain(Family::DiskCircleHole, {r});
  Vec3 center = d.piece(PieceTag::GammaN).components.at(0).a;
  MeshSet ms = generate_pair(d, {32, 0.7});
  for (const QuadPoint& q : boundary_quadrature(ms.exact, PieceTag::GammaN, 3)) {
    CHECK(norm(q.normal) == doctest::Approx(1.0).epsilon(1e-14));
    Vec3 radial = (q.point - center) / norm(q.point - center);
    CHECK(dot(q.normal, radial) < -0.99);
  }
}

TEST_CASE("curved measure converges at second order") {
  const double r = 6.37e-2;
  DomainDescription d = build_domain(Family::DiskCircleHole, {r});
  double prev = 0;
  for (int res : {16, 32, 64}) {
    MeshSet ms = generate_pair(d, {res, 0.7});
    double err = std::abs(weight_sum(boundary_quadrature(ms.exact, PieceTag::GammaN, 4)) - 2 * pi * r);
    if (prev > 0) CHECK(std::log2(prev / err) > 1.9);
    prev = err;
  }
}

TEST_CASE("missing tags raise a lookup error") {
  MeshSet ms = generate_pair(build_domain(Family::SquareCornerNeg, {0.01}), {16, 0.7});
  CHECK_THROWS_AS(boundary_quadrature(ms.exact, PieceTag::Gamma0P, 2), LookupError);
  CHECK_THROWS_AS(boundary_quadrature(ms.exact, PieceTag::Gamma0N, 2), LookupError);
}

TEST_CASE("every mesh has positive Jacobians and a once-tagged hull") {
  struct Probe {
    Family f;
    double s;
    int res;
  };
  const Probe probes[] = {{Family::DiskStarHole, 1.83e-2, 64}, {Family::ComplexOverlap, 0.01, 32},
                          {Family::TwoHoles, 1e-3, 16},        {Family::Round, 0.5, 16},
                          {Family::Fillet, 0.5, 16},           {Family::CubeEdgePos, 0.1, 4}};
  for (const Probe& p : probes) {
    CAPTURE(to_string(p.f));
    MeshSet ms = generate_pair(build_domain(p.f, {p.s}), {p.res, 0.7});
    const Universe& u = *ms.universe;
    const int dim = u.dim;
    const double g = 1 / std::sqrt(3.0);
    double worst = 1;
    for (int e = 0; e < u.element_count(); ++e) {
      if (u.labels[e].region == Region::Void) continue;
      auto c = element_coords(u, e);
      for (double a : {-g, g})
        for (double b : {-g, g})
          for (double z : dim == 3 ? std::vector<double>{-g, g} : std::vector<double>{0.0}) {
            Vec3 ref{0.5 + 0.5 * a, 0.5 + 0.5 * b, dim == 3 ? 0.5 + 0.5 * z : 0.0};
            worst = std::min(worst, evaluate_element(dim, c, ref).det);
          }
    }
    CHECK(worst > 0);

    for (const Mesh* m : {&ms.exact, &ms.defeatured}) {
      std::set<std::pair<int, int>> seen;
      for (const BoundaryFace& f : m->faces()) CHECK(seen.insert({f.element, f.face}).second);
      // Faces without a neighbour in this mesh are exactly the tagged ones,
      // apart from the collapsed faces at cusp tips.
      int hull = 0;
      for (int e = 0; e < m->element_count(); ++e) {
        int ue = m->universe_element(e);
        for (int k = 0; k < u.faces_per_element(); ++k) {
          int nb = u.neighbors[static_cast<std::size_t>(ue) * u.faces_per_element() + k];
          if (nb < 0 || m->local_element(nb) < 0) {
            auto rf = reference_face(dim, k);
            std::set<std::tuple<double, double, double>> distinct;
            for (int r : rf) {
              const Vec3& p = u.vertices[u.element(ue)[r]];
              distinct.insert({p.x, p.y, p.z});
            }
            if (static_cast<int>(distinct.size()) < dim) continue;
            ++hull;
            CHECK(seen.count({e, k}) == 1);
          }
        }
      }
      CHECK(hull == static_cast<int>(seen.size()));
    }
  }
}

TEST_CASE("mesh dump lists every record") {
  MeshSet ms = generate_pair(build_domain(Family::SquareCornerNeg, {0.1}), {16, 0.7});
  std::vector<double> vals(ms.exact.vertex_count(), 1.5);
  std::ostringstream os;
  write_mesh(os, ms.exact, &vals);
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  const int expected = 2 + 1 + ms.exact.vertex_count() + 1 + ms.exact.element_count() + 1 +
                       static_cast<int>(ms.exact.faces().size()) + 1 + ms.exact.vertex_count();
  CHECK(lines == expected);
  CHECK(os.str().find("gamma_n") != std::string::npos);
}
