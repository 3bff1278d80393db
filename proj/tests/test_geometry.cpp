// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "defeat/errors.hpp"
#include "defeat/geometry.hpp"

using namespace defeat;
using std::numbers::pi;

namespace {

// Polyline length of a curved component, independent of Component::measure.
double polyline_length(const Component& c, int n) {
  double len = 0;
  Vec3 prev = c.point(0.0);
  for (int i = 1; i <= n; ++i) {
    Vec3 p = c.point(static_cast<double>(i) / n);
    len += norm(p - prev);
    prev = p;
  }
  return len;
}

double total(const DomainDescription& d, std::initializer_list<PieceTag> tags) {
  double s = 0;
  for (PieceTag t : tags) s += d.measure(t);
  return s;
}

} // namespace

TEST_CASE("corner square hole has gamma and gamma0 of length 2 eps") {
  DomainDescription d = build_domain(Family::SquareCornerNeg, {0.01});
  CHECK(d.dim == 2);
  CHECK(d.feature_sign == FeatureSign::Negative);
  CHECK(d.measure(PieceTag::GammaN) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(d.measure(PieceTag::Gamma0N) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("empty or negative feature size is rejected") {
  CHECK_THROWS_AS(build_domain(Family::DiskCircleHole, {0.0}), InvalidGeometry);
  CHECK_THROWS_AS(build_domain(Family::DiskCircleHole, {-0.1}), InvalidGeometry);
  CHECK_THROWS_AS(build_domain(Family::SquareCornerNeg, {1.5}), InvalidGeometry);
}

TEST_CASE("half-disk hole perimeter matches the parametric curve") {
  const double eps = 0.01;
  DomainDescription d = build_domain(Family::SquareHalfDiskNeg, {eps});
  CHECK(d.measure(PieceTag::GammaN) == doctest::Approx(pi * eps).epsilon(1e-12));
  CHECK(d.measure(PieceTag::Gamma0N) == doctest::Approx(2 * eps).epsilon(1e-12));

  BoundaryPiece g = d.piece(PieceTag::GammaN);
  REQUIRE(g.components.size() == 1);
  REQUIRE(g.components[0].curved());
  CHECK(polyline_length(g.components[0], 20000) == doctest::Approx(0.0314159).epsilon(1e-6));
}

TEST_CASE("hole perimeters of the shape comparison") {
  CHECK(boundary_measures(build_domain(Family::DiskStarHole, {1.83e-2}))[PieceTag::GammaN] ==
        doctest::Approx(0.400).epsilon(1e-3));
  CHECK(boundary_measures(build_domain(Family::DiskSquareHole, {5e-2}))[PieceTag::GammaN] ==
        doctest::Approx(0.400).epsilon(1e-12));
  CHECK(boundary_measures(build_domain(Family::DiskCircleHole, {6.37e-2}))[PieceTag::GammaN] ==
        doctest::Approx(2 * pi * 6.37e-2).epsilon(1e-12));
}

TEST_CASE("fillet arc is a quarter circle of radius one half") {
  for (ExtensionChoice e : {ExtensionChoice::Identity, ExtensionChoice::BoundingBox, ExtensionChoice::CustomArc}) {
    DomainDescription d = build_domain(Family::Fillet, {0.5, e});
    CHECK_FALSE(d.covered_by_theory);
    double arc = d.measure(PieceTag::GammaR) + d.measure(PieceTag::GammaS);
    CHECK(arc == doctest::Approx(pi / 4).epsilon(1e-12));
    for (PieceTag t : {PieceTag::GammaR, PieceTag::GammaS})
      for (const Component& c : d.piece(t).components)
        if (c.curved()) CHECK(polyline_length(c, 20000) == doctest::Approx(pi / 4).epsilon(1e-8));
  }
}

TEST_CASE("pieces partition the exact and the simplified boundary") {
  SUBCASE("corner hole") {
    DomainDescription d = build_domain(Family::SquareCornerNeg, {0.01});
    CHECK(total(d, {PieceTag::Dirichlet, PieceTag::NeumannRest, PieceTag::GammaN}) ==
          doctest::Approx(4.0).epsilon(1e-12));
    CHECK(total(d, {PieceTag::Dirichlet, PieceTag::NeumannRest, PieceTag::Gamma0N}) ==
          doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("half-disk hole") {
    DomainDescription d = build_domain(Family::SquareHalfDiskNeg, {0.01});
    CHECK(total(d, {PieceTag::Dirichlet, PieceTag::NeumannRest, PieceTag::GammaN}) ==
          doctest::Approx(3.98 + 0.01 * pi).epsilon(1e-12));
  }
  SUBCASE("half-disk bump") {
    DomainDescription d = build_domain(Family::SquareHalfDiskPos, {0.01});
    // Exact boundary: walls plus gamma_p. Simplified boundary: walls plus gamma_0p.
    CHECK(total(d, {PieceTag::Dirichlet, PieceTag::NeumannRest, PieceTag::GammaS, PieceTag::GammaR}) ==
          doctest::Approx(3.98 + 0.01 * pi).epsilon(1e-12));
    CHECK(total(d, {PieceTag::Dirichlet, PieceTag::NeumannRest, PieceTag::Gamma0P}) ==
          doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("feature sign decides which tags are populated") {
  for (Family f : {Family::SquareHalfDiskNeg, Family::SquareCornerNeg, Family::DiskStarHole, Family::CubeEdgeNeg}) {
    DomainDescription d = build_domain(f, {default_size(f)});
    CHECK(d.has_negative());
    CHECK_FALSE(d.has_positive());
    CHECK(d.piece(PieceTag::Gamma0P).empty());
    CHECK(d.piece(PieceTag::GammaR).empty());
    CHECK(d.piece(PieceTag::GammaS).empty());
  }
  for (Family f : {Family::SquareHalfDiskPos, Family::SquareCornerPos, Family::CubeCenterPos}) {
    DomainDescription d = build_domain(f, {default_size(f)});
    CHECK(d.has_positive());
    CHECK_FALSE(d.has_negative());
    CHECK(d.piece(PieceTag::GammaN).empty());
    CHECK(d.piece(PieceTag::Gamma0N).empty());
  }
  for (Family f : {Family::ComplexAdjacent, Family::ComplexOverlap}) {
    DomainDescription d = build_domain(f, {0.01});
    CHECK(d.feature_sign == FeatureSign::Complex);
    CHECK_FALSE(d.piece(PieceTag::GammaN).empty());
    CHECK_FALSE(d.piece(PieceTag::Gamma0P).empty());
  }
}

TEST_CASE("measures scale with the feature size") {
  DomainDescription a = build_domain(Family::SquareCornerNeg, {0.02});
  DomainDescription b = build_domain(Family::SquareCornerNeg, {0.01});
  CHECK(a.measure(PieceTag::GammaN) == doctest::Approx(2 * b.measure(PieceTag::GammaN)).epsilon(1e-14));

  DomainDescription c = build_domain(Family::CubeCenterNeg, {0.1});
  DomainDescription e = build_domain(Family::CubeCenterNeg, {0.05});
  CHECK(c.dim == 3);
  CHECK(c.measure(PieceTag::GammaN) == doctest::Approx(4 * e.measure(PieceTag::GammaN)).epsilon(1e-14));
  CHECK(c.measure(PieceTag::Gamma0N) == doctest::Approx(4 * e.measure(PieceTag::Gamma0N)).epsilon(1e-14));
}

TEST_CASE("two holes are separate features of one negative domain") {
  DomainDescription d = build_domain(Family::TwoHoles, {1e-3});
  REQUIRE(d.feature_count() == 2);
  CHECK(d.measure(PieceTag::GammaN, 0) + d.measure(PieceTag::GammaN, 1) ==
        doctest::Approx(d.measure(PieceTag::GammaN)).epsilon(1e-14));
}

TEST_CASE("component measures") {
  CHECK(Component::segment({0, 0}, {3, 4}).measure() == doctest::Approx(5.0));
  CHECK(Component::arc({0, 0}, 2.0, 0, pi).measure() == doctest::Approx(2 * pi));
  CHECK(Component::rectangle({0, 0, 0}, {2, 0, 0}, {0, 0, 3}).measure() == doctest::Approx(6.0));
  Component s = Component::segment({0, 0}, {1, 0});
  CHECK(s.contains({0.5, 0}, 1e-12));
  CHECK_FALSE(s.contains({0.5, 0.1}, 1e-12));
}

TEST_CASE("names round-trip") {
  for (Family f : {Family::DiskStarHole, Family::TwoHoles, Family::CubeEdgePos, Family::Round, Family::Fillet}) {
    auto back = family_from_string(to_string(f));
    REQUIRE(back);
    CHECK(*back == f);
  }
  CHECK_FALSE(family_from_string("teapot"));
  for (ExtensionChoice e : {ExtensionChoice::BoundingBox, ExtensionChoice::CustomArc, ExtensionChoice::Identity})
    CHECK(*extension_from_string(to_string(e)) == e);
}
