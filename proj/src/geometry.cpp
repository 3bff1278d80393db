// SPDX-License-Identifier: Apache-2.0
#include "defeat/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "defeat/errors.hpp"

namespace defeat {

namespace {

constexpr double pi = std::numbers::pi;

struct FamilyName {
  Family family;
  std::string_view name;
};

constexpr std::array<FamilyName, 16> family_names{{
    {Family::DiskStarHole, "disk-star-hole"},
    {Family::DiskCircleHole, "disk-circle-hole"},
    {Family::DiskSquareHole, "disk-square-hole"},
    {Family::SquareHalfDiskNeg, "square-half-disk-neg"},
    {Family::SquareCornerNeg, "square-corner-neg"},
    {Family::SquareHalfDiskPos, "square-half-disk-pos"},
    {Family::SquareCornerPos, "square-corner-pos"},
    {Family::ComplexAdjacent, "complex-adjacent"},
    {Family::ComplexOverlap, "complex-overlap"},
    {Family::TwoHoles, "two-holes"},
    {Family::CubeCenterNeg, "cube-center-neg"},
    {Family::CubeEdgeNeg, "cube-edge-neg"},
    {Family::CubeCenterPos, "cube-center-pos"},
    {Family::CubeEdgePos, "cube-edge-pos"},
    {Family::Round, "round"},
    {Family::Fillet, "fillet"},
}};

Vec3 v2(double x, double y) { return {x, y, 0.0}; }

void add(DomainDescription& d, PieceTag tag, int feature, std::vector<Component> comps) {
  BoundaryPiece p;
  p.tag = tag;
  p.feature = feature;
  p.components = std::move(comps);
  d.pieces.push_back(std::move(p));
}

// Closed polygon as a list of segments.
std::vector<Component> polygon(const std::vector<Vec3>& pts) {
  std::vector<Component> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    out.push_back(Component::segment(pts[i], pts[(i + 1) % pts.size()]));
  return out;
}

std::vector<Vec3> star_vertices(double r) {
  std::vector<Vec3> pts;
  for (int k = 0; k < 10; ++k) {
    double tip = 2.0 * pi * k / 10.0;
    double valley = tip + pi / 10.0;
    pts.push_back(v2(2.0 * r * std::cos(tip), 2.0 * r * std::sin(tip)));
    pts.push_back(v2(r * std::cos(valley), r * std::sin(valley)));
  }
  return pts;
}

// Rectangle of the cube boundary or of a box feature, given by the fixed
// axis, its coordinate, and the ranges of the other two axes.
Component box_face(int axis, double value, std::array<double, 2> r1, std::array<double, 2> r2) {
  int a1 = (axis + 1) % 3;
  int a2 = (axis + 2) % 3;
  Vec3 corner;
  corner[axis] = value;
  corner[a1] = r1[0];
  corner[a2] = r2[0];
  Vec3 e1, e2;
  e1[a1] = r1[1] - r1[0];
  e2[a2] = r2[1] - r2[0];
  return Component::rectangle(corner, e1, e2);
}

struct Box3 {
  std::array<double, 3> lo;
  std::array<double, 3> hi;
};

Component face_of(const Box3& b, int axis, bool upper) {
  int a1 = (axis + 1) % 3;
  int a2 = (axis + 2) % 3;
  return box_face(axis, upper ? b.hi[axis] : b.lo[axis], {b.lo[a1], b.hi[a1]},
                  {b.lo[a2], b.hi[a2]});
}

void require(bool ok, std::string_view what) {
  if (!ok) throw InvalidGeometry(std::string(what));
}

void check_size(Family f, double s, double lo_excl, double hi_incl) {
  if (!(s > lo_excl) || !(s <= hi_incl))
    throw InvalidGeometry(fmt::format("{}: size parameter {} outside ({}, {}]", to_string(f), s,
                                      lo_excl, hi_incl));
}

// Walls of the unit square minus the given openings on the top edge.
// Each opening is an x interval on y = 1.
std::vector<Component> square_walls_except_bottom(std::vector<std::array<double, 2>> top_gaps,
                                                  double right_top = 1.0) {
  std::vector<Component> out;
  out.push_back(Component::segment(v2(1, 0), v2(1, right_top)));
  out.push_back(Component::segment(v2(0, 1), v2(0, 0)));
  std::sort(top_gaps.begin(), top_gaps.end());
  double x = 0.0;
  for (const auto& g : top_gaps) {
    if (g[0] > x) out.push_back(Component::segment(v2(x, 1), v2(g[0], 1)));
    x = std::max(x, g[1]);
  }
  if (x < 1.0) out.push_back(Component::segment(v2(x, 1), v2(1, 1)));
  return out;
}

// Isotropy heuristic: compare the component extent with its measure.
void isotropy_warnings(DomainDescription& d) {
  for (const auto& p : d.pieces) {
    if (p.tag != PieceTag::GammaN && p.tag != PieceTag::Gamma0P && p.tag != PieceTag::GammaR)
      continue;
    for (const auto& c : p.components) {
      double m = c.measure();
      double scale = d.dim == 2 ? m : std::sqrt(m);
      double diam = c.diameter();
      if (diam <= 0) continue;
      double ratio = std::max(scale / diam, diam / scale);
      if (ratio > 10.0)
        d.warnings.push_back(fmt::format("{} of feature {} is anisotropic (ratio {:.3g})",
                                         to_string(p.tag), p.feature, ratio));
    }
  }
}

} // namespace

std::string_view to_string(Family f) {
  for (const auto& e : family_names)
    if (e.family == f) return e.name;
  return "unknown";
}

std::optional<Family> family_from_string(std::string_view s) {
  for (const auto& e : family_names)
    if (e.name == s) return e.family;
  return std::nullopt;
}

std::string_view to_string(PieceTag t) {
  switch (t) {
  case PieceTag::GammaN: return "gamma_n";
  case PieceTag::GammaR: return "gamma_r";
  case PieceTag::Gamma0P: return "gamma_0p";
  case PieceTag::Gamma0N: return "gamma_0n";
  case PieceTag::GammaS: return "gamma_s";
  case PieceTag::GammaTilde: return "gamma_tilde";
  case PieceTag::Dirichlet: return "dirichlet";
  case PieceTag::NeumannRest: return "neumann";
  }
  return "unknown";
}

std::string_view to_string(FeatureSign s) {
  switch (s) {
  case FeatureSign::Negative: return "negative";
  case FeatureSign::Positive: return "positive";
  case FeatureSign::Complex: return "complex";
  }
  return "unknown";
}

std::string_view to_string(ExtensionChoice e) {
  switch (e) {
  case ExtensionChoice::BoundingBox: return "bounding-box";
  case ExtensionChoice::CustomArc: return "custom-arc";
  case ExtensionChoice::Identity: return "identity";
  }
  return "unknown";
}

std::optional<ExtensionChoice> extension_from_string(std::string_view s) {
  if (s == "bounding-box") return ExtensionChoice::BoundingBox;
  if (s == "custom-arc") return ExtensionChoice::CustomArc;
  if (s == "identity") return ExtensionChoice::Identity;
  return std::nullopt;
}

int family_dimension(Family f) {
  switch (f) {
  case Family::CubeCenterNeg:
  case Family::CubeEdgeNeg:
  case Family::CubeCenterPos:
  case Family::CubeEdgePos: return 3;
  default: return 2;
  }
}

double default_size(Family f) {
  switch (f) {
  case Family::DiskStarHole: return 1.83e-2;
  case Family::DiskCircleHole: return 6.37e-2;
  case Family::DiskSquareHole: return 5e-2;
  case Family::TwoHoles: return 1e-3;
  case Family::Round: return 0.5;
  case Family::Fillet: return 0.5;
  case Family::CubeCenterNeg:
  case Family::CubeEdgeNeg:
  case Family::CubeCenterPos:
  case Family::CubeEdgePos: return 0.1;
  default: return 1e-2;
  }
}

Component Component::segment(Vec3 p, Vec3 q) {
  Component c;
  c.kind = Kind::Segment;
  c.a = p;
  c.b = q;
  return c;
}

Component Component::arc(Vec3 center, double r, double t0, double t1) {
  Component c;
  c.kind = Kind::Arc;
  c.a = center;
  c.radius = r;
  c.theta0 = t0;
  c.theta1 = t1;
  return c;
}

Component Component::rectangle(Vec3 corner, Vec3 e1, Vec3 e2) {
  Component c;
  c.kind = Kind::Rectangle;
  c.a = corner;
  c.b = e1;
  c.c = e2;
  return c;
}

double Component::measure() const {
  switch (kind) {
  case Kind::Segment: return norm(b - a);
  case Kind::Arc: return radius * std::abs(theta1 - theta0);
  case Kind::Rectangle: return norm(cross(b, c));
  }
  return 0.0;
}

Vec3 Component::point(double t) const {
  switch (kind) {
  case Kind::Segment: return a + (b - a) * t;
  case Kind::Arc: {
    double th = theta0 + (theta1 - theta0) * t;
    return a + Vec3(radius * std::cos(th), radius * std::sin(th));
  }
  case Kind::Rectangle: return a + b * t + c * 0.5;
  }
  return a;
}

Vec3 Component::centroid() const {
  if (kind == Kind::Rectangle) return a + b * 0.5 + c * 0.5;
  return point(0.5);
}

double Component::diameter() const {
  switch (kind) {
  case Kind::Segment: return norm(b - a);
  case Kind::Arc: {
    double span = std::abs(theta1 - theta0);
    if (span >= pi) return 2.0 * radius;
    return 2.0 * radius * std::sin(0.5 * span);
  }
  case Kind::Rectangle: return norm(b + c);
  }
  return 0.0;
}

bool Component::contains(const Vec3& p, double tol) const {
  switch (kind) {
  case Kind::Segment: {
    Vec3 d = b - a;
    double L2 = dot(d, d);
    double t = dot(p - a, d) / L2;
    if (t < -tol / std::sqrt(L2) || t > 1.0 + tol / std::sqrt(L2)) return false;
    return norm(p - (a + d * std::clamp(t, 0.0, 1.0))) <= tol;
  }
  case Kind::Arc: {
    Vec3 q = p - a;
    if (std::abs(norm(q) - radius) > tol) return false;
    double th = std::atan2(q.y, q.x);
    double lo = std::min(theta0, theta1);
    double hi = std::max(theta0, theta1);
    double slack = tol / radius;
    for (int k = -2; k <= 2; ++k) {
      double t = th + 2.0 * pi * k;
      if (t >= lo - slack && t <= hi + slack) return true;
    }
    return false;
  }
  case Kind::Rectangle: {
    Vec3 n = cross(b, c);
    double area = norm(n);
    n = n / area;
    Vec3 q = p - a;
    if (std::abs(dot(q, n)) > tol) return false;
    double s = dot(q, b) / dot(b, b);
    double t = dot(q, c) / dot(c, c);
    double sb = tol / norm(b);
    double sc = tol / norm(c);
    return s >= -sb && s <= 1 + sb && t >= -sc && t <= 1 + sc;
  }
  }
  return false;
}

double BoundaryPiece::measure() const {
  double m = 0.0;
  for (const auto& c : components) m += c.measure();
  return m;
}

bool BoundaryPiece::contains(const Vec3& p, double tol) const {
  return std::any_of(components.begin(), components.end(),
                     [&](const Component& c) { return c.contains(p, tol); });
}

bool DomainDescription::has_positive() const {
  return std::any_of(features.begin(), features.end(),
                     [](const FeatureInfo& f) { return f.positive_volume > 0; });
}

bool DomainDescription::has_negative() const {
  return std::any_of(features.begin(), features.end(),
                     [](const FeatureInfo& f) { return f.negative_volume > 0; });
}

BoundaryPiece DomainDescription::piece(PieceTag tag, int feature) const {
  BoundaryPiece out;
  out.tag = tag;
  out.feature = feature;
  for (const auto& p : pieces) {
    if (p.tag != tag) continue;
    if (feature >= 0 && p.feature != feature) continue;
    out.components.insert(out.components.end(), p.components.begin(), p.components.end());
  }
  return out;
}

double DomainDescription::measure(PieceTag tag, int feature) const {
  return piece(tag, feature).measure();
}

bool DomainDescription::on_dirichlet(const Vec3& p) const {
  constexpr double tol = 1e-9;
  switch (family) {
  case Family::DiskStarHole:
  case Family::DiskCircleHole:
  case Family::DiskSquareHole: return std::abs(norm(p) - 1.0) < 1e-2; // chords sag below the circle
  case Family::TwoHoles: return std::abs(p.x) < tol || std::abs(p.y) < tol;
  case Family::Round: return std::abs(p.y) < tol || std::abs(p.x - 1.0) < tol;
  default: return std::abs(p.y) < tol;
  }
}

DomainDescription build_domain(Family family, const FamilyParams& params) {
  DomainDescription d;
  d.family = family;
  d.params = params;
  d.dim = family_dimension(family);
  const double s = params.size;

  auto negative = [&](double vol) {
    FeatureInfo f;
    f.id = static_cast<int>(d.features.size());
    f.sign = FeatureSign::Negative;
    f.negative_volume = vol;
    d.features.push_back(f);
  };
  auto positive = [&](double vol, double ext_vol) {
    FeatureInfo f;
    f.id = static_cast<int>(d.features.size());
    f.sign = FeatureSign::Positive;
    f.positive_volume = vol;
    f.extension_volume = ext_vol;
    d.features.push_back(f);
  };

  switch (family) {
  case Family::DiskStarHole:
  case Family::DiskCircleHole:
  case Family::DiskSquareHole: {
    double reach = family == Family::DiskStarHole    ? 2.0 * s
                   : family == Family::DiskSquareHole ? std::sqrt(2.0) * s
                                                      : s;
    check_size(family, s, 0.0, 1.0);
    require(reach < 0.5, "hole must stay well inside the unit disk (no contact with the Dirichlet circle)");
    d.feature_sign = FeatureSign::Negative;
    std::vector<Component> hole;
    double vol = 0;
    if (family == Family::DiskStarHole) {
      hole = polygon(star_vertices(s));
      vol = 20.0 * s * s * std::sin(pi / 10.0);
    } else if (family == Family::DiskCircleHole) {
      hole = {Component::arc(v2(0, 0), s, 0.0, 2.0 * pi)};
      vol = pi * s * s;
    } else {
      hole = polygon({v2(-s, -s), v2(s, -s), v2(s, s), v2(-s, s)});
      vol = 4.0 * s * s;
    }
    add(d, PieceTag::GammaN, 0, hole);
    add(d, PieceTag::Gamma0N, 0, {});
    add(d, PieceTag::Dirichlet, -1, {Component::arc(v2(0, 0), 1.0, 0.0, 2.0 * pi)});
    add(d, PieceTag::NeumannRest, -1, {});
    negative(vol);
    break;
  }
  case Family::SquareHalfDiskNeg:
  case Family::SquareHalfDiskPos: {
    check_size(family, s, 0.0, 0.4);
    bool neg = family == Family::SquareHalfDiskNeg;
    d.feature_sign = neg ? FeatureSign::Negative : FeatureSign::Positive;
    Component gap = Component::segment(v2(0.5 - s, 1), v2(0.5 + s, 1));
    if (neg) {
      add(d, PieceTag::GammaN, 0, {Component::arc(v2(0.5, 1), s, pi, 2.0 * pi)});
      add(d, PieceTag::Gamma0N, 0, {gap});
      negative(0.5 * pi * s * s);
    } else {
      add(d, PieceTag::Gamma0P, 0, {gap});
      add(d, PieceTag::GammaS, 0, {Component::arc(v2(0.5, 1), s, 0.0, pi)});
      add(d, PieceTag::GammaR, 0, {});
      add(d, PieceTag::GammaTilde, 0, {});
      positive(0.5 * pi * s * s, 0.5 * pi * s * s);
    }
    add(d, PieceTag::Dirichlet, -1, {Component::segment(v2(0, 0), v2(1, 0))});
    add(d, PieceTag::NeumannRest, -1, square_walls_except_bottom({{0.5 - s, 0.5 + s}}));
    break;
  }
  case Family::SquareCornerNeg: {
    check_size(family, s, 0.0, 0.4);
    d.feature_sign = FeatureSign::Negative;
    double e = 1.0 - s;
    add(d, PieceTag::GammaN, 0,
        {Component::segment(v2(e, 1), v2(e, e)), Component::segment(v2(e, e), v2(1, e))});
    add(d, PieceTag::Gamma0N, 0,
        {Component::segment(v2(e, 1), v2(1, 1)), Component::segment(v2(1, e), v2(1, 1))});
    add(d, PieceTag::Dirichlet, -1, {Component::segment(v2(0, 0), v2(1, 0))});
    add(d, PieceTag::NeumannRest, -1, square_walls_except_bottom({{e, 1.0}}, e));
    negative(s * s);
    break;
  }
  case Family::SquareCornerPos: {
    check_size(family, s, 0.0, 0.4);
    d.feature_sign = FeatureSign::Positive;
    double e = 1.0 - s;
    add(d, PieceTag::Gamma0P, 0, {Component::segment(v2(e, 1), v2(1, 1))});
    add(d, PieceTag::GammaS, 0,
        {Component::segment(v2(e, 1), v2(e, 1 + s)), Component::segment(v2(e, 1 + s), v2(1, 1 + s)),
         Component::segment(v2(1, 1), v2(1, 1 + s))});
    add(d, PieceTag::GammaR, 0, {});
    add(d, PieceTag::GammaTilde, 0, {});
    add(d, PieceTag::Dirichlet, -1, {Component::segment(v2(0, 0), v2(1, 0))});
    add(d, PieceTag::NeumannRest, -1, square_walls_except_bottom({{e, 1.0}}));
    positive(s * s, s * s);
    break;
  }
  case Family::ComplexAdjacent:
  case Family::ComplexOverlap: {
    check_size(family, s, 0.0, 0.4);
    d.feature_sign = FeatureSign::Complex;
    bool adj = family == Family::ComplexAdjacent;
    // F_p above the top wall, F_n below it.
    double p0 = adj ? 0.5 - s : 0.5 - 0.75 * s;
    double p1 = adj ? 0.5 : 0.5 + 0.25 * s;
    double n0 = adj ? 0.5 : 0.5 - 0.25 * s;
    double n1 = adj ? 0.5 + s : 0.5 + 0.75 * s;
    double lo = 1.0 - s;
    double hi = 1.0 + s;
    add(d, PieceTag::GammaN, 0,
        {Component::segment(v2(n0, 1), v2(n0, lo)), Component::segment(v2(n0, lo), v2(n1, lo)),
         Component::segment(v2(n1, lo), v2(n1, 1))});
    add(d, PieceTag::Gamma0N, 0, {Component::segment(v2(n0, 1), v2(n1, 1))});
    std::vector<Component> gs = {Component::segment(v2(p0, 1), v2(p0, hi)),
                                 Component::segment(v2(p0, hi), v2(p1, hi)),
                                 Component::segment(v2(p1, hi), v2(p1, 1))};
    if (adj) {
      add(d, PieceTag::Gamma0P, 0, {Component::segment(v2(p0, 1), v2(p1, 1))});
    } else {
      add(d, PieceTag::Gamma0P, 0, {Component::segment(v2(p0, 1), v2(n0, 1))});
      gs.push_back(Component::segment(v2(n0, 1), v2(p1, 1)));
    }
    add(d, PieceTag::GammaS, 0, gs);
    add(d, PieceTag::GammaR, 0, {});
    add(d, PieceTag::GammaTilde, 0, {});
    add(d, PieceTag::Dirichlet, -1, {Component::segment(v2(0, 0), v2(1, 0))});
    add(d, PieceTag::NeumannRest, -1,
        square_walls_except_bottom({{std::min(p0, n0), std::max(p1, n1)}}));
    FeatureInfo f;
    f.id = 0;
    f.sign = FeatureSign::Complex;
    f.negative_volume = s * s;
    f.positive_volume = s * s;
    f.extension_volume = s * s;
    d.features.push_back(f);
    break;
  }
  case Family::TwoHoles: {
    check_size(family, s, 0.0, 0.1);
    d.feature_sign = FeatureSign::Negative;
    double c1 = 1.1 * s;
    add(d, PieceTag::GammaN, 0, {Component::arc(v2(c1, c1), s, 0.0, 2.0 * pi)});
    add(d, PieceTag::Gamma0N, 0, {});
    add(d, PieceTag::GammaN, 1, {Component::arc(v2(0.89, 0.89), 0.1, 0.0, 2.0 * pi)});
    add(d, PieceTag::Gamma0N, 1, {});
    add(d, PieceTag::Dirichlet, -1,
        {Component::segment(v2(0, 0), v2(1, 0)), Component::segment(v2(0, 1), v2(0, 0))});
    add(d, PieceTag::NeumannRest, -1,
        {Component::segment(v2(1, 0), v2(1, 1)), Component::segment(v2(1, 1), v2(0, 1))});
    negative(pi * s * s);
    negative(pi * 0.01);
    break;
  }
  case Family::CubeCenterNeg:
  case Family::CubeEdgeNeg:
  case Family::CubeCenterPos:
  case Family::CubeEdgePos: {
    check_size(family, s, 0.0, 0.4);
    bool edge = family == Family::CubeEdgeNeg || family == Family::CubeEdgePos;
    bool neg = family == Family::CubeCenterNeg || family == Family::CubeEdgeNeg;
    d.feature_sign = neg ? FeatureSign::Negative : FeatureSign::Positive;
    Box3 b;
    b.lo = {edge ? 1.0 - s : 0.5 - 0.5 * s, neg ? 1.0 - s : 1.0, 0.0};
    b.hi = {edge ? 1.0 : 0.5 + 0.5 * s, neg ? 1.0 : 1.0 + s, s};
    std::vector<Component> on_wall, off_wall;
    for (int axis = 0; axis < 3; ++axis)
      for (int up = 0; up < 2; ++up) {
        double v = up ? b.hi[axis] : b.lo[axis];
        bool glued = neg ? (v == 0.0 || v == 1.0) : (axis == 1 && !up);
        (glued ? on_wall : off_wall).push_back(face_of(b, axis, up));
      }
    if (neg) {
      add(d, PieceTag::GammaN, 0, off_wall);
      add(d, PieceTag::Gamma0N, 0, on_wall);
      negative(s * s * s);
    } else {
      add(d, PieceTag::Gamma0P, 0, on_wall);
      add(d, PieceTag::GammaS, 0, off_wall);
      add(d, PieceTag::GammaR, 0, {});
      add(d, PieceTag::GammaTilde, 0, {});
      positive(s * s * s, s * s * s);
    }
    add(d, PieceTag::Dirichlet, -1, {box_face(1, 0.0, {0, 1}, {0, 1})});
    // Remaining cube walls, with the feature footprint removed from the y = 1 face.
    std::vector<Component> rest;
    rest.push_back(box_face(0, 0.0, {0, 1}, {0, 1}));
    rest.push_back(box_face(2, 1.0, {0, 1}, {0, 1}));
    auto cut_face = [&](int axis, double v, double lo1, double hi1, double lo2, double hi2) {
      // axis-aligned face minus the rectangle [lo1,hi1]x[lo2,hi2] in its own coordinates
      std::array<double, 4> c1{0.0, lo1, hi1, 1.0};
      std::array<double, 4> c2{0.0, lo2, hi2, 1.0};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          if (i == 1 && j == 1) continue;
          if (c1[i + 1] <= c1[i] || c2[j + 1] <= c2[j]) continue;
          rest.push_back(box_face(axis, v, {c1[i], c1[i + 1]}, {c2[j], c2[j + 1]}));
        }
    };
    // the y = 1 face uses (z, x) as its in-plane coordinates
    cut_face(1, 1.0, b.lo[2], b.hi[2], b.lo[0], b.hi[0]);
    if (edge && neg) {
      // x = 1 face in (y, z) coordinates
      cut_face(0, 1.0, b.lo[1], b.hi[1], b.lo[2], b.hi[2]);
      // z = 0 face in (x, y) coordinates
      cut_face(2, 0.0, b.lo[0], b.hi[0], b.lo[1], b.hi[1]);
    } else if (neg) {
      rest.push_back(box_face(0, 1.0, {0, 1}, {0, 1}));
      cut_face(2, 0.0, b.lo[0], b.hi[0], b.lo[1], b.hi[1]);
    } else {
      rest.push_back(box_face(0, 1.0, {0, 1}, {0, 1}));
      rest.push_back(box_face(2, 0.0, {0, 1}, {0, 1}));
    }
    add(d, PieceTag::NeumannRest, -1, rest);
    break;
  }
  case Family::Round: {
    check_size(family, s, 0.0, 1.0);
    d.feature_sign = FeatureSign::Negative;
    d.covered_by_theory = false;
    double R = s;
    add(d, PieceTag::GammaN, 0, {Component::arc(v2(R, 1 - R), R, 0.5 * pi, pi)});
    add(d, PieceTag::Gamma0N, 0,
        {Component::segment(v2(0, 1 - R), v2(0, 1)), Component::segment(v2(0, 1), v2(R, 1))});
    add(d, PieceTag::Dirichlet, -1,
        {Component::segment(v2(0, 0), v2(1, 0)), Component::segment(v2(1, 0), v2(1, 1))});
    std::vector<Component> rest;
    if (R < 1.0) {
      rest.push_back(Component::segment(v2(0, 0), v2(0, 1 - R)));
      rest.push_back(Component::segment(v2(R, 1), v2(1, 1)));
    }
    add(d, PieceTag::NeumannRest, -1, rest);
    negative(R * R * (1.0 - 0.25 * pi));
    break;
  }
  case Family::Fillet: {
    d.feature_sign = FeatureSign::Positive;
    d.covered_by_theory = false;
    // Feature: the unit quarter box at (1,1) minus the disk of radius 1/2 around (1,1).
    Component arc_half = Component::arc(v2(1, 1), 0.5, pi, 1.5 * pi);
    add(d, PieceTag::Gamma0P, 0,
        {Component::segment(v2(0.5, 0.5), v2(0.5, 1)), Component::segment(v2(0.5, 0.5), v2(1, 0.5))});
    double fvol = 0.25 - pi / 16.0;
    switch (params.extension) {
    case ExtensionChoice::BoundingBox:
      add(d, PieceTag::GammaR, 0, {arc_half});
      add(d, PieceTag::GammaS, 0, {});
      add(d, PieceTag::GammaTilde, 0,
          {Component::segment(v2(0.5, 1), v2(1, 1)), Component::segment(v2(1, 0.5), v2(1, 1))});
      positive(fvol, 0.25);
      break;
    case ExtensionChoice::CustomArc:
      add(d, PieceTag::GammaR, 0, {arc_half});
      add(d, PieceTag::GammaS, 0, {});
      add(d, PieceTag::GammaTilde, 0,
          {Component::segment(v2(0.5, 1), v2(0.75, 1)), Component::segment(v2(1, 0.5), v2(1, 0.75)),
           Component::arc(v2(1, 1), 0.25, pi, 1.5 * pi)});
      positive(fvol, 0.25 - pi / 64.0);
      break;
    case ExtensionChoice::Identity:
      add(d, PieceTag::GammaR, 0, {});
      add(d, PieceTag::GammaS, 0, {arc_half});
      add(d, PieceTag::GammaTilde, 0, {});
      positive(fvol, fvol);
      break;
    }
    add(d, PieceTag::Dirichlet, -1, {Component::segment(v2(0, 0), v2(1, 0))});
    add(d, PieceTag::NeumannRest, -1,
        {Component::segment(v2(1, 0), v2(1, 0.5)), Component::segment(v2(0.5, 1), v2(0, 1)),
         Component::segment(v2(0, 1), v2(0, 0))});
    break;
  }
  }

  // Features must not share a positive-measure part with the Dirichlet boundary.
  BoundaryPiece dir = d.piece(PieceTag::Dirichlet);
  for (const auto& p : d.pieces) {
    if (p.feature < 0) continue;
    for (const auto& c : p.components) {
      if (c.measure() <= 0) continue;
      if (dir.contains(c.centroid(), 1e-12))
        throw InvalidGeometry(fmt::format("{}: feature boundary touches the Dirichlet boundary",
                                          to_string(family)));
    }
  }
  isotropy_warnings(d);
  return d;
}

std::map<PieceTag, double> boundary_measures(const DomainDescription& domain) {
  std::map<PieceTag, double> out;
  for (const auto& p : domain.pieces) out[p.tag] += p.measure();
  return out;
}

} // namespace defeat
