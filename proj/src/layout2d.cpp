// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "defeat/errors.hpp"
#include "layout.hpp"

namespace defeat::detail {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap(double t) {
  t = std::fmod(t, two_pi);
  if (t < 0) t += two_pi;
  if (two_pi - t < 1e-14) t = 0.0;
  return t;
}

Vec3 direction(double t) {
  // exact axis directions keep snapped walls straight
  for (int k = 0; k < 4; ++k) {
    if (std::abs(t - 0.5 * pi * k) < 1e-14) {
      static constexpr double c[4] = {1, 0, -1, 0};
      static constexpr double s[4] = {0, 1, 0, -1};
      return {c[k], s[k]};
    }
  }
  return {std::cos(t), std::sin(t)};
}

double circular_distance(double a, double b) {
  double d = std::abs(a - b);
  return std::min(d, two_pi - d);
}

enum class Quadrant { UR, UL, LL, LR };

Quadrant quadrant(double t) {
  t = wrap(t);
  if (t < 0.5 * pi) return Quadrant::UR;
  if (t < pi) return Quadrant::UL;
  if (t < 1.5 * pi) return Quadrant::LL;
  return Quadrant::LR;
}

bool upper(double t) { return wrap(t) < pi; }

ElementLabel star() { return {Region::Star, -1}; }
ElementLabel voidl() { return {Region::Void, -1}; }
ElementLabel neg(int f = 0) { return {Region::Negative, f}; }
ElementLabel pos(int f = 0) { return {Region::Positive, f}; }
ElementLabel ext(int f = 0) { return {Region::Extension, f}; }

LevelFn circle(double r) {
  return [r](double t) { return direction(t) * r; };
}

// Square of half size h around the block center.
LevelFn square(double h) {
  return [h](double t) { return ray_box(t, {-h, -h}, {h, h}); };
}

double angle_of(Vec3 p) { return wrap(std::atan2(p.y, p.x)); }

std::vector<Vec3> star_points(double r) {
  std::vector<Vec3> pts;
  for (int k = 0; k < 10; ++k) {
    double tip = two_pi * k / 10.0;
    double valley = tip + pi / 10.0;
    pts.push_back({2.0 * r * std::cos(tip), 2.0 * r * std::sin(tip)});
    pts.push_back({r * std::cos(valley), r * std::sin(valley)});
  }
  return pts;
}

// Outer wall of the unit square seen from a center on the top edge; the upper
// half is a fictitious circle closing the block.
LevelFn top_edge_walls(Vec3 c) {
  Vec3 lo{-c.x, -c.y};
  Vec3 hi{1.0 - c.x, 0.0};
  double r0 = 1.0 - c.x;
  double r1 = c.x;
  return [=](double t) {
    t = wrap(t);
    if (t == 0.0 || t >= pi) return ray_box(t, lo, hi);
    return direction(t) * (r0 + (r1 - r0) * t / pi);
  };
}

std::vector<double> wall_corner_angles(Vec3 c) {
  return {angle_of(Vec3{0, 0} - c), angle_of(Vec3{1, 0} - c)};
}

} // namespace

Vec3 ray_box(double theta, Vec3 lo, Vec3 hi) {
  Vec3 d = direction(theta);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double tx = d.x > 0 ? hi.x / d.x : (d.x < 0 ? lo.x / d.x : inf);
  double ty = d.y > 0 ? hi.y / d.y : (d.y < 0 ? lo.y / d.y : inf);
  double sx = d.x > 0 ? hi.x : lo.x;
  double sy = d.y > 0 ? hi.y : lo.y;
  if (tx < inf && ty < inf && std::abs(tx - ty) <= 1e-13 * std::max(tx, ty)) return {sx, sy};
  if (tx < ty) return {sx, tx * d.y};
  return {ty * d.x, sy};
}

Vec3 ray_circle(double theta, Vec3 center, double radius) {
  Vec3 d = direction(theta);
  double b = dot(d, center);
  double c = dot(center, center) - radius * radius;
  double disc = b * b - c;
  if (disc < 0) disc = 0;
  double t = c > 0 ? b - std::sqrt(disc) : b + std::sqrt(disc);
  return d * t;
}

Vec3 ray_polygon(double theta, const std::vector<Vec3>& poly) {
  Vec3 d = direction(theta);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    Vec3 a = poly[i];
    Vec3 e = poly[(i + 1) % poly.size()] - a;
    double den = d.x * e.y - d.y * e.x;
    if (std::abs(den) < 1e-300) continue;
    double t = (a.x * e.y - a.y * e.x) / den;
    double s = (a.x * d.y - a.y * d.x) / den;
    if (t > 0 && s >= -1e-12 && s <= 1 + 1e-12) best = std::min(best, t);
  }
  // land exactly on a vertex when the ray passes through one
  for (const Vec3& v : poly)
    if (std::abs(angle_of(v) - wrap(theta)) < 1e-13) return v;
  return d * best;
}

UniverseBuilder::UniverseBuilder(int dim, double tol) : dim_(dim), tol_(tol), cell_(10.0 * tol) {
  u_.dim = dim;
}

UniverseBuilder::Key UniverseBuilder::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / cell_)),
          static_cast<std::int64_t>(std::floor(p.y / cell_)),
          static_cast<std::int64_t>(std::floor(p.z / cell_))};
}

int UniverseBuilder::vertex(const Vec3& p) {
  Key k = key_of(p);
  for (std::int64_t di = -1; di <= 1; ++di)
    for (std::int64_t dj = -1; dj <= 1; ++dj)
      for (std::int64_t dk = (dim_ == 3 ? -1 : 0); dk <= (dim_ == 3 ? 1 : 0); ++dk) {
        auto it = grid_.find({k.i + di, k.j + dj, k.k + dk});
        if (it == grid_.end()) continue;
        for (int v : it->second)
          if (norm(u_.vertices[v] - p) <= tol_) return v;
      }
  int id = static_cast<int>(u_.vertices.size());
  u_.vertices.push_back(p);
  grid_[k].push_back(id);
  return id;
}

void UniverseBuilder::add_quad(const std::array<Vec3, 4>& pts, ElementLabel label, int patch) {
  if (label.region == Region::Void) return;
  double area = 0;
  double h = 0;
  for (int i = 0; i < 4; ++i) {
    const Vec3& a = pts[i];
    const Vec3& b = pts[(i + 1) % 4];
    area += a.x * b.y - a.y * b.x;
    h = std::max(h, norm(b - a));
  }
  area *= 0.5;
  if (area <= 1e-12 * h * h) {
    if (area < -1e-12 * h * h) throw InvalidGeometry(fmt::format("mesh layout produced an inverted element at ({}, {})", pts[0].x, pts[0].y));
    return;
  }
  std::array<int, 4> ids;
  for (int i = 0; i < 4; ++i) ids[i] = vertex(pts[i]);
  std::array<int, 4> s = ids;
  std::sort(s.begin(), s.end());
  if (std::unique(s.begin(), s.end()) - s.begin() < 3) return;
  u_.connectivity.insert(u_.connectivity.end(), ids.begin(), ids.end());
  u_.labels.push_back(label);
  u_.patch.push_back(patch);
}

void UniverseBuilder::add_hex(const std::array<int, 8>& ids, ElementLabel label, int patch) {
  if (label.region == Region::Void) return;
  u_.connectivity.insert(u_.connectivity.end(), ids.begin(), ids.end());
  u_.labels.push_back(label);
  u_.patch.push_back(patch);
}

Universe UniverseBuilder::finish() { return std::move(u_); }

PolarOutput add_polar_block(UniverseBuilder& b, const PolarBlock& block, int resolution,
                            int patch_base) {
  const int N = 4 * resolution;
  const double dt = two_pi / N;

  std::vector<double> required;
  auto add_required = [&](double t) {
    for (double img : {t, -t, pi - t, pi + t}) required.push_back(wrap(img));
  };
  for (int k = 0; k < 8; ++k) add_required(0.25 * pi * k);
  for (double t : block.required_angles) add_required(t);
  std::sort(required.begin(), required.end());
  required.erase(std::unique(required.begin(), required.end(),
                             [](double a, double c) { return std::abs(a - c) < 1e-12; }),
                 required.end());

  std::vector<double> angles = required;
  for (int j = 0; j < N; ++j) {
    double t = dt * j;
    bool near = std::any_of(required.begin(), required.end(),
                            [&](double r) { return circular_distance(r, t) < 0.3 * dt; });
    if (!near) angles.push_back(t);
  }
  std::sort(angles.begin(), angles.end());
  const int S = static_cast<int>(angles.size());

  const int L = static_cast<int>(block.levels.size());
  std::vector<std::vector<Vec3>> lp(L + 1, std::vector<Vec3>(S));
  double a = block.core_half;
  if (a <= 0) {
    double rmin = std::numeric_limits<double>::infinity();
    for (double t : angles) rmin = std::min(rmin, norm(block.levels[0](t)));
    a = 0.6 * rmin;
  }
  for (int j = 0; j < S; ++j) {
    lp[0][j] = ray_box(angles[j], {-a, -a}, {a, a});
    for (int l = 1; l <= L; ++l) lp[l][j] = block.levels[l - 1](angles[j]);
  }
  for (int l = 1; l <= L; ++l)
    for (int j = 0; j < S; ++j)
      if (norm(lp[l][j]) < norm(lp[l - 1][j]) * (1 - 1e-12))
        throw InvalidGeometry(fmt::format("polar levels {} and {} cross at angle {}", l - 1, l,
                                          angles[j]));

  const Vec3 c = block.center;
  auto mid_angle = [&](int j) {
    double t0 = angles[j];
    double t1 = j + 1 < S ? angles[j + 1] : angles[0] + two_pi;
    return wrap(0.5 * (t0 + t1));
  };

  // core tensor grid through the spoke feet
  std::vector<double> xs, ys;
  for (const Vec3& q : lp[0]) {
    if (std::abs(std::abs(q.y) - a) == 0.0) xs.push_back(q.x);
    if (std::abs(std::abs(q.x) - a) == 0.0) ys.push_back(q.y);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double p, double q) { return std::abs(p - q) < 1e-13; }),
            v.end());
  };
  uniq(xs);
  uniq(ys);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
      Vec3 m{0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[k] + ys[k + 1])};
      ElementLabel lab = block.label(0, angle_of(m));
      b.add_quad({c + Vec3{xs[i], ys[k]}, c + Vec3{xs[i + 1], ys[k]}, c + Vec3{xs[i + 1], ys[k + 1]},
                  c + Vec3{xs[i], ys[k + 1]}},
                 lab, patch_base);
    }

  // log-graded rings between consecutive levels
  for (int l = 0; l < L; ++l) {
    double maxlog = 0;
    for (int j = 0; j < S; ++j) {
      double r0 = norm(lp[l][j]);
      double r1 = norm(lp[l + 1][j]);
      maxlog = std::max(maxlog, std::log(r1 / r0));
    }
    int n = std::max(1, static_cast<int>(std::ceil(maxlog / dt - 1e-9)));
    std::vector<std::vector<Vec3>> P(n + 1, std::vector<Vec3>(S));
    for (int j = 0; j < S; ++j) {
      double r0 = norm(lp[l][j]);
      double r1 = norm(lp[l + 1][j]);
      Vec3 d = direction(angles[j]);
      P[0][j] = lp[l][j];
      P[n][j] = lp[l + 1][j];
      for (int k = 1; k < n; ++k) {
        double t = static_cast<double>(k) / n;
        P[k][j] = r1 <= r0 ? lp[l][j] : d * (std::pow(r0, 1 - t) * std::pow(r1, t));
      }
    }
    for (int j = 0; j < S; ++j) {
      int jn = (j + 1) % S;
      ElementLabel lab = block.label(l, mid_angle(j));
      if (lab.region == Region::Void) continue;
      for (int k = 0; k < n; ++k)
        b.add_quad({c + P[k][j], c + P[k + 1][j], c + P[k + 1][jn], c + P[k][jn]}, lab,
                   patch_base + 1 + l);
    }
  }

  PolarOutput out;
  out.angles = angles;
  out.level_points.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    out.level_points[l].resize(S);
    for (int j = 0; j < S; ++j) out.level_points[l][j] = c + lp[l][j];
  }
  return out;
}

namespace {

// Sorted coordinates (x when want_x, else y) of the points lying on the line
// where the other coordinate equals at, restricted to [from, to].
std::vector<double> line_values(const std::vector<Vec3>& pts, bool want_x, double at,
                                double from = -1e300, double to = 1e300) {
  std::vector<double> v;
  for (const Vec3& p : pts) {
    double other = want_x ? p.y : p.x;
    double mine = want_x ? p.x : p.y;
    if (std::abs(other - at) < 1e-12 && mine >= from - 1e-12 && mine <= to + 1e-12) v.push_back(mine);
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [](double a, double c) { return std::abs(a - c) < 1e-12; }), v.end());
  return v;
}

// Joins two sorted node lists, growing the spacing geometrically away from
// each end up to h and filling the middle uniformly.
std::vector<double> graded_fill(const std::vector<double>& lo, const std::vector<double>& hi, double h) {
  std::vector<double> v = lo;
  if (hi.front() - lo.back() < 1e-12) {
    v.insert(v.end(), hi.begin() + 1, hi.end());
    return v;
  }
  double sl = lo.size() > 1 ? lo.back() - lo[lo.size() - 2] : h;
  double sr = hi.size() > 1 ? hi[1] - hi[0] : h;
  double a = lo.back(), c = hi.front();
  std::vector<double> right;
  for (bool grew = true; grew;) {
    grew = false;
    if (sl < h && c - a > 3 * (1.25 * sl + sr)) {
      sl = std::min(h, 1.25 * sl);
      a += sl;
      v.push_back(a);
      grew = true;
    }
    if (sr < h && c - a > 3 * (1.25 * sr + sl)) {
      sr = std::min(h, 1.25 * sr);
      c -= sr;
      right.push_back(c);
      grew = true;
    }
  }
  int n = std::max(1, static_cast<int>(std::ceil((c - a) / std::max(sl, sr) - 1e-9)));
  for (int i = 1; i < n; ++i) v.push_back(a + (c - a) * i / n);
  v.insert(v.end(), right.rbegin(), right.rend());
  v.insert(v.end(), hi.begin(), hi.end());
  return v;
}

} // namespace

Universe build_universe_2d(const DomainDescription& d, const MeshOptions& o) {
  UniverseBuilder b(2);
  const double s = d.params.size;
  const int res = o.resolution;
  PolarBlock blk;

  switch (d.family) {
  case Family::DiskStarHole:
  case Family::DiskCircleHole:
  case Family::DiskSquareHole: {
    blk.center = {0, 0};
    if (d.family == Family::DiskStarHole) {
      auto pts = star_points(s);
      for (const auto& p : pts) blk.required_angles.push_back(angle_of(p));
      blk.levels.push_back([pts](double t) { return ray_polygon(t, pts); });
    } else if (d.family == Family::DiskCircleHole) {
      blk.levels.push_back(circle(s));
    } else {
      blk.levels.push_back(square(s));
    }
    blk.levels.push_back(circle(1.0));
    blk.label = [](int ring, double) { return ring == 0 ? neg() : star(); };
    add_polar_block(b, blk, res, 0);
    break;
  }
  case Family::SquareHalfDiskNeg:
  case Family::SquareHalfDiskPos:
  case Family::ComplexAdjacent: {
    blk.center = {0.5, 1.0};
    blk.required_angles = wall_corner_angles(blk.center);
    blk.levels.push_back(d.family == Family::ComplexAdjacent ? square(s) : circle(s));
    blk.levels.push_back(top_edge_walls(blk.center));
    if (d.family == Family::SquareHalfDiskNeg) {
      blk.label = [](int ring, double t) {
        if (upper(t)) return voidl();
        return ring == 0 ? neg() : star();
      };
    } else if (d.family == Family::SquareHalfDiskPos) {
      blk.label = [](int ring, double t) {
        if (upper(t)) return ring == 0 ? pos() : voidl();
        return star();
      };
    } else {
      blk.label = [](int ring, double t) {
        switch (quadrant(t)) {
        case Quadrant::UL: return ring == 0 ? pos() : voidl();
        case Quadrant::UR: return voidl();
        case Quadrant::LL: return star();
        case Quadrant::LR: return ring == 0 ? neg() : star();
        }
        return voidl();
      };
    }
    add_polar_block(b, blk, res, 0);
    break;
  }
  case Family::ComplexOverlap: {
    // center at the left end of F_n; F_p is symmetric about it
    Vec3 c{0.5 - 0.25 * s, 1.0};
    blk.center = c;
    blk.required_angles = wall_corner_angles(c);
    blk.required_angles.push_back(angle_of({0.5 * s, s}));
    auto fp = [s](double t) { return ray_box(t, {-0.5 * s, 0}, {0.5 * s, s}); };
    auto fn = [s](double t) { return ray_box(t, {-s, -s}, {s, s}); };
    blk.levels.push_back([=](double t) {
      switch (quadrant(t)) {
      case Quadrant::UR:
      case Quadrant::UL: return wrap(t) == 0.0 ? fn(t) * 0.5 : fp(t);
      case Quadrant::LL: return direction(t) * (0.5 * s);
      case Quadrant::LR: return fn(t) * 0.5;
      }
      return fp(t);
    });
    blk.levels.push_back([=](double t) {
      switch (quadrant(t)) {
      case Quadrant::UR:
      case Quadrant::UL:
        if (wrap(t) == 0.0) return fn(t);
        return direction(t) * (norm(fp(t)) + 0.5 * s);
      case Quadrant::LL: return direction(t) * s;
      case Quadrant::LR: return fn(t);
      }
      return fn(t);
    });
    blk.levels.push_back(top_edge_walls(c));
    blk.label = [](int ring, double t) {
      Quadrant q = quadrant(t);
      if (q == Quadrant::UR || q == Quadrant::UL) return ring == 0 ? pos() : voidl();
      if (q == Quadrant::LL) return star();
      return ring <= 1 ? neg() : star();
    };
    add_polar_block(b, blk, res, 0);
    break;
  }
  case Family::SquareCornerNeg:
  case Family::SquareCornerPos: {
    blk.center = {1.0, 1.0};
    blk.levels.push_back(square(s));
    blk.levels.push_back(square(1.0));
    if (d.family == Family::SquareCornerNeg) {
      blk.label = [](int ring, double t) {
        if (quadrant(t) != Quadrant::LL) return voidl();
        return ring == 0 ? neg() : star();
      };
    } else {
      blk.label = [](int ring, double t) {
        Quadrant q = quadrant(t);
        if (q == Quadrant::UL) return ring == 0 ? pos() : voidl();
        if (q == Quadrant::LL) return star();
        return voidl();
      };
    }
    add_polar_block(b, blk, res, 0);
    break;
  }
  case Family::Round: {
    // Polar block on the arc center covering the corner box [0, R] x [1 - R, 1],
    // tensor grid on the rest of the square.
    const double R = s;
    const Vec3 c{R, 1.0 - R};
    blk.center = c;
    blk.levels = {circle(R), [R](double t) { return ray_box(t, {-R, -R}, {R, R}); }};
    blk.label = [](int ring, double t) {
      if (quadrant(t) != Quadrant::UL) return voidl();
      return ring == 0 ? star() : neg();
    };
    add_polar_block(b, blk, res, 0);
    const double h = 1.0 / (1.5 * res);
    std::vector<double> xs = line_values(b.vertices(), true, c.y, 0.0, R);
    std::vector<double> ys = line_values(b.vertices(), false, c.x, c.y, 1.0);
    if (R < 1.0) {
      xs = graded_fill(xs, {1.0}, h);
      ys = graded_fill({0.0}, ys, h);
    }
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
        double xm = 0.5 * (xs[i] + xs[i + 1]);
        double ym = 0.5 * (ys[k] + ys[k + 1]);
        if (xm < R && ym > c.y) continue;
        b.add_quad({Vec3{xs[i], ys[k]}, Vec3{xs[i + 1], ys[k]}, Vec3{xs[i + 1], ys[k + 1]},
                    Vec3{xs[i], ys[k + 1]}},
                   star(), 20);
      }
    break;
  }
  case Family::Fillet: {
    ExtensionChoice ec = d.params.extension;
    blk.center = {1.0, 1.0};
    blk.core_half = 0.15;
    blk.levels = {circle(0.25), circle(0.5), square(0.5), square(1.0)};
    blk.label = [ec](int ring, double t) {
      if (quadrant(t) != Quadrant::LL) return voidl();
      switch (ring) {
      case 0: return ec == ExtensionChoice::BoundingBox ? ext() : voidl();
      case 1: return ec == ExtensionChoice::Identity ? voidl() : ext();
      case 2: return pos();
      default: return star();
      }
    };
    add_polar_block(b, blk, res, 0);
    break;
  }
  case Family::TwoHoles: {
    // hole 1 sits centered in a small square on the corner so no spoke grazes a wall
    const double box1 = 2.2 * s;
    const double box2 = 0.7;
    Vec3 c1{1.1 * s, 1.1 * s};
    Vec3 c2{0.89, 0.89};
    PolarBlock b1;
    b1.center = c1;
    Vec3 lo1 = Vec3{0, 0} - c1, hi1 = Vec3{box1, box1} - c1;
    for (Vec3 q : {lo1, hi1, Vec3{lo1.x, hi1.y}, Vec3{hi1.x, lo1.y}}) b1.required_angles.push_back(angle_of(q));
    b1.levels = {circle(s), [=](double t) { return ray_box(t, lo1, hi1); }};
    b1.label = [](int ring, double) { return ring == 0 ? neg(0) : star(); };
    PolarBlock b2;
    b2.center = c2;
    Vec3 lo2 = Vec3{box2, box2} - c2, hi2 = Vec3{1, 1} - c2;
    for (Vec3 q : {lo2, hi2, Vec3{lo2.x, hi2.y}, Vec3{hi2.x, lo2.y}}) b2.required_angles.push_back(angle_of(q));
    b2.levels = {circle(0.1), [=](double t) { return ray_box(t, lo2, hi2); }};
    b2.label = [](int ring, double) { return ring == 0 ? neg(1) : star(); };
    PolarOutput o1 = add_polar_block(b, b1, res, 0);
    PolarOutput o2 = add_polar_block(b, b2, res, 10);

    // tensor background whose lines pass through the block side nodes
    const double h = 1.0 / (1.5 * res);
    const auto& outer1 = o1.level_points.back();
    const auto& outer2 = o2.level_points.back();
    std::vector<double> xs = graded_fill(line_values(outer1, true, box1), line_values(outer2, true, box2), h);
    std::vector<double> ys = graded_fill(line_values(outer1, false, box1), line_values(outer2, false, box2), h);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
        double xm = 0.5 * (xs[i] + xs[i + 1]);
        double ym = 0.5 * (ys[k] + ys[k + 1]);
        if ((xm < box1 && ym < box1) || (xm > box2 && ym > box2)) continue;
        b.add_quad({Vec3{xs[i], ys[k]}, Vec3{xs[i + 1], ys[k]}, Vec3{xs[i + 1], ys[k + 1]},
                    Vec3{xs[i], ys[k + 1]}},
                   star(), 20);
      }
    break;
  }
  default: throw InvalidGeometry(fmt::format("{} is not a 2D family", to_string(d.family)));
  }
  return b.finish();
}

} // namespace defeat::detail
