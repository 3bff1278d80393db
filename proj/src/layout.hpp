// SPDX-License-Identifier: Apache-2.0
// Internal: universe construction from per-family block layouts.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "defeat/geometry.hpp"
#include "defeat/mesh.hpp"

namespace defeat::detail {

// Relative position (from the block center) of a level curve along direction theta.
using LevelFn = std::function<Vec3(double theta)>;
// Region of a cell between level `ring` and `ring + 1`; ring 0 includes the core square.
using LabelFn = std::function<ElementLabel(int ring, double theta)>;

struct PolarBlock {
  Vec3 center;
  double core_half = 0; // 0 picks a size from the first level
  std::vector<double> required_angles;
  std::vector<LevelFn> levels;
  LabelFn label;
};

// Collects elements and merges coincident vertices.
class UniverseBuilder {
public:
  explicit UniverseBuilder(int dim, double tol = 1e-11);

  int vertex(const Vec3& p);
  // Quads are given counterclockwise. Collapsed quads with three distinct
  // vertices are kept, fully degenerate ones dropped.
  void add_quad(const std::array<Vec3, 4>& pts, ElementLabel label, int patch);
  void add_hex(const std::array<int, 8>& ids, ElementLabel label, int patch);
  const std::vector<Vec3>& vertices() const { return u_.vertices; }
  Universe finish();

private:
  struct Key {
    std::int64_t i, j, k;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = static_cast<std::uint64_t>(k.i) * 0x9E3779B97F4A7C15ull;
      h ^= static_cast<std::uint64_t>(k.j) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
      h ^= static_cast<std::uint64_t>(k.k) + 0x94D049BB133111EBull + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };
  Key key_of(const Vec3& p) const;

  int dim_;
  double tol_;
  double cell_;
  Universe u_;
  std::unordered_map<Key, std::vector<int>, KeyHash> grid_;
};

struct PolarOutput {
  // points of each level (index 0 is the core boundary) per spoke
  std::vector<std::vector<Vec3>> level_points;
  std::vector<double> angles;
};

PolarOutput add_polar_block(UniverseBuilder& b, const PolarBlock& block, int resolution,
                            int patch_base);

// Ray from the origin along theta against the box [lo, hi] that contains the
// origin; returns the exit point with the hit coordinate snapped exactly.
Vec3 ray_box(double theta, Vec3 lo, Vec3 hi);
// First intersection of the ray from the origin with a circle.
Vec3 ray_circle(double theta, Vec3 center, double radius);
Vec3 ray_polygon(double theta, const std::vector<Vec3>& poly);

Universe build_universe_2d(const DomainDescription& d, const MeshOptions& o);
Universe build_universe_3d(const DomainDescription& d, const MeshOptions& o);

// Graded 1D node list: `cells` uniform cells on [a, b], geometric growth by
// 1/ratio outward up to h_max, ending exactly at lo and hi.
std::vector<double> graded_axis(double lo, double a, double b, double hi, int cells, double ratio,
                                double h_max);

} // namespace defeat::detail
