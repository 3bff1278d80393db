// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "defeat/vec.hpp"

namespace defeat {

// Gauss-Legendre rule on [0,1], n in 1..6.
struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const GaussRule& gauss_rule(int n);

// Bilinear (dim 2) or trilinear (dim 3) element on the reference cube [0,1]^dim.
struct ElementEval {
  int dim = 2;
  int nodes = 4;
  std::array<double, 8> N{};
  std::array<Vec3, 8> grad{}; // physical gradients
  Vec3 point;
  double det = 0; // Jacobian determinant
  std::array<std::array<double, 3>, 3> jac{};
  std::array<std::array<double, 3>, 3> inv{}; // inverse Jacobian, inv[i][j] = d ref_i / d x_j
};

void q1_shape(int dim, const Vec3& ref, std::span<double> N, std::span<Vec3> dref);

// Evaluates shape values, physical gradients and the map at `ref`.
// `coords` holds 4 or 8 vertex positions in reference order.
ElementEval evaluate_element(int dim, std::span<const Vec3> coords, const Vec3& ref);

} // namespace defeat
