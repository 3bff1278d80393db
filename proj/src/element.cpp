// SPDX-License-Identifier: Apache-2.0
#include "defeat/element.hpp"

#include <cmath>
#include <stdexcept>

namespace defeat {

namespace {

GaussRule make_rule(int n) {
  // Nodes on [-1,1] by Newton on the Legendre polynomial, mapped to [0,1].
  GaussRule r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.points[n - 1 - i] = 0.5 * (x + 1.0);
    r.weights[n - 1 - i] = 0.5 * w;
  }
  return r;
}

} // namespace

const GaussRule& gauss_rule(int n) {
  static const std::array<GaussRule, 8> rules = [] {
    std::array<GaussRule, 8> out;
    for (int k = 1; k < 8; ++k) out[k] = make_rule(k);
    return out;
  }();
  if (n < 1 || n > 7) throw std::out_of_range("gauss_rule: order must be in 1..7");
  return rules[n];
}

void q1_shape(int dim, const Vec3& ref, std::span<double> N, std::span<Vec3> dref) {
  const double x = ref.x, y = ref.y;
  if (dim == 2) {
    N[0] = (1 - x) * (1 - y);
    N[1] = x * (1 - y);
    N[2] = x * y;
    N[3] = (1 - x) * y;
    dref[0] = {-(1 - y), -(1 - x)};
    dref[1] = {(1 - y), -x};
    dref[2] = {y, x};
    dref[3] = {-y, (1 - x)};
    return;
  }
  const double z = ref.z;
  const double sx[2] = {1 - x, x}, sy[2] = {1 - y, y}, sz[2] = {1 - z, z};
  const double dx[2] = {-1, 1};
  // vertex k: (bx, by, bz) with 0..3 the z=0 face counterclockwise, 4..7 above
  static constexpr int bits[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  for (int k = 0; k < 8; ++k) {
    int i = bits[k][0], j = bits[k][1], l = bits[k][2];
    N[k] = sx[i] * sy[j] * sz[l];
    dref[k] = {dx[i] * sy[j] * sz[l], sx[i] * dx[j] * sz[l], sx[i] * sy[j] * dx[l]};
  }
}

ElementEval evaluate_element(int dim, std::span<const Vec3> coords, const Vec3& ref) {
  ElementEval ev;
  ev.dim = dim;
  ev.nodes = dim == 2 ? 4 : 8;
  std::array<Vec3, 8> dref{};
  q1_shape(dim, ref, ev.N, dref);
  auto& J = ev.jac;
  for (auto& row : J) row = {0, 0, 0};
  Vec3 p;
  for (int k = 0; k < ev.nodes; ++k) {
    p += coords[k] * ev.N[k];
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) J[i][j] += coords[k][i] * dref[k][j];
  }
  ev.point = p;
  auto& inv = ev.inv;
  if (dim == 2) {
    ev.det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    double id = 1.0 / ev.det;
    // inv = (dx/dref)^{-1}, rows index ref coordinates
    inv[0] = {J[1][1] * id, -J[0][1] * id, 0};
    inv[1] = {-J[1][0] * id, J[0][0] * id, 0};
    inv[2] = {0, 0, 0};
  } else {
    ev.det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
             J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
             J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    double id = 1.0 / ev.det;
    inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) * id;
    inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) * id;
    inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) * id;
    inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) * id;
    inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) * id;
    inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) * id;
    inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) * id;
    inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) * id;
    inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) * id;
  }
  // grad N = J^{-T} dref
  for (int k = 0; k < ev.nodes; ++k) {
    Vec3 g;
    for (int j = 0; j < dim; ++j) {
      double s = 0;
      for (int i = 0; i < dim; ++i) s += dref[k][i] * inv[i][j];
      g[j] = s;
    }
    ev.grad[k] = g;
  }
  return ev;
}

} // namespace defeat
