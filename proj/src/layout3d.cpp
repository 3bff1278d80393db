// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "defeat/errors.hpp"
#include "layout.hpp"

namespace defeat::detail {

std::vector<double> graded_axis(double lo, double a, double b, double hi, int cells, double ratio,
                                double h_max) {
  const double hf = (b - a) / cells;
  const double growth = 1.0 / ratio;
  std::vector<double> below, above;
  double h = hf;
  double x = a;
  while (x - lo > 1.5 * h) {
    x -= h;
    below.push_back(x);
    h = std::min(h * growth, std::max(h_max, hf));
  }
  h = hf;
  x = b;
  while (hi - x > 1.5 * h) {
    x += h;
    above.push_back(x);
    h = std::min(h * growth, std::max(h_max, hf));
  }
  std::vector<double> out;
  if (a > lo) out.push_back(lo);
  out.insert(out.end(), below.rbegin(), below.rend());
  for (int i = 0; i <= cells; ++i) out.push_back(i == cells ? b : a + hf * i);
  out.insert(out.end(), above.begin(), above.end());
  if (hi > b) out.push_back(hi);
  return out;
}

Universe build_universe_3d(const DomainDescription& d, const MeshOptions& o) {
  const double s = d.params.size;
  const bool edge = d.family == Family::CubeEdgeNeg || d.family == Family::CubeEdgePos;
  const bool neg = d.family == Family::CubeCenterNeg || d.family == Family::CubeEdgeNeg;
  if (!neg && !(d.family == Family::CubeCenterPos || d.family == Family::CubeEdgePos))
    throw InvalidGeometry(fmt::format("{} is not a 3D family", to_string(d.family)));

  std::array<double, 3> flo{edge ? 1.0 - s : 0.5 - 0.5 * s, neg ? 1.0 - s : 1.0, 0.0};
  std::array<double, 3> fhi{edge ? 1.0 : 0.5 + 0.5 * s, neg ? 1.0 : 1.0 + s, s};
  std::array<double, 3> ulo{0, 0, 0};
  std::array<double, 3> uhi{1, neg ? 1.0 : 1.0 + s, 1};
  const double h_max = 1.0 / 20.0;
  std::array<std::vector<double>, 3> ax;
  for (int k = 0; k < 3; ++k)
    ax[k] = graded_axis(ulo[k], flo[k], fhi[k], uhi[k], o.resolution, o.grading, h_max);

  const int nx = static_cast<int>(ax[0].size());
  const int ny = static_cast<int>(ax[1].size());
  const int nz = static_cast<int>(ax[2].size());
  // structured numbering, no merging needed
  std::vector<Vec3> verts;
  verts.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) verts.push_back({ax[0][i], ax[1][j], ax[2][k]});
  auto id = [&](int i, int j, int k) { return (k * ny + j) * nx + i; };

  Universe u;
  u.dim = 3;
  u.vertices = std::move(verts);
  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        Vec3 m{0.5 * (ax[0][i] + ax[0][i + 1]), 0.5 * (ax[1][j] + ax[1][j + 1]),
               0.5 * (ax[2][k] + ax[2][k + 1])};
        bool inside = m.x > flo[0] && m.x < fhi[0] && m.y > flo[1] && m.y < fhi[1] &&
                      m.z > flo[2] && m.z < fhi[2];
        ElementLabel lab;
        if (inside)
          lab = {neg ? Region::Negative : Region::Positive, 0};
        else if (m.y > 1.0)
          continue;
        else
          lab = {Region::Star, -1};
        std::array<int, 8> ids{id(i, j, k),         id(i + 1, j, k),     id(i + 1, j + 1, k),
                               id(i, j + 1, k),     id(i, j, k + 1),     id(i + 1, j, k + 1),
                               id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)};
        u.connectivity.insert(u.connectivity.end(), ids.begin(), ids.end());
        u.labels.push_back(lab);
        u.patch.push_back(0);
      }
  return u;
}

} // namespace defeat::detail
