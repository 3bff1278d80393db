// SPDX-License-Identifier: Apache-2.0
#include "defeat/defeaturing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "defeat/errors.hpp"

namespace defeat {

double eta() {
  // Newton on x + log x = 0.
  static const double value = [] {
    double x = 0.5;
    for (int i = 0; i < 60; ++i) {
      double fx = x + std::log(x);
      double step = fx / (1.0 + 1.0 / x);
      x -= step;
      if (std::abs(step) < 1e-17) break;
    }
    return x;
  }();
  return value;
}

double c_sigma(int n, double measure) {
  if (n != 2 && n != 3) throw DomainError(fmt::format("c_sigma: dimension {} not in {{2, 3}}", n));
  if (!(measure > 0)) throw DomainError(fmt::format("c_sigma: measure {} is not positive", measure));
  if (n == 3) return 1.0;
  return std::sqrt(std::max(std::abs(std::log(measure)), eta()));
}

double SigmaTrace::quadrature_measure() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double SigmaTrace::mean() const {
  double s = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * defect[i];
  double m = quadrature_measure();
  return m > 0 ? s / m : 0.0;
}

double SigmaTrace::norm() const {
  double s = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * defect[i] * defect[i];
  return std::sqrt(s);
}

double SigmaTrace::fluctuation() const {
  const double m = mean();
  double s = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * (defect[i] - m) * (defect[i] - m);
  return std::sqrt(s);
}

ScalarField assemble_ud(const ScalarField& u0, const ScalarField* u0_tilde, const Mesh& exact) {
  const Universe& u = exact.universe();
  if (&u0.mesh().universe() != &u)
    throw MeshIncompatibility("u0 does not share the exact mesh's element numbering");
  if (u0_tilde && &u0_tilde->mesh().universe() != &u)
    throw MeshIncompatibility("extension solution does not share the exact mesh's element numbering");
  std::vector<char> positive(u.vertices.size(), 0);
  bool any_positive = false;
  for (int e = 0; e < exact.element_count(); ++e) {
    if (exact.label(e).region != Region::Positive) continue;
    any_positive = true;
    for (int uv : u.element(exact.universe_element(e))) positive[uv] = 1;
  }
  if (any_positive && !u0_tilde)
    throw MeshIncompatibility("exact mesh has positive elements but no extension solution was given");
  std::vector<double> v(exact.vertex_count());
  for (int i = 0; i < exact.vertex_count(); ++i) {
    int uv = exact.universe_vertex(i);
    try {
      v[i] = positive[uv] ? u0_tilde->vertex_value(uv) : u0.vertex_value(uv);
    } catch (const GeometryMismatch& ex) {
      throw MeshIncompatibility(fmt::format("assemble_ud: {}", ex.what()));
    }
  }
  return ScalarField(exact, std::move(v));
}

namespace {

// Flat components are split in two along each direction so that the zero-trace
// space of degree one is not trivial on a single straight piece.
void add_flat_cells(const Component& c, int dim, std::vector<PartitionCell>& out) {
  if (c.kind == Component::Kind::Segment) {
    Vec3 half = (c.b - c.a) * 0.5;
    out.push_back({c.a, half, {}});
    out.push_back({c.a + half, half, {}});
    return;
  }
  (void)dim;
  Vec3 h1 = c.b * 0.5, h2 = c.c * 0.5;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) out.push_back({c.a + h1 * double(i) + h2 * double(j), h1, h2});
}

// Arcs are cut into pieces of at most a quarter turn, each halved like a flat
// segment; a cell is the chord of its sub-arc.
void add_arc_cells(const Component& c, std::vector<PartitionCell>& out) {
  const double span = c.theta1 - c.theta0;
  const int pieces = std::max(1, static_cast<int>(std::ceil(span / (0.5 * std::numbers::pi) - 1e-9)));
  const int n = 2 * pieces;
  for (int i = 0; i < n; ++i) {
    Vec3 p = c.point(double(i) / n), q = c.point(double(i + 1) / n);
    out.push_back({p, q - p, {}});
  }
}

std::vector<PartitionCell> build_partition(const BoundaryPiece& piece, int dim) {
  std::vector<PartitionCell> cells;
  for (const Component& c : piece.components) {
    if (c.curved())
      add_arc_cells(c, cells);
    else
      add_flat_cells(c, dim, cells);
  }
  return cells;
}

double defect_value(PieceTag tag, const ProblemData& data, const Vec3& x, double dudn) {
  switch (tag) {
  case PieceTag::GammaN:
  case PieceTag::GammaR: return data.g_feature(x) - dudn;
  case PieceTag::Gamma0P: return -(data.g0(x) + dudn);
  default: break;
  }
  throw ConfigurationError(fmt::format("no defect defined on {}", to_string(tag)));
}

} // namespace

std::vector<SigmaTrace> sigma_defects(const ScalarField& ud, const DomainDescription& domain,
                                      const ProblemData& data, const MeshSet& meshes, int order,
                                      const ScalarField* extension) {
  if (!data.g_feature || !data.g0)
    throw ConfigurationError("feature Neumann data is not set");
  const int dim = domain.dim;
  std::vector<SigmaTrace> out;
  for (const FeatureInfo& fi : domain.features) {
    for (PieceTag tag : {PieceTag::GammaN, PieceTag::GammaR, PieceTag::Gamma0P}) {
      BoundaryPiece piece = domain.piece(tag, fi.id);
      if (piece.empty()) continue;
      const Mesh* mesh = &meshes.exact;
      if (tag == PieceTag::Gamma0P) {
        if (!meshes.extension) throw MeshIncompatibility("positive feature without an extension mesh");
        mesh = &*meshes.extension;
      }
      if (!mesh->has_tag(tag, fi.id)) continue;
      std::vector<QuadPoint> quad = boundary_quadrature(*mesh, tag, order, fi.id);
      SigmaTrace t;
      t.tag = tag;
      t.feature = fi.id;
      t.dim = dim;
      t.measure = piece.measure();
      // Faces of the extension mesh face outward from the positive part, which is n_F.
      std::vector<double> flux;
      if (tag == PieceTag::Gamma0P && extension)
        flux = residual_flux(*extension, extension_problem(data, *extension), tag, quad);
      else
        flux = flux_trace(ud, quad);
      for (std::size_t k = 0; k < quad.size(); ++k) {
        const QuadPoint& q = quad[k];
        double dudn = flux[k];
        t.points.push_back(q.point);
        t.weights.push_back(q.weight);
        t.normals.push_back(q.normal);
        t.defect.push_back(defect_value(tag, data, q.point, dudn));
      }
      t.partition = build_partition(piece, dim);
      out.push_back(std::move(t));
    }
  }
  return out;
}

namespace {

int exponent_check(int n) {
  if (n != 2 && n != 3) throw DomainError(fmt::format("estimator: dimension {} not in {{2, 3}}", n));
  return n;
}

SigmaContribution contribution(const SigmaTrace& t, int n) {
  SigmaContribution s;
  s.tag = t.tag;
  s.feature = t.feature;
  s.measure = t.measure;
  if (!(t.measure > 0)) throw DomainError("estimator: trace with non-positive measure");
  s.mean = t.mean();
  s.fluctuation = t.fluctuation();
  s.norm = t.norm();
  s.c = c_sigma(n, t.measure);
  const double p1 = std::pow(t.measure, 1.0 / (n - 1));
  const double pn = std::pow(t.measure, double(n) / (n - 1));
  s.contribution2 = p1 * s.fluctuation * s.fluctuation + s.c * s.c * pn * s.mean * s.mean;
  s.tilde2 = s.c * s.c * p1 * s.norm * s.norm;
  return s;
}

std::vector<int> feature_ids(const std::vector<SigmaTrace>& traces) {
  std::vector<int> ids;
  for (const SigmaTrace& t : traces)
    if (std::find(ids.begin(), ids.end(), t.feature) == ids.end()) ids.push_back(t.feature);
  std::sort(ids.begin(), ids.end());
  return ids;
}

} // namespace

EstimatorReport estimator(const std::vector<SigmaTrace>& traces, int n) {
  exponent_check(n);
  if (traces.empty()) throw DomainError("estimator: no traces");
  EstimatorReport r;
  r.dim = n;
  for (const SigmaTrace& t : traces) r.sigmas.push_back(contribution(t, n));
  double rss2 = 0;
  for (int id : feature_ids(traces)) {
    FeatureSummary f;
    f.feature = id;
    double e2 = 0, t2 = 0;
    for (const SigmaContribution& s : r.sigmas)
      if (s.feature == id) {
        e2 += s.contribution2;
        t2 += s.tilde2;
      }
    f.estimator = std::sqrt(e2);
    f.estimator_tilde = std::sqrt(t2);
    r.estimator += f.estimator;
    r.estimator_tilde += f.estimator_tilde;
    rss2 += e2;
    r.features.push_back(f);
  }
  r.estimator_rss = std::sqrt(rss2);
  return r;
}

double estimator_tilde(const std::vector<SigmaTrace>& traces, int n) {
  exponent_check(n);
  if (traces.empty()) throw DomainError("estimator_tilde: no traces");
  double total = 0;
  for (int id : feature_ids(traces)) {
    double t2 = 0;
    for (const SigmaTrace& t : traces)
      if (t.feature == id) t2 += contribution(t, n).tilde2;
    total += std::sqrt(t2);
  }
  return total;
}

namespace {

// Lagrange basis of degree m on equispaced nodes of [0,1].
double lagrange(int m, int k, double s) {
  if (m == 0) return 1.0;
  double v = 1.0;
  const double sk = double(k) / m;
  for (int j = 0; j <= m; ++j)
    if (j != k) v *= (s - double(j) / m) / (sk - double(j) / m);
  return v;
}

struct Key {
  long long x, y, z;
  bool operator<(const Key& o) const { return std::tie(x, y, z) < std::tie(o.x, o.y, o.z); }
};

Key key_of(const Vec3& p, double scale) {
  auto r = [scale](double v) { return static_cast<long long>(std::llround(v / scale)); };
  return {r(p.x), r(p.y), r(p.z)};
}

// Local coordinates of p in the cell and its distance to the cell.
std::pair<Vec3, double> locate(const PartitionCell& c, const Vec3& p, int dim) {
  Vec3 d = p - c.a;
  double s = 0, t = 0;
  if (dim == 2) {
    s = std::clamp(dot(d, c.e1) / dot(c.e1, c.e1), 0.0, 1.0);
  } else {
    // Cells are parallelograms; solve the 2x2 normal equations.
    double a11 = dot(c.e1, c.e1), a12 = dot(c.e1, c.e2), a22 = dot(c.e2, c.e2);
    double b1 = dot(d, c.e1), b2 = dot(d, c.e2);
    double det = a11 * a22 - a12 * a12;
    s = std::clamp((b1 * a22 - b2 * a12) / det, 0.0, 1.0);
    t = std::clamp((a11 * b2 - a12 * b1) / det, 0.0, 1.0);
  }
  Vec3 q = c.a + c.e1 * s + c.e2 * t;
  return {{s, t, 0}, defeat::norm(p - q)};
}

} // namespace

std::vector<double> clement_project(const SigmaTrace& trace, int m) {
  if (trace.partition.empty()) throw ConfigurationError("clement_project: empty partition");
  if (m < 0) throw DomainError("clement_project: negative degree");
  const int dim = trace.dim;
  const auto& cells = trace.partition;
  const int per_dir = m + 1;
  const int local_n = dim == 2 ? per_dir : per_dir * per_dir;

  double scale = 0;
  for (const auto& c : cells) scale = std::max({scale, defeat::norm(c.e1), defeat::norm(c.e2)});
  const double snap = std::max(scale, 1e-300) * 1e-9;

  // Edges (2D: endpoints) counted over cells; those seen once form the boundary.
  std::map<std::pair<Key, Key>, int> edge_count;
  auto edge_key = [&](const Vec3& p, const Vec3& q) {
    Key a = key_of(p, snap), b = key_of(q, snap);
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };
  auto cell_edges = [&](const PartitionCell& c) {
    std::vector<std::pair<Vec3, Vec3>> e;
    if (dim == 2) {
      e.push_back({c.a, c.a});
      e.push_back({c.a + c.e1, c.a + c.e1});
    } else {
      Vec3 p00 = c.a, p10 = c.a + c.e1, p01 = c.a + c.e2, p11 = c.a + c.e1 + c.e2;
      e = {{p00, p10}, {p10, p11}, {p11, p01}, {p01, p00}};
    }
    return e;
  };
  for (const auto& c : cells)
    for (auto& [p, q] : cell_edges(c)) ++edge_count[edge_key(p, q)];

  auto on_boundary = [&](const PartitionCell& c, double s, double t) {
    const double tol = 1e-12;
    if (dim == 2) {
      if (s < tol) return edge_count[edge_key(c.a, c.a)] == 1;
      if (s > 1 - tol) return edge_count[edge_key(c.a + c.e1, c.a + c.e1)] == 1;
      return false;
    }
    Vec3 p00 = c.a, p10 = c.a + c.e1, p01 = c.a + c.e2, p11 = c.a + c.e1 + c.e2;
    bool b = false;
    if (t < tol) b = b || edge_count[edge_key(p00, p10)] == 1;
    if (s > 1 - tol) b = b || edge_count[edge_key(p10, p11)] == 1;
    if (t > 1 - tol) b = b || edge_count[edge_key(p11, p01)] == 1;
    if (s < tol) b = b || edge_count[edge_key(p01, p00)] == 1;
    return b;
  };

  // Global numbering of the free Lagrange nodes. Degree zero has one node per
  // cell at its center.
  std::map<Key, int> node_id;
  std::vector<std::vector<int>> dofs(cells.size(), std::vector<int>(local_n, -1));
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& c = cells[ci];
    for (int l = 0; l < local_n; ++l) {
      int i = l % per_dir, j = l / per_dir;
      double s = m == 0 ? 0.5 : double(i) / m;
      double t = dim == 2 ? 0.0 : (m == 0 ? 0.5 : double(j) / m);
      if (m == 0) {
        // A constant touching the boundary must vanish.
        bool touches = false;
        for (auto& [p, q] : cell_edges(c))
          if (edge_count[edge_key(p, q)] == 1) touches = true;
        if (touches) continue;
        Vec3 x = c.a + c.e1 * s + c.e2 * t;
        dofs[ci][l] = static_cast<int>(node_id.size());
        node_id[key_of(x, snap)] = dofs[ci][l];
        continue;
      }
      if (on_boundary(c, s, t)) continue;
      Vec3 x = c.a + c.e1 * s + c.e2 * t;
      Key k = key_of(x, snap);
      auto it = node_id.find(k);
      if (it == node_id.end()) it = node_id.emplace(k, static_cast<int>(node_id.size())).first;
      dofs[ci][l] = it->second;
    }
  }
  // m = 0 keeps cells independent; the map above is only used for counting then.
  const int nd = static_cast<int>(node_id.size());

  const std::size_t np = trace.points.size();
  std::vector<int> cell_of(np, -1);
  std::vector<Vec3> local(np);
  for (std::size_t p = 0; p < np; ++p) {
    double best = 1e300;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      auto [st, dist] = locate(cells[ci], trace.points[p], dim);
      if (dist < best - 1e-14 * scale) {
        best = dist;
        cell_of[p] = static_cast<int>(ci);
        local[p] = st;
      }
    }
  }
  auto basis = [&](int l, const Vec3& st) {
    int i = l % per_dir, j = l / per_dir;
    return lagrange(m, i, st.x) * (dim == 2 ? 1.0 : lagrange(m, j, st.y));
  };

  std::vector<double> out(np, 0.0);
  if (nd == 0) return out;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nd, nd);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nd);
  for (std::size_t p = 0; p < np; ++p) {
    const auto& dd = dofs[cell_of[p]];
    for (int a = 0; a < local_n; ++a) {
      if (dd[a] < 0) continue;
      double pa = basis(a, local[p]);
      b[dd[a]] += trace.weights[p] * trace.defect[p] * pa;
      for (int c = 0; c < local_n; ++c)
        if (dd[c] >= 0) M(dd[a], dd[c]) += trace.weights[p] * pa * basis(c, local[p]);
    }
  }
  // Nodes without samples get a unit diagonal so they stay at zero.
  for (int i = 0; i < nd; ++i)
    if (M(i, i) == 0) M(i, i) = 1.0;
  Eigen::VectorXd coef = M.ldlt().solve(b);
  for (std::size_t p = 0; p < np; ++p) {
    const auto& dd = dofs[cell_of[p]];
    double v = 0;
    for (int a = 0; a < local_n; ++a)
      if (dd[a] >= 0) v += coef[dd[a]] * basis(a, local[p]);
    out[p] = v;
  }
  return out;
}

double oscillation(const std::vector<SigmaTrace>& traces, int m, int n) {
  exponent_check(n);
  double gamma = 0, s = 0;
  for (const SigmaTrace& t : traces) {
    std::vector<double> pi = clement_project(t, m);
    gamma += t.measure;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      double r = t.defect[i] - pi[i];
      s += t.weights[i] * r * r;
    }
  }
  if (gamma <= 0) return 0.0;
  return std::pow(gamma, 1.0 / (2.0 * (n - 1))) * std::sqrt(s);
}

namespace {

double boundary_integral(const Mesh& mesh, PieceTag tag, int feature, const ScalarFn& fn,
                         double& abs_sum) {
  if (!mesh.has_tag(tag, feature)) return 0.0;
  double s = 0;
  for (const QuadPoint& q : boundary_quadrature(mesh, tag, 4, feature)) {
    double v = q.weight * fn(q.point);
    s += v;
    abs_sum += std::abs(v);
  }
  return s;
}

double volume_integral(const Mesh& mesh, Region region, int feature, const ProblemData& data,
                       double& abs_sum) {
  auto select = [region, feature](const ElementLabel& l) {
    return l.region == region && l.feature == feature;
  };
  double v = integrate_region(mesh, [&](const Vec3& x) { return data.source(x, region); }, select);
  abs_sum += std::abs(v);
  return v;
}

} // namespace

std::vector<FluxPrediction> flux_residual(const DomainDescription& domain, const ProblemData& data,
                                          const MeshSet& meshes) {
  data.validate();
  std::vector<FluxPrediction> out;
  for (const FeatureInfo& fi : domain.features) {
    const int id = fi.id;
    const double mn = domain.measure(PieceTag::GammaN, id);
    if (mn > 0) {
      FluxPrediction p{PieceTag::GammaN, id, 0, 0};
      double s = boundary_integral(meshes.exact, PieceTag::GammaN, id, data.g_feature, p.scale);
      s -= boundary_integral(meshes.defeatured, PieceTag::Gamma0N, id, data.g0, p.scale);
      s -= volume_integral(meshes.defeatured, Region::Negative, id, data, p.scale);
      p.predicted_mean = s / mn;
      p.scale /= mn;
      out.push_back(p);
    }
    if (!meshes.extension) continue;
    const Mesh& ext = *meshes.extension;
    const double mr = domain.measure(PieceTag::GammaR, id);
    // Balance over the extension part F~ \ F_p; shared by both positive pieces.
    double ext_scale = 0;
    double ext_balance = boundary_integral(ext, PieceTag::GammaTilde, id, data.g_tilde, ext_scale) +
                         volume_integral(ext, Region::Extension, id, data, ext_scale);
    if (mr > 0) {
      FluxPrediction p{PieceTag::GammaR, id, 0, ext_scale};
      double s = boundary_integral(meshes.exact, PieceTag::GammaR, id, data.g_feature, p.scale);
      p.predicted_mean = (s - ext_balance) / mr;
      p.scale /= mr;
      out.push_back(p);
    }
    const double m0 = domain.measure(PieceTag::Gamma0P, id);
    if (m0 > 0) {
      // Mean of g0 + du~/dn_F over the simplified boundary from the divergence
      // theorem on the whole extension. The defect has the opposite sign.
      FluxPrediction p{PieceTag::Gamma0P, id, 0, ext_scale};
      double s = boundary_integral(ext, PieceTag::Gamma0P, id, data.g0, p.scale);
      s -= boundary_integral(ext, PieceTag::GammaS, id, data.g_feature, p.scale);
      s -= volume_integral(ext, Region::Positive, id, data, p.scale);
      s -= ext_balance;
      p.predicted_mean = -s / m0;
      p.scale /= m0;
      out.push_back(p);
    }
  }
  return out;
}

} // namespace defeat
