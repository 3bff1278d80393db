// SPDX-License-Identifier: Apache-2.0
#include "defeat/fem.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "defeat/element.hpp"
#include "defeat/errors.hpp"

namespace defeat {

namespace {

std::array<Vec3, 8> element_coords(const Mesh& m, int e) {
  std::array<Vec3, 8> c{};
  const int nn = m.universe().nodes_per_element();
  for (int k = 0; k < nn; ++k) c[k] = m.vertex(m.element_vertex(e, k));
  return c;
}

template <class F>
void for_each_volume_point(int dim, int order, F&& f) {
  const GaussRule& g = gauss_rule(order);
  const int nz = dim == 3 ? order : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < order; ++j)
      for (int i = 0; i < order; ++i) {
        Vec3 ref{g.points[i], g.points[j], dim == 3 ? g.points[k] : 0.0};
        double w = g.weights[i] * g.weights[j] * (dim == 3 ? g.weights[k] : 1.0);
        f(ref, w);
      }
}

} // namespace

ScalarField::ScalarField(const Mesh& mesh, std::vector<double> v) : values(std::move(v)), mesh_(&mesh) {
  if (static_cast<int>(values.size()) != mesh.vertex_count())
    throw MeshIncompatibility(fmt::format("field has {} coefficients for {} vertices", values.size(),
                                          mesh.vertex_count()));
}

double ScalarField::value_at(int ue, const Vec3& ref) const {
  int e = mesh_->local_element(ue);
  if (e < 0) throw GeometryMismatch(fmt::format("element {} is not part of the field's mesh", ue));
  const int dim = mesh_->dim();
  std::array<double, 8> N{};
  std::array<Vec3, 8> d{};
  q1_shape(dim, ref, N, d);
  double s = 0;
  for (int k = 0; k < (dim == 2 ? 4 : 8); ++k) s += N[k] * values[mesh_->element_vertex(e, k)];
  return s;
}

Vec3 ScalarField::gradient_at(int ue, const Vec3& ref) const {
  int e = mesh_->local_element(ue);
  if (e < 0) throw GeometryMismatch(fmt::format("element {} is not part of the field's mesh", ue));
  auto c = element_coords(*mesh_, e);
  const int dim = mesh_->dim();
  const int nn = dim == 2 ? 4 : 8;
  ElementEval ev = evaluate_element(dim, {c.data(), static_cast<std::size_t>(nn)}, ref);
  Vec3 g;
  for (int k = 0; k < nn; ++k) g += ev.grad[k] * values[mesh_->element_vertex(e, k)];
  return g;
}

double ScalarField::vertex_value(int uv) const {
  int v = mesh_->local_vertex(uv);
  if (v < 0) throw GeometryMismatch(fmt::format("vertex {} is not part of the field's mesh", uv));
  return values[v];
}

double ProblemData::source(const Vec3& x, Region r) const {
  switch (r) {
  case Region::Negative: return f_negative ? f_negative(x) : f(x);
  case Region::Extension: return f_positive ? f_positive(x) : f(x);
  default: return f(x);
  }
}

double ProblemData::neumann(PieceTag tag, const Vec3& x) const {
  switch (tag) {
  case PieceTag::NeumannRest: return g(x);
  case PieceTag::GammaN:
  case PieceTag::GammaS:
  case PieceTag::GammaR: return g_feature(x);
  case PieceTag::Gamma0N:
  case PieceTag::Gamma0P: return g0(x);
  case PieceTag::GammaTilde: return g_tilde(x);
  case PieceTag::Dirichlet: break;
  }
  throw ConfigurationError("no Neumann data on the Dirichlet boundary");
}

void ProblemData::validate() const {
  if (!f) throw ConfigurationError("source f not set");
  if (!h) throw ConfigurationError("Dirichlet data h not set");
  if (!g) throw ConfigurationError("Neumann data g not set");
  if (!g_feature) throw ConfigurationError("feature Neumann data not set");
  if (!g0) throw ConfigurationError("simplified Neumann data g0 not set");
  if (!g_tilde) throw ConfigurationError("extension Neumann data not set");
}

ProblemData zero_data() {
  ProblemData d;
  auto zero = [](const Vec3&) { return 0.0; };
  d.f = d.h = d.g = d.g_feature = d.g0 = d.g_tilde = zero;
  return d;
}

PoissonSetup exact_problem(const ProblemData& data) {
  data.validate();
  PoissonSetup s;
  s.source = [&data](const Vec3& x, Region r) { return data.source(x, r); };
  s.dirichlet.push_back({PieceTag::Dirichlet, data.h, nullptr});
  for (PieceTag t : {PieceTag::NeumannRest, PieceTag::GammaN, PieceTag::GammaS, PieceTag::GammaR})
    s.neumann.push_back({t, [&data, t](const Vec3& x) { return data.neumann(t, x); }, nullptr});
  return s;
}

PoissonSetup defeatured_problem(const ProblemData& data) {
  data.validate();
  PoissonSetup s;
  s.source = [&data](const Vec3& x, Region r) { return data.source(x, r); };
  s.dirichlet.push_back({PieceTag::Dirichlet, data.h, nullptr});
  for (PieceTag t : {PieceTag::NeumannRest, PieceTag::Gamma0N, PieceTag::Gamma0P})
    s.neumann.push_back({t, [&data, t](const Vec3& x) { return data.neumann(t, x); }, nullptr});
  return s;
}

PoissonSetup extension_problem(const ProblemData& data, const ScalarField& u0) {
  data.validate();
  PoissonSetup s;
  s.source = [&data](const Vec3& x, Region r) { return data.source(x, r); };
  s.dirichlet.push_back({PieceTag::Gamma0P, nullptr, &u0});
  for (PieceTag t : {PieceTag::GammaS, PieceTag::GammaTilde})
    s.neumann.push_back({t, [&data, t](const Vec3& x) { return data.neumann(t, x); }, nullptr});
  return s;
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  const int dim = mesh.dim();
  const int nn = dim == 2 ? 4 : 8;
  const int nv = mesh.vertex_count();
  // pattern
  std::vector<std::vector<int>> rows(nv);
  for (int e = 0; e < mesh.element_count(); ++e)
    for (int a = 0; a < nn; ++a)
      for (int b = 0; b < nn; ++b) rows[mesh.element_vertex(e, a)].push_back(mesh.element_vertex(e, b));
  SparseMatrix K;
  K.n = nv;
  K.row_ptr.assign(nv + 1, 0);
  for (int i = 0; i < nv; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    K.row_ptr[i + 1] = K.row_ptr[i] + static_cast<int>(r.size());
  }
  K.col.reserve(K.row_ptr[nv]);
  for (auto& r : rows) {
    K.col.insert(K.col.end(), r.begin(), r.end());
    std::vector<int>().swap(r);
  }
  K.val.assign(K.col.size(), 0.0);

  std::array<std::array<double, 8>, 8> ke;
  for (int e = 0; e < mesh.element_count(); ++e) {
    auto c = element_coords(mesh, e);
    for (auto& row : ke) row.fill(0.0);
    for_each_volume_point(dim, 3, [&](const Vec3& ref, double w) {
      ElementEval ev = evaluate_element(dim, {c.data(), static_cast<std::size_t>(nn)}, ref);
      double jw = w * ev.det;
      for (int a = 0; a < nn; ++a)
        for (int b = a; b < nn; ++b) ke[a][b] += jw * dot(ev.grad[a], ev.grad[b]);
    });
    for (int a = 0; a < nn; ++a)
      for (int b = 0; b < a; ++b) ke[a][b] = ke[b][a];
    for (int a = 0; a < nn; ++a) {
      int i = mesh.element_vertex(e, a);
      for (int b = 0; b < nn; ++b) {
        int j = mesh.element_vertex(e, b);
        auto beg = K.col.begin() + K.row_ptr[i];
        auto end = K.col.begin() + K.row_ptr[i + 1];
        K.val[std::lower_bound(beg, end, j) - K.col.begin()] += ke[a][b];
      }
    }
  }
  return K;
}

namespace {

// Source and Neumann terms of the right hand side.
std::vector<double> assemble_load(const Mesh& mesh, const PoissonSetup& setup) {
  const int dim = mesh.dim();
  const int nn = dim == 2 ? 4 : 8;
  const int nv = mesh.vertex_count();
  std::vector<double> rhs(nv, 0.0);

  if (setup.source) {
    for (int e = 0; e < mesh.element_count(); ++e) {
      auto c = element_coords(mesh, e);
      Region r = mesh.label(e).region;
      for_each_volume_point(dim, 3, [&](const Vec3& ref, double w) {
        ElementEval ev = evaluate_element(dim, {c.data(), static_cast<std::size_t>(nn)}, ref);
        double fv = setup.source(ev.point, r) * w * ev.det;
        for (int a = 0; a < nn; ++a) rhs[mesh.element_vertex(e, a)] += fv * ev.N[a];
      });
    }
  }
  for (const auto& nd : setup.neumann) {
    if (!mesh.has_tag(nd.tag)) continue;
    if (!nd.value) throw ConfigurationError(fmt::format("no Neumann data for {}", to_string(nd.tag)));
    for (const QuadPoint& q : boundary_quadrature(mesh, nd.tag, 4)) {
      int e = mesh.local_element(q.element);
      std::array<double, 8> N{};
      std::array<Vec3, 8> d{};
      q1_shape(dim, q.reference, N, d);
      double gv = nd.value(q.point) * q.weight;
      for (int a = 0; a < nn; ++a) rhs[mesh.element_vertex(e, a)] += gv * N[a];
    }
  }
  return rhs;
}

} // namespace

ScalarField solve_poisson(const Mesh& mesh, const PoissonSetup& setup, const SolverOptions& opts,
                          SolveStats* stats) {
  const int dim = mesh.dim();
  const int nn = dim == 2 ? 4 : 8;
  const int nv = mesh.vertex_count();
  SparseMatrix K = assemble_stiffness(mesh);
  std::vector<double> rhs = assemble_load(mesh, setup);

  std::vector<char> fixed(nv, 0);
  std::vector<double> u(nv, 0.0);
  std::vector<PieceTag> used;
  for (const auto& dd : setup.dirichlet) {
    if (!mesh.has_tag(dd.tag)) continue;
    used.push_back(dd.tag);
    for (int v : mesh.tagged_vertices(dd.tag)) {
      fixed[v] = 1;
      if (dd.trace)
        u[v] = dd.trace->vertex_value(mesh.universe_vertex(v));
      else if (dd.value)
        u[v] = dd.value(mesh.vertex(v));
      else
        throw ConfigurationError(fmt::format("no Dirichlet data for {}", to_string(dd.tag)));
    }
  }
  bool gauge = std::none_of(fixed.begin(), fixed.end(), [](char c) { return c != 0; });
  if (gauge) {
    if (!setup.pure_neumann)
      throw GaugeRequired("no Dirichlet vertex: set the pure Neumann flag to impose a zero mean");
    // compatible right hand side, then pin one vertex
    double mean = 0;
    for (double v : rhs) mean += v;
    mean /= nv;
    for (double& v : rhs) v -= mean;
    fixed[0] = 1;
  }

  std::vector<int> map(nv, -1);
  int nf = 0;
  for (int v = 0; v < nv; ++v)
    if (!fixed[v]) map[v] = nf++;
  SparseMatrix A;
  A.n = nf;
  A.row_ptr.assign(nf + 1, 0);
  std::vector<double> b(nf, 0.0);
  for (int v = 0; v < nv; ++v) {
    if (fixed[v]) continue;
    int i = map[v];
    double bi = rhs[v];
    for (int k = K.row_ptr[v]; k < K.row_ptr[v + 1]; ++k) {
      int w = K.col[k];
      if (fixed[w])
        bi -= K.val[k] * u[w];
      else {
        A.col.push_back(map[w]);
        A.val.push_back(K.val[k]);
      }
    }
    b[i] = bi;
    A.row_ptr[i + 1] = static_cast<int>(A.col.size());
  }

  LinearSolver backend = opts.backend;
  if (backend == LinearSolver::Auto) backend = dim == 2 ? LinearSolver::Direct : LinearSolver::ConjugateGradient;
  std::vector<double> x;
  if (nf > 0) {
    x = backend == LinearSolver::Direct ? solve_spd_direct(A, b, stats)
                                        : solve_spd(A, b, opts.tol, opts.max_iter, stats);
  }
  for (int v = 0; v < nv; ++v)
    if (!fixed[v]) u[v] = x[map[v]];

  ScalarField field(mesh, std::move(u));
  field.dirichlet_tags = used;
  if (gauge) {
    double integral = 0, vol = 0;
    for (int e = 0; e < mesh.element_count(); ++e) {
      auto c = element_coords(mesh, e);
      for_each_volume_point(dim, 2, [&](const Vec3& ref, double w) {
        ElementEval ev = evaluate_element(dim, {c.data(), static_cast<std::size_t>(nn)}, ref);
        double val = 0;
        for (int a = 0; a < nn; ++a) val += ev.N[a] * field.values[mesh.element_vertex(e, a)];
        integral += val * w * ev.det;
        vol += w * ev.det;
      });
    }
    double mean = integral / vol;
    for (double& v : field.values) v -= mean;
  }
  return field;
}

std::vector<double> flux_trace(const ScalarField& field, const std::vector<QuadPoint>& quad) {
  std::vector<double> out;
  out.reserve(quad.size());
  for (const QuadPoint& q : quad) out.push_back(dot(field.gradient_at(q.element, q.reference), q.normal));
  return out;
}

std::vector<double> residual_flux(const ScalarField& field, const PoissonSetup& setup, PieceTag tag,
                                  const std::vector<QuadPoint>& quad) {
  const Mesh& mesh = field.mesh();
  const int dim = mesh.dim();
  const int nn = dim == 2 ? 4 : 8;
  const int nv = mesh.vertex_count();
  if (!mesh.has_tag(tag)) throw ConfigurationError(fmt::format("no {} faces for the flux", to_string(tag)));

  SparseMatrix K = assemble_stiffness(mesh);
  std::vector<double> r(nv, 0.0);
  K.multiply(field.values, r);
  std::vector<double> load = assemble_load(mesh, setup);
  for (int v = 0; v < nv; ++v) r[v] -= load[v];

  std::vector<int> map(nv, -1);
  int nb = 0;
  for (int v : mesh.tagged_vertices(tag))
    if (map[v] < 0) map[v] = nb++;
  TripletBuilder mb(nb);
  for (const QuadPoint& q : boundary_quadrature(mesh, tag, 4)) {
    int e = mesh.local_element(q.element);
    std::array<double, 8> N{};
    std::array<Vec3, 8> d{};
    q1_shape(dim, q.reference, N, d);
    for (int a = 0; a < nn; ++a) {
      int i = map[mesh.element_vertex(e, a)];
      if (i < 0 || N[a] == 0) continue;
      for (int b = 0; b < nn; ++b) {
        int j = map[mesh.element_vertex(e, b)];
        if (j >= 0 && N[b] != 0) mb.add(i, j, q.weight * N[a] * N[b]);
      }
    }
  }
  std::vector<double> rb(nb, 0.0);
  for (int v = 0; v < nv; ++v)
    if (map[v] >= 0) rb[map[v]] = r[v];
  std::vector<double> lambda = solve_spd_direct(mb.build(), rb);

  std::vector<double> out;
  out.reserve(quad.size());
  for (const QuadPoint& q : quad) {
    int e = mesh.local_element(q.element);
    std::array<double, 8> N{};
    std::array<Vec3, 8> d{};
    q1_shape(dim, q.reference, N, d);
    double v = 0;
    for (int a = 0; a < nn; ++a) {
      int i = map[mesh.element_vertex(e, a)];
      if (i >= 0) v += N[a] * lambda[i];
    }
    out.push_back(v);
  }
  return out;
}

bool all_regions(const ElementLabel&) { return true; }

double h1_seminorm_diff(const ScalarField& a, const ScalarField& b, const RegionSelector& select) {
  const Mesh& ma = a.mesh();
  const Mesh& mb = b.mesh();
  if (&ma.universe() != &mb.universe())
    throw MeshIncompatibility("fields live on meshes without a shared element numbering");
  const Universe& u = ma.universe();
  const int dim = u.dim;
  const int nn = u.nodes_per_element();
  double sum = 0;
  std::array<Vec3, 8> c{};
  for (int ue = 0; ue < u.element_count(); ++ue) {
    int ea = ma.local_element(ue);
    if (ea < 0 || !select(u.labels[ue])) continue;
    int eb = mb.local_element(ue);
    if (eb < 0)
      throw MeshIncompatibility(fmt::format("element {} has no counterpart in the second mesh", ue));
    auto conn = u.element(ue);
    for (int k = 0; k < nn; ++k) c[k] = u.vertices[conn[k]];
    for_each_volume_point(dim, 3, [&](const Vec3& ref, double w) {
      ElementEval ev = evaluate_element(dim, {c.data(), static_cast<std::size_t>(nn)}, ref);
      Vec3 ga, gb;
      for (int k = 0; k < nn; ++k) {
        ga += ev.grad[k] * a.values[ma.element_vertex(ea, k)];
        gb += ev.grad[k] * b.values[mb.element_vertex(eb, k)];
      }
      Vec3 d = ga - gb;
      sum += dot(d, d) * w * ev.det;
    });
  }
  return std::sqrt(sum);
}

double integrate_region(const Mesh& mesh, const std::function<double(const Vec3&)>& fn,
                        const RegionSelector& select, int order) {
  const int dim = mesh.dim();
  const int nn = dim == 2 ? 4 : 8;
  double s = 0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (!select(mesh.label(e))) continue;
    auto c = element_coords(mesh, e);
    for_each_volume_point(dim, order, [&](const Vec3& ref, double w) {
      ElementEval ev = evaluate_element(dim, {c.data(), static_cast<std::size_t>(nn)}, ref);
      s += fn(ev.point) * w * ev.det;
    });
  }
  return s;
}

} // namespace defeat
