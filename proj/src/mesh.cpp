// SPDX-License-Identifier: Apache-2.0
#include "defeat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "defeat/element.hpp"
#include "defeat/errors.hpp"
#include "layout.hpp"

namespace defeat {

namespace {

constexpr int quad_faces[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
constexpr int hex_faces[6][4] = {{0, 3, 7, 4}, {1, 2, 6, 5}, {0, 1, 5, 4},
                                 {3, 2, 6, 7}, {0, 1, 2, 3}, {4, 5, 6, 7}};

struct FaceKeyHash {
  std::size_t operator()(const std::array<int, 4>& k) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (int v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

bool degenerate_face(const Universe& u, int e, int f) {
  auto conn = u.element(e);
  auto lf = reference_face(u.dim, f);
  if (u.dim == 2) return conn[lf[0]] == conn[lf[1]];
  std::array<int, 4> k{conn[lf[0]], conn[lf[1]], conn[lf[2]], conn[lf[3]]};
  std::sort(k.begin(), k.end());
  return std::unique(k.begin(), k.end()) - k.begin() < 3;
}

Vec3 face_midpoint(const Universe& u, int e, int f) {
  auto conn = u.element(e);
  auto lf = reference_face(u.dim, f);
  Vec3 m;
  for (int v : lf) m += u.vertices[conn[v]];
  return m / static_cast<double>(lf.size());
}

} // namespace

std::span<const int> reference_face(int dim, int face) {
  if (dim == 2) return {quad_faces[face], 2};
  return {hex_faces[face], 4};
}

Vec3 reference_point_on_face(int dim, int face, double s, double t) {
  if (dim == 2) {
    switch (face) {
    case 0: return {s, 0};
    case 1: return {1, s};
    case 2: return {1 - s, 1};
    default: return {0, 1 - s};
    }
  }
  switch (face) {
  case 0: return {0, s, t};
  case 1: return {1, s, t};
  case 2: return {s, 0, t};
  case 3: return {s, 1, t};
  case 4: return {s, t, 0};
  default: return {s, t, 1};
  }
}

Vec3 reference_normal(int dim, int face) {
  if (dim == 2) {
    switch (face) {
    case 0: return {0, -1};
    case 1: return {1, 0};
    case 2: return {0, 1};
    default: return {-1, 0};
    }
  }
  switch (face) {
  case 0: return {-1, 0, 0};
  case 1: return {1, 0, 0};
  case 2: return {0, -1, 0};
  case 3: return {0, 1, 0};
  case 4: return {0, 0, -1};
  default: return {0, 0, 1};
  }
}

void Universe::build_adjacency() {
  const int nf = faces_per_element();
  neighbors.assign(static_cast<std::size_t>(element_count()) * nf, -1);
  std::unordered_map<std::array<int, 4>, std::pair<int, int>, FaceKeyHash> open;
  open.reserve(static_cast<std::size_t>(element_count()) * nf);
  for (int e = 0; e < element_count(); ++e) {
    auto conn = element(e);
    for (int f = 0; f < nf; ++f) {
      if (degenerate_face(*this, e, f)) continue;
      auto lf = reference_face(dim, f);
      std::array<int, 4> key{-1, -1, -1, -1};
      for (std::size_t i = 0; i < lf.size(); ++i) key[i] = conn[lf[i]];
      std::sort(key.begin(), key.begin() + lf.size());
      auto [it, inserted] = open.try_emplace(key, e, f);
      if (!inserted) {
        auto [e2, f2] = it->second;
        neighbors[static_cast<std::size_t>(e) * nf + f] = e2;
        neighbors[static_cast<std::size_t>(e2) * nf + f2] = e;
        open.erase(it);
      }
    }
  }
}

Mesh::Mesh(std::shared_ptr<const Universe> universe, MeshKind kind, std::vector<int> elements)
    : kind_(kind), universe_(std::move(universe)), element_ids_(std::move(elements)) {
  const Universe& u = *universe_;
  local_element_.assign(u.element_count(), -1);
  local_vertex_.assign(u.vertices.size(), -1);
  for (int e = 0; e < element_count(); ++e) {
    local_element_[element_ids_[e]] = e;
    for (int v : u.element(element_ids_[e])) {
      if (local_vertex_[v] < 0) {
        local_vertex_[v] = static_cast<int>(vertex_ids_.size());
        vertex_ids_.push_back(v);
      }
    }
  }
}

bool Mesh::has_tag(PieceTag tag, int feature) const {
  return std::any_of(faces_.begin(), faces_.end(), [&](const BoundaryFace& f) {
    return f.tag.tag == tag && (feature < 0 || f.tag.feature == feature);
  });
}

std::vector<int> Mesh::tagged_vertices(PieceTag tag, int feature) const {
  std::vector<char> mark(vertex_count(), 0);
  for (const auto& f : faces_) {
    if (f.tag.tag != tag || (feature >= 0 && f.tag.feature != feature)) continue;
    for (int lv : reference_face(dim(), f.face)) mark[element_vertex(f.element, lv)] = 1;
  }
  std::vector<int> out;
  for (int v = 0; v < vertex_count(); ++v)
    if (mark[v]) out.push_back(v);
  return out;
}

class MeshTagger {
public:
  static void tag(Mesh& m, const DomainDescription& d) {
    const Universe& u = m.universe();
    const int nf = u.faces_per_element();
    for (int e = 0; e < m.element_count(); ++e) {
      int ue = m.universe_element(e);
      const ElementLabel& own = u.labels[ue];
      for (int f = 0; f < nf; ++f) {
        if (degenerate_face(u, ue, f)) continue;
        int nb = u.neighbors[static_cast<std::size_t>(ue) * nf + f];
        if (nb >= 0 && m.local_element(nb) >= 0) continue;
        Region other = nb < 0 ? Region::Void : u.labels[nb].region;
        int other_feature = nb < 0 ? -1 : u.labels[nb].feature;
        FaceTag t = classify(m.kind(), own, other, other_feature);
        if (t.tag == PieceTag::NeumannRest && d.on_dirichlet(face_midpoint(u, ue, f)))
          t.tag = PieceTag::Dirichlet;
        m.faces_.push_back({e, f, t});
      }
    }
  }

private:
  static FaceTag classify(MeshKind kind, const ElementLabel& own, Region other, int other_feature) {
    const FaceTag wall{PieceTag::NeumannRest, -1};
    switch (kind) {
    case MeshKind::Exact:
      if (own.region == Region::Star)
        return other == Region::Negative ? FaceTag{PieceTag::GammaN, other_feature} : wall;
      return other == Region::Extension ? FaceTag{PieceTag::GammaR, own.feature}
                                        : FaceTag{PieceTag::GammaS, own.feature};
    case MeshKind::Defeatured:
      if (own.region == Region::Star)
        return other == Region::Positive ? FaceTag{PieceTag::Gamma0P, other_feature} : wall;
      return {PieceTag::Gamma0N, own.feature};
    case MeshKind::Extension:
      if (own.region == Region::Positive)
        return other == Region::Star ? FaceTag{PieceTag::Gamma0P, own.feature}
                                     : FaceTag{PieceTag::GammaS, own.feature};
      return {PieceTag::GammaTilde, own.feature};
    }
    return wall;
  }
};

std::vector<QuadPoint> boundary_quadrature(const Mesh& mesh, PieceTag tag, int order, int feature) {
  if (!mesh.has_tag(tag, feature))
    throw LookupError(fmt::format("boundary_quadrature: no face tagged {} (feature {})",
                                  to_string(tag), feature));
  const int dim = mesh.dim();
  const GaussRule& g = gauss_rule(order);
  const Universe& u = mesh.universe();
  std::vector<QuadPoint> out;
  std::array<Vec3, 8> coords;
  for (std::size_t fi = 0; fi < mesh.faces().size(); ++fi) {
    const BoundaryFace& bf = mesh.faces()[fi];
    if (bf.tag.tag != tag || (feature >= 0 && bf.tag.feature != feature)) continue;
    int ue = mesh.universe_element(bf.element);
    auto conn = u.element(ue);
    for (int k = 0; k < u.nodes_per_element(); ++k) coords[k] = u.vertices[conn[k]];
    Vec3 nref = reference_normal(dim, bf.face);
    const int nt = dim == 2 ? 1 : order;
    for (int i = 0; i < order; ++i)
      for (int j = 0; j < nt; ++j) {
        double s = g.points[i];
        double t = dim == 2 ? 0.0 : g.points[j];
        double w = g.weights[i] * (dim == 2 ? 1.0 : g.weights[j]);
        Vec3 ref = reference_point_on_face(dim, bf.face, s, t);
        ElementEval ev = evaluate_element(dim, {coords.data(), static_cast<std::size_t>(u.nodes_per_element())}, ref);
        // Nanson: n da = det J J^{-T} nref dA
        Vec3 n;
        for (int c = 0; c < dim; ++c) {
          double v = 0;
          for (int r = 0; r < dim; ++r) v += ev.inv[r][c] * nref[r];
          n[c] = v;
        }
        double ln = norm(n);
        QuadPoint q;
        q.point = ev.point;
        q.weight = w * std::abs(ev.det) * ln;
        q.normal = n / ln;
        q.element = ue;
        q.reference = ref;
        q.face = static_cast<int>(fi);
        out.push_back(q);
      }
  }
  return out;
}

double feature_scale(const DomainDescription& d, int feature) {
  switch (d.family) {
  case Family::Fillet: return 0.5;
  case Family::TwoHoles: return feature == 1 ? 0.1 : d.params.size;
  default: return d.params.size;
  }
}

double element_diameter(const Universe& u, int e) {
  // longest edge of the reference element image
  auto conn = u.element(e);
  double h = 0;
  if (u.dim == 2) {
    for (int f = 0; f < 4; ++f)
      h = std::max(h, norm(u.vertices[conn[quad_faces[f][0]]] - u.vertices[conn[quad_faces[f][1]]]));
    return h;
  }
  static constexpr int edges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                       {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  for (const auto& ed : edges)
    h = std::max(h, norm(u.vertices[conn[ed[0]]] - u.vertices[conn[ed[1]]]));
  return h;
}

namespace {

// Builds the meshes without enforcing the size bound; `worst` receives the
// largest ratio of feature-adjacent element size to its bound.
MeshSet build_pair(const DomainDescription& domain, const MeshOptions& options, double& worst,
                   double& worst_bound) {
  if (options.resolution < 2)
    throw ResolutionTooCoarse("resolution must be at least 2", 2);
  if (domain.dim == 3 && !(options.grading > 0.0 && options.grading <= 1.0))
    throw ConfigurationError(fmt::format("grading ratio {} outside (0, 1]", options.grading));

  auto u = std::make_shared<Universe>(domain.dim == 2 ? detail::build_universe_2d(domain, options)
                                                      : detail::build_universe_3d(domain, options));
  u->build_adjacency();

  std::vector<int> exact, defeatured, extension;
  for (int e = 0; e < u->element_count(); ++e) {
    switch (u->labels[e].region) {
    case Region::Star:
      exact.push_back(e);
      defeatured.push_back(e);
      break;
    case Region::Negative: defeatured.push_back(e); break;
    case Region::Positive:
      exact.push_back(e);
      extension.push_back(e);
      break;
    case Region::Extension: extension.push_back(e); break;
    case Region::Void: break;
    }
  }

  MeshSet out;
  out.universe = u;
  out.exact = Mesh(u, MeshKind::Exact, std::move(exact));
  out.defeatured = Mesh(u, MeshKind::Defeatured, std::move(defeatured));
  MeshTagger::tag(out.exact, domain);
  MeshTagger::tag(out.defeatured, domain);
  if (!extension.empty()) {
    out.extension = Mesh(u, MeshKind::Extension, std::move(extension));
    MeshTagger::tag(*out.extension, domain);
  }
  for (Mesh* m : {&out.exact, &out.defeatured}) {
    m->resolution = options.resolution;
    m->grading = options.grading;
  }
  if (out.extension) {
    out.extension->resolution = options.resolution;
    out.extension->grading = options.grading;
  }

  out.feature_scale = feature_scale(domain);
  // Worst ratio of feature-adjacent element size to its own feature's bound.
  double hmax = 0;
  worst = 0;
  worst_bound = 0;
  for (const Mesh* m : {&out.exact, &out.defeatured}) {
    for (const auto& f : m->faces()) {
      if (f.tag.feature < 0) continue;
      double h = element_diameter(*u, m->universe_element(f.element));
      double bound = 0.25 * feature_scale(domain, f.tag.feature);
      hmax = std::max(hmax, h);
      if (h / bound > worst) {
        worst = h / bound;
        worst_bound = bound;
      }
    }
  }
  out.feature_adjacent_diameter = hmax;
  return out;
}

constexpr double kBoundSlack = 1 + 1e-12;

} // namespace

MeshSet generate_pair(const DomainDescription& domain, const MeshOptions& options) {
  double worst = 0, worst_bound = 0;
  MeshSet out = build_pair(domain, options, worst, worst_bound);
  if (worst <= kBoundSlack) return out;

  // Sizes are not exactly proportional to 1/resolution, so step until the bound holds.
  const double first = worst, first_bound = worst_bound;
  MeshOptions probe = options;
  for (int tries = 0; tries < 32 && worst > kBoundSlack; ++tries) {
    probe.resolution = std::max(probe.resolution + 1, static_cast<int>(std::ceil(probe.resolution * worst)));
    build_pair(domain, probe, worst, worst_bound);
  }
  throw ResolutionTooCoarse(fmt::format("feature-adjacent element size {:.3g} exceeds {:.3g}; use resolution >= {}",
                                        first * first_bound, first_bound, probe.resolution),
                            probe.resolution);
}

void write_mesh(std::ostream& os, const Mesh& mesh, const std::vector<double>* values) {
  const int dim = mesh.dim();
  fmt::print(os, "# defeature mesh v1\n");
  fmt::print(os, "dim {}\n", dim);
  fmt::print(os, "vertices {}\n", mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& p = mesh.vertex(v);
    if (dim == 2)
      fmt::print(os, "{} {:.17g} {:.17g}\n", v, p.x, p.y);
    else
      fmt::print(os, "{} {:.17g} {:.17g} {:.17g}\n", v, p.x, p.y, p.z);
  }
  const int nn = mesh.universe().nodes_per_element();
  fmt::print(os, "elements {}\n", mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    fmt::print(os, "{} {} {}", e, mesh.patch(e), static_cast<int>(mesh.label(e).region));
    for (int k = 0; k < nn; ++k) fmt::print(os, " {}", mesh.element_vertex(e, k));
    fmt::print(os, "\n");
  }
  fmt::print(os, "faces {}\n", mesh.faces().size());
  for (std::size_t i = 0; i < mesh.faces().size(); ++i) {
    const auto& f = mesh.faces()[i];
    fmt::print(os, "{} {} {} {} {}\n", i, f.element, f.face, to_string(f.tag.tag), f.tag.feature);
  }
  if (values) {
    fmt::print(os, "values {}\n", values->size());
    for (std::size_t v = 0; v < values->size(); ++v) fmt::print(os, "{} {:.17g}\n", v, (*values)[v]);
  }
}

} // namespace defeat
