// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "defeat/geometry.hpp"
#include "defeat/vec.hpp"

namespace defeat {

enum class Region : std::uint8_t { Void, Star, Negative, Positive, Extension };

struct ElementLabel {
  Region region = Region::Star;
  int feature = -1;
};

// Every mesh of a case is a subset of one conforming element set covering
// the exact domain, the simplified domain and the extensions. Shared ids give
// the correspondence between the meshes for free.
struct Universe {
  int dim = 2;
  std::vector<Vec3> vertices;
  std::vector<int> connectivity; // nodes_per_element() entries per element
  std::vector<ElementLabel> labels;
  std::vector<int> patch;
  std::vector<int> neighbors; // faces_per_element() entries per element, -1 on the hull

  int nodes_per_element() const { return dim == 2 ? 4 : 8; }
  int faces_per_element() const { return dim == 2 ? 4 : 6; }
  int element_count() const { return static_cast<int>(labels.size()); }
  std::span<const int> element(int e) const {
    return {connectivity.data() + static_cast<std::size_t>(e) * nodes_per_element(),
            static_cast<std::size_t>(nodes_per_element())};
  }
  void build_adjacency();
};

// Local vertex numbers of a reference face. Quad faces: 0 bottom, 1 right,
// 2 top, 3 left. Hex faces: 0 x=0, 1 x=1, 2 y=0, 3 y=1, 4 z=0, 5 z=1.
std::span<const int> reference_face(int dim, int face);
// Reference coordinates of a point given by face parameters in [0,1]^(dim-1).
Vec3 reference_point_on_face(int dim, int face, double s, double t);
// Outward reference normal of a face.
Vec3 reference_normal(int dim, int face);

enum class MeshKind { Exact, Defeatured, Extension };

struct FaceTag {
  PieceTag tag = PieceTag::NeumannRest;
  int feature = -1;
};

struct BoundaryFace {
  int element = 0; // local element index
  int face = 0;    // reference face
  FaceTag tag;
};

class Mesh {
public:
  Mesh() = default;
  Mesh(std::shared_ptr<const Universe> universe, MeshKind kind, std::vector<int> elements);

  MeshKind kind() const { return kind_; }
  int dim() const { return universe_->dim; }
  const Universe& universe() const { return *universe_; }
  std::shared_ptr<const Universe> universe_ptr() const { return universe_; }

  int vertex_count() const { return static_cast<int>(vertex_ids_.size()); }
  int element_count() const { return static_cast<int>(element_ids_.size()); }
  const Vec3& vertex(int v) const { return universe_->vertices[vertex_ids_[v]]; }
  int universe_vertex(int v) const { return vertex_ids_[v]; }
  int universe_element(int e) const { return element_ids_[e]; }
  // -1 when the universe entity is not part of this mesh.
  int local_vertex(int uv) const { return local_vertex_[uv]; }
  int local_element(int ue) const { return local_element_[ue]; }
  int element_vertex(int e, int k) const {
    return local_vertex_[universe_->element(element_ids_[e])[k]];
  }
  const ElementLabel& label(int e) const { return universe_->labels[element_ids_[e]]; }
  int patch(int e) const { return universe_->patch[element_ids_[e]]; }

  const std::vector<BoundaryFace>& faces() const { return faces_; }
  bool has_tag(PieceTag tag, int feature = -1) const;
  std::vector<int> tagged_vertices(PieceTag tag, int feature = -1) const;

  int resolution = 0;
  double grading = 1.0;

private:
  friend class MeshTagger;
  MeshKind kind_ = MeshKind::Exact;
  std::shared_ptr<const Universe> universe_;
  std::vector<int> element_ids_;
  std::vector<int> vertex_ids_;
  std::vector<int> local_vertex_;
  std::vector<int> local_element_;
  std::vector<BoundaryFace> faces_;
};

struct QuadPoint {
  Vec3 point;
  double weight = 0;
  Vec3 normal;       // outward from the element of this mesh
  int element = 0;   // universe element id
  Vec3 reference;    // reference coordinates inside that element
  int face = 0;      // index into Mesh::faces()
};

// Gauss rule on every face carrying the tag (all features when feature < 0).
// Throws LookupError when the mesh has no such face.
std::vector<QuadPoint> boundary_quadrature(const Mesh& mesh, PieceTag tag, int order,
                                           int feature = -1);

struct MeshSet {
  std::shared_ptr<const Universe> universe;
  Mesh exact;
  Mesh defeatured;
  std::optional<Mesh> extension;
  double feature_scale = 0;              // epsilon-like length of the feature
  double feature_adjacent_diameter = 0;  // largest element touching a feature boundary
};

struct MeshOptions {
  int resolution = 32;  // 2D: spokes per quarter turn. 3D: cells across the feature.
  double grading = 0.7; // 3D geometric ratio of successive cells toward the feature
};

// Throws ResolutionTooCoarse when the feature-adjacent elements exceed a quarter of
// the feature size.
MeshSet generate_pair(const DomainDescription& domain, const MeshOptions& options);

// Length scale the feature-adjacent bound refers to; the first feature by default.
double feature_scale(const DomainDescription& domain, int feature = 0);

// Largest vertex distance inside an element.
double element_diameter(const Universe& u, int e);

// Plain text dump, see docs/mesh_format.md.
void write_mesh(std::ostream& os, const Mesh& mesh, const std::vector<double>* values = nullptr);

} // namespace defeat
