// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "defeat/vec.hpp"

namespace defeat {

enum class Family {
  DiskStarHole,
  DiskCircleHole,
  DiskSquareHole,
  SquareHalfDiskNeg,
  SquareCornerNeg,
  SquareHalfDiskPos,
  SquareCornerPos,
  ComplexAdjacent, // positive and negative squares meeting at a point
  ComplexOverlap,  // positive and negative squares sharing part of an edge
  TwoHoles,
  CubeCenterNeg,
  CubeEdgeNeg,
  CubeCenterPos,
  CubeEdgePos,
  Round,
  Fillet,
};

enum class FeatureSign { Negative, Positive, Complex };

enum class ExtensionChoice { BoundingBox, CustomArc, Identity };

enum class PieceTag {
  GammaN,     // feature boundary of a negative component lying on the exact boundary
  GammaR,     // positive boundary shared with the extension
  Gamma0P,    // positive boundary interior to the exact domain
  Gamma0N,    // negative boundary lying on the simplified boundary
  GammaS,     // positive boundary that is also extension boundary
  GammaTilde, // extension boundary outside the feature
  Dirichlet,
  NeumannRest,
};

std::string_view to_string(Family f);
std::string_view to_string(PieceTag t);
std::string_view to_string(FeatureSign s);
std::string_view to_string(ExtensionChoice e);
std::optional<Family> family_from_string(std::string_view s);
std::optional<ExtensionChoice> extension_from_string(std::string_view s);

int family_dimension(Family f);

// One connected-or-not parametric piece of boundary. 2D pieces are segments
// and circular arcs, 3D pieces are axis-aligned rectangles.
struct Component {
  enum class Kind { Segment, Arc, Rectangle };
  Kind kind = Kind::Segment;
  Vec3 a;             // segment start, arc center, rectangle corner
  Vec3 b;             // segment end, rectangle first edge
  Vec3 c;             // rectangle second edge
  double radius = 0;  // arc
  double theta0 = 0;  // arc start angle
  double theta1 = 0;  // arc end angle (counterclockwise from theta0)

  static Component segment(Vec3 p, Vec3 q);
  static Component arc(Vec3 center, double r, double t0, double t1);
  static Component rectangle(Vec3 corner, Vec3 e1, Vec3 e2);

  double measure() const;
  bool curved() const { return kind == Kind::Arc; }
  // Point at normalized parameter t in [0,1] for curves.
  Vec3 point(double t) const;
  Vec3 centroid() const;
  // Rough extent used by the isotropy heuristic.
  double diameter() const;
  bool contains(const Vec3& p, double tol) const;
};

struct BoundaryPiece {
  PieceTag tag = PieceTag::NeumannRest;
  int feature = -1; // -1 for walls
  std::vector<Component> components;

  double measure() const;
  bool empty() const { return components.empty(); }
  bool contains(const Vec3& p, double tol) const;
};

struct FamilyParams {
  double size = 0; // epsilon, hole radius, round radius; meaning depends on the family
  ExtensionChoice extension = ExtensionChoice::Identity;
};

struct FeatureInfo {
  int id = 0;
  FeatureSign sign = FeatureSign::Negative;
  double negative_volume = 0;  // |F_n|
  double positive_volume = 0;  // |F_p|
  double extension_volume = 0; // |F~_p|
};

struct DomainDescription {
  int dim = 2;
  Family family = Family::DiskCircleHole;
  FamilyParams params;
  FeatureSign feature_sign = FeatureSign::Negative;
  bool covered_by_theory = true; // false for non Lipschitz features
  std::vector<FeatureInfo> features;
  std::vector<BoundaryPiece> pieces;
  std::vector<std::string> warnings;

  int feature_count() const { return static_cast<int>(features.size()); }
  bool has_positive() const;
  bool has_negative() const;
  // Empty piece if nothing carries this tag.
  BoundaryPiece piece(PieceTag tag, int feature = -1) const;
  double measure(PieceTag tag, int feature = -1) const;
  // Wall classification for points on the outer boundary.
  bool on_dirichlet(const Vec3& p) const;
};

// Throws InvalidGeometry when the parameters are out of range.
DomainDescription build_domain(Family family, const FamilyParams& params);

// Measures keyed by tag, summed over features.
std::map<PieceTag, double> boundary_measures(const DomainDescription& domain);

// Default size parameter used by the catalog when none is given.
double default_size(Family family);

} // namespace defeat
