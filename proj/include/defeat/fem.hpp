// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "defeat/mesh.hpp"
#include "defeat/sparse.hpp"

namespace defeat {

using ScalarFn = std::function<double(const Vec3&)>;

// Continuous Q1 field, one coefficient per mesh vertex. The mesh must outlive the field.
class ScalarField {
public:
  ScalarField() = default;
  ScalarField(const Mesh& mesh, std::vector<double> values);

  const Mesh& mesh() const { return *mesh_; }
  bool bound() const { return mesh_ != nullptr; }
  double value_at(int universe_element, const Vec3& ref) const;
  Vec3 gradient_at(int universe_element, const Vec3& ref) const;
  // Value at a universe vertex; throws GeometryMismatch when absent.
  double vertex_value(int universe_vertex) const;

  std::vector<double> values;
  std::vector<PieceTag> dirichlet_tags;

private:
  const Mesh* mesh_ = nullptr;
};

// Data roles of the original, simplified and extension problems.
struct ProblemData {
  ScalarFn f;          // source in the exact domain
  ScalarFn f_negative; // extension of f inside negative components, defaults to f
  ScalarFn f_positive; // extension of f inside the positive extension, defaults to f
  ScalarFn h;          // Dirichlet data
  ScalarFn g;          // Neumann data on the walls
  ScalarFn g_feature;  // Neumann data on feature boundaries of the exact domain
  ScalarFn g0;         // Neumann data on the simplified feature boundaries
  ScalarFn g_tilde;    // Neumann data on the extension boundary

  double source(const Vec3& x, Region r) const;
  double neumann(PieceTag tag, const Vec3& x) const;
  // Throws ConfigurationError when a role is unset.
  void validate() const;
};

ProblemData zero_data();

struct BoundaryData {
  PieceTag tag = PieceTag::Dirichlet;
  ScalarFn value;
  const ScalarField* trace = nullptr; // Dirichlet values taken vertexwise from this field
};

struct PoissonSetup {
  std::function<double(const Vec3&, Region)> source;
  std::vector<BoundaryData> dirichlet;
  std::vector<BoundaryData> neumann;
  bool pure_neumann = false; // impose a zero mean instead of Dirichlet values
};

enum class LinearSolver { Auto, ConjugateGradient, Direct };

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 0;
  LinearSolver backend = LinearSolver::Auto; // direct in 2D, CG in 3D
};

PoissonSetup exact_problem(const ProblemData& data);
PoissonSetup defeatured_problem(const ProblemData& data);
PoissonSetup extension_problem(const ProblemData& data, const ScalarField& u0);

SparseMatrix assemble_stiffness(const Mesh& mesh);

// Throws GaugeRequired when no vertex is constrained and pure_neumann is unset.
ScalarField solve_poisson(const Mesh& mesh, const PoissonSetup& setup, const SolverOptions& opts = {},
                          SolveStats* stats = nullptr);

// Normal derivative at each quadrature point from the element on the point's side.
std::vector<double> flux_trace(const ScalarField& field, const std::vector<QuadPoint>& quad);

// Normal derivative on a Dirichlet piece recovered from the discrete residual:
// the continuous Q1 trace lambda with int lambda phi_i = a(u, phi_i) - l(phi_i)
// for every vertex i of the piece. Much less sensitive to corner singularities
// than the pointwise gradient. Normal is outward from the field's mesh.
std::vector<double> residual_flux(const ScalarField& field, const PoissonSetup& setup, PieceTag tag,
                                  const std::vector<QuadPoint>& quad);

using RegionSelector = std::function<bool(const ElementLabel&)>;
bool all_regions(const ElementLabel&);

// |a - b|_1 over the elements of a's mesh accepted by the selector, in universe order.
double h1_seminorm_diff(const ScalarField& a, const ScalarField& b,
                        const RegionSelector& select = all_regions);

// Volume integral of fn over elements with the given region and feature.
double integrate_region(const Mesh& mesh, const std::function<double(const Vec3&)>& fn,
                        const RegionSelector& select, int order = 3);

} // namespace defeat
