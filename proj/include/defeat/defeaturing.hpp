// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "defeat/fem.hpp"
#include "defeat/geometry.hpp"
#include "defeat/mesh.hpp"

namespace defeat {

// Fixed point of eta = -log(eta).
double eta();

// 1 in 3D, max(|log measure|, eta)^(1/2) in 2D.
double c_sigma(int n, double measure);

// Flat cell of the partition used by the projection: a segment [a, a + e1]
// in 2D, a parallelogram a + s e1 + t e2 in 3D.
struct PartitionCell {
  Vec3 a;
  Vec3 e1;
  Vec3 e2;
};

struct SigmaTrace {
  PieceTag tag = PieceTag::GammaN;
  int feature = 0;
  int dim = 2;
  std::vector<Vec3> points;
  std::vector<double> weights;
  std::vector<Vec3> normals;
  std::vector<double> defect;
  double measure = 0; // analytic measure of the piece
  std::vector<PartitionCell> partition;

  double quadrature_measure() const;
  double mean() const;        // quadrature average of the defect
  double norm() const;        // L2 norm of the defect
  double fluctuation() const; // L2 norm of defect minus its mean
};

struct SigmaContribution {
  PieceTag tag = PieceTag::GammaN;
  int feature = 0;
  double measure = 0;
  double mean = 0;
  double fluctuation = 0;
  double norm = 0;
  double c = 0;
  double contribution2 = 0; // fluctuation part plus mean part of the squared estimator
  double tilde2 = 0;        // squared simplified indicator part
  double predicted_mean = 0; // data-only value of the mean, filled by the pipeline
};

struct FeatureSummary {
  int feature = 0;
  double estimator = 0;
  double estimator_tilde = 0;
  double osc = 0;
  double gamma_measure = 0; // |Gamma| for the oscillation prefactor
  double flux_residual = 0; // largest data-only mean in absolute value
  bool compatible = true;   // flux conservation holds to tolerance
};

struct EstimatorReport {
  int dim = 2;
  std::vector<SigmaContribution> sigmas;
  std::vector<FeatureSummary> features;
  double estimator = 0;       // plain sum over features
  double estimator_rss = 0;   // root sum of squares over features
  double estimator_tilde = 0; // plain sum over features
  double osc = 0;             // plain sum over features
  int osc_m = 1;
  double flux_residual = 0;
  double error = 0;
  double effectivity = 0;
  bool covered_by_theory = true;
  std::vector<std::string> warnings;
};

// u_d on the exact mesh: u0 on the exact-minus-positive part, the extension
// solution on positive elements (including vertices shared with negative parts).
ScalarField assemble_ud(const ScalarField& u0, const ScalarField* u0_tilde, const Mesh& exact);

// With the extension solution given, the flux on gamma_0p comes from its
// discrete residual instead of the pointwise gradient of u_d.
std::vector<SigmaTrace> sigma_defects(const ScalarField& ud, const DomainDescription& domain,
                                      const ProblemData& data, const MeshSet& meshes,
                                      int order = 4, const ScalarField* extension = nullptr);

// Per-sigma split and per-feature totals of the estimator.
EstimatorReport estimator(const std::vector<SigmaTrace>& traces, int n);
double estimator_tilde(const std::vector<SigmaTrace>& traces, int n);

// Best L2 approximation of the defect in continuous piecewise Q_m functions on
// the partition that vanish on the partition boundary. Returns the projection
// evaluated at the trace's quadrature points.
std::vector<double> clement_project(const SigmaTrace& trace, int m);

// Root sum of squares over the traces, times |Gamma|^(1/(2(n-1))) with Gamma
// the union of the traces.
double oscillation(const std::vector<SigmaTrace>& traces, int m, int n);

struct FluxPrediction {
  PieceTag tag = PieceTag::GammaN;
  int feature = 0;
  double predicted_mean = 0;
  double scale = 0; // sum of absolute integrals entering the balance
};

// Data-only means of the defects from flux conservation.
std::vector<FluxPrediction> flux_residual(const DomainDescription& domain, const ProblemData& data,
                                          const MeshSet& meshes);

} // namespace defeat
