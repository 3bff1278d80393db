// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "defeat/defeaturing.hpp"
#include "defeat/fem.hpp"
#include "defeat/geometry.hpp"

namespace defeat {

// Named data sets. Every preset may depend on the feature size eps.
//   shape      f = 1, h = 0, g = 0
//   size       f = -128 exp(-8(x+y)), h = exp(-8(x+y)), g = -8 exp(-8(x+y)) on walls, 0 on holes
//   smooth2d   f = 10 cos(3 pi x) sin(5 pi y), h = 0, g = 0
//   smooth3d   f = 10 cos(3 pi x) sin(5 pi y) sin(7 pi z), h = 0, g = 0
//   neumann-g1 .. neumann-g4   f = 1, h = 0, feature g = 0, 1, 1/eps, 1/eps^3
//   round      f = 0, h = x^2 (1-x)^2 + y^2 (1-y)^2, g = 0
//   fillet     f = 0, h = cos(pi x) + 10 cos(5 pi x), g = 0
// g0 and g~ are zero and f extends by its own formula unless overridden.
// Overrides replace a role by a constant: f, h, g, g_feature, g0, g_tilde, f_extension.
ProblemData make_data(const std::string& preset, double eps,
                      const std::map<std::string, double>& overrides = {});
std::vector<std::string> data_presets();

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Published values a case is compared against; NaN where none exist.
struct ExpectedValues {
  double estimator = kNaN;
  double error = kNaN;
  double effectivity = kNaN;
  double slope = kNaN; // expected log-log slope of error and estimator in eps
};

struct CaseSpec {
  std::string id;
  std::string description;
  Family family = Family::DiskCircleHole;
  ExtensionChoice extension = ExtensionChoice::Identity;
  std::string data = "shape";
  std::map<std::string, double> overrides;
  std::vector<double> eps;   // strictly decreasing
  int resolution = 32;
  int reference_factor = 1;  // > 1 recomputes the error on a mesh refined by this factor
  double grading = 0.7;
  double tol = 1e-12;
  int m = 1;
  ExpectedValues expected;
  std::vector<ExpectedValues> expected_points; // per eps, when a table exists
};

// Built-in experiments, ids like table1.circle.a or fig7.neg.halfdisk.
const std::vector<CaseSpec>& catalog();
std::optional<CaseSpec> find_case(const std::string& id);

struct OutputOptions {
  std::string dir = ".";
  std::string format = "csv"; // csv, json or both
};

struct ExperimentConfig {
  std::vector<CaseSpec> cases;
  OutputOptions output;
  int workers = 0; // 0 picks the hardware concurrency
};

// Line oriented "key = value" text with [case] and [output] sections, see docs/config.md.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
// Throws ConfigurationError on a violated invariant.
void validate(const CaseSpec& spec);

struct FluxRow {
  PieceTag tag = PieceTag::GammaN;
  int feature = 0;
  double predicted = 0;
  double discrete = 0;
};

struct CaseReport {
  std::string id;
  double eps = 0;
  EstimatorReport estimate;
  double error = 0;
  double effectivity = 0;
  double flux_residual = 0; // largest predicted defect mean in absolute value
  std::vector<FluxRow> flux;
  double runtime_s = 0;
  int vertices = 0;
  int elements = 0;
  int resolution = 0;
};

struct SweepReport {
  std::string id;
  std::vector<CaseReport> cases;
  double slope_error = kNaN;
  double slope_estimator = kNaN;
  double slope_osc = kNaN;
  double eff_min = kNaN;
  double eff_max = kNaN;
  double eff_mean = kNaN;
  bool partial = false;
  std::string failure;
  bool solver_failed = false; // the first failure came from a linear solve
};

// Throws the failing stage's error with the stage name prepended to the message.
CaseReport run_case(const CaseSpec& spec, double eps);
// Points run concurrently up to the worker cap. A failing point stops the sweep;
// the report is then flagged partial and carries the message.
SweepReport run_sweep(const CaseSpec& spec, int workers = 0);

// Least-squares slope of log y against log x.
double fit_rate(const std::vector<std::pair<double, double>>& points);

std::string to_csv(const SweepReport& report);
nlohmann::json to_json(const SweepReport& report);
SweepReport sweep_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EstimatorReport& report);
// Writes <dir>/<id>.csv and/or <dir>/<id>.json; returns the written paths.
std::vector<std::string> emit_report(const SweepReport& report, const OutputOptions& out);

} // namespace defeat
