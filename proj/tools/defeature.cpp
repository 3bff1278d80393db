// SPDX-License-Identifier: Apache-2.0
// Command line front end: run configs, run catalog cases, list the catalog,
// and run a quick invariant check.
#include <cmath>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "defeat/defeaturing.hpp"
#include "defeat/errors.hpp"
#include "defeat/fem.hpp"
#include "defeat/harness.hpp"
#include "defeat/mesh.hpp"

namespace {

using namespace defeat;

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kSolver = 3;

void print_summary(const SweepReport& r) {
  fmt::print("{}\n", r.id);
  fmt::print("  {:>12} {:>12} {:>12} {:>12} {:>8} {:>9}\n", "eps", "error", "estimator", "osc", "eff", "time[s]");
  for (const CaseReport& c : r.cases)
    fmt::print("  {:12.4e} {:12.4e} {:12.4e} {:12.4e} {:8.3f} {:9.2f}\n", c.eps, c.error, c.estimate.estimator,
               c.estimate.osc, c.effectivity, c.runtime_s);
  if (r.cases.size() >= 2)
    fmt::print("  slopes: error {:.3f}, estimator {:.3f}, osc {:.3f}; effectivity {:.3f}..{:.3f} mean {:.3f}\n",
               r.slope_error, r.slope_estimator, r.slope_osc, r.eff_min, r.eff_max, r.eff_mean);
  if (!r.cases.empty() && !r.cases.front().estimate.covered_by_theory)
    fmt::print("  note: feature is not Lipschitz, outside the estimator's theory\n");
  if (r.partial) fmt::print("  FAILED: {}\n", r.failure);
}

int run_and_emit(const CaseSpec& spec, const OutputOptions& out, int workers) {
  SweepReport r = run_sweep(spec, workers);
  print_summary(r);
  for (const std::string& p : emit_report(r, out)) fmt::print("  wrote {}\n", p);
  if (r.partial) return r.solver_failed ? kSolver : kInvalid;
  return kOk;
}

bool report_check(const std::string& name, bool ok, const std::string& detail) {
  fmt::print("{} {} ({})\n", ok ? "PASS" : "FAIL", name, detail);
  return ok;
}

int run_checks() {
  bool ok = true;
  const double e = eta();
  ok &= report_check("eta fixed point", std::abs(e + std::log(e)) < 1e-12,
                     fmt::format("|eta + log eta| = {:.3e}", std::abs(e + std::log(e))));
  const double knee = std::exp(-e);
  double jump = std::abs(c_sigma(2, knee * (1 + 1e-12)) - c_sigma(2, knee * (1 - 1e-12)));
  ok &= report_check("c_sigma continuity", jump < 1e-10, fmt::format("jump {:.3e}", jump));

  // Linear field through a square hole: Dirichlet x on the circle, matching flux on the hole.
  DomainDescription dom = build_domain(Family::DiskSquareHole, {0.1, ExtensionChoice::Identity});
  MeshSet ms = generate_pair(dom, {16, 0.7});
  ProblemData d = zero_data();
  d.h = [](const Vec3& p) { return p.x; };
  d.g_feature = [](const Vec3& p) {
    if (std::abs(p.x) > std::abs(p.y)) return p.x > 0 ? -1.0 : 1.0;
    return 0.0;
  };
  ScalarField u = solve_poisson(ms.exact, exact_problem(d), {1e-12, 0, LinearSolver::Direct});
  double worst = 0;
  for (int v = 0; v < ms.exact.vertex_count(); ++v)
    worst = std::max(worst, std::abs(u.values[v] - ms.exact.vertex(v).x));
  ok &= report_check("patch test", worst < 1e-10, fmt::format("max nodal error {:.3e}", worst));

  CaseSpec zero = *find_case("table1.circle.a");
  zero.overrides = {{"f", 0.0}};
  CaseReport z = run_case(zero, zero.eps.front());
  ok &= report_check("zero data gives zero estimator", z.estimate.estimator == 0 && z.error == 0,
                     fmt::format("E = {:.3e}, error = {:.3e}", z.estimate.estimator, z.error));

  CaseSpec two = *find_case("table2.twoholes");
  two.resolution = 16;
  CaseReport t = run_case(two, two.eps.front());
  double sum = 0;
  for (const SigmaContribution& s : t.estimate.sigmas) sum += s.contribution2;
  double rss2 = t.estimate.estimator_rss * t.estimate.estimator_rss;
  double rel = std::abs(rss2 - sum) / sum;
  ok &= report_check("sum of squares additivity", rel < 1e-14, fmt::format("relative gap {:.3e}", rel));
  return ok ? kOk : kInvalid;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Defeaturing error estimation laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run every case of a config file");
  std::string config_path;
  run->add_option("config", config_path, "Config file")->required();

  auto* cs = app.add_subcommand("case", "Run one catalog case");
  std::string case_id;
  std::vector<double> eps;
  int res = 0, m = -1, ref = 0, workers = 0;
  OutputOptions out;
  cs->add_option("id", case_id, "Catalog id")->required();
  cs->add_option("--eps", eps, "Feature sizes, overrides the catalog list")->delimiter(',');
  cs->add_option("--res", res, "Mesh resolution");
  cs->add_option("--m", m, "Oscillation degree");
  cs->add_option("--ref", ref, "Reference refinement factor for the error");
  cs->add_option("--workers", workers, "Concurrent sweep points");
  cs->add_option("--out", out.dir, "Output directory");
  cs->add_option("--format", out.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));

  app.add_subcommand("list", "List the built-in cases");
  app.add_subcommand("check", "Run the quick invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (app.got_subcommand("list")) {
      for (const CaseSpec& c : catalog())
        fmt::print("{:<24} {:<22} {} point(s)  {}\n", c.id, to_string(c.family), c.eps.size(), c.description);
      return kOk;
    }
    if (app.got_subcommand("check")) return run_checks();
    if (app.got_subcommand("run")) {
      ExperimentConfig cfg = load_config(config_path);
      int code = kOk;
      for (const CaseSpec& c : cfg.cases) code = std::max(code, run_and_emit(c, cfg.output, cfg.workers));
      return code;
    }
    auto spec = find_case(case_id);
    if (!spec) {
      fmt::print(stderr, "unknown case '{}', see `defeature list`\n", case_id);
      return kInvalid;
    }
    if (!eps.empty()) spec->eps = eps;
    if (res > 0) spec->resolution = res;
    if (m >= 0) spec->m = m;
    if (ref > 0) spec->reference_factor = ref;
    return run_and_emit(*spec, out, workers);
  } catch (const SolverFailure& e) {
    fmt::print(stderr, "solver failure: {} (residual {:.3e})\n", e.what(), e.residual());
    return kSolver;
  } catch (const GaugeRequired& e) {
    fmt::print(stderr, "solver failure: {}\n", e.what());
    return kSolver;
  } catch (const ResolutionTooCoarse& e) {
    fmt::print(stderr, "{} (needs resolution >= {})\n", e.what(), e.required_resolution());
    return kInvalid;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvalid;
  }
}
