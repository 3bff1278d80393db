// SPDX-License-Identifier: Apache-2.0
#include "defeat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "defeat/errors.hpp"
#include "defeat/mesh.hpp"

namespace defeat {

namespace {

constexpr double pi = std::numbers::pi;

ScalarFn constant(double c) {
  return [c](const Vec3&) { return c; };
}

const std::vector<std::string> kOverrideKeys = {"f", "h", "g", "g_feature", "g0", "g_tilde", "f_extension"};

} // namespace

std::vector<std::string> data_presets() {
  return {"shape",      "size",       "smooth2d",   "smooth3d", "neumann-g1", "neumann-g2",
          "neumann-g3", "neumann-g4", "round",      "fillet"};
}

ProblemData make_data(const std::string& preset, double eps, const std::map<std::string, double>& overrides) {
  ProblemData d = zero_data();
  if (preset == "shape") {
    d.f = constant(1.0);
  } else if (preset == "size") {
    d.f = [](const Vec3& p) { return -128.0 * std::exp(-8.0 * (p.x + p.y)); };
    d.h = [](const Vec3& p) { return std::exp(-8.0 * (p.x + p.y)); };
    d.g = [](const Vec3& p) { return -8.0 * std::exp(-8.0 * (p.x + p.y)); };
  } else if (preset == "smooth2d") {
    d.f = [](const Vec3& p) { return 10.0 * std::cos(3 * pi * p.x) * std::sin(5 * pi * p.y); };
  } else if (preset == "smooth3d") {
    d.f = [](const Vec3& p) {
      return 10.0 * std::cos(3 * pi * p.x) * std::sin(5 * pi * p.y) * std::sin(7 * pi * p.z);
    };
  } else if (preset.rfind("neumann-g", 0) == 0 && preset.size() == 10) {
    d.f = constant(1.0);
    double g = 0;
    switch (preset.back()) {
    case '1': g = 0.0; break;
    case '2': g = 1.0; break;
    case '3': g = 1.0 / eps; break;
    case '4': g = 1.0 / (eps * eps * eps); break;
    default: throw ConfigurationError(fmt::format("unknown data preset '{}'", preset));
    }
    d.g_feature = constant(g);
  } else if (preset == "round") {
    d.h = [](const Vec3& p) {
      return p.x * p.x * (1 - p.x) * (1 - p.x) + p.y * p.y * (1 - p.y) * (1 - p.y);
    };
  } else if (preset == "fillet") {
    d.h = [](const Vec3& p) { return std::cos(pi * p.x) + 10.0 * std::cos(5 * pi * p.x); };
  } else {
    throw ConfigurationError(fmt::format("unknown data preset '{}'", preset));
  }
  for (const auto& [key, value] : overrides) {
    if (key == "f") d.f = constant(value);
    else if (key == "h") d.h = constant(value);
    else if (key == "g") d.g = constant(value);
    else if (key == "g_feature") d.g_feature = constant(value);
    else if (key == "g0") d.g0 = constant(value);
    else if (key == "g_tilde") d.g_tilde = constant(value);
    else if (key == "f_extension") d.f_negative = d.f_positive = constant(value);
    else throw ConfigurationError(fmt::format("unknown data role '{}'", key));
  }
  return d;
}

namespace {

std::vector<double> halving(double first, int count) {
  std::vector<double> v;
  for (int k = 0; k < count; ++k) v.push_back(first / std::pow(2.0, k));
  return v;
}

std::vector<CaseSpec> build_catalog() {
  std::vector<CaseSpec> c;
  auto add = [&c](CaseSpec s) { c.push_back(std::move(s)); };

  struct Shape {
    const char* id;
    Family fam;
    double r;
    ExpectedValues pv;
  };
  const Shape shapes[] = {
      {"table1.star.a", Family::DiskStarHole, 1.83e-2, {1.98e-3, 1.56e-3, 1.27, kNaN}},
      {"table1.circle.a", Family::DiskCircleHole, 6.37e-2, {1.21e-2, 8.42e-3, 1.45, kNaN}},
      {"table1.square.a", Family::DiskSquareHole, 5.00e-2, {9.57e-3, 6.74e-3, 1.42, kNaN}},
      {"table1.circle.b", Family::DiskCircleHole, 5.64e-2, {1.01e-2, 6.76e-3, 1.51, kNaN}},
      {"table1.star.b", Family::DiskStarHole, 4.02e-2, {7.53e-3, 6.65e-3, 1.13, kNaN}},
  };
  for (const Shape& s : shapes) {
    CaseSpec cs;
    cs.id = s.id;
    cs.description = "hole in the unit disk, f = 1, homogeneous Dirichlet on the circle";
    cs.family = s.fam;
    cs.data = "shape";
    cs.eps = {s.r};
    cs.resolution = 64; // the star tips need it
    cs.expected = s.pv;
    add(cs);
  }
  {
    CaseSpec cs;
    cs.id = "table2.twoholes";
    cs.description = "two holes of radii 1e-3 and 1e-1 in the unit square, exponential data";
    cs.family = Family::TwoHoles;
    cs.data = "size";
    cs.eps = {1e-3};
    cs.expected = {5.03e-2, 1.45e-2, 3.47, kNaN};
    add(cs);
  }
  struct Sweep {
    const char* id;
    Family fam;
    double slope, eff;
    const char* what;
  };
  const Sweep fig7[] = {
      {"fig7.neg.halfdisk", Family::SquareHalfDiskNeg, 1.0, 1.81, "half-disk hole on the top wall"},
      {"fig7.neg.corner", Family::SquareCornerNeg, 2.0, 1.78, "square hole at the top right corner"},
      {"fig7.pos.halfdisk", Family::SquareHalfDiskPos, 1.0, 2.93, "half-disk bump on the top wall"},
      {"fig7.pos.corner", Family::SquareCornerPos, 2.0, 3.22, "square bump at the top right corner"},
      {"fig7.complex.adjacent", Family::ComplexAdjacent, 1.0, 1.71, "bump and notch meeting at a point"},
      {"fig7.complex.overlap", Family::ComplexOverlap, 1.0, 1.84, "bump and notch overlapping"},
  };
  for (const Sweep& s : fig7) {
    CaseSpec cs;
    cs.id = s.id;
    cs.description = std::string(s.what) + ", oscillating source";
    cs.family = s.fam;
    cs.data = "smooth2d";
    cs.eps = halving(1e-2, 7);
    cs.expected = {kNaN, kNaN, s.eff, s.slope};
    add(cs);
  }
  const Sweep fig8[] = {
      {"fig8.neg.center", Family::CubeCenterNeg, 1.5, 1.87, "box notch on the top face"},
      {"fig8.neg.edge", Family::CubeEdgeNeg, 2.5, 1.92, "box notch at a top corner"},
      {"fig8.pos.center", Family::CubeCenterPos, 1.5, 3.10, "box bump on the top face"},
      {"fig8.pos.edge", Family::CubeEdgePos, 2.5, 3.22, "box bump at a top corner"},
  };
  for (const Sweep& s : fig8) {
    CaseSpec cs;
    cs.id = s.id;
    cs.description = std::string(s.what) + " of the unit cube, oscillating source";
    cs.family = s.fam;
    cs.data = "smooth3d";
    cs.eps = halving(1e-2, 7);
    cs.resolution = 6;
    cs.tol = 1e-12;
    cs.expected = {kNaN, kNaN, s.eff, s.slope};
    add(cs);
  }
  for (int i = 1; i <= 4; ++i) {
    CaseSpec cs;
    cs.id = fmt::format("fig9.g{}", i);
    cs.description = "circular hole in the unit disk, f = 1 extended trivially, Neumann data on the hole";
    cs.family = Family::DiskCircleHole;
    cs.data = fmt::format("neumann-g{}", i);
    cs.eps = halving(1e-2, 7);
    add(cs);
  }
  {
    CaseSpec cs;
    cs.id = "table4.round";
    cs.description = "rounded top left corner of the unit square, radius R";
    cs.family = Family::Round;
    cs.data = "round";
    cs.eps = {1.0, 0.99, 0.5, 0.25, 0.125};
    cs.resolution = 512; // the flux near the tangency points converges only at first order
    cs.expected_points = {{6.83e-3, 2.37e-3, 2.88, kNaN},
                       {6.48e-3, 2.27e-3, 2.85, kNaN},
                       {3.36e-4, 1.26e-4, 2.67, kNaN},
                       {2.08e-5, 7.77e-6, 2.67, kNaN},
                       {1.30e-6, 4.86e-7, 2.67, kNaN}};
    add(cs);
  }
  struct Fillet {
    const char* id;
    ExtensionChoice ext;
    ExpectedValues pv;
  };
  const Fillet fillets[] = {
      {"table5.fillet.box", ExtensionChoice::BoundingBox, {1.78, 2.92e-1, 6.11, kNaN}},
      {"table5.fillet.arc", ExtensionChoice::CustomArc, {1.71, 2.89e-1, 5.93, kNaN}},
      {"table5.fillet.identity", ExtensionChoice::Identity, {1.33, 2.69e-1, 4.94, kNaN}},
  };
  for (const Fillet& f : fillets) {
    CaseSpec cs;
    cs.id = f.id;
    cs.description = "fillet in the reentrant corner of an L-shaped domain";
    cs.family = Family::Fillet;
    cs.extension = f.ext;
    cs.data = "fillet";
    cs.eps = {0.5};
    cs.resolution = 512;
    cs.expected = f.pv;
    add(cs);
  }
  return c;
}

} // namespace

const std::vector<CaseSpec>& catalog() {
  static const std::vector<CaseSpec> c = build_catalog();
  return c;
}

std::optional<CaseSpec> find_case(const std::string& id) {
  for (const CaseSpec& c : catalog())
    if (c.id == id) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config files

namespace {

std::string trim(std::string s) {
  auto notspace = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigurationError(fmt::format("line {}: '{}' is not a number", line, v));
  }
}

int parse_int(const std::string& v, int line) {
  double d = parse_double(v, line);
  if (d != std::floor(d)) throw ConfigurationError(fmt::format("line {}: '{}' is not an integer", line, v));
  return static_cast<int>(d);
}

} // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string section;
  std::string raw;
  int line = 0;
  CaseSpec* current = nullptr;
  bool id_allowed = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigurationError(fmt::format("line {}: unterminated section header", line));
      section = trim(s.substr(1, s.size() - 2));
      if (section == "case") {
        cfg.cases.emplace_back();
        current = &cfg.cases.back();
        id_allowed = true;
      } else if (section != "output" && section != "run") {
        throw ConfigurationError(fmt::format("line {}: unknown section [{}]", line, section));
      }
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigurationError(fmt::format("line {}: expected key = value", line));
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (section == "output") {
      if (key == "dir") cfg.output.dir = value;
      else if (key == "format") cfg.output.format = value;
      else throw ConfigurationError(fmt::format("line {}: unknown output key '{}'", line, key));
      continue;
    }
    if (section == "run") {
      if (key == "workers") cfg.workers = parse_int(value, line);
      else throw ConfigurationError(fmt::format("line {}: unknown run key '{}'", line, key));
      continue;
    }
    if (!current) throw ConfigurationError(fmt::format("line {}: key outside of a section", line));
    CaseSpec& c = *current;
    if (key == "id") {
      if (auto base = find_case(value)) {
        if (!id_allowed)
          throw ConfigurationError(fmt::format("line {}: a catalog id must come first in its [case]", line));
        c = *base;
      } else {
        c.id = value;
      }
    } else if (key == "family") {
      auto f = family_from_string(value);
      if (!f) throw ConfigurationError(fmt::format("line {}: unknown family '{}'", line, value));
      c.family = *f;
    } else if (key == "extension") {
      auto e = extension_from_string(value);
      if (!e) throw ConfigurationError(fmt::format("line {}: unknown extension '{}'", line, value));
      c.extension = *e;
    } else if (key == "data") {
      c.data = value;
    } else if (key == "eps") {
      c.eps.clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) c.eps.push_back(parse_double(trim(tok), line));
    } else if (key == "resolution") {
      c.resolution = parse_int(value, line);
    } else if (key == "reference_factor") {
      c.reference_factor = parse_int(value, line);
    } else if (key == "grading") {
      c.grading = parse_double(value, line);
    } else if (key == "tol") {
      c.tol = parse_double(value, line);
    } else if (key == "m") {
      c.m = parse_int(value, line);
    } else if (std::find(kOverrideKeys.begin(), kOverrideKeys.end(), key) != kOverrideKeys.end()) {
      c.overrides[key] = parse_double(value, line);
    } else {
      throw ConfigurationError(fmt::format("line {}: unknown case key '{}'", line, key));
    }
    id_allowed = false;
  }
  for (CaseSpec& c : cfg.cases) {
    if (c.id.empty()) c.id = fmt::format("custom.{}", to_string(c.family));
    validate(c);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path));
  return parse_config(in);
}

void validate(const CaseSpec& spec) {
  auto fail = [&spec](const std::string& what) {
    throw ConfigurationError(fmt::format("case {}: {}", spec.id, what));
  };
  if (spec.eps.empty()) fail("empty eps list");
  for (std::size_t i = 0; i < spec.eps.size(); ++i) {
    if (!(spec.eps[i] > 0)) fail("eps values must be positive");
    if (i > 0 && !(spec.eps[i] < spec.eps[i - 1])) fail("eps list must be strictly decreasing");
  }
  if (spec.resolution < 2) fail("resolution must be at least 2");
  if (spec.reference_factor < 1) fail("reference_factor must be at least 1");
  if (!(spec.tol > 0)) fail("solver tolerance must be positive");
  if (spec.m < 0) fail("oscillation degree must be non-negative");
  const auto presets = data_presets();
  if (std::find(presets.begin(), presets.end(), spec.data) == presets.end())
    fail(fmt::format("unknown data preset '{}'", spec.data));
  for (const auto& [k, v] : spec.overrides)
    if (std::find(kOverrideKeys.begin(), kOverrideKeys.end(), k) == kOverrideKeys.end())
      fail(fmt::format("unknown data role '{}'", k));
  // The smallest feature decides whether the resolution is fine enough.
  DomainDescription dom = build_domain(spec.family, {spec.eps.back(), spec.extension});
  generate_pair(dom, {spec.resolution, spec.grading});
}

// ---------------------------------------------------------------------------
// Runs

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  auto msg = [name](const std::exception& e) { return fmt::format("{}: {}", name, e.what()); };
  try {
    return f();
  } catch (const SolverFailure& e) {
    throw SolverFailure(msg(e), e.residual());
  } catch (const ResolutionTooCoarse& e) {
    throw ResolutionTooCoarse(msg(e), e.required_resolution());
  } catch (const InvalidGeometry& e) {
    throw InvalidGeometry(msg(e));
  } catch (const LookupError& e) {
    throw LookupError(msg(e));
  } catch (const GaugeRequired& e) {
    throw GaugeRequired(msg(e));
  } catch (const GeometryMismatch& e) {
    throw GeometryMismatch(msg(e));
  } catch (const MeshIncompatibility& e) {
    throw MeshIncompatibility(msg(e));
  } catch (const ConfigurationError& e) {
    throw ConfigurationError(msg(e));
  } catch (const DomainError& e) {
    throw DomainError(msg(e));
  } catch (const IoError& e) {
    throw IoError(msg(e));
  }
}

struct Solutions {
  ScalarField u, u0, ext, ud;
  bool has_ext = false;
};

// Fields point into the mesh set, which must stay put.
void solve_all(const MeshSet& ms, const ProblemData& data, const SolverOptions& so, Solutions& s) {
  s.u = stage("exact solve", [&] { return solve_poisson(ms.exact, exact_problem(data), so); });
  s.u0 = stage("defeatured solve", [&] { return solve_poisson(ms.defeatured, defeatured_problem(data), so); });
  if (ms.extension) {
    s.ext = stage("extension solve",
                  [&] { return solve_poisson(*ms.extension, extension_problem(data, s.u0), so); });
    s.has_ext = true;
  }
  s.ud = stage("assemble u_d", [&] { return assemble_ud(s.u0, s.has_ext ? &s.ext : nullptr, ms.exact); });
}

} // namespace

CaseReport run_case(const CaseSpec& spec, double eps) {
  const auto t0 = std::chrono::steady_clock::now();
  CaseReport r;
  r.id = spec.id;
  r.eps = eps;
  r.resolution = spec.resolution;
  DomainDescription dom = stage("geometry", [&] { return build_domain(spec.family, {eps, spec.extension}); });
  ProblemData data = stage("data", [&] { return make_data(spec.data, eps, spec.overrides); });
  MeshSet ms = stage("mesh", [&] { return generate_pair(dom, {spec.resolution, spec.grading}); });
  r.vertices = static_cast<int>(ms.universe->vertices.size());
  r.elements = ms.universe->element_count();
  SolverOptions so;
  so.tol = spec.tol;
  Solutions sol;
  solve_all(ms, data, so, sol);

  auto traces = stage("defects", [&] { return sigma_defects(sol.ud, dom, data, ms, 4, sol.has_ext ? &sol.ext : nullptr); });
  r.estimate = stage("estimator", [&] { return estimator(traces, dom.dim); });
  EstimatorReport& est = r.estimate;
  est.osc_m = spec.m;
  est.covered_by_theory = dom.covered_by_theory;
  est.warnings = dom.warnings;
  for (FeatureSummary& f : est.features) {
    std::vector<SigmaTrace> mine;
    for (const SigmaTrace& t : traces)
      if (t.feature == f.feature) {
        mine.push_back(t);
        f.gamma_measure += t.measure;
      }
    f.osc = stage("oscillation", [&] { return oscillation(mine, spec.m, dom.dim); });
    est.osc += f.osc;
  }

  auto preds = stage("flux balance", [&] { return flux_residual(dom, data, ms); });
  for (const FluxPrediction& p : preds) {
    for (SigmaContribution& s : est.sigmas)
      if (s.tag == p.tag && s.feature == p.feature) {
        s.predicted_mean = p.predicted_mean;
        r.flux.push_back({p.tag, p.feature, p.predicted_mean, s.mean});
      }
    for (FeatureSummary& f : est.features)
      if (f.feature == p.feature) {
        f.flux_residual = std::max(f.flux_residual, std::abs(p.predicted_mean));
        if (std::abs(p.predicted_mean) > 1e-9 * p.scale + 1e-14) f.compatible = false;
      }
    r.flux_residual = std::max(r.flux_residual, std::abs(p.predicted_mean));
  }
  est.flux_residual = r.flux_residual;

  if (spec.reference_factor > 1) {
    MeshSet fine = stage("reference mesh", [&] {
      return generate_pair(dom, {spec.resolution * spec.reference_factor, spec.grading});
    });
    Solutions fs;
    solve_all(fine, data, so, fs);
    r.error = stage("error", [&] { return h1_seminorm_diff(fs.u, fs.ud); });
  } else {
    r.error = stage("error", [&] { return h1_seminorm_diff(sol.u, sol.ud); });
  }
  r.effectivity = r.error > 0 ? est.estimator / r.error : kNaN;
  est.error = r.error;
  est.effectivity = r.effectivity;
  r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

double fit_rate(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) throw DomainError("fit_rate: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    if (!(x > 0) || !(y > 0)) throw DomainError(fmt::format("fit_rate: non-positive point ({}, {})", x, y));
    double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(pts.size());
  const double den = n * sxx - sx * sx;
  if (den == 0) throw DomainError("fit_rate: all abscissae coincide");
  return (n * sxy - sx * sy) / den;
}

SweepReport run_sweep(const CaseSpec& spec, int workers) {
  validate(spec);
  SweepReport rep;
  rep.id = spec.id;
  const int n = static_cast<int>(spec.eps.size());
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);

  std::vector<std::optional<CaseReport>> out(n);
  std::vector<std::string> errors(n);
  std::vector<char> solver(n, 0);
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (int i = next++; i < n && !stop; i = next++) {
      try {
        out[i] = run_case(spec, spec.eps[i]);
      } catch (const std::exception& e) {
        errors[i] = fmt::format("eps {}: {}", spec.eps[i], e.what());
        solver[i] = dynamic_cast<const SolverFailure*>(&e) || dynamic_cast<const GaugeRequired*>(&e);
        stop = true;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      rep.partial = true;
      if (rep.failure.empty()) {
        rep.failure = errors[i];
        rep.solver_failed = solver[i];
      }
    }
    if (out[i]) rep.cases.push_back(std::move(*out[i]));
    else rep.partial = true;
  }
  if (rep.partial && rep.failure.empty()) rep.failure = "sweep stopped after an earlier failure";

  std::vector<std::pair<double, double>> e, est, osc;
  std::vector<double> effs;
  for (const CaseReport& c : rep.cases) {
    if (c.error > 0) e.push_back({c.eps, c.error});
    if (c.estimate.estimator > 0) est.push_back({c.eps, c.estimate.estimator});
    if (c.estimate.osc > 0) osc.push_back({c.eps, c.estimate.osc});
    if (std::isfinite(c.effectivity)) effs.push_back(c.effectivity);
  }
  if (e.size() >= 2) rep.slope_error = fit_rate(e);
  if (est.size() >= 2) rep.slope_estimator = fit_rate(est);
  if (osc.size() >= 2) rep.slope_osc = fit_rate(osc);
  if (!effs.empty()) {
    rep.eff_min = *std::min_element(effs.begin(), effs.end());
    rep.eff_max = *std::max_element(effs.begin(), effs.end());
    rep.eff_mean = std::accumulate(effs.begin(), effs.end(), 0.0) / effs.size();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

nlohmann::json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double from_jnum(const nlohmann::json& j) {
  return j.is_null() ? kNaN : j.get<double>();
}

PieceTag tag_from_string(const std::string& s) {
  for (PieceTag t : {PieceTag::GammaN, PieceTag::GammaR, PieceTag::Gamma0P, PieceTag::Gamma0N, PieceTag::GammaS,
                     PieceTag::GammaTilde, PieceTag::Dirichlet, PieceTag::NeumannRest})
    if (to_string(t) == s) return t;
  throw ConfigurationError(fmt::format("unknown boundary tag '{}'", s));
}

} // namespace

std::string to_csv(const SweepReport& report) {
  std::string s = "eps,err_h1s,est,est_tilde,osc,eff,flux_residual,runtime_s\n";
  for (const CaseReport& c : report.cases) {
    const EstimatorReport& e = c.estimate;
    if (e.features.size() > 1)
      for (const FeatureSummary& f : e.features)
        s += fmt::format("{},,{},{},{},,{},\n", num(c.eps), num(f.estimator), num(f.estimator_tilde), num(f.osc),
                         num(f.flux_residual));
    s += fmt::format("{},{},{},{},{},{},{},{}\n", num(c.eps), num(c.error), num(e.estimator),
                     num(e.estimator_tilde), num(e.osc), num(c.effectivity), num(c.flux_residual),
                     num(c.runtime_s));
  }
  return s;
}

nlohmann::json to_json(const EstimatorReport& r) {
  nlohmann::json j;
  j["dim"] = r.dim;
  j["estimator"] = jnum(r.estimator);
  j["estimator_rss"] = jnum(r.estimator_rss);
  j["estimator_tilde"] = jnum(r.estimator_tilde);
  j["osc"] = jnum(r.osc);
  j["osc_m"] = r.osc_m;
  j["flux_residual"] = jnum(r.flux_residual);
  j["error"] = jnum(r.error);
  j["effectivity"] = jnum(r.effectivity);
  j["covered_by_theory"] = r.covered_by_theory;
  j["warnings"] = r.warnings;
  j["sigmas"] = nlohmann::json::array();
  for (const SigmaContribution& s : r.sigmas)
    j["sigmas"].push_back({{"tag", std::string(to_string(s.tag))},
                           {"feature", s.feature},
                           {"measure", jnum(s.measure)},
                           {"mean", jnum(s.mean)},
                           {"fluctuation", jnum(s.fluctuation)},
                           {"norm", jnum(s.norm)},
                           {"c", jnum(s.c)},
                           {"contribution2", jnum(s.contribution2)},
                           {"tilde2", jnum(s.tilde2)},
                           {"predicted_mean", jnum(s.predicted_mean)}});
  j["features"] = nlohmann::json::array();
  for (const FeatureSummary& f : r.features)
    j["features"].push_back({{"feature", f.feature},
                             {"estimator", jnum(f.estimator)},
                             {"estimator_tilde", jnum(f.estimator_tilde)},
                             {"osc", jnum(f.osc)},
                             {"gamma_measure", jnum(f.gamma_measure)},
                             {"flux_residual", jnum(f.flux_residual)},
                             {"compatible", f.compatible}});
  return j;
}

namespace {

EstimatorReport estimator_from_json(const nlohmann::json& j) {
  EstimatorReport r;
  r.dim = j.at("dim").get<int>();
  r.estimator = from_jnum(j.at("estimator"));
  r.estimator_rss = from_jnum(j.at("estimator_rss"));
  r.estimator_tilde = from_jnum(j.at("estimator_tilde"));
  r.osc = from_jnum(j.at("osc"));
  r.osc_m = j.at("osc_m").get<int>();
  r.flux_residual = from_jnum(j.at("flux_residual"));
  r.error = from_jnum(j.at("error"));
  r.effectivity = from_jnum(j.at("effectivity"));
  r.covered_by_theory = j.at("covered_by_theory").get<bool>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& s : j.at("sigmas")) {
    SigmaContribution c;
    c.tag = tag_from_string(s.at("tag").get<std::string>());
    c.feature = s.at("feature").get<int>();
    c.measure = from_jnum(s.at("measure"));
    c.mean = from_jnum(s.at("mean"));
    c.fluctuation = from_jnum(s.at("fluctuation"));
    c.norm = from_jnum(s.at("norm"));
    c.c = from_jnum(s.at("c"));
    c.contribution2 = from_jnum(s.at("contribution2"));
    c.tilde2 = from_jnum(s.at("tilde2"));
    c.predicted_mean = from_jnum(s.at("predicted_mean"));
    r.sigmas.push_back(c);
  }
  for (const auto& f : j.at("features")) {
    FeatureSummary s;
    s.feature = f.at("feature").get<int>();
    s.estimator = from_jnum(f.at("estimator"));
    s.estimator_tilde = from_jnum(f.at("estimator_tilde"));
    s.osc = from_jnum(f.at("osc"));
    s.gamma_measure = from_jnum(f.at("gamma_measure"));
    s.flux_residual = from_jnum(f.at("flux_residual"));
    s.compatible = f.at("compatible").get<bool>();
    r.features.push_back(s);
  }
  return r;
}

} // namespace

nlohmann::json to_json(const SweepReport& report) {
  nlohmann::json j;
  j["id"] = report.id;
  j["slope_error"] = jnum(report.slope_error);
  j["slope_estimator"] = jnum(report.slope_estimator);
  j["slope_osc"] = jnum(report.slope_osc);
  j["eff_min"] = jnum(report.eff_min);
  j["eff_max"] = jnum(report.eff_max);
  j["eff_mean"] = jnum(report.eff_mean);
  j["partial"] = report.partial;
  j["failure"] = report.failure;
  j["cases"] = nlohmann::json::array();
  for (const CaseReport& c : report.cases) {
    nlohmann::json cj;
    cj["id"] = c.id;
    cj["eps"] = jnum(c.eps);
    cj["error"] = jnum(c.error);
    cj["effectivity"] = jnum(c.effectivity);
    cj["flux_residual"] = jnum(c.flux_residual);
    cj["runtime_s"] = jnum(c.runtime_s);
    cj["vertices"] = c.vertices;
    cj["elements"] = c.elements;
    cj["resolution"] = c.resolution;
    cj["estimate"] = to_json(c.estimate);
    cj["flux"] = nlohmann::json::array();
    for (const FluxRow& f : c.flux)
      cj["flux"].push_back({{"tag", std::string(to_string(f.tag))},
                            {"feature", f.feature},
                            {"predicted", jnum(f.predicted)},
                            {"discrete", jnum(f.discrete)}});
    j["cases"].push_back(cj);
  }
  return j;
}

SweepReport sweep_from_json(const nlohmann::json& j) {
  SweepReport r;
  r.id = j.at("id").get<std::string>();
  r.slope_error = from_jnum(j.at("slope_error"));
  r.slope_estimator = from_jnum(j.at("slope_estimator"));
  r.slope_osc = from_jnum(j.at("slope_osc"));
  r.eff_min = from_jnum(j.at("eff_min"));
  r.eff_max = from_jnum(j.at("eff_max"));
  r.eff_mean = from_jnum(j.at("eff_mean"));
  r.partial = j.at("partial").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  for (const auto& cj : j.at("cases")) {
    CaseReport c;
    c.id = cj.at("id").get<std::string>();
    c.eps = from_jnum(cj.at("eps"));
    c.error = from_jnum(cj.at("error"));
    c.effectivity = from_jnum(cj.at("effectivity"));
    c.flux_residual = from_jnum(cj.at("flux_residual"));
    c.runtime_s = from_jnum(cj.at("runtime_s"));
    c.vertices = cj.at("vertices").get<int>();
    c.elements = cj.at("elements").get<int>();
    c.resolution = cj.at("resolution").get<int>();
    c.estimate = estimator_from_json(cj.at("estimate"));
    for (const auto& f : cj.at("flux"))
      c.flux.push_back({tag_from_string(f.at("tag").get<std::string>()), f.at("feature").get<int>(),
                        from_jnum(f.at("predicted")), from_jnum(f.at("discrete"))});
    r.cases.push_back(std::move(c));
  }
  return r;
}

std::vector<std::string> emit_report(const SweepReport& report, const OutputOptions& out) {
  if (out.format != "csv" && out.format != "json" && out.format != "both")
    throw ConfigurationError(fmt::format("unknown output format '{}'", out.format));
  std::error_code ec;
  std::filesystem::create_directories(out.dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", out.dir, ec.message()));
  std::vector<std::string> written;
  auto write = [&](const std::string& ext, const std::string& body) {
    std::string path = (std::filesystem::path(out.dir) / (report.id + ext)).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(fmt::format("cannot write '{}'", path));
    f << body;
    if (!f) throw IoError(fmt::format("write failed for '{}'", path));
    written.push_back(path);
  };
  if (out.format != "json") write(".csv", to_csv(report));
  if (out.format != "csv") write(".json", to_json(report).dump(2) + "\n");
  return written;
}

} // namespace defeat
