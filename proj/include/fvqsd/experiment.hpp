#pragma once

// Orchestration behind the command-line tool: single runs, sweeps, oracle
// solves and coupling checks, each writing CSV/JSON artifacts into the
// configured output directory.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fvqsd/config.hpp"
#include "fvqsd/coupling.hpp"
#include "fvqsd/engine.hpp"
#include "fvqsd/oracle.hpp"
#include "fvqsd/stats.hpp"

namespace fvqsd {

namespace fs = std::filesystem;

/// Exit statuses of the command-line tool.
enum ExitStatus : int { kOk = 0, kRuntimeFailure = 1, kConfigError = 2 };

inline Json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

/// Probability masses of a CDF on the bins of `axis`, renormalized to 1.
inline EmpiricalMeasure binned(const Cdf1d& cdf, const Axis& axis) {
  EmpiricalMeasure h(axis);
  std::vector<double> masses(axis.bins());
  double total = 0.0;
  for (std::size_t i = 0; i < axis.bins(); ++i) {
    masses[i] = std::max(0.0, cdf(axis.edges()[i + 1]) - cdf(axis.edges()[i]));
    total += masses[i];
  }
  if (!(total > 0.0)) throw NumericalError("zero mass");
  for (std::size_t i = 0; i < axis.bins(); ++i) {
    const double c = axis.center(i);
    h.accumulate(std::span<const double>(&c, 1), masses[i] / total);
  }
  return h;
}

/// Default r-grid for boundary-mass profiles: ten steps up to the largest
/// possible boundary distance.
inline std::vector<double> default_r_grid(const Domain& domain) {
  const Box b = domain.bounds();
  double half = 0.5 * (b.hi[0] - b.lo[0]);
  if (domain.dimension() == 2) half = std::min(half, 0.5 * (b.hi[1] - b.lo[1]));
  std::vector<double> r;
  for (int k = 1; k <= 10; ++k) r.push_back(half * k / 10.0);
  return r;
}

/// Closed-form quasi-stationary density of Brownian motion on (a, b).
inline GridFunction brownian_qsd(double a, double b, std::size_t n = 20001) {
  const double len = b - a;
  return normalized(GridFunction::sample(a, b, n, [&](double x) {
    return std::numbers::pi / (2.0 * len) * std::sin(std::numbers::pi * (x - a) / len);
  }));
}

/// Yaglom limit 2 - 2z of the Wright-Fisher diffusion on (0, 1).
inline GridFunction wright_fisher_qsd_z(std::size_t n = 20001) {
  return normalized(GridFunction::sample(0.0, 1.0, n, [](double z) { return 2.0 - 2.0 * z; }));
}

/// Distances between a run's empirical measure and the best available
/// reference for its model; nullopt in 2D.
inline std::optional<Json> compare_with_target(const RunConfig& cfg, const DriftModel& model, const Domain& domain,
                                               const SimulationResult& result) {
  if (domain.dimension() != 1) return std::nullopt;
  const Box box = domain.bounds();
  const double a = box.lo[0];
  const double b = box.hi[0];
  Json j;
  j["lambda_hat"] = result.lambda_hat.value;
  auto add_distances = [&](const std::string& prefix, const EmpiricalMeasure& h, const Cdf1d& target) {
    j[prefix + "w1"] = wasserstein1_1d(Cdf1d::from_histogram(h), target);
    j[prefix + "tv"] = tv_binned(h, binned(target, h.axis(0)));
  };

  if (model.id() == "brownian") {
    j["target"] = "closed_form_dirichlet";
    add_distances("", result.empirical, Cdf1d::from_density(brownian_qsd(a, b)));
    const double lambda = std::numbers::pi * std::numbers::pi / (2.0 * (b - a) * (b - a));
    j["lambda_target"] = lambda;
    j["lambda_rel_error"] = std::abs(result.lambda_hat.value - lambda) / lambda;
    return j;
  }

  const EigenPair oracle = principal_eigenpair(model, a, b, static_cast<std::size_t>(cfg.oracle.grid_n));
  j["target"] = "oracle";
  add_distances("", result.empirical, Cdf1d::from_density(oracle.density));
  j["lambda_target"] = oracle.lambda;
  j["lambda_rel_error"] = std::abs(result.lambda_hat.value - oracle.lambda) / oracle.lambda;
  j["oracle_residual"] = oracle.residual;

  if (model.id() == "wright_fisher") {
    const EmpiricalMeasure z = push_forward(ChangeOfVariables::wright_fisher(), result.empirical);
    j["target_z"] = "2-2z";
    add_distances("z_", z, Cdf1d::from_density(wright_fisher_qsd_z()));
  }
  return j;
}

inline Json summary_json(const RunConfig& cfg, const SimulationResult& r, const Domain& domain, double wall) {
  Json j;
  j["lambda_hat"] = r.lambda_hat.value;
  j["lambda_degenerate"] = r.lambda_hat.degenerate;
  j["jump_rate"] = r.jump_rate;
  j["mean_phi"] = r.mean_phi;
  j["window_jumps"] = r.window_jumps;
  j["seed"] = r.seed;
  j["wall_time_s"] = wall;
  const std::vector<double> grid = default_r_grid(domain);
  Json profile = Json::array();
  for (const auto& [rr, mass] : tightness_profile(r.empirical, domain, grid)) profile.push_back({rr, mass});
  j["tightness"] = profile;
  j["config"] = to_json(cfg);
  return j;
}

/// Executes one simulation and writes its artifacts into cfg.output.directory.
inline int run_command(const RunConfig& cfg, std::ostream& log = std::cout) {
  validate(cfg);
  const DriftModel model = build_model(cfg.model);
  const Domain domain = build_domain(cfg.domain, cfg.model);
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);

  const auto start = std::chrono::steady_clock::now();
  const SimulationResult result = run(cfg.engine, model, domain);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (cfg.output.wants("csv")) {
    std::ostringstream emp;
    result.empirical.write_csv(emp);
    write_text(dir / "empirical.csv", emp.str());

    std::ostringstream ml;
    ml.precision(17);
    ml << "t,mass,log_mass\n";
    for (const auto& p : result.mass_loss_curve) ml << p.t << ',' << p.mass() << ',' << p.log_mass << '\n';
    write_text(dir / "mass_loss.csv", ml.str());

    const ChangeOfVariables cov = ChangeOfVariables::for_model(model);
    if (domain.dimension() == 1 && cov.kind() != ChangeOfVariables::Kind::Identity) {
      std::ostringstream z;
      z.precision(17);
      const EmpiricalMeasure pushed = push_forward(cov, result.empirical);
      z << "z,weight\n";
      pushed.for_each_bin([&](const Point& c, double w) { z << c[0] << ',' << w << '\n'; });
      write_text(dir / "empirical_z.csv", z.str());
    }
    if (cfg.output.snapshot) {
      std::ostringstream s;
      write_snapshot_csv(result.final_system, s);
      write_text(dir / "snapshot.csv", s.str());
    }
  }
  if (cfg.output.wants("json")) {
    write_text(dir / "summary.json", summary_json(cfg, result, domain, wall).dump(2) + "\n");
  }
  if (cfg.output.compare) {
    if (auto cmp = compare_with_target(cfg, model, domain, result)) {
      write_text(dir / "comparison.json", cmp->dump(2) + "\n");
    } else {
      log << "no reference available for comparison in dimension " << domain.dimension() << "\n";
    }
  }
  log << "run finished: lambda_hat=" << result.lambda_hat.value << " jump_rate=" << result.jump_rate
      << " mean_phi=" << result.mean_phi << " (" << wall << " s)\n";
  return kOk;
}

/// Cartesian sweep over the `sweep` table. Cell i runs with seed
/// engine.seed + i in <directory>/run_<i>; failures are recorded in
/// index.csv and do not stop the sweep.
inline int sweep_command(const Json& raw, std::ostream& log = std::cout) {
  const RunConfig base = parse_config(raw);
  if (!base.has_sweep) throw ConfigError("sweep table required");
  const fs::path dir(base.output.directory);
  fs::create_directories(dir);

  std::size_t cells = 1;
  for (const auto& axis : base.sweep) cells *= axis.values.size();

  std::ostringstream index;
  index.precision(17);
  index << "run";
  for (const auto& axis : base.sweep) {
    std::string key;
    for (const auto& p : axis.parameters) key += (key.empty() ? "" : "=") + p;
    index << ',' << key;
  }
  index << ",status,lambda_hat,mean_phi,directory\n";

  bool all_ok = true;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    Json doc = raw;
    doc.erase("sweep");
    std::vector<double> chosen;
    std::size_t rest = cell;
    for (auto it = base.sweep.rbegin(); it != base.sweep.rend(); ++it) {
      chosen.insert(chosen.begin(), it->values[rest % it->values.size()]);
      rest /= it->values.size();
    }
    const std::string name = "run_" + std::to_string(cell);
    std::string status = "ok";
    double lambda = 0.0;
    double mean_phi = 0.0;
    try {
      for (std::size_t k = 0; k < base.sweep.size(); ++k) {
        for (const auto& p : base.sweep[k].parameters) set_parameter(doc, p, chosen[k]);
      }
      set_parameter(doc, "engine.seed", static_cast<double>(base.engine.seed + cell));
      doc["output"]["directory"] = (dir / name).string();
      const RunConfig cfg = parse_config(doc);
      run_command(cfg, log);
      const Json summary = load_json(dir / name / "summary.json");
      lambda = summary.at("lambda_hat").get<double>();
      mean_phi = summary.at("mean_phi").get<double>();
    } catch (const std::exception& e) {
      status = std::string("failed: ") + e.what();
      for (char& ch : status) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      all_ok = false;
      log << name << " " << status << "\n";
    }
    index << cell;
    for (double v : chosen) index << ',' << Json(v).dump();
    index << ',' << status << ',' << lambda << ',' << mean_phi << ',' << name << '\n';
  }
  write_text(dir / "index.csv", index.str());
  return all_ok ? kOk : kRuntimeFailure;
}

/// Solves the finite-difference eigenproblem on the configured interval.
inline int oracle_command(const RunConfig& cfg, std::ostream& log = std::cout) {
  const DriftModel model = build_model(cfg.model);
  const Domain domain = build_domain(cfg.domain, cfg.model);
  if (domain.dimension() != 1) throw ConfigError("oracle requires a one-dimensional model");
  const Box box = domain.bounds();
  const EigenPair pair = principal_eigenpair(model, box.lo[0], box.hi[0], static_cast<std::size_t>(cfg.oracle.grid_n));
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  std::ostringstream csv;
  csv.precision(17);
  csv << "x,density\n";
  for (std::size_t i = 0; i < pair.density.size(); ++i) csv << pair.density.x(i) << ',' << pair.density.values[i] << '\n';
  write_text(dir / "oracle.csv", csv.str());
  const Json j = {{"lambda", pair.lambda}, {"residual", pair.residual}, {"grid_n", pair.grid_n}};
  write_text(dir / "oracle.json", j.dump(2) + "\n");
  log << j.dump() << "\n";
  return kOk;
}

inline Point domain_center(const Domain& domain) {
  const Box b = domain.bounds();
  if (domain.dimension() == 1) return Point::of(0.5 * (b.lo[0] + b.hi[0]));
  return Point::of(0.5 * (b.lo[0] + b.hi[0]), 0.5 * (b.lo[1] + b.hi[1]));
}

/// Coupling report for the configured model; Q defaults to the estimate on
/// the band of width 2a.
inline Json coupling_report(const RunConfig& cfg) {
  const DriftModel model = build_model(cfg.model);
  const Domain domain = build_domain(cfg.domain, cfg.model);
  const CouplingSpec& c = cfg.coupling;
  // 2D bands are gridded per axis.
  const int q_grid = domain.dimension() == 1 ? c.q_grid_n : std::max(2, c.q_grid_n / 10);
  const double q_estimate = estimate_Q(model, domain, 2.0 * c.a, q_grid);
  CouplingSetup setup;
  setup.Q = c.Q.value_or(q_estimate);
  setup.a = c.a;
  setup.dt = c.dt;
  setup.horizon = c.horizon;
  setup.n_paths = c.n_paths;
  setup.seed = cfg.engine.seed;
  setup.x0 = c.x0 ? detail::point_from(*c.x0, "coupling.x0") : domain_center(domain);
  const CouplingReport r = coupling_check(model, domain, setup);
  return Json{{"violation_fraction", r.violation_fraction},
              {"max_excess", r.max_excess},
              {"n_paths", r.n_paths},
              {"dt", r.dt},
              {"tol", r.tol},
              {"samples", r.samples},
              {"violations", r.violations},
              {"Q", setup.Q},
              {"q_estimate", q_estimate},
              {"a", setup.a}};
}

inline int couple_check_command(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Json report = coupling_report(cfg);
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  write_text(dir / "coupling.json", report.dump(2) + "\n");
  log << report.dump() << "\n";
  return kOk;
}

}  // namespace fvqsd
