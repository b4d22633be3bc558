#pragma once

// Run configuration: a JSON document with the tables `model`, `domain`,
// `engine`, `output` and the optional `sweep`, `oracle`, `coupling`.
// Unknown keys are rejected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fvqsd/coupling.hpp"
#include "fvqsd/domain.hpp"
#include "fvqsd/engine.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/models.hpp"

namespace fvqsd {

using Json = nlohmann::json;

struct ModelSpec {
  std::string id;
  DriftSource drift_source = DriftSource::ItoConsistent;
  double r = 1.0;
  double c = 1.0;
  double r1 = 1.0;
  double r2 = 1.0;
  double c11 = 1.0;
  double c12 = -0.1;
  double c21 = -0.1;
  double c22 = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  /// Enforce the weak cooperative condition for Lotka-Volterra.
  bool validate = true;
  /// Tabulated drift values on a uniform grid over [table_lo, table_hi].
  std::vector<double> table;
  double table_lo = 0.0;
  double table_hi = 1.0;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct DomainSpec {
  std::string kind = "cutoff";  ///< interval | rounded_rectangle | cutoff
  double a = 0.0;
  double b = 1.0;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  double corner_radius = 0.1;
  int cutoff_m = 100;

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
  bool compare = false;
  bool snapshot = false;

  bool wants(const std::string& f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct OracleSpec {
  int grid_n = 2000;
  friend bool operator==(const OracleSpec&, const OracleSpec&) = default;
};

struct CouplingSpec {
  double a = 0.025;
  std::optional<double> Q;  ///< estimated on the band of width 2a when absent
  double dt = 1e-4;
  double horizon = 1.0;
  int n_paths = 1000;
  std::optional<std::vector<double>> x0;  ///< domain center when absent
  int q_grid_n = 10000;

  friend bool operator==(const CouplingSpec&, const CouplingSpec&) = default;
};

/// Parameter path(s) set together, and the values they take.
struct SweepAxis {
  std::vector<std::string> parameters;
  std::vector<double> values;
  friend bool operator==(const SweepAxis&, const SweepAxis&) = default;
};

struct RunConfig {
  ModelSpec model;
  DomainSpec domain;
  SimulationConfig engine;
  OutputSpec output;
  OracleSpec oracle;
  CouplingSpec coupling;
  std::vector<SweepAxis> sweep;
  bool has_sweep = false;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.model == b.model && a.domain == b.domain && engine_equal(a.engine, b.engine) &&
           a.output == b.output && a.oracle == b.oracle && a.coupling == b.coupling && a.sweep == b.sweep &&
           a.has_sweep == b.has_sweep;
  }

 private:
  static bool engine_equal(const SimulationConfig& x, const SimulationConfig& y) {
    return x.N == y.N && x.dt == y.dt && x.burn_in == y.burn_in && x.sample_horizon == y.sample_horizon &&
           x.seed == y.seed && x.jump_policy == y.jump_policy && x.hit_test == y.hit_test &&
           x.snapshot_stride == y.snapshot_stride && x.threads == y.threads && x.batches == y.batches &&
           x.bins == y.bins && x.initial == y.initial;
  }
};

namespace detail {

class Table {
 public:
  Table(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be a table");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!known.count(k)) throw ConfigError("unknown key " + name_ + "." + k);
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return name_ + "." + key; }

  void get(const char* key, double& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(path(key) + " must be a number");
    out = j_.at(key).get<double>();
    if (!std::isfinite(out)) throw ConfigError(path(key) + " must be finite");
  }
  void get(const char* key, int& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    out = j_.at(key).get<int>();
  }
  void get(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(path(key) + " must be a nonnegative integer");
    }
    out = j_.at(key).get<std::uint64_t>();
  }
  void get(const char* key, bool& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) throw ConfigError(path(key) + " must be a boolean");
    out = j_.at(key).get<bool>();
  }
  void get(const char* key, std::string& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(path(key) + " must be a string");
    out = j_.at(key).get<std::string>();
  }
  void get(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(path(key) + " must be an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
  }

 private:
  const Json& j_;
  std::string name_;
};

inline Point point_from(const std::vector<double>& v, const std::string& what) {
  if (v.size() == 1) return Point::of(v[0]);
  if (v.size() == 2) return Point::of(v[0], v[1]);
  throw ConfigError(what + " must have 1 or 2 coordinates");
}

inline std::vector<double> coords(const Point& p) {
  return p.dim == 1 ? std::vector<double>{p[0]} : std::vector<double>{p[0], p[1]};
}

inline std::vector<double> box_side(const std::array<double, 2>& a, int dim) {
  return dim == 1 ? std::vector<double>{a[0]} : std::vector<double>{a[0], a[1]};
}

}  // namespace detail

inline DriftSource parse_drift_source(const std::string& s) {
  if (s == "ito_consistent") return DriftSource::ItoConsistent;
  if (s == "paper_literal") return DriftSource::PaperLiteral;
  throw ConfigError("model.drift_source must be ito_consistent or paper_literal");
}

inline std::string to_string(DriftSource s) {
  return s == DriftSource::ItoConsistent ? "ito_consistent" : "paper_literal";
}

inline RunConfig parse_config(const Json& root) {
  using detail::Table;
  if (!root.is_object()) throw ConfigError("configuration must be a table");
  {
    Table top(root, "config");
    top.allow({"model", "domain", "engine", "output", "sweep", "oracle", "coupling"});
  }
  RunConfig cfg;

  if (!root.contains("model")) throw ConfigError("model.id required");
  {
    Table t(root.at("model"), "model");
    t.allow({"id", "drift_source", "r", "c", "r1", "r2", "c11", "c12", "c21", "c22", "gamma1", "gamma2",
             "validate", "table", "table_lo", "table_hi"});
    if (!t.has("id")) throw ConfigError("model.id required");
    ModelSpec& m = cfg.model;
    t.get("id", m.id);
    std::string source = to_string(m.drift_source);
    t.get("drift_source", source);
    m.drift_source = parse_drift_source(source);
    t.get("r", m.r);
    t.get("c", m.c);
    t.get("r1", m.r1);
    t.get("r2", m.r2);
    t.get("c11", m.c11);
    t.get("c12", m.c12);
    t.get("c21", m.c21);
    t.get("c22", m.c22);
    t.get("gamma1", m.gamma1);
    t.get("gamma2", m.gamma2);
    t.get("validate", m.validate);
    t.get("table", m.table);
    t.get("table_lo", m.table_lo);
    t.get("table_hi", m.table_hi);
    static const std::set<std::string> ids{"brownian", "wright_fisher", "logistic", "lotka_volterra", "tabulated"};
    if (!ids.count(m.id)) throw ConfigError("model.id must be one of brownian, wright_fisher, logistic, lotka_volterra, tabulated");
  }

  std::optional<int> engine_m;
  if (root.contains("engine")) {
    Table t(root.at("engine"), "engine");
    t.allow({"N", "m", "dt", "burn_in", "sample_horizon", "seed", "jump_policy", "hit_test", "snapshot_stride",
             "threads", "batches", "bins", "initial"});
    SimulationConfig& e = cfg.engine;
    t.get("N", e.N);
    if (t.has("m")) {
      int m = 0;
      t.get("m", m);
      engine_m = m;
    }
    t.get("dt", e.dt);
    t.get("sample_horizon", e.sample_horizon);
    e.burn_in = 0.25 * e.sample_horizon;
    t.get("burn_in", e.burn_in);
    t.get("seed", e.seed);
    t.get("snapshot_stride", e.snapshot_stride);
    t.get("threads", e.threads);
    t.get("batches", e.batches);
    t.get("bins", e.bins);
    if (t.has("hit_test")) {
      std::string h;
      t.get("hit_test", h);
      if (h == "crossing_only") e.hit_test = HitTest::CrossingOnly;
      else if (h == "bridge_corrected") e.hit_test = HitTest::BridgeCorrected;
      else throw ConfigError("engine.hit_test must be crossing_only or bridge_corrected");
    }
    if (t.has("jump_policy")) {
      const Json& jp = t.at("jump_policy");
      if (jp.is_string() && jp.get<std::string>() == "uniform_other") {
        e.jump_policy = UniformOther{};
      } else if (jp.is_object()) {
        Table p(jp, "engine.jump_policy");
        p.allow({"kind", "x", "lo", "hi"});
        std::string kind;
        p.get("kind", kind);
        if (kind == "fixed_point") {
          std::vector<double> x;
          p.get("x", x);
          e.jump_policy = FixedPoint{detail::point_from(x, "engine.jump_policy.x")};
        } else if (kind == "fixed_uniform") {
          std::vector<double> lo;
          std::vector<double> hi;
          p.get("lo", lo);
          p.get("hi", hi);
          const Point plo = detail::point_from(lo, "engine.jump_policy.lo");
          const Point phi = detail::point_from(hi, "engine.jump_policy.hi");
          if (plo.dim != phi.dim) throw ConfigError("engine.jump_policy lo/hi dimensions differ");
          e.jump_policy = FixedUniformBox{Box{plo.c, phi.c}};
        } else {
          throw ConfigError("engine.jump_policy.kind must be fixed_point or fixed_uniform");
        }
      } else {
        throw ConfigError("engine.jump_policy must be uniform_other or a table");
      }
    }
    if (t.has("initial")) {
      const Json& in = t.at("initial");
      if (in.is_string() && in.get<std::string>() == "uniform_interior") {
        e.initial = UniformInterior{};
      } else if (in.is_object()) {
        Table p(in, "engine.initial");
        p.allow({"kind", "x", "points"});
        std::string kind;
        p.get("kind", kind);
        if (kind == "point") {
          std::vector<double> x;
          p.get("x", x);
          e.initial = StartAt{detail::point_from(x, "engine.initial.x")};
        } else if (kind == "list") {
          if (!p.has("points") || !p.at("points").is_array()) {
            throw ConfigError("engine.initial.points must be an array");
          }
          StartList list;
          for (const auto& pt : p.at("points")) {
            list.points.push_back(detail::point_from(pt.get<std::vector<double>>(), "engine.initial.points"));
          }
          e.initial = std::move(list);
        } else {
          throw ConfigError("engine.initial.kind must be point or list");
        }
      } else {
        throw ConfigError("engine.initial must be uniform_interior or a table");
      }
    }
  }
  cfg.engine.validate();

  if (root.contains("domain")) {
    Table t(root.at("domain"), "domain");
    t.allow({"kind", "a", "b", "x_min", "x_max", "y_min", "y_max", "corner_radius", "cutoff_m"});
    DomainSpec& d = cfg.domain;
    t.get("kind", d.kind);
    t.get("a", d.a);
    t.get("b", d.b);
    t.get("x_min", d.x_min);
    t.get("x_max", d.x_max);
    t.get("y_min", d.y_min);
    t.get("y_max", d.y_max);
    t.get("corner_radius", d.corner_radius);
    if (t.has("cutoff_m")) {
      t.get("cutoff_m", d.cutoff_m);
      if (engine_m && *engine_m != d.cutoff_m) throw ConfigError("engine.m disagrees with domain.cutoff_m");
    } else if (engine_m) {
      d.cutoff_m = *engine_m;
    }
  } else if (engine_m) {
    cfg.domain.cutoff_m = *engine_m;
  }

  if (root.contains("output")) {
    Table t(root.at("output"), "output");
    t.allow({"directory", "formats", "compare", "snapshot"});
    t.get("directory", cfg.output.directory);
    if (t.has("formats")) {
      const Json& f = t.at("formats");
      if (!f.is_array()) throw ConfigError("output.formats must be an array");
      cfg.output.formats.clear();
      for (const auto& e : f) {
        if (!e.is_string() || (e.get<std::string>() != "csv" && e.get<std::string>() != "json")) {
          throw ConfigError("output.formats entries must be csv or json");
        }
        cfg.output.formats.push_back(e.get<std::string>());
      }
    }
    t.get("compare", cfg.output.compare);
    t.get("snapshot", cfg.output.snapshot);
  }

  if (root.contains("oracle")) {
    Table t(root.at("oracle"), "oracle");
    t.allow({"grid_n"});
    t.get("grid_n", cfg.oracle.grid_n);
    if (cfg.oracle.grid_n < 50) throw ConfigError("oracle.grid_n must be >= 50");
  }

  if (root.contains("coupling")) {
    Table t(root.at("coupling"), "coupling");
    t.allow({"a", "Q", "dt", "horizon", "n_paths", "x0", "q_grid_n"});
    CouplingSpec& c = cfg.coupling;
    t.get("a", c.a);
    if (t.has("Q")) {
      double q = 0.0;
      t.get("Q", q);
      c.Q = q;
    }
    t.get("dt", c.dt);
    t.get("horizon", c.horizon);
    t.get("n_paths", c.n_paths);
    if (t.has("x0")) {
      std::vector<double> x;
      t.get("x0", x);
      c.x0 = x;
    }
    t.get("q_grid_n", c.q_grid_n);
    if (!(c.a > 0.0)) throw ConfigError("coupling.a must be > 0");
    if (!(c.dt > 0.0)) throw ConfigError("coupling.dt must be > 0");
    if (!(c.horizon > 0.0)) throw ConfigError("coupling.horizon must be > 0");
    if (c.n_paths < 1) throw ConfigError("coupling.n_paths must be >= 1");
    if (c.q_grid_n < 2) throw ConfigError("coupling.q_grid_n must be >= 2");
  }

  if (root.contains("sweep")) {
    cfg.has_sweep = true;
    const Json& s = root.at("sweep");
    if (!s.is_object()) throw ConfigError("sweep must be a table");
    for (const auto& [key, values] : s.items()) {
      SweepAxis axis;
      std::size_t start = 0;
      while (true) {
        const std::size_t eq = key.find('=', start);
        axis.parameters.push_back(key.substr(start, eq - start));
        if (eq == std::string::npos) break;
        start = eq + 1;
      }
      for (const auto& p : axis.parameters) {
        const auto dot = p.find('.');
        if (dot == std::string::npos || (p.substr(0, dot) != "model" && p.substr(0, dot) != "engine" &&
                                         p.substr(0, dot) != "domain")) {
          throw ConfigError("sweep parameter " + p + " must be model.*, engine.* or domain.*");
        }
      }
      if (!values.is_array()) throw ConfigError("sweep." + key + " must be an array of numbers");
      for (const auto& v : values) {
        if (!v.is_number()) throw ConfigError("sweep." + key + " must be an array of numbers");
        axis.values.push_back(v.get<double>());
      }
      if (axis.values.empty()) throw ConfigError("sweep." + key + " is empty");
      cfg.sweep.push_back(std::move(axis));
    }
    if (cfg.sweep.empty()) throw ConfigError("sweep is empty");
  }
  return cfg;
}

/// Serializes every field, so that parse_config(to_json(c)) == c.
inline Json to_json(const RunConfig& cfg) {
  Json j;
  const ModelSpec& m = cfg.model;
  j["model"] = {{"id", m.id},         {"drift_source", to_string(m.drift_source)},
                {"r", m.r},           {"c", m.c},
                {"r1", m.r1},         {"r2", m.r2},
                {"c11", m.c11},       {"c12", m.c12},
                {"c21", m.c21},       {"c22", m.c22},
                {"gamma1", m.gamma1}, {"gamma2", m.gamma2},
                {"validate", m.validate}, {"table", m.table},
                {"table_lo", m.table_lo}, {"table_hi", m.table_hi}};
  const DomainSpec& d = cfg.domain;
  j["domain"] = {{"kind", d.kind},   {"a", d.a},         {"b", d.b},
                 {"x_min", d.x_min}, {"x_max", d.x_max}, {"y_min", d.y_min},
                 {"y_max", d.y_max}, {"corner_radius", d.corner_radius}, {"cutoff_m", d.cutoff_m}};
  const SimulationConfig& e = cfg.engine;
  Json engine = {{"N", e.N},
                 {"m", d.cutoff_m},
                 {"dt", e.dt},
                 {"burn_in", e.burn_in},
                 {"sample_horizon", e.sample_horizon},
                 {"seed", e.seed},
                 {"hit_test", e.hit_test == HitTest::CrossingOnly ? "crossing_only" : "bridge_corrected"},
                 {"snapshot_stride", e.snapshot_stride},
                 {"threads", e.threads},
                 {"batches", e.batches},
                 {"bins", e.bins}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, UniformOther>) {
          engine["jump_policy"] = "uniform_other";
        } else if constexpr (std::is_same_v<P, FixedPoint>) {
          engine["jump_policy"] = {{"kind", "fixed_point"}, {"x", detail::coords(p.point)}};
        } else {
          const int dim = p.box.lo[1] == 0.0 && p.box.hi[1] == 0.0 ? 1 : 2;
          engine["jump_policy"] = {{"kind", "fixed_uniform"},
                                   {"lo", detail::box_side(p.box.lo, dim)},
                                   {"hi", detail::box_side(p.box.hi, dim)}};
        }
      },
      e.jump_policy);
  std::visit(
      [&](const auto& in) {
        using I = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<I, UniformInterior>) {
          engine["initial"] = "uniform_interior";
        } else if constexpr (std::is_same_v<I, StartAt>) {
          engine["initial"] = {{"kind", "point"}, {"x", detail::coords(in.x0)}};
        } else {
          Json pts = Json::array();
          for (const auto& p : in.points) pts.push_back(detail::coords(p));
          engine["initial"] = {{"kind", "list"}, {"points", pts}};
        }
      },
      e.initial);
  j["engine"] = engine;
  j["output"] = {{"directory", cfg.output.directory},
                 {"formats", cfg.output.formats},
                 {"compare", cfg.output.compare},
                 {"snapshot", cfg.output.snapshot}};
  j["oracle"] = {{"grid_n", cfg.oracle.grid_n}};
  const CouplingSpec& c = cfg.coupling;
  j["coupling"] = {{"a", c.a}, {"dt", c.dt}, {"horizon", c.horizon}, {"n_paths", c.n_paths}, {"q_grid_n", c.q_grid_n}};
  if (c.Q) j["coupling"]["Q"] = *c.Q;
  if (c.x0) j["coupling"]["x0"] = *c.x0;
  if (cfg.has_sweep) {
    Json s = Json::object();
    for (const auto& axis : cfg.sweep) {
      std::string key;
      for (const auto& p : axis.parameters) key += (key.empty() ? "" : "=") + p;
      s[key] = axis.values;
    }
    j["sweep"] = s;
  }
  return j;
}

inline DriftModel build_model(const ModelSpec& m) {
  if (m.id == "brownian") return DriftModel(BrownianMotion{});
  if (m.id == "wright_fisher") return DriftModel(WrightFisher{m.drift_source});
  if (m.id == "logistic") {
    if (!(m.r >= 0.0 && m.c >= 0.0)) throw ConfigError("model.r and model.c must be >= 0");
    return DriftModel(LogisticFeller{m.r, m.c, m.drift_source});
  }
  if (m.id == "lotka_volterra") {
    LotkaVolterra lv{m.r1, m.r2, m.c11, m.c12, m.c21, m.c22, m.gamma1, m.gamma2};
    if (m.validate) lv.validate_weak_cooperative();
    return DriftModel(lv);
  }
  if (m.id == "tabulated") {
    if (m.table.size() < 2) throw ConfigError("model.table needs at least two values");
    if (!(m.table_lo < m.table_hi)) throw ConfigError("model.table_lo must be < model.table_hi");
    return DriftModel(TabulatedDrift{GridFunction{m.table_lo, m.table_hi, m.table}});
  }
  throw ConfigError("model.id required");
}

inline std::optional<CutoffFamily> cutoff_family(const std::string& model_id) {
  if (model_id == "wright_fisher") return CutoffFamily::WrightFisher;
  if (model_id == "logistic") return CutoffFamily::Logistic;
  if (model_id == "lotka_volterra") return CutoffFamily::LotkaVolterra;
  return std::nullopt;
}

inline Domain build_domain(const DomainSpec& d, const ModelSpec& model) {
  if (d.kind == "interval") return Interval{d.a, d.b};
  if (d.kind == "rounded_rectangle") return RoundedRectangle{d.x_min, d.x_max, d.y_min, d.y_max, d.corner_radius};
  if (d.kind == "cutoff") {
    const auto family = cutoff_family(model.id);
    if (!family) throw ConfigError("domain.kind cutoff has no family for model " + model.id);
    return cutoff(*family, d.cutoff_m);
  }
  throw ConfigError("domain.kind must be interval, rounded_rectangle or cutoff");
}

/// Validates every table against its module's constraints.
inline void validate(const RunConfig& cfg) {
  cfg.engine.validate();
  const DriftModel model = build_model(cfg.model);
  const Domain domain = build_domain(cfg.domain, cfg.model);
  if (model.dimension() != domain.dimension()) throw ConfigError("model and domain dimensions differ");
}

/// Sets a dotted parameter path in a raw configuration document.
inline void set_parameter(Json& root, const std::string& path, double value) {
  const auto dot = path.find('.');
  const std::string table = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  if (!root.contains(table)) root[table] = Json::object();
  static const std::set<std::string> integer_keys{"N", "m", "seed", "snapshot_stride", "threads", "batches",
                                                   "bins", "cutoff_m"};
  if (integer_keys.count(key)) {
    if (value != std::floor(value)) throw ConfigError("sweep value for " + path + " must be an integer");
    if (key == "seed") {
      root[table][key] = static_cast<std::uint64_t>(value);
    } else {
      root[table][key] = static_cast<std::int64_t>(value);
    }
  } else {
    root[table][key] = value;
  }
}

}  // namespace fvqsd
