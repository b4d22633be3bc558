#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fvqsd/config.hpp"
#include "fvqsd/experiment.hpp"

using namespace fvqsd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fvqsd_test_config_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Json small_brownian(const fs::path& dir) {
  Json j = Json::parse(R"({
    "model": {"id": "brownian"},
    "domain": {"kind": "interval", "a": 0.0, "b": 1.0},
    "engine": {"N": 50, "dt": 1e-3, "burn_in": 0.1, "sample_horizon": 0.2, "seed": 11, "bins": 20}
  })");
  j["output"] = {{"directory", dir.string()}};
  return j;
}

void expect_config_error(const Json& j, const std::string& fragment) {
  try {
    parse_config(j);
    FAIL() << "expected ConfigError containing '" << fragment << "'";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, Defaults) {
  const RunConfig c = parse_config(Json::parse(R"({"model": {"id": "wright_fisher"}})"));
  EXPECT_EQ(c.model.id, "wright_fisher");
  EXPECT_EQ(c.model.drift_source, DriftSource::ItoConsistent);
  EXPECT_EQ(c.domain.kind, "cutoff");
  EXPECT_EQ(c.domain.cutoff_m, 100);
  EXPECT_FALSE(c.has_sweep);
  EXPECT_NO_THROW(validate(c));
}

TEST(ParseConfig, Errors) {
  expect_config_error(Json::parse(R"({"engine": {"N": 10}})"), "model.id required");
  expect_config_error(Json::parse(R"({"model": {"r": 1}})"), "model.id required");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian", "rr": 1}})"), "unknown key model.rr");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian"}, "extra": {}})"), "unknown key");
  expect_config_error(Json::parse(R"({"model": {"id": "nope"}})"), "model.id");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian"}, "engine": {"N": 1}})"), "engine.N");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian"}, "engine": {"dt": "x"}})"), "engine.dt");
  expect_config_error(Json::parse(R"({"model": {"id": "logistic"}, "engine": {"m": 10},
                                       "domain": {"cutoff_m": 20}})"),
                      "engine.m disagrees");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian"}, "sweep": {}})"), "sweep is empty");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian"}, "sweep": {"engine.N": []}})"), "is empty");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian"}, "sweep": {"output.x": [1]}})"),
                      "sweep parameter");
  expect_config_error(Json::parse(R"({"model": {"id": "brownian"}, "oracle": {"grid_n": 10}})"), "oracle.grid_n");
}

TEST(ParseConfig, EngineMIsCutoffAlias) {
  const RunConfig c = parse_config(Json::parse(R"({"model": {"id": "logistic"}, "engine": {"m": 20}})"));
  EXPECT_EQ(c.domain.cutoff_m, 20);
  const RunConfig same = parse_config(
      Json::parse(R"({"model": {"id": "logistic"}, "engine": {"m": 20}, "domain": {"cutoff_m": 20}})"));
  EXPECT_EQ(c, same);
}

TEST(Validate, LotkaVolterraCondition) {
  RunConfig c = parse_config(Json::parse(R"({"model": {"id": "lotka_volterra", "c12": 1.5, "c21": 1.5}})"));
  EXPECT_THROW(validate(c), ConfigError);
  c.model.validate = false;
  EXPECT_NO_THROW(validate(c));
}

TEST(Validate, DimensionMismatch) {
  const RunConfig c = parse_config(Json::parse(R"({"model": {"id": "brownian"},
      "domain": {"kind": "rounded_rectangle", "corner_radius": 0.1}})"));
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(RoundTrip, ParseOfSerializedIsIdentity) {
  const std::vector<std::string> docs{
      R"({"model": {"id": "wright_fisher"}})",
      R"({"model": {"id": "logistic", "r": 2, "c": 0.5, "drift_source": "paper_literal"},
          "engine": {"m": 30, "N": 64, "hit_test": "bridge_corrected", "threads": 2, "seed": 99,
                     "jump_policy": {"kind": "fixed_point", "x": [1.0]},
                     "initial": {"kind": "point", "x": [2.0]}},
          "output": {"compare": true, "snapshot": true, "formats": ["json"]},
          "oracle": {"grid_n": 5000},
          "coupling": {"a": 0.05, "Q": 3.0, "x0": [1.5]}})",
      R"({"model": {"id": "lotka_volterra", "c12": -0.3, "c21": -0.3},
          "domain": {"cutoff_m": 20},
          "sweep": {"model.c12=model.c21": [-0.1, -0.3]}})",
      R"({"model": {"id": "tabulated", "table": [0, 1, -1], "table_lo": 0, "table_hi": 2},
          "domain": {"kind": "interval", "a": 0, "b": 2},
          "engine": {"initial": {"kind": "list", "points": [[0.5], [1.5]]}, "N": 2}})",
  };
  for (const auto& d : docs) {
    const RunConfig c = parse_config(Json::parse(d));
    EXPECT_EQ(parse_config(to_json(c)), c) << d;
  }
}

TEST(SetParameter, WritesTypedValues) {
  Json j = Json::parse(R"({"model": {"id": "logistic"}})");
  set_parameter(j, "engine.N", 300);
  set_parameter(j, "model.r", 1.5);
  set_parameter(j, "engine.seed", 7);
  EXPECT_TRUE(j["engine"]["N"].is_number_integer());
  EXPECT_TRUE(j["engine"]["seed"].is_number_unsigned());
  const RunConfig c = parse_config(j);
  EXPECT_EQ(c.engine.N, 300);
  EXPECT_EQ(c.model.r, 1.5);
  EXPECT_EQ(c.engine.seed, 7u);
  EXPECT_THROW(set_parameter(j, "engine.N", 2.5), ConfigError);
}

TEST(SweepParse, TiedParameters) {
  const RunConfig c = parse_config(Json::parse(R"({"model": {"id": "lotka_volterra"},
      "sweep": {"model.c12=model.c21": [-0.1, -0.5], "engine.N": [10, 20, 30]}})"));
  ASSERT_EQ(c.sweep.size(), 2u);
  std::size_t tied = 0;
  for (const auto& a : c.sweep) {
    if (a.parameters.size() == 2) {
      ++tied;
      EXPECT_EQ(a.parameters[0], "model.c12");
      EXPECT_EQ(a.parameters[1], "model.c21");
    }
  }
  EXPECT_EQ(tied, 1u);
}

TEST(Commands, RunWritesArtifacts) {
  const fs::path dir = scratch("run");
  Json j = small_brownian(dir);
  j["output"]["compare"] = true;
  j["output"]["snapshot"] = true;
  const RunConfig c = parse_config(j);
  std::ostringstream log;
  EXPECT_EQ(run_command(c, log), kOk);
  for (const char* f : {"empirical.csv", "mass_loss.csv", "snapshot.csv", "summary.json", "comparison.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "empirical_z.csv"));
  const Json summary = load_json(dir / "summary.json");
  EXPECT_EQ(parse_config(summary.at("config")), c);
  EXPECT_EQ(summary.at("seed").get<std::uint64_t>(), 11u);
  for (const char* k : {"lambda_hat", "jump_rate", "mean_phi", "wall_time_s", "tightness"}) {
    EXPECT_TRUE(summary.contains(k)) << k;
  }
  const Json cmp = load_json(dir / "comparison.json");
  EXPECT_TRUE(cmp.contains("w1"));
  EXPECT_NE(log.str().find("run finished"), std::string::npos);
}

TEST(Commands, WrightFisherWritesPushForward) {
  const fs::path dir = scratch("wf");
  Json j = Json::parse(R"({"model": {"id": "wright_fisher"},
      "engine": {"N": 20, "dt": 1e-3, "burn_in": 0.05, "sample_horizon": 0.05, "bins": 10}})");
  j["output"]["directory"] = dir.string();
  EXPECT_EQ(run_command(parse_config(j)), kOk);
  const std::string z = slurp(dir / "empirical_z.csv");
  EXPECT_EQ(z.rfind("z,weight\n", 0), 0u);
}

TEST(Commands, SweepWritesIndexAndReproducibleCells) {
  const fs::path dir = scratch("sweep");
  Json j = small_brownian(dir);
  j["sweep"] = {{"engine.N", {20, 40, 60}}};
  std::ostringstream log;
  EXPECT_EQ(sweep_command(j, log), kOk);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(dir / ("run_" + std::to_string(i)) / "summary.json"));
  const std::string index = slurp(dir / "index.csv");
  EXPECT_EQ(index.rfind("run,engine.N,status,lambda_hat,mean_phi,directory\n", 0), 0u);
  EXPECT_EQ(std::count(index.begin(), index.end(), '\n'), 4);

  // Cell 2 in isolation: N=60, seed = base + 2.
  const fs::path alone = scratch("sweep_alone");
  Json k = small_brownian(alone);
  k["engine"]["N"] = 60;
  k["engine"]["seed"] = 13;
  EXPECT_EQ(run_command(parse_config(k), log), kOk);
  EXPECT_EQ(slurp(alone / "empirical.csv"), slurp(dir / "run_2" / "empirical.csv"));
}

TEST(Commands, SweepRecordsFailedCells) {
  const fs::path dir = scratch("sweep_fail");
  Json j = Json::parse(R"({"model": {"id": "lotka_volterra"}, "domain": {"cutoff_m": 5},
      "engine": {"N": 10, "dt": 1e-3, "burn_in": 0.02, "sample_horizon": 0.02, "bins": 5},
      "sweep": {"model.c12=model.c21": [-0.1, 2.0]}})");
  j["output"] = {{"directory", dir.string()}};
  std::ostringstream log;
  EXPECT_EQ(sweep_command(j, log), kRuntimeFailure);
  const std::string index = slurp(dir / "index.csv");
  EXPECT_NE(index.find("0,-0.1,ok"), std::string::npos) << index;
  EXPECT_NE(index.find("1,2.0,failed"), std::string::npos) << index;
}

TEST(Commands, OracleAndCoupling) {
  const fs::path dir = scratch("oracle");
  Json j = small_brownian(dir);
  j["coupling"] = {{"a", 0.1}, {"n_paths", 50}, {"horizon", 0.2}};
  const RunConfig c = parse_config(j);
  std::ostringstream log;
  EXPECT_EQ(oracle_command(c, log), kOk);
  const Json o = load_json(dir / "oracle.json");
  EXPECT_NEAR(o.at("lambda").get<double>(), 4.9348, 1e-3);
  EXPECT_EQ(slurp(dir / "oracle.csv").rfind("x,density\n", 0), 0u);
  EXPECT_EQ(couple_check_command(c, log), kOk);
  const Json r = load_json(dir / "coupling.json");
  EXPECT_EQ(r.at("n_paths").get<int>(), 50);
  EXPECT_EQ(r.at("Q").get<double>(), 0.0);
}

#ifdef FVQSD_CLI_PATH
int cli(const std::string& args) {
  const int status = std::system((std::string(FVQSD_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump();
  return p;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(cli("run " + write_config(dir, small_brownian(dir / "out")).string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  EXPECT_EQ(cli("run " + write_config(dir, Json::parse(R"({"engine": {"N": 10}})")).string()), 2);
  EXPECT_EQ(cli("sweep " + write_config(dir, Json::parse(R"({"model": {"id": "brownian"}, "sweep": {}})")).string()),
            2);
  EXPECT_EQ(cli("run " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(cli("bogus " + write_config(dir, small_brownian(dir / "out")).string()), 2);
  EXPECT_EQ(cli("--help"), 0);
}
#endif

}  // namespace
