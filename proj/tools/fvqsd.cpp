#include <iostream>
#include <string>

#include <boost/program_options.hpp>

#include "fvqsd/experiment.hpp"

namespace po = boost::program_options;

namespace {

constexpr const char* kUsage =
    "usage: fvqsd <command> <config.json> [-o DIR]\n"
    "commands:\n"
    "  run           simulate one configuration\n"
    "  sweep         run the cartesian product of the sweep table\n"
    "  oracle        finite-difference reference for a 1D model\n"
    "  couple-check  compare boundary distance with a reflected process\n";

int dispatch(const std::string& command, const fvqsd::Json& raw) {
  if (command == "sweep") return fvqsd::sweep_command(raw);
  const fvqsd::RunConfig cfg = fvqsd::parse_config(raw);
  if (command == "run") return fvqsd::run_command(cfg);
  if (command == "oracle") return fvqsd::oracle_command(cfg);
  if (command == "couple-check") return fvqsd::couple_check_command(cfg);
  throw fvqsd::ConfigError("unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  std::string command;
  std::string config_path;
  std::string out_dir;

  po::options_description visible("options");
  visible.add_options()("help,h", "show usage")("output,o", po::value(&out_dir), "output directory override");
  po::options_description all;
  all.add(visible).add_options()("command", po::value(&command))("config", po::value(&config_path));
  po::positional_options_description positional;
  positional.add("command", 1).add("config", 1);

  try {
    po::variables_map vm;
    po::store(po::command_line_parser(argc, argv).options(all).positional(positional).run(), vm);
    po::notify(vm);
    if (vm.count("help")) {
      std::cout << kUsage << visible;
      return fvqsd::kOk;
    }
    if (command.empty() || config_path.empty()) {
      std::cerr << kUsage;
      return fvqsd::kConfigError;
    }
    fvqsd::Json raw = fvqsd::load_json(config_path);
    if (!raw.is_object()) throw fvqsd::ConfigError("configuration must be a JSON object");
    if (!out_dir.empty()) raw["output"]["directory"] = out_dir;
    return dispatch(command, raw);
  } catch (const po::error& e) {
    std::cerr << "error: " << e.what() << "\n" << kUsage;
    return fvqsd::kConfigError;
  } catch (const fvqsd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fvqsd::kConfigError;
  } catch (const fvqsd::Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fvqsd::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fvqsd::kRuntimeFailure;
  }
}
