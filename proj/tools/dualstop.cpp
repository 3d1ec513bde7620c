#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dualstop/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Randomized dual upper bounds for optimal stopping"};
  app.require_subcommand(1);

  std::string config_file;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  for (const auto& [name, help] : {std::pair{"value", "print Y*_0"},
                                   std::pair{"minimize", "solve the sample LP per randomizer, write table.csv"},
                                   std::pair{"profile", "objective and deviation curves over a grid, write profile.csv"},
                                   std::pair{"verify", "optimality characterization sweeps, write sweep.json"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_file, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--preset", preset, "stylized | pa1 | pa2 (overrides the config's preset)")
        ->check(CLI::IsMember({"stylized", "pa1", "pa2"}));
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    nlohmann::json j = nlohmann::json::object();
    std::filesystem::path base_dir = ".";
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      in >> j;
      const std::filesystem::path p(config_file);
      if (p.has_parent_path()) base_dir = p.parent_path();
    } else if (preset.empty() && command != "verify") {
      std::cerr << "config error: give --config or --preset\n";
      return 2;
    }
    if (!preset.empty()) j["preset"] = preset;
    if (seed) j["seed"] = *seed;
    if (!out_dir.empty()) j["out"] = out_dir;
    const auto config = dualstop::ExperimentConfig::from_json(j, base_dir);
    return dualstop::run_command(command, config, std::cout, std::cerr);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const dualstop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const dualstop::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
