// Command line front end: ergolab <command> --config <path> --out <dir> [--seeds ...] [--threads n]

#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "ergolab/config.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/experiments.hpp"

namespace {

constexpr int kExitFailedChecks = 1;
constexpr int kExitConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random hyperbolic toral dynamics experiments"};
  std::string command, config_path, out_dir, seeds;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("command", command, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(ergolab::command_names()));
  app.add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Root directory for run output")->required();
  app.add_option("--seeds", seeds, "Comma-separated seeds, overriding the config");
  app.add_option("--threads", threads, "Worker threads for seed shards")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  std::string run_id;
  try {
    auto cfg = ergolab::ExperimentConfig::load(config_path, command);
    if (!seeds.empty()) cfg.override_seeds(ergolab::parse_seed_list(seeds));
    const auto result = ergolab::run_experiment(cfg, {out_dir, threads});
    run_id = result.run_id;
    for (const auto& c : result.checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    std::cout << "run " << result.run_id << " -> " << result.dir.string() << '\n';
    return result.all_pass() ? 0 : kExitFailedChecks;
  } catch (const ergolab::ConfigError& e) {
    std::cerr << "ergolab " << command << ": config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ergolab::Error& e) {
    std::cerr << "ergolab " << command << " (config " << config_path << "): " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "ergolab " << command << ": " << e.what() << '\n';
    return kExitConfig;
  }
}
