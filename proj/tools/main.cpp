#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-task Pareto subspace experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 1;

  for (const char* name : {"toy-sweep", "toy-baseline", "mlp-pml", "ablation-grid", "subspace-eval", "hypervolume"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--out", out, "output root (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  nlohmann::json config;
  pml::cli::RunOptions options;
  std::string out_root = "results";
  try {
    config = pml::cli::load_config(config_path);
    if (!config.is_object()) throw pml::cli::ConfigError("config must be a JSON object");
    options.seed = seed ? *seed : config.value("seed", std::uint64_t{0});
    out_root = out ? *out : config.value("out", out_root);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  options.jobs = jobs;

  std::string message;
  const int code = pml::cli::run_command(experiment, config, options, out_root, message);
  if (code == 0) {
    if (!message.empty()) std::cout << message << "\n";
  } else {
    std::cerr << message << "\n";
  }
  return code;
}
