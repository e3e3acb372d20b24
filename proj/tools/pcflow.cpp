// pcflow: run, list, describe and validate flow scenarios.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "pcf/cli.hpp"
#include "pcf/errors.hpp"

namespace {

pcf::Scenario resolve(const std::string& name, const std::string& config) {
  if (!config.empty()) return pcf::load_config(config);
  if (name.empty()) throw pcf::ConfigError("config", "give a scenario name or --config PATH");
  return pcf::bundled_scenario(name);
}

int report(const std::exception& e) {
  std::cerr << pcf::error_json(e) << "\n";
  if (dynamic_cast<const pcf::ConfigError*>(&e) || dynamic_cast<const pcf::UnknownScenario*>(&e))
    return pcf::kExitConfig;
  if (dynamic_cast<const pcf::IoError*>(&e)) return pcf::kExitIo;
  return pcf::kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-Calabi flow simulator"};
  app.require_subcommand(1);

  std::string name, config, batch, out = "runs";
  std::optional<std::uint64_t> seed;
  int threads = 1;

  auto* run = app.add_subcommand("run", "Run a bundled scenario, a config file or a batch");
  run->add_option("scenario", name, "Bundled scenario name");
  run->add_option("--config", config, "INI config file");
  run->add_option("--batch", batch, "File listing configs or scenario names, one per line");
  run->add_option("--out", out, "Output directory (a batch writes one subdirectory per scenario)");
  run->add_option("--seed", seed, "Seed of the random initial potential");
  run->add_option("--threads", threads, "Concurrent scenarios in a batch")->check(CLI::PositiveNumber);

  app.add_subcommand("list", "List the bundled scenarios");

  auto* desc = app.add_subcommand("describe", "Show what a bundled scenario checks and its config");
  desc->add_option("scenario", name, "Bundled scenario name")->required();

  auto* val = app.add_subcommand("validate", "Parse and validate a config without running it");
  val->add_option("scenario", name, "Bundled scenario name");
  val->add_option("--config", config, "INI config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pcf::kExitConfig;
  }

  try {
    if (app.got_subcommand("list")) {
      std::cout << pcf::list_scenarios();
      return pcf::kExitOk;
    }
    if (app.got_subcommand("describe")) {
      std::cout << pcf::describe(name);
      return pcf::kExitOk;
    }
    if (app.got_subcommand("validate")) {
      const auto s = resolve(name, config);
      std::cout << pcf::serialize_config(s);
      return pcf::kExitOk;
    }
    if (!batch.empty()) {
      auto scenarios = pcf::load_batch(batch);
      if (seed)
        for (auto& s : scenarios) pcf::apply_seed(s, *seed);
      return pcf::run_batch(scenarios, out, threads, std::cerr);
    }
    auto s = resolve(name, config);
    if (seed) pcf::apply_seed(s, *seed);
    const int code = pcf::run_scenario(s, out, std::cerr);
    if (code == pcf::kExitOk) std::cout << "wrote " << out << "\n";
    return code;
  } catch (const std::exception& e) {
    return report(e);
  }
}
