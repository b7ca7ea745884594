#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsense/cli/runner.hpp"

namespace {

int report(const qsense::cli::ConfigError& e) {
  for (const auto& i : e.issues())
    std::cerr << "error: " << (i.path.empty() ? "<root>" : i.path) << ": " << i.message << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qsense::cli;
  CLI::App app{"qsense: quantum sensing experiment runner"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "override the output directory");

  auto* list = app.add_subcommand("list", "Print the experiment registry and parameter schemas");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_path, "config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      std::cout << list_experiments().dump(2) << "\n";
      return 0;
    }
    if (validate->parsed()) {
      const auto cfg = load_config(validate_path);
      std::cout << "ok: " << cfg.experiment << "\n";
      return 0;
    }
    auto cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const auto result = run_experiment(cfg);
    for (const auto& f : result.manifest.outputs)
      std::cout << (result.output_dir / f.name).string() << "  " << f.sha256 << "\n";
    std::cout << (result.output_dir / "manifest.json").string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
