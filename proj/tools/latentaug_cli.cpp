// SPDX-License-Identifier: Apache-2.0
//
// latentaug run | ablate | check
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include "latentaug/checks.hpp"
#include "latentaug/harness.hpp"

namespace {

using namespace latentaug;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// `--key value` for every RunConfig key.
struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& [key, value] : RunConfig{}.to_entries()) {
      values[key];
      app.add_option("--" + key, values[key], "default: " + (value.empty() ? std::string("(empty)") : value));
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
    for (const auto& [key, value] : values)
      if (!value.empty()) cfg.set(key, value);
    if (const char* root = std::getenv("LATENTAUG_OUT"); root && *root && cfg.out_dir.is_relative())
      cfg.out_dir = std::filesystem::path(root) / cfg.out_dir;
    cfg.validate();
    return cfg;
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    RunConfig probe;
    probe.set("sigma", item);  // reuse the numeric parser, which accepts "inf"
    out.push_back(probe.sigma);
  }
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

int run_command(const Overrides& overrides, bool plots) {
  const RunConfig cfg = overrides.resolve();
  const RunReport report = run_experiment(cfg);
  emit_metrics(report, cfg.out_dir);
  if (plots) emit_plots(report, cfg.out_dir);
  std::fprintf(stderr, "%zu iterations in %.1f s, final test accuracy %.4f, output in %s\n", report.steps.size(),
               report.wall_seconds, report.epoch_accuracy.empty() ? 0.0 : report.epoch_accuracy.back(),
               cfg.out_dir.string().c_str());
  return 0;
}

int ablate_command(const Overrides& overrides, const std::string& grid, const std::string& values,
                   const std::string& seeds, bool plots) {
  const RunConfig base = overrides.resolve();
  GridSpec spec;
  if (grid == "sigma_fixed_pi") spec.kind = GridKind::SigmaByFixedPi;
  else if (grid == "K") spec.kind = GridKind::SubsetSize;
  else if (grid == "sigma") spec.kind = GridKind::Sigma;
  else throw ConfigError("--grid must be sigma_fixed_pi, K or sigma");
  spec.values = parse_list(values);
  spec.seeds.clear();
  for (double s : parse_list(seeds)) {
    if (s < 0 || s != std::floor(s)) throw ConfigError("seeds must be non-negative integers");
    spec.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  const GridReport report = run_ablation_grid(base, spec);
  emit_grid(report, base.out_dir);
  if (plots) emit_plots(report, base.out_dir);
  for (const auto& cell : report.cells)
    std::fprintf(stderr, "%-22s mean %.4f std %.4f\n", cell.label.c_str(), cell.mean, cell.stddev);
  return 0;
}

int check_command(const std::string& fixtures, const std::string& scratch) {
  const auto results = checks::run_all(fixtures, scratch);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.passed;
  }
  return all ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent augmentation-policy experiment runner"};
  app.require_subcommand(1);

  Overrides run_overrides;
  bool run_plots = true;
  auto* run = app.add_subcommand("run", "train one configuration and write metrics");
  run_overrides.attach(*run);
  run->add_flag("--plots,!--no-plots", run_plots, "write SVG charts");

  Overrides grid_overrides;
  std::string grid_kind = "sigma_fixed_pi";
  std::string grid_values = "0,1";
  std::string grid_seeds = "0";
  bool grid_plots = true;
  auto* ablate = app.add_subcommand("ablate", "run a grid of configurations over several seeds");
  grid_overrides.attach(*ablate);
  ablate->add_option("--grid", grid_kind, "sigma_fixed_pi | K | sigma")->capture_default_str();
  ablate->add_option("--values", grid_values, "comma-separated grid values")->capture_default_str();
  ablate->add_option("--seeds", grid_seeds, "comma-separated seeds")->capture_default_str();
  ablate->add_flag("--plots,!--no-plots", grid_plots, "write SVG charts");

  std::string fixtures;
  std::string scratch = (std::filesystem::temp_directory_path() / "latentaug-check").string();
  auto* check = app.add_subcommand("check", "run the property and oracle suites");
  check->add_option("--fixtures", fixtures, "directory with loader fixtures (generated when omitted)");
  check->add_option("--scratch", scratch, "scratch directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_command(run_overrides, run_plots);
    if (*ablate) return ablate_command(grid_overrides, grid_kind, grid_values, grid_seeds, grid_plots);
    if (*check) return check_command(fixtures, scratch);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
