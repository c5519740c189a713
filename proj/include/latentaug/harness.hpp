// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latentaug/data.hpp"
#include "latentaug/latent_em.hpp"

namespace latentaug {

enum class Method { Latent, UbsLimit, UniformLimit, RandomPolicy, NoAugment };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Experiment inputs. Every field maps to a `key=value` config entry and a
/// `--key value` flag of the same name.
struct RunConfig {
  // dataset
  DatasetKind dataset = DatasetKind::Blobs;
  std::filesystem::path data_dir;
  std::size_t subset_n = 10000;  // first n training samples, 0 = all
  std::size_t test_n = 0;        // first n test samples, 0 = all
  std::size_t blobs_n = 1000;
  std::size_t blobs_test_n = 500;
  int blobs_classes = 10;
  int blobs_dim = 64;
  double blobs_spread = 0.3;
  std::uint64_t blobs_seed = 7;
  bool standardize = false;

  // model
  std::string model = "mlp";  // mlp | softmax
  std::vector<Eigen::Index> hidden = {128, 128};

  // method
  Method method = Method::Latent;
  std::size_t K = 6;
  double sigma = 1.0;
  bool fixed_pi = false;
  std::size_t window = 10;
  bool mix_labels = true;
  FinalOp final_op = FinalOp::Cutout;
  double cutout_frac = -1.0;  // < 0 picks the dataset default
  std::filesystem::path pi_init;  // optional pi snapshot to restore

  // optimization
  double lr0 = 0.1;
  double weight_decay = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;

  std::filesystem::path out_dir = "runs/default";

  /// Throws ConfigError on any invalid field.
  void validate() const;
  /// Cutout side fraction after resolving the dataset default.
  double resolved_cutout_frac() const;
  /// Ordered key/value echo; parsing it back reproduces the config.
  std::vector<std::pair<std::string, std::string>> to_entries() const;
  void set(const std::string& key, const std::string& value);
};

/// Flat `key=value` text; blank lines and `#` comments are skipped.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});
std::string config_to_text(const RunConfig& cfg);

struct RunReport {
  RunConfig config;
  std::vector<StepMetrics> steps;
  std::vector<double> epoch_accuracy;
  Eigen::VectorXd final_pi;
  double wall_seconds = 0.0;
  std::size_t iterations_per_epoch = 0;
};

/// Training data, test data and the dataset kind used by a run.
struct LoadedData {
  Dataset train;
  Dataset test;
  DatasetKind kind = DatasetKind::Blobs;
};

LoadedData load_data(const RunConfig& cfg);

RunReport run_experiment(const RunConfig& cfg);
/// Same as run_experiment on already-loaded data.
RunReport run_experiment(const RunConfig& cfg, const LoadedData& data);

/// Argmax accuracy on un-augmented data.
double evaluate_accuracy(const nn::ModelParams<double>& params, const Dataset& data,
                         const std::optional<ChannelStats>& stats = {});

enum class GridKind {
  SigmaByFixedPi,  // {sigma list} x {fixed, unfixed}
  SubsetSize,      // K list
  Sigma,           // sigma list
};

struct GridSpec {
  GridKind kind = GridKind::Sigma;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds = {0};
};

struct GridCell {
  std::string label;
  std::size_t K = 6;
  double sigma = 1.0;
  bool fixed_pi = false;
  std::vector<double> accuracies;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;
};

struct GridReport {
  GridSpec spec;
  RunConfig base;
  std::vector<GridCell> cells;
};

GridReport run_ablation_grid(const RunConfig& base, const GridSpec& grid);

/// metrics.csv, step_metrics.jsonl, summary.json, pi_final.txt and config.txt.
void emit_metrics(const RunReport& report, const std::filesystem::path& out_dir);
/// grid.csv and grid.json.
void emit_grid(const GridReport& report, const std::filesystem::path& out_dir);

/// Series of one SVG line chart.
struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Optional tick labels replacing numeric x ticks (one per x position).
  std::vector<std::pair<double, std::string>> x_ticks;
};

/// Self-contained SVG document. Larger y values map to smaller SVG y.
std::string render_line_chart(const ChartSpec& chart);

/// loss.svg and accuracy.svg for a run.
std::vector<std::filesystem::path> emit_plots(const RunReport& report, const std::filesystem::path& out_dir);
/// accuracy_vs_K.svg or accuracy_vs_sigma.svg for a grid.
std::vector<std::filesystem::path> emit_plots(const GridReport& report, const std::filesystem::path& out_dir);

/// Trailing moving average of `values` over `window` entries ending at `end` (exclusive).
double trailing_mean(const std::vector<double>& values, std::size_t end, std::size_t window);

}  // namespace latentaug
