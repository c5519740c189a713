// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

#include "latentaug/harness.hpp"

namespace latentaug {

namespace {

using Params = nn::ModelParams<double>;

Dataset load_split(const RunConfig& cfg, Split split) {
  const auto& dir = cfg.data_dir;
  switch (cfg.dataset) {
    case DatasetKind::Mnist:
      return split == Split::Train
                 ? load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", split)
                 : load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", split);
    case DatasetKind::Cifar10: {
      std::vector<std::filesystem::path> files;
      if (split == Split::Train) {
        for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
      } else {
        files.push_back(dir / "test_batch.bin");
      }
      return load_cifar10_bin(files, split);
    }
    case DatasetKind::Blobs:
      return split == Split::Train
                 ? gen_blobs(cfg.blobs_n, cfg.blobs_classes, cfg.blobs_dim, cfg.blobs_spread, cfg.blobs_seed, split)
                 : gen_blobs(cfg.blobs_test_n, cfg.blobs_classes, cfg.blobs_dim, cfg.blobs_spread,
                             cfg.blobs_seed + 0x7E57, split);
  }
  throw ConfigError("unknown dataset");
}

EmConfig em_config(const RunConfig& cfg, const std::optional<ChannelStats>& stats) {
  EmConfig em;
  em.subset_size = cfg.K;
  em.sigma = cfg.sigma;
  em.fixed_pi = cfg.fixed_pi;
  em.weight_decay = cfg.weight_decay;
  em.final_op = cfg.final_op;
  em.cutout_frac = cfg.resolved_cutout_frac();
  em.mix_labels = cfg.mix_labels;
  em.standardization = stats;
  switch (cfg.method) {
    case Method::UbsLimit:
      em.mode = WeightMode::UbsLimit;
      break;
    case Method::UniformLimit:
      em.mode = WeightMode::UniformLimit;
      break;
    default:
      em.mode = WeightMode::Latent;
  }
  return em;
}

// One plain SGD step on single views (random-policy baseline / no augmentation).
StepMetrics plain_step(Params& params, std::span<const Image> images, std::span<const SoftLabel> labels,
                       const PolicySet& policies, const EmConfig& em, bool augment, Rng& rng, double lr,
                       double pi_entropy) {
  const std::size_t batch = images.size();
  std::vector<Image> views;
  views.reserve(batch);
  Eigen::MatrixXd view_labels(labels.front().size(), static_cast<Eigen::Index>(batch));
  const std::uint64_t seed = rng();
  for (std::size_t b = 0; b < batch; ++b) {
    if (!augment) {
      views.push_back(images[b]);
      view_labels.col(static_cast<Eigen::Index>(b)) = labels[b];
      continue;
    }
    Rng sample_rng = derive_rng(seed, {b});
    std::size_t partner = b;
    if (batch > 1) {
      partner = static_cast<std::size_t>(uniform_int(sample_rng, 0, static_cast<int>(batch) - 2));
      if (partner >= b) ++partner;
    }
    const auto z = static_cast<std::size_t>(uniform_int(sample_rng, 0, static_cast<int>(policies.size()) - 1));
    auto view = apply_policy(images[b], labels[b], policies[z], sample_rng, MixPartner{&images[partner], &labels[partner]},
                             em.mix_labels);
    views.push_back(apply_final_op(view.image, em, sample_rng));
    view_labels.col(static_cast<Eigen::Index>(b)) = view.label;
  }
  const auto inputs = to_model_input<double>(views, em.standardization);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(batch), 1.0 / static_cast<double>(batch));
  auto lg = nn::weighted_loss_and_grad(params, inputs, view_labels, w);
  nn::sgd_update(params, lg.grad, lr, em.weight_decay);
  StepMetrics m;
  m.expected_loss = lg.loss;
  m.marginal_loss = lg.loss;
  m.lr = lr;
  m.pi_entropy = pi_entropy;
  return m;
}

}  // namespace

LoadedData load_data(const RunConfig& cfg) {
  LoadedData d;
  d.kind = cfg.dataset;
  d.train = load_split(cfg, Split::Train);
  d.test = load_split(cfg, Split::Test);
  if (cfg.subset_n > 0) d.train = d.train.head(cfg.subset_n);
  if (cfg.test_n > 0) d.test = d.test.head(cfg.test_n);
  d.train.validate();
  d.test.validate();
  if (d.train.size() == 0 || d.test.size() == 0) throw ConfigError("empty train or test split");
  if (!d.train.images.front().same_shape(d.test.images.front())) throw DimensionError("train and test image shapes differ");
  return d;
}

double evaluate_accuracy(const Params& params, const Dataset& data, const std::optional<ChannelStats>& stats) {
  constexpr std::size_t chunk = 1000;
  std::size_t correct = 0;
  const std::span<const Image> all(data.images);
  for (std::size_t at = 0; at < data.size(); at += chunk) {
    const std::size_t n = std::min(chunk, data.size() - at);
    const auto logp = nn::predict_log_proba(params, to_model_input<double>(all.subspan(at, n), stats));
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::Index arg = 0;
      logp.col(static_cast<Eigen::Index>(j)).maxCoeff(&arg);
      if (arg == data.labels[at + j]) ++correct;
    }
  }
  return data.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.size());
}

RunReport run_experiment(const RunConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, load_data(cfg));
}

RunReport run_experiment(const RunConfig& cfg, const LoadedData& data) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Dataset& train = data.train;
  const std::size_t n = train.size();

  nn::Architecture arch;
  arch.input_dim = train.images.front().size();
  arch.classes = train.classes;
  if (cfg.model == "mlp") arch.hidden = cfg.hidden;
  Rng init_rng = derive_rng(cfg.seed, {1});
  Params params = nn::init_model<double>(arch, init_rng);

  const PolicySet policies = build_policy_set();
  PiState pi = init_pi(policies.size(), cfg.window);
  if (!cfg.pi_init.empty()) {
    Eigen::VectorXd restored = load_pi(cfg.pi_init);
    if (static_cast<std::size_t>(restored.size()) != policies.size()) throw ConfigError("pi_init: snapshot must have 256 entries");
    if ((restored.array() < 0.0).any() || !(restored.sum() > 0.0)) throw ConfigError("pi_init: invalid probabilities");
    pi.pi = restored / restored.sum();
  }

  std::optional<ChannelStats> stats;
  if (cfg.standardize) stats = channel_stats(train.images);
  const EmConfig em = em_config(cfg, stats);

  std::vector<SoftLabel> labels;
  labels.reserve(n);
  for (int y : train.labels) labels.push_back(one_hot(train.classes, y));

  RunReport report;
  report.config = cfg;
  report.iterations_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = cfg.epochs * report.iterations_per_epoch;
  const nn::LrSchedule schedule{cfg.lr0, std::max<std::size_t>(total, 1)};
  const BatchPlan plan{cfg.batch_size, cfg.seed, cfg.epochs};

  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& idx : batches(n, plan, epoch)) {
      Rng rng = derive_rng(cfg.seed, {2, t});
      std::vector<Image> images;
      std::vector<SoftLabel> batch_labels;
      images.reserve(idx.size());
      for (auto i : idx) {
        images.push_back(baseline_preprocess(train.images[i], data.kind, rng));
        batch_labels.push_back(labels[i]);
      }
      const double lr = nn::cosine_lr(t, schedule);
      StepMetrics m;
      switch (cfg.method) {
        case Method::Latent:
        case Method::UbsLimit:
        case Method::UniformLimit:
          m = em_step(params, std::span<const Image>(images), std::span<const SoftLabel>(batch_labels), pi, policies,
                      em, rng, lr);
          break;
        case Method::RandomPolicy:
        case Method::NoAugment:
          m = plain_step(params, images, batch_labels, policies, em, cfg.method == Method::RandomPolicy, rng, lr,
                         entropy(pi.pi));
          break;
      }
      m.iteration = ++t;
      if (!params.all_finite() || !std::isfinite(m.expected_loss))
        throw NumericalError("non-finite parameters or loss at iteration " + std::to_string(t));
      report.steps.push_back(std::move(m));
    }
    report.epoch_accuracy.push_back(evaluate_accuracy(params, data.test, stats));
  }
  report.final_pi = pi.pi;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

GridReport run_ablation_grid(const RunConfig& base, const GridSpec& grid) {
  if (grid.values.empty() || grid.seeds.empty()) throw ConfigError("ablation grid must have values and seeds");
  base.validate();
  GridReport report{grid, base, {}};
  auto add = [&](std::string label, std::size_t k, double sigma, bool fixed) {
    report.cells.push_back(GridCell{std::move(label), k, sigma, fixed, {}, 0.0, 0.0});
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  switch (grid.kind) {
    case GridKind::SigmaByFixedPi:
      for (bool fixed : {true, false})
        for (double s : grid.values) add((fixed ? "fixed_sigma" : "unfixed_sigma") + num(s), base.K, s, fixed);
      break;
    case GridKind::SubsetSize:
      for (double k : grid.values) {
        if (k < 1 || k != std::floor(k)) throw ConfigError("K grid values must be positive integers");
        add("K" + num(k), static_cast<std::size_t>(k), base.sigma, base.fixed_pi);
      }
      break;
    case GridKind::Sigma:
      for (double s : grid.values) add("sigma" + num(s), base.K, s, base.fixed_pi);
      break;
  }
  const LoadedData data = load_data(base);
  for (auto& cell : report.cells) {
    for (auto seed : grid.seeds) {
      RunConfig cfg = base;
      cfg.K = cell.K;
      cfg.sigma = cell.sigma;
      cfg.fixed_pi = cell.fixed_pi;
      cfg.seed = seed;
      cfg.out_dir = base.out_dir / cell.label / ("seed" + std::to_string(seed));
      const RunReport run = run_experiment(cfg, data);
      emit_metrics(run, cfg.out_dir);
      cell.accuracies.push_back(run.epoch_accuracy.empty() ? 0.0 : run.epoch_accuracy.back());
    }
    const double count = static_cast<double>(cell.accuracies.size());
    cell.mean = std::accumulate(cell.accuracies.begin(), cell.accuracies.end(), 0.0) / count;
    double ss = 0.0;
    for (double a : cell.accuracies) ss += (a - cell.mean) * (a - cell.mean);
    cell.stddev = cell.accuracies.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  }
  return report;
}

double trailing_mean(const std::vector<double>& values, std::size_t end, std::size_t window) {
  if (end > values.size() || end == 0 || window == 0) throw DomainError("trailing_mean: empty window");
  const std::size_t begin = end > window ? end - window : 0;
  return std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(begin),
                         values.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
         static_cast<double>(end - begin);
}

}  // namespace latentaug
