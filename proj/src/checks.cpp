// SPDX-License-Identifier: Apache-2.0
#include "latentaug/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "latentaug/harness.hpp"
#include "latentaug/io.hpp"

namespace latentaug::checks {

namespace {

using Clock = std::chrono::steady_clock;
using nn::Matrix;
using nn::ModelParams;

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Eigen::VectorXd random_simplex(Eigen::Index n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = expo(rng) + 1e-12;
  return v / v.sum();
}

ModelParams<double> random_params(const nn::Architecture& arch, Rng& rng) {
  auto params = nn::init_model<double>(arch, rng);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (auto& l : params.layers)
    for (auto& b : l.bias) b = normal(rng);
  return params;
}

// Central differences of f over the flat parameter vector.
Eigen::VectorXd numeric_gradient(const ModelParams<double>& params, double step,
                                 const std::function<double(const ModelParams<double>&)>& f) {
  const Eigen::VectorXd theta = nn::flatten(params);
  Eigen::VectorXd out(theta.size());
  ModelParams<double> probe = params;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd t = theta;
    t[i] = theta[i] + step;
    nn::assign_flat(probe, t);
    const double up = f(probe);
    t[i] = theta[i] - step;
    nn::assign_flat(probe, t);
    const double down = f(probe);
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

double relative_difference(const Eigen::VectorXd& a, const Eigen::VectorXd& reference) {
  const double scale = std::max(reference.norm(), 1e-300);
  return (a - reference).norm() / scale;
}

// Per-view losses -log P, B x K, straight from a forward pass.
Eigen::MatrixXd view_losses(const ModelParams<double>& params, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& labels, Eigen::Index batch, Eigen::Index k) {
  const Eigen::MatrixXd logp = nn::predict_log_proba(params, inputs);
  Eigen::MatrixXd out(batch, k);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index z = 0; z < k; ++z) out(b, z) = -labels.col(b * k + z).dot(logp.col(b * k + z));
  return out;
}

CheckResult limit_gradient(const std::string& name, double sigma, bool hardest, std::size_t trials,
                           std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  double worst = 0.0;
  std::size_t done = 0;
  while (done < trials) {
    nn::Architecture arch;
    arch.input_dim = uniform_int(rng, 3, 6);
    if (coin(rng)) arch.hidden = {uniform_int(rng, 3, 6)};
    arch.classes = uniform_int(rng, 2, 4);
    const Eigen::Index batch = uniform_int(rng, 1, 4);
    const Eigen::Index k = uniform_int(rng, 2, 5);
    const auto params = random_params(arch, rng);
    const Eigen::MatrixXd inputs = random_matrix(arch.input_dim, batch * k, rng);
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(arch.classes, batch * k);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const int y = uniform_int(rng, 0, static_cast<int>(arch.classes) - 1);
      for (Eigen::Index z = 0; z < k; ++z) labels(y, b * k + z) = 1.0;
    }
    const Eigen::MatrixXd losses = view_losses(params, inputs, labels, batch, k);
    if (hardest) {
      // Require a clear unique hardest view per sample.
      bool unique = true;
      for (Eigen::Index b = 0; b < batch; ++b) {
        Eigen::VectorXd row = losses.row(b).transpose();
        std::sort(row.begin(), row.end());
        if (row[k - 1] - row[k - 2] < 1e-3) unique = false;
      }
      if (!unique) continue;
    }
    SubsetDraw subset;
    for (Eigen::Index z = 0; z < k; ++z) subset.indices.push_back(static_cast<std::size_t>(z));
    const Eigen::VectorXd pi_subset = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(kPolicyCount));
    EmConfig cfg;
    cfg.subset_size = static_cast<std::size_t>(k);
    cfg.sigma = sigma;
    cfg.mode = WeightMode::Latent;
    const auto objective = latent_objective(params, inputs, labels, subset, pi_subset, cfg);

    auto reference = [&](const ModelParams<double>& p) {
      const Eigen::MatrixXd l = view_losses(p, inputs, labels, batch, k);
      return hardest ? l.rowwise().maxCoeff().mean() : l.rowwise().mean().mean();
    };
    const Eigen::VectorXd fd = numeric_gradient(params, 1e-5, reference);
    worst = std::max(worst, relative_difference(nn::flatten(objective.grad), fd));
    ++done;
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst <= 1e-5 && elapsed < 60.0;
  return {name, ok, fmt("max relative gradient difference %.3e (tol 1e-5), %.2f s", worst, elapsed)};
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

// Hand-built fixture contents.
constexpr int kIdxRows = 2;
constexpr int kIdxCols = 3;
constexpr unsigned char kIdxPixels[2][6] = {{0, 255, 128, 1, 64, 200}, {10, 20, 30, 40, 50, 60}};
constexpr unsigned char kIdxLabels[2] = {7, 3};
constexpr unsigned char kCifarLabels[2] = {2, 9};

unsigned char cifar_byte(int record, int channel, int planar_index) {
  return static_cast<unsigned char>((record * 37 + channel * 11 + planar_index * 3) % 256);
}

std::string idx_images(std::uint32_t magic) {
  std::string s;
  put_be32(s, magic);
  put_be32(s, 2);
  put_be32(s, kIdxRows);
  put_be32(s, kIdxCols);
  for (const auto& rec : kIdxPixels)
    for (unsigned char b : rec) s.push_back(static_cast<char>(b));
  return s;
}

std::string idx_labels(std::uint32_t magic) {
  std::string s;
  put_be32(s, magic);
  put_be32(s, 2);
  for (unsigned char b : kIdxLabels) s.push_back(static_cast<char>(b));
  return s;
}

std::string cifar_records(unsigned char second_label) {
  std::string s;
  for (int r = 0; r < 2; ++r) {
    s.push_back(static_cast<char>(r == 0 ? kCifarLabels[0] : second_label));
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < 1024; ++p) s.push_back(static_cast<char>(cifar_byte(r, c, p)));
  }
  return s;
}

template <typename Error, typename F>
bool raises(F&& f) {
  try {
    f();
  } catch (const Error&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

}  // namespace

CheckResult normalization_fuzz(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  std::uniform_real_distribution<double> ll_dist(-40.0, 0.0);
  double worst_sum = 0.0;
  bool non_negative = true;
  const double sigmas[] = {0.0, 1e-8, 0.1, 1.0, 10.0, 1e8, std::numeric_limits<double>::infinity()};
  PiState pi = init_pi(kPolicyCount, 10);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto k = static_cast<std::size_t>(uniform_int(rng, 1, 12));
    const Eigen::Index batch = uniform_int(rng, 1, 4);
    ViewBatch views;
    views.subset = sample_subset(kPolicyCount, k, rng);
    views.log_likelihood.resize(batch, static_cast<Eigen::Index>(k));
    for (auto& v : views.log_likelihood.reshaped()) v = ll_dist(rng);
    Eigen::VectorXd pi_subset = pi.gather(views.subset);
    if (coin(rng)) pi_subset = random_simplex(static_cast<Eigen::Index>(k), rng);
    EmConfig cfg;
    cfg.subset_size = k;
    cfg.sigma = sigmas[uniform_int(rng, 0, 6)];
    const auto w = latent_weights(views, pi_subset.array().log().matrix(), cfg);
    for (Eigen::Index b = 0; b < batch; ++b) {
      worst_sum = std::max({worst_sum, std::abs(w.h.row(b).sum() - 1.0), std::abs(w.h_tilde.row(b).sum() - 1.0)});
      non_negative = non_negative && (w.h.row(b).array() >= 0.0).all() && (w.h_tilde.row(b).array() >= 0.0).all();
    }
    const Eigen::VectorXd mean = w.h_tilde.colwise().mean().transpose();
    update_pi(pi, mean / mean.sum(), views.subset);
    worst_sum = std::max(worst_sum, std::abs(pi.pi.sum() - 1.0));
    non_negative = non_negative && (pi.pi.array() >= 0.0).all();
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst_sum <= 1e-9 && non_negative && elapsed < 10.0;
  return {"normalization_fuzz", ok,
          fmt("max |sum - 1| = %.3e (tol 1e-9), ", worst_sum) + (non_negative ? "non-negative" : "NEGATIVE ENTRY") +
              fmt(", %.2f s", elapsed)};
}

CheckResult hardest_view_limit(std::size_t trials, std::uint64_t seed) {
  return limit_gradient("hardest_view_limit", 1e-8, true, trials, seed);
}

CheckResult view_average_limit(std::size_t trials, std::uint64_t seed) {
  return limit_gradient("view_average_limit", 1e8, false, trials, seed);
}

CheckResult subset_weighting_identity(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> ll_dist(-5.0, 0.0);
  double worst = 0.0;
  for (int s : {2, 4, 8}) {
    for (double delta : {0.1, 0.5, 1.0}) {
      for (std::size_t i = 0; i < instances; ++i) {
        const Eigen::VectorXd pi = random_simplex(s, rng);
        Eigen::VectorXd ref(s), ll(s);
        for (int z = 0; z < s; ++z) {
          ref[z] = ll_dist(rng);
          ll[z] = ll_dist(rng);
        }
        // Direct evaluation of the full-set sum.
        double norm = 0.0;
        for (int z = 0; z < s; ++z) norm += pi[z] * std::exp(ref[z]);
        double oracle = 0.0;
        for (int z = 0; z < s; ++z) oracle -= pi[z] * std::exp(ref[z]) / norm * (std::log(pi[z]) + ll[z]);
        const double full = expected_loss_full(pi, ref, ll);
        const double weighted = expected_loss_delta(Eigen::VectorXd::Constant(s, delta), pi, ref, ll);
        worst = std::max({worst, std::abs(weighted - full), std::abs(full - oracle)});
      }
    }
  }
  return {"subset_weighting_identity", worst <= 1e-12, fmt("max abs difference %.3e (tol 1e-12)", worst)};
}

CheckResult finite_difference_gradient(std::size_t architectures, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t a = 0; a < architectures; ++a) {
    nn::Architecture arch;
    arch.input_dim = uniform_int(rng, 2, 8);
    const int depth = uniform_int(rng, 0, 2);
    for (int d = 0; d < depth; ++d) arch.hidden.push_back(uniform_int(rng, 2, 6));
    arch.classes = uniform_int(rng, 2, 5);
    const Eigen::Index n = uniform_int(rng, 3, 8);
    const auto params = random_params(arch, rng);
    const Eigen::MatrixXd inputs = random_matrix(arch.input_dim, n, rng);
    Eigen::MatrixXd labels(arch.classes, n);
    for (Eigen::Index v = 0; v < n; ++v) labels.col(v) = random_simplex(arch.classes, rng);
    const Eigen::VectorXd weights = random_simplex(n, rng);

    const auto lg = nn::weighted_loss_and_grad(params, inputs, labels, weights);
    auto loss = [&](const ModelParams<double>& p) {
      const Eigen::MatrixXd logp = nn::predict_log_proba(p, inputs);
      double total = 0.0;
      for (Eigen::Index v = 0; v < n; ++v) total -= weights[v] * labels.col(v).dot(logp.col(v));
      return total;
    };
    const Eigen::VectorXd fd = numeric_gradient(params, 1e-4, loss);
    worst = std::max(worst, relative_difference(nn::flatten(lg.grad), fd));
  }
  return {"finite_difference_gradient", worst <= 1e-6, fmt("max relative error %.3e (tol 1e-6)", worst)};
}

CheckResult softmin_scalar() {
  Eigen::VectorXd h(2);
  h << 0.1, 0.4;
  const Eigen::VectorXd w = softmin_weights(h, 1.0);
  // Two-entry softmin reduces to a logistic in the gap.
  const double first = 1.0 / (1.0 + std::exp(-(0.4 - 0.1)));
  const double err = std::max({std::abs(w[0] - 0.57444), std::abs(w[1] - 0.42556), std::abs(w[0] - first),
                               std::abs(w[1] - (1.0 - first))});
  return {"softmin_scalar", err <= 1e-5, fmt("weights [%.6f, %.6f] (tol 1e-5)", w[0], w[1])};
}

void write_loader_fixtures(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "mnist2-images-idx3-ubyte", idx_images(0x00000803));
  write_file_atomic(dir / "mnist2-labels-idx1-ubyte", idx_labels(0x00000801));
  write_file_atomic(dir / "mnist2-labels-badmagic-idx1-ubyte", idx_labels(0x00000803));
  std::string truncated = idx_images(0x00000803);
  truncated.pop_back();
  write_file_atomic(dir / "mnist2-images-truncated-idx3-ubyte", truncated);
  write_file_atomic(dir / "cifar2.bin", cifar_records(kCifarLabels[1]));
  std::string short_cifar = cifar_records(kCifarLabels[1]);
  short_cifar.resize(short_cifar.size() - 5);
  write_file_atomic(dir / "cifar2-truncated.bin", short_cifar);
  write_file_atomic(dir / "cifar2-badlabel.bin", cifar_records(10));
}

CheckResult loader_golden(const std::filesystem::path& dir) {
  std::string failures;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) failures += (failures.empty() ? "" : "; ") + what;
  };
  try {
    const auto mnist = load_mnist_idx(dir / "mnist2-images-idx3-ubyte", dir / "mnist2-labels-idx1-ubyte");
    expect(mnist.size() == 2 && mnist.classes == 10, "idx record count");
    for (std::size_t r = 0; r < std::min<std::size_t>(2, mnist.size()); ++r) {
      const auto& img = mnist.images[r];
      expect(img.height() == kIdxRows && img.width() == kIdxCols && img.channels() == 1, "idx shape");
      expect(mnist.labels[r] == kIdxLabels[r], "idx label");
      for (int p = 0; p < kIdxRows * kIdxCols; ++p)
        expect(img(p / kIdxCols, p % kIdxCols, 0) == static_cast<float>(kIdxPixels[r][p]) / 255.0f, "idx pixel");
    }
  } catch (const std::exception& e) {
    expect(false, std::string("idx load threw: ") + e.what());
  }
  expect(raises<FormatError>([&] {
           load_mnist_idx(dir / "mnist2-images-idx3-ubyte", dir / "mnist2-labels-badmagic-idx1-ubyte");
         }),
         "label file with image magic must raise a format error");
  expect(raises<LengthError>([&] {
           load_mnist_idx(dir / "mnist2-images-truncated-idx3-ubyte", dir / "mnist2-labels-idx1-ubyte");
         }),
         "truncated idx must raise a length error");

  try {
    const std::filesystem::path files[] = {dir / "cifar2.bin"};
    const auto cifar = load_cifar10_bin(files);
    expect(cifar.size() == 2, "cifar record count");
    for (std::size_t r = 0; r < std::min<std::size_t>(2, cifar.size()); ++r) {
      const auto& img = cifar.images[r];
      expect(img.height() == 32 && img.width() == 32 && img.channels() == 3, "cifar shape");
      expect(cifar.labels[r] == kCifarLabels[r], "cifar label");
      for (int c = 0; c < 3; ++c)
        for (int p = 0; p < 1024; ++p)
          expect(img(p / 32, p % 32, c) == static_cast<float>(cifar_byte(static_cast<int>(r), c, p)) / 255.0f,
                 "cifar pixel");
    }
  } catch (const std::exception& e) {
    expect(false, std::string("cifar load threw: ") + e.what());
  }
  expect(raises<LengthError>([&] {
           const std::filesystem::path files[] = {dir / "cifar2-truncated.bin"};
           load_cifar10_bin(files);
         }),
         "truncated cifar must raise a length error");
  expect(raises<RangeError>([&] {
           const std::filesystem::path files[] = {dir / "cifar2-badlabel.bin"};
           load_cifar10_bin(files);
         }),
         "cifar label 10 must raise a range error");
  return {"loader_golden", failures.empty(), failures.empty() ? "all fixtures match" : failures.substr(0, 400)};
}

CheckResult run_determinism(const std::filesystem::path& scratch_dir) {
  RunConfig cfg;
  cfg.dataset = DatasetKind::Blobs;
  cfg.blobs_n = 200;
  cfg.blobs_test_n = 100;
  cfg.blobs_classes = 4;
  cfg.blobs_dim = 16;
  cfg.hidden = {16};
  cfg.K = 3;
  cfg.batch_size = 32;
  cfg.epochs = 2;
  cfg.seed = 11;
  std::string texts[2];
  for (int i = 0; i < 2; ++i) {
    cfg.out_dir = scratch_dir / (i == 0 ? "determinism_a" : "determinism_b");
    emit_metrics(run_experiment(cfg), cfg.out_dir);
    texts[i] = read_file(cfg.out_dir / "metrics.csv") + read_file(cfg.out_dir / "pi_final.txt");
  }
  const bool same = texts[0] == texts[1] && !texts[0].empty();
  return {"run_determinism", same, same ? "metrics.csv and pi_final.txt byte-identical" : "outputs differ"};
}

std::vector<CheckResult> run_all(const std::filesystem::path& fixture_dir, const std::filesystem::path& scratch_dir) {
  std::filesystem::path fixtures = fixture_dir;
  if (fixtures.empty()) {
    fixtures = scratch_dir / "fixtures";
    write_loader_fixtures(fixtures);
  }
  return {normalization_fuzz(),         hardest_view_limit(), view_average_limit(), subset_weighting_identity(),
          finite_difference_gradient(), softmin_scalar(),     loader_golden(fixtures), run_determinism(scratch_dir)};
}

}  // namespace latentaug::checks
