// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "latentaug/checks.hpp"
#include "latentaug/harness.hpp"
#include "latentaug/io.hpp"

using namespace latentaug;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(LATENTAUG_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

RunConfig tiny(const std::string& name) {
  RunConfig cfg;
  cfg.blobs_n = 64;
  cfg.blobs_test_n = 32;
  cfg.blobs_classes = 4;
  cfg.blobs_dim = 16;
  cfg.blobs_spread = 0.2;
  cfg.hidden = {8};
  cfg.K = 2;
  cfg.batch_size = 16;
  cfg.epochs = 2;
  cfg.seed = 3;
  cfg.out_dir = std::filesystem::path(LATENTAUG_SCRATCH) / name;
  return cfg;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("config text parsing") {
  const RunConfig cfg = parse_config_text("# comment\n\nK = 4\nsigma=inf\nfixed_pi=true\nhidden=32,16\nmethod=ubs_limit\n");
  CHECK(cfg.K == 4);
  CHECK(std::isinf(cfg.sigma));
  CHECK(cfg.fixed_pi);
  CHECK(cfg.hidden == std::vector<Eigen::Index>{32, 16});
  CHECK(cfg.method == Method::UbsLimit);
  CHECK(cfg.epochs == RunConfig{}.epochs);

  CHECK_THROWS_AS(parse_config_text("bogus=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("K\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("K=-1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("sigma=abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("fixed_pi=maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("method=autoaugment\n"), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.K = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.K = 257;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.sigma = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.dataset = DatasetKind::Mnist;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.blobs_dim = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config echo round trips") {
  RunConfig cfg = tiny("echo");
  cfg.sigma = std::numeric_limits<double>::infinity();
  cfg.lr0 = 0.0123456789;
  cfg.final_op = FinalOp::None;
  cfg.method = Method::RandomPolicy;
  const RunConfig back = parse_config_text(config_to_text(cfg));
  CHECK(back.to_entries() == cfg.to_entries());
  CHECK(back.lr0 == cfg.lr0);

  const auto dir = scratch("config_file");
  write_file_atomic(dir / "run.cfg", "epochs=5\nseed=9\n");
  const RunConfig loaded = load_config_file(dir / "run.cfg", cfg);
  CHECK(loaded.epochs == 5);
  CHECK(loaded.seed == 9);
  CHECK(loaded.K == cfg.K);
}

TEST_CASE("method names") {
  for (Method m : {Method::Latent, Method::UbsLimit, Method::UniformLimit, Method::RandomPolicy, Method::NoAugment})
    CHECK(parse_method(to_string(m)) == m);
}

TEST_CASE("no augmentation on separable blobs reaches full accuracy") {
  RunConfig cfg = tiny("noaug");
  cfg.method = Method::NoAugment;
  cfg.blobs_spread = 0.0;
  cfg.hidden = {32};
  cfg.epochs = 20;
  const RunReport r = run_experiment(cfg);
  CHECK(r.epoch_accuracy.back() == 1.0);
}

TEST_CASE("iteration count is epochs times batches per epoch") {
  RunConfig cfg = tiny("iters");
  cfg.blobs_n = 70;
  cfg.epochs = 3;
  const RunReport r = run_experiment(cfg);
  CHECK(r.iterations_per_epoch == 5);
  CHECK(r.steps.size() == 15);
  CHECK(r.epoch_accuracy.size() == 3);
  for (std::size_t t = 0; t < r.steps.size(); ++t) CHECK(r.steps[t].iteration == t + 1);
  CHECK(r.steps.front().lr == doctest::Approx(cfg.lr0));
  CHECK(r.final_pi.size() == 256);
  CHECK(std::abs(r.final_pi.sum() - 1.0) <= 1e-9);
}

TEST_CASE("a single view makes expected and marginal loss coincide") {
  RunConfig cfg = tiny("k1");
  cfg.K = 1;
  const RunReport r = run_experiment(cfg);
  for (const auto& s : r.steps) CHECK(std::abs(s.expected_loss - s.marginal_loss) <= 1e-9);
}

TEST_CASE("view-average limit with fixed uniform pi") {
  RunConfig cfg = tiny("uniform");
  cfg.method = Method::UniformLimit;
  cfg.fixed_pi = true;
  cfg.K = 4;
  const RunReport r = run_experiment(cfg);
  for (const auto& s : r.steps) {
    CHECK(s.pi_entropy == doctest::Approx(std::log(256.0)));
    // Every view weighs 1/K, so the expected loss is log 256 plus a mean cross-entropy.
    CHECK(s.expected_loss >= std::log(256.0));
    // Jensen over the K views bounds the marginal loss from the other side.
    CHECK(s.marginal_loss <= s.expected_loss - std::log(4.0) + 1e-9);
  }
  CHECK((r.final_pi.array() == 1.0 / 256.0).all());
}

TEST_CASE("runs are deterministic") {
  const auto result = checks::run_determinism(scratch("determinism"));
  INFO(result.detail);
  CHECK(result.passed);

  RunConfig cfg = tiny("determinism_direct");
  const RunReport a = run_experiment(cfg), b = run_experiment(cfg);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t t = 0; t < a.steps.size(); ++t) CHECK(a.steps[t].expected_loss == b.steps[t].expected_loss);
  CHECK(a.final_pi == b.final_pi);
  cfg.seed = 4;
  CHECK_FALSE(run_experiment(cfg).steps.back().expected_loss == a.steps.back().expected_loss);
}

TEST_CASE("emitted run files") {
  RunConfig cfg = tiny("emit");
  const RunReport r = run_experiment(cfg);
  const auto dir = scratch("emit_out");
  emit_metrics(r, dir);
  const std::string csv = read_file(dir / "metrics.csv");
  CHECK(csv.rfind("iter,expected_loss,marginal_loss,lr,pi_entropy\n", 0) == 0);
  CHECK(count_lines(csv) == r.steps.size() + 1);
  CHECK(count_lines(read_file(dir / "step_metrics.jsonl")) == r.steps.size());

  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  CHECK(summary["iterations"] == r.steps.size());
  CHECK(summary["final_accuracy"].get<double>() == r.epoch_accuracy.back());
  CHECK(summary["top_pi"].size() == 5);
  CHECK(parse_config_text(read_file(dir / "config.txt")).to_entries() == cfg.to_entries());
  CHECK(load_pi(dir / "pi_final.txt") == r.final_pi);

  const auto plots = emit_plots(r, dir);
  CHECK(plots.size() == 2);
  for (const auto& p : plots) CHECK(read_file(p).find("<svg") != std::string::npos);
}

TEST_CASE("metrics of an empty run hold only the header") {
  RunReport r;
  r.config = tiny("empty");
  r.final_pi = Eigen::VectorXd::Constant(256, 1.0 / 256.0);
  const auto dir = scratch("empty_out");
  emit_metrics(r, dir);
  CHECK(read_file(dir / "metrics.csv") == "iter,expected_loss,marginal_loss,lr,pi_entropy\n");
}

TEST_CASE("ablation grids") {
  RunConfig base = tiny("grid");
  base.epochs = 1;

  GridSpec sigma_fixed{GridKind::SigmaByFixedPi, {0.0, 1.0}, {1, 2}};
  const GridReport g = run_ablation_grid(base, sigma_fixed);
  REQUIRE(g.cells.size() == 4);
  for (const auto& c : g.cells) {
    CHECK(c.accuracies.size() == 2);
    CHECK(c.mean == doctest::Approx((c.accuracies[0] + c.accuracies[1]) / 2.0));
  }

  GridSpec ks{GridKind::SubsetSize, {1, 2, 4, 8}, {1}};
  const GridReport gk = run_ablation_grid(base, ks);
  REQUIRE(gk.cells.size() == 4);
  CHECK(gk.cells[3].K == 8);

  GridSpec single{GridKind::Sigma, {1.0}, {5}};
  const GridReport g1 = run_ablation_grid(base, single);
  RunConfig direct = base;
  direct.seed = 5;
  REQUIRE(g1.cells.size() == 1);
  CHECK(g1.cells[0].accuracies[0] == run_experiment(direct).epoch_accuracy.back());
  CHECK(g1.cells[0].stddev == 0.0);

  const auto dir = scratch("grid_out");
  emit_grid(g, dir);
  CHECK(count_lines(read_file(dir / "grid.csv")) == 5);
  const auto json = nlohmann::json::parse(read_file(dir / "grid.json"));
  CHECK(json["cells"].size() == 4);
  CHECK(emit_plots(g, dir).front().filename() == "accuracy_vs_sigma.svg");
  CHECK(emit_plots(gk, dir).front().filename() == "accuracy_vs_K.svg");
}

TEST_CASE("line chart rendering") {
  ChartSpec chart{"t", "x", "y", {{"down", {0, 1, 2}, {3, 2, 1}}}, {}};
  const std::string svg = render_line_chart(chart);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  const auto at = svg.find("<polyline class=\"series\"");
  REQUIRE(at != std::string::npos);
  const auto begin = svg.find("points=\"", at) + 8;
  std::istringstream points(svg.substr(begin, svg.find('"', begin) - begin));
  std::vector<double> ys;
  for (std::string pair; points >> pair;) ys.push_back(std::stod(pair.substr(pair.find(',') + 1)));
  REQUIRE(ys.size() == 3);
  // Larger values draw higher, so a descending series has growing svg y.
  CHECK(ys[0] < ys[1]);
  CHECK(ys[1] < ys[2]);

  ChartSpec one{"t", "x", "y", {{"p", {1}, {1}}}, {}};
  const std::string dot = render_line_chart(one);
  std::size_t markers = 0;
  for (auto p = dot.find("class=\"marker\""); p != std::string::npos; p = dot.find("class=\"marker\"", p + 1)) ++markers;
  CHECK(markers == 1);

  CHECK_THROWS_AS(render_line_chart({"t", "x", "y", {{"bad", {0, 1}, {1}}}, {}}), DimensionError);
  CHECK_THROWS_AS(render_line_chart({"t", "x", "y", {{"nan", {0}, {std::nan("")}}}, {}}), DomainError);
}

TEST_CASE("trailing mean") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(trailing_mean(v, 5, 2) == 4.5);
  CHECK(trailing_mean(v, 2, 10) == 1.5);
  CHECK(trailing_mean(v, 1, 1) == 1.0);
  CHECK_THROWS_AS(trailing_mean(v, 0, 3), DomainError);
  CHECK_THROWS_AS(trailing_mean(v, 6, 3), DomainError);
}
