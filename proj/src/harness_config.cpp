// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "latentaug/harness.hpp"
#include "latentaug/io.hpp"

namespace latentaug {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || v.empty())
    throw ConfigError("'" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<Eigen::Index> parse_hidden(const std::string& key, const std::string& v) {
  std::vector<Eigen::Index> out;
  if (v.empty() || v == "none") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<Eigen::Index>(parse_uint(key, trim(item))));
  return out;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Latent: return "latent";
    case Method::UbsLimit: return "ubs_limit";
    case Method::UniformLimit: return "uniform_limit";
    case Method::RandomPolicy: return "random_policy_baseline";
    case Method::NoAugment: return "no_augment";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::Latent, Method::UbsLimit, Method::UniformLimit, Method::RandomPolicy, Method::NoAugment})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown method: " + std::string(name));
}

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  if (key == "dataset") dataset = parse_dataset_kind(v);
  else if (key == "data_dir") data_dir = v;
  else if (key == "subset_n") subset_n = parse_uint(key, v);
  else if (key == "test_n") test_n = parse_uint(key, v);
  else if (key == "blobs_n") blobs_n = parse_uint(key, v);
  else if (key == "blobs_test_n") blobs_test_n = parse_uint(key, v);
  else if (key == "blobs_classes") blobs_classes = static_cast<int>(parse_uint(key, v));
  else if (key == "blobs_dim") blobs_dim = static_cast<int>(parse_uint(key, v));
  else if (key == "blobs_spread") blobs_spread = parse_double(key, v);
  else if (key == "blobs_seed") blobs_seed = parse_uint(key, v);
  else if (key == "standardize") standardize = parse_bool(key, v);
  else if (key == "model") model = v;
  else if (key == "hidden") hidden = parse_hidden(key, v);
  else if (key == "method") method = parse_method(v);
  else if (key == "K") K = parse_uint(key, v);
  else if (key == "sigma") sigma = parse_double(key, v);
  else if (key == "fixed_pi") fixed_pi = parse_bool(key, v);
  else if (key == "window") window = parse_uint(key, v);
  else if (key == "mix_labels") mix_labels = parse_bool(key, v);
  else if (key == "final_op") {
    if (v == "cutout") final_op = FinalOp::Cutout;
    else if (v == "none") final_op = FinalOp::None;
    else throw ConfigError("final_op must be cutout or none");
  }
  else if (key == "cutout_frac") cutout_frac = parse_double(key, v);
  else if (key == "pi_init") pi_init = v;
  else if (key == "lr0") lr0 = parse_double(key, v);
  else if (key == "weight_decay") weight_decay = parse_double(key, v);
  else if (key == "batch_size") batch_size = parse_uint(key, v);
  else if (key == "epochs") epochs = parse_uint(key, v);
  else if (key == "seed") seed = parse_uint(key, v);
  else if (key == "out_dir") out_dir = v;
  else throw ConfigError("unknown config key: " + key);
}

void RunConfig::validate() const {
  if (dataset != DatasetKind::Blobs && data_dir.empty()) throw ConfigError("data_dir is required for " + std::string(to_string(dataset)));
  if (dataset == DatasetKind::Blobs) {
    if (blobs_classes < 1 || blobs_n < static_cast<std::size_t>(blobs_classes)) throw ConfigError("blobs_n must be >= blobs_classes >= 1");
    if (blobs_test_n < 1) throw ConfigError("blobs_test_n must be >= 1");
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(blobs_dim))));
    if (side * side != blobs_dim || blobs_dim < blobs_classes) throw ConfigError("blobs_dim must be a perfect square >= blobs_classes");
    if (!(blobs_spread >= 0.0)) throw ConfigError("blobs_spread must be >= 0");
  }
  if (model != "mlp" && model != "softmax") throw ConfigError("model must be mlp or softmax");
  for (auto h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
  if (K < 1 || K > kPolicyCount) throw ConfigError("K must be in [1, 256]");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (cutout_frac > 1.0 || std::isnan(cutout_frac)) throw ConfigError("cutout_frac must be <= 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ConfigError("lr0 must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (out_dir.empty()) throw ConfigError("out_dir must be set");
}

double RunConfig::resolved_cutout_frac() const {
  if (cutout_frac >= 0.0) return cutout_frac;
  // 16/32 for CIFAR-like inputs, 20/28 for MNIST-like inputs.
  return dataset == DatasetKind::Cifar10 ? 0.5 : 0.71;
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_entries() const {
  std::string hidden_text;
  for (std::size_t i = 0; i < hidden.size(); ++i) hidden_text += (i ? "," : "") + std::to_string(hidden[i]);
  if (hidden_text.empty()) hidden_text = "none";
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"dataset", std::string(to_string(dataset))},
      {"data_dir", data_dir.string()},
      {"subset_n", std::to_string(subset_n)},
      {"test_n", std::to_string(test_n)},
      {"blobs_n", std::to_string(blobs_n)},
      {"blobs_test_n", std::to_string(blobs_test_n)},
      {"blobs_classes", std::to_string(blobs_classes)},
      {"blobs_dim", std::to_string(blobs_dim)},
      {"blobs_spread", fmt_double(blobs_spread)},
      {"blobs_seed", std::to_string(blobs_seed)},
      {"standardize", b(standardize)},
      {"model", model},
      {"hidden", hidden_text},
      {"method", std::string(to_string(method))},
      {"K", std::to_string(K)},
      {"sigma", fmt_double(sigma)},
      {"fixed_pi", b(fixed_pi)},
      {"window", std::to_string(window)},
      {"mix_labels", b(mix_labels)},
      {"final_op", final_op == FinalOp::Cutout ? "cutout" : "none"},
      {"cutout_frac", fmt_double(cutout_frac)},
      {"pi_init", pi_init.string()},
      {"lr0", fmt_double(lr0)},
      {"weight_decay", fmt_double(weight_decay)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"seed", std::to_string(seed)},
      {"out_dir", out_dir.string()},
  };
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    base.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text, std::move(base));
}

std::string config_to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.to_entries()) out += k + "=" + v + "\n";
  return out;
}

}  // namespace latentaug
