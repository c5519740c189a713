// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "latentaug/harness.hpp"
#include "latentaug/io.hpp"

namespace latentaug {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no infinity; sigma = inf is echoed as a string.
json json_number(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

json config_json(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& [k, v] : cfg.to_entries()) out[k] = v;
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void emit_metrics(const RunReport& report, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  std::string csv = "iter,expected_loss,marginal_loss,lr,pi_entropy\n";
  std::string jsonl;
  for (const auto& m : report.steps) {
    csv += std::to_string(m.iteration) + "," + num(m.expected_loss) + "," + num(m.marginal_loss) + "," + num(m.lr) +
           "," + num(m.pi_entropy) + "\n";
    json rec{{"iteration", m.iteration},
             {"expected_loss", m.expected_loss},
             {"marginal_loss", m.marginal_loss},
             {"lr", m.lr},
             {"pi_entropy", m.pi_entropy}};
    json top = json::array();
    for (const auto& [z, w] : m.top_policies) top.push_back({{"policy", z}, {"mean_h_tilde", w}});
    rec["top_policies"] = top;
    jsonl += rec.dump() + "\n";
  }
  write_file_atomic(out_dir / "metrics.csv", csv);
  write_file_atomic(out_dir / "step_metrics.jsonl", jsonl);

  json summary;
  summary["config"] = config_json(report.config);
  summary["iterations"] = report.steps.size();
  summary["iterations_per_epoch"] = report.iterations_per_epoch;
  summary["epoch_accuracy"] = report.epoch_accuracy;
  summary["final_accuracy"] = report.epoch_accuracy.empty() ? 0.0 : report.epoch_accuracy.back();
  summary["final_pi_entropy"] = report.final_pi.size() > 0 ? entropy(report.final_pi) : 0.0;
  if (report.final_pi.size() > 0) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (Eigen::Index z = 0; z < report.final_pi.size(); ++z) ranked.emplace_back(report.final_pi[z], static_cast<std::size_t>(z));
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    const PolicySet policies;
    json top = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(5, ranked.size()); ++i) {
      const auto& p = policies[ranked[i].second];
      top.push_back({{"policy", ranked[i].second},
                     {"first", std::string(to_string(p.first))},
                     {"second", std::string(to_string(p.second))},
                     {"pi", ranked[i].first}});
    }
    summary["top_pi"] = top;
  }
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  if (report.final_pi.size() > 0) save_pi(out_dir / "pi_final.txt", report.final_pi);
  write_file_atomic(out_dir / "config.txt", config_to_text(report.config));
}

void emit_grid(const GridReport& report, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  std::string csv = "cell,K,sigma,fixed_pi,mean_accuracy,std_accuracy,seeds\n";
  json cells = json::array();
  for (const auto& c : report.cells) {
    csv += c.label + "," + std::to_string(c.K) + "," + num(c.sigma) + "," + (c.fixed_pi ? "true" : "false") + "," +
           num(c.mean) + "," + num(c.stddev) + "," + std::to_string(c.accuracies.size()) + "\n";
    cells.push_back({{"label", c.label},
                     {"K", c.K},
                     {"sigma", json_number(c.sigma)},
                     {"fixed_pi", c.fixed_pi},
                     {"accuracies", c.accuracies},
                     {"mean", c.mean},
                     {"std", c.stddev}});
  }
  const char* kind = report.spec.kind == GridKind::SigmaByFixedPi ? "sigma_by_fixed_pi"
                     : report.spec.kind == GridKind::SubsetSize   ? "subset_size"
                                                                  : "sigma";
  json out{{"kind", kind}, {"seeds", report.spec.seeds}, {"base_config", config_json(report.base)}, {"cells", cells}};
  write_file_atomic(out_dir / "grid.csv", csv);
  write_file_atomic(out_dir / "grid.json", out.dump(2) + "\n");
}

std::string render_line_chart(const ChartSpec& chart) {
  constexpr double width = 640, height = 400;
  constexpr double left = 70, right = 20, top = 40, bottom = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) throw DimensionError("render_line_chart: x and y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) throw DomainError("render_line_chart: no finite points");
  if (xmax == xmin) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax == ymin) {
    ymin -= 1.0;
    ymax += 1.0;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  static constexpr std::array<const char*, 6> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
    << xml_escape(chart.title) << "</text>\n";
  // axes
  o << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
    << top + ph << "\" stroke=\"black\"/>\n";
  o << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  std::vector<std::pair<double, std::string>> xticks = chart.x_ticks;
  if (xticks.empty())
    for (int i = 0; i <= 4; ++i) {
      const double v = xmin + (xmax - xmin) * i / 4.0;
      xticks.emplace_back(v, fmt_tick(v));
    }
  for (const auto& [v, label] : xticks) {
    o << "<text x=\"" << sx(v) << "\" y=\"" << top + ph + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(label) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = ymin + (ymax - ymin) * i / 4.0;
    o << "<text x=\"" << left - 6 << "\" y=\"" << sy(v) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(v) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 16
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(chart.x_label)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
    << "transform=\"rotate(-90 16 " << top + ph / 2 << ")\">" << xml_escape(chart.y_label) << "</text>\n";

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    const char* color = colors[si % colors.size()];
    std::ostringstream pts;
    pts.setf(std::ios::fixed);
    pts.precision(2);
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts << (count++ ? " " : "") << sx(s.x[i]) << "," << sy(s.y[i]);
    }
    if (count > 1)
      o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << pts.str() << "\"/>\n";
    if (s.x.size() <= 50)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << "<circle class=\"marker\" cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i]) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
      }
    o << "<text x=\"" << left + pw - 4 << "\" y=\"" << top + 14 + 14 * static_cast<double>(si)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
      << xml_escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::filesystem::path> emit_plots(const RunReport& report, const std::filesystem::path& out_dir) {
  if (report.steps.empty() && report.epoch_accuracy.empty()) throw DomainError("emit_plots: empty report");
  ensure_dir(out_dir);
  std::vector<std::filesystem::path> written;
  if (!report.steps.empty()) {
    Series expected{"expected loss", {}, {}};
    Series marginal{"marginal loss", {}, {}};
    for (const auto& m : report.steps) {
      expected.x.push_back(static_cast<double>(m.iteration));
      expected.y.push_back(m.expected_loss);
      marginal.x.push_back(static_cast<double>(m.iteration));
      marginal.y.push_back(m.marginal_loss);
    }
    const auto path = out_dir / "loss.svg";
    write_file_atomic(path, render_line_chart({"Loss per iteration", "iteration", "loss", {expected, marginal}, {}}));
    written.push_back(path);
  }
  if (!report.epoch_accuracy.empty()) {
    Series acc{"test accuracy", {}, report.epoch_accuracy};
    for (std::size_t e = 0; e < report.epoch_accuracy.size(); ++e) acc.x.push_back(static_cast<double>(e + 1));
    const auto path = out_dir / "accuracy.svg";
    write_file_atomic(path, render_line_chart({"Test accuracy per epoch", "epoch", "accuracy", {acc}, {}}));
    written.push_back(path);
  }
  return written;
}

std::vector<std::filesystem::path> emit_plots(const GridReport& report, const std::filesystem::path& out_dir) {
  if (report.cells.empty()) throw DomainError("emit_plots: empty grid");
  ensure_dir(out_dir);
  ChartSpec chart;
  chart.y_label = "mean test accuracy";
  std::filesystem::path path;
  // sigma may be 0 or infinity, so sigma axes use categorical positions.
  auto sigma_ticks = [&](const std::vector<double>& sigmas) {
    for (std::size_t i = 0; i < sigmas.size(); ++i)
      chart.x_ticks.emplace_back(static_cast<double>(i), std::isinf(sigmas[i]) ? "inf" : fmt_tick(sigmas[i]));
  };
  switch (report.spec.kind) {
    case GridKind::SubsetSize: {
      chart.title = "Accuracy vs subset size K";
      chart.x_label = "K";
      Series s{"latent", {}, {}};
      for (const auto& c : report.cells) {
        s.x.push_back(static_cast<double>(c.K));
        s.y.push_back(c.mean);
      }
      chart.series.push_back(std::move(s));
      path = out_dir / "accuracy_vs_K.svg";
      break;
    }
    case GridKind::Sigma:
    case GridKind::SigmaByFixedPi: {
      chart.title = "Accuracy vs inverse scale sigma";
      chart.x_label = "sigma";
      sigma_ticks(report.spec.values);
      std::vector<std::pair<std::string, bool>> rows;
      if (report.spec.kind == GridKind::Sigma) rows.emplace_back("latent", report.base.fixed_pi);
      else rows = {{"fixed pi", true}, {"unfixed pi", false}};
      for (const auto& [name, fixed] : rows) {
        Series s{name, {}, {}};
        for (const auto& c : report.cells) {
          if (c.fixed_pi != fixed) continue;
          const auto pos = std::find(report.spec.values.begin(), report.spec.values.end(), c.sigma);
          s.x.push_back(static_cast<double>(pos - report.spec.values.begin()));
          s.y.push_back(c.mean);
        }
        chart.series.push_back(std::move(s));
      }
      path = out_dir / "accuracy_vs_sigma.svg";
      break;
    }
  }
  write_file_atomic(path, render_line_chart(chart));
  return {path};
}

}  // namespace latentaug
