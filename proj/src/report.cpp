// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace sadt {
namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string make_label(const ExperimentConfig& c) {
  return fmt::format("{}/bs{}/seed{}", to_string(c.strategy), c.train.batch_size, c.train.seed);
}

// Identity of the data and model a run used; runs being compared must agree.
std::string family_key(const ExperimentConfig& c) {
  const auto& d = c.data;
  std::string data_id = d.format == DataFormat::idx
                            ? d.train_images + "|" + d.test_images
                            : fmt::format("{}", fmt::join(d.train_files, ",")) + "|" +
                                  fmt::format("{}", fmt::join(d.test_files, ","));
  return fmt::format("{}|{}|{}|{}|{}|{}", data_id, d.train_samples, d.test_samples, d.num_classes,
                     to_string(c.model.arch), fmt::join(c.model.hidden, ","));
}

const char* kCurveMetrics[] = {"train_accuracy", "train_loss", "val_accuracy", "val_loss"};

}  // namespace

std::optional<double> RunSummary::final_test_accuracy() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->phase == "test") return it->accuracy;
  }
  return std::nullopt;
}

std::vector<double> RunSummary::epoch_series(const std::string& phase, const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.phase != phase) continue;
    const auto& v = metric == "accuracy" ? r.accuracy : r.task_loss;
    if (!v) continue;
    if (out.size() <= r.epoch) out.resize(r.epoch + 1, std::numeric_limits<double>::quiet_NaN());
    out[r.epoch] = *v;
  }
  return out;
}

RunSummary load_run(const std::filesystem::path& path) {
  const auto dir = std::filesystem::is_directory(path) ? path : path.parent_path();
  const auto csv = std::filesystem::is_directory(path) ? path / "metrics.csv" : path;
  RunSummary s;
  s.config = parse_config(dir / "config.ini");
  s.rows = parse_csv(read_text(csv));
  s.label = make_label(s.config);
  return s;
}

RunSummary summarize(const RunLog& log) { return {make_label(log.config), log.config, log.rows}; }

ComparisonReport compare_runs(std::span<const RunSummary> runs) {
  if (runs.size() < 2) throw std::invalid_argument("compare_runs needs at least two runs");
  const auto family = family_key(runs.front().config);
  std::vector<std::size_t> batch_sizes;
  for (const auto& r : runs) {
    if (family_key(r.config) != family) {
      throw std::invalid_argument("runs use different datasets or models: " + runs.front().label + " vs " +
                                  r.label);
    }
    batch_sizes.push_back(r.config.train.batch_size);
  }
  std::sort(batch_sizes.begin(), batch_sizes.end());
  batch_sizes.erase(std::unique(batch_sizes.begin(), batch_sizes.end()), batch_sizes.end());

  ComparisonReport report;
  for (auto bs : batch_sizes) report.columns.push_back(fmt::format("bs={}", bs));
  for (auto id : kAllStrategies) {
    std::vector<std::optional<TableCell>> cells(batch_sizes.size());
    for (std::size_t col = 0; col < batch_sizes.size(); ++col) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : runs) {
        if (r.config.strategy != id || r.config.train.batch_size != batch_sizes[col]) continue;
        if (auto acc = r.final_test_accuracy()) {
          sum += *acc;
          ++n;
        }
      }
      if (n > 0) cells[col] = TableCell{sum / static_cast<double>(n), n, false};
    }
    report.rows.emplace_back(display_name(id), std::move(cells));
  }
  for (std::size_t col = 0; col < batch_sizes.size(); ++col) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [name, cells] : report.rows) {
      if (cells[col]) best = std::max(best, cells[col]->mean_accuracy);
    }
    for (auto& [name, cells] : report.rows) {
      if (cells[col] && cells[col]->mean_accuracy == best) cells[col]->best = true;
    }
  }
  for (const char* metric : kCurveMetrics) {
    const std::string m = metric;
    const auto split = m.find('_');
    auto& series = report.curves[m];
    for (const auto& r : runs) series.push_back({r.label, r.epoch_series(m.substr(0, split), m.substr(split + 1))});
  }
  return report;
}

std::string table_markdown(const ComparisonReport& report) {
  std::string out = "| Compared methods |";
  for (const auto& c : report.columns) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < report.columns.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& [name, cells] : report.rows) {
    out += "| " + name + " |";
    for (const auto& cell : cells) {
      if (!cell) {
        out += " - |";
      } else if (cell->best) {
        out += fmt::format(" **{:.3f}** |", cell->mean_accuracy);
      } else {
        out += fmt::format(" {:.3f} |", cell->mean_accuracy);
      }
    }
    out += "\n";
  }
  return out;
}

std::string table_csv(const ComparisonReport& report) {
  std::string out = "method,column,mean_test_accuracy,runs,best\n";
  for (const auto& [name, cells] : report.rows) {
    for (std::size_t col = 0; col < cells.size(); ++col) {
      if (!cells[col]) continue;
      out += fmt::format("{},{},{},{},{}\n", name, report.columns[col], cells[col]->mean_accuracy,
                         cells[col]->runs, cells[col]->best ? 1 : 0);
    }
  }
  return out;
}

std::string curves_csv(const ComparisonReport& report) {
  std::size_t epochs = 0;
  std::string out = "epoch";
  for (const auto& [metric, series] : report.curves) {
    for (const auto& s : series) {
      out += "," + s.label + ":" + metric;
      epochs = std::max(epochs, s.values.size());
    }
  }
  out += "\n";
  for (std::size_t e = 0; e < epochs; ++e) {
    out += std::to_string(e);
    for (const auto& [metric, series] : report.curves) {
      for (const auto& s : series) {
        out += ",";
        if (e < s.values.size() && !std::isnan(s.values[e])) out += fmt::format("{}", s.values[e]);
      }
    }
    out += "\n";
  }
  return out;
}

std::string curve_svg(const ComparisonReport& report, const std::string& metric) {
  auto it = report.curves.find(metric);
  if (it == report.curves.end()) throw std::invalid_argument("no curve metric " + metric);
  constexpr double kWidth = 640, kHeight = 400, kMargin = 50;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t epochs = 1;
  for (const auto& s : it->second) {
    epochs = std::max(epochs, s.values.size());
    for (double v : s.values) {
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) lo = 0, hi = 1;
  if (hi == lo) hi = lo + 1.0;
  const double span_x = static_cast<double>(std::max<std::size_t>(epochs - 1, 1));
  auto px = [&](double e) { return kMargin + (kWidth - 2 * kMargin) * e / span_x; };
  auto py = [&](double v) { return kHeight - kMargin - (kHeight - 2 * kMargin) * (v - lo) / (hi - lo); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n"
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n"
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n"
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.4g}</text>\n"
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.4g}</text>\n"
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">epoch</text>\n",
      kWidth, kHeight, kWidth, kHeight, kWidth / 2, metric, kMargin, kHeight - kMargin, kWidth - kMargin,
      kHeight - kMargin, kMargin, kMargin, kMargin, kHeight - kMargin, 4, kMargin, hi, 4, kHeight - kMargin, lo,
      kWidth / 2, kHeight - 15);
  for (std::size_t i = 0; i < it->second.size(); ++i) {
    const auto& s = it->second[i];
    const char* color = kColors[i % std::size(kColors)];
    std::string points;
    for (std::size_t e = 0; e < s.values.size(); ++e) {
      if (std::isnan(s.values[e])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>(e)), py(s.values[e]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, points);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">{}</text>\n",
                       kWidth - kMargin - 150, kMargin + 14 * static_cast<double>(i + 1), color, s.label);
  }
  out += "</svg>\n";
  return out;
}

void write_report(const ComparisonReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  };
  write("table.md", table_markdown(report));
  write("table.csv", table_csv(report));
  write("curves.csv", curves_csv(report));
  for (const auto& [metric, series] : report.curves) write(metric + ".svg", curve_svg(report, metric));
}

}  // namespace sadt
