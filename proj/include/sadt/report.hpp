// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sadt/harness.hpp"

namespace sadt {

/// A finished run as read back from its output directory.
struct RunSummary {
  std::string label;  // "<strategy>/bs<batch>/seed<seed>"
  ExperimentConfig config;
  std::vector<LogRow> rows;

  std::optional<double> final_test_accuracy() const;
  /// Per-epoch values of `phase` ("train" / "val") for "accuracy" or "loss",
  /// indexed by epoch (0 = before training).
  std::vector<double> epoch_series(const std::string& phase, const std::string& metric) const;
};

/// Reads metrics.csv and config.ini from a run directory (or from the
/// directory containing a metrics.csv path).
RunSummary load_run(const std::filesystem::path& path);
RunSummary summarize(const RunLog& log);

struct TableCell {
  double mean_accuracy = 0.0;
  std::size_t runs = 0;
  bool best = false;
};

struct CurveSeries {
  std::string label;
  std::vector<double> values;  // indexed by epoch
};

struct ComparisonReport {
  std::vector<std::string> columns;  // "bs=<batch size>"
  /// One row per strategy in the fixed order Baseline, GC, AGC, SAM,
  /// SADT Variant1-3; absent cells are nullopt.
  std::vector<std::pair<std::string, std::vector<std::optional<TableCell>>>> rows;
  /// metric name ("train_accuracy", ...) -> one series per run.
  std::map<std::string, std::vector<CurveSeries>> curves;
};

/// Final test accuracy table (mean over seeds, best per column flagged) and
/// aligned per-epoch curves. All runs must share dataset and model.
ComparisonReport compare_runs(std::span<const RunSummary> runs);

std::string table_markdown(const ComparisonReport& report);
std::string table_csv(const ComparisonReport& report);
std::string curves_csv(const ComparisonReport& report);
/// Standalone SVG line chart for one curve metric.
std::string curve_svg(const ComparisonReport& report, const std::string& metric);

/// table.md, table.csv, curves.csv and one SVG per curve metric.
void write_report(const ComparisonReport& report, const std::filesystem::path& dir);

}  // namespace sadt
