// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sadt/report.hpp"

namespace sadt {
namespace {

RunSummary synthetic_run(StrategyId id, std::size_t batch, std::uint64_t seed, double final_acc,
                         std::size_t epochs = 3) {
  RunSummary s;
  s.config = parse_config_text(
      "[data]\ntrain_images = a\ntrain_labels = b\ntest_images = c\ntest_labels = d\n[strategy]\nid = " +
      to_string(id) + "\n");
  s.config.train.batch_size = batch;
  s.config.train.seed = seed;
  for (std::size_t e = 0; e <= epochs; ++e) {
    for (const char* phase : {"train", "val"}) {
      LogRow r;
      r.epoch = e;
      r.phase = phase;
      r.accuracy = final_acc * static_cast<double>(e) / static_cast<double>(epochs);
      r.task_loss = 2.0 - static_cast<double>(e) * 0.1;
      s.rows.push_back(r);
    }
  }
  LogRow t;
  t.epoch = epochs;
  t.phase = "test";
  t.accuracy = final_acc;
  s.rows.push_back(t);
  s.label = to_string(id) + "/bs" + std::to_string(batch) + "/seed" + std::to_string(seed);
  return s;
}

TEST(Report, SelfComparisonIsIdentical) {
  const auto run = synthetic_run(StrategyId::sadt_v1, 64, 0, 0.8);
  const std::vector<RunSummary> runs{run, run};
  const auto report = compare_runs(runs);
  for (const auto& [metric, series] : report.curves) {
    ASSERT_EQ(series.size(), 2u);
    EXPECT_EQ(series[0].values, series[1].values) << metric;
  }
  const auto& row = report.rows[4];
  EXPECT_EQ(row.first, "SADT Variant1");
  ASSERT_TRUE(row.second[0]);
  EXPECT_EQ(row.second[0]->mean_accuracy, 0.8);
  EXPECT_EQ(row.second[0]->runs, 2u);
  EXPECT_TRUE(row.second[0]->best);
}

TEST(Report, TableRowsFollowFixedOrder) {
  const std::vector<RunSummary> runs{synthetic_run(StrategyId::sadt_v3, 64, 0, 0.5),
                                     synthetic_run(StrategyId::baseline, 64, 0, 0.4)};
  const auto report = compare_runs(runs);
  std::vector<std::string> names;
  for (const auto& [name, cells] : report.rows) names.push_back(name);
  EXPECT_EQ(names, (std::vector<std::string>{"Baseline", "GC", "AGC", "SAM", "SADT Variant1", "SADT Variant2",
                                             "SADT Variant3"}));
  const auto md = table_markdown(report);
  EXPECT_LT(md.find("Baseline"), md.find("SADT Variant3"));
  EXPECT_NE(md.find("**0.500**"), std::string::npos) << md;
  EXPECT_FALSE(report.rows[1].second[0].has_value());
}

TEST(Report, BestFlagsMatchScalarArgmax) {
  Rng rng(1);
  std::uniform_real_distribution<double> acc(0.3, 0.9);
  const std::size_t batches[] = {32, 64, 128};
  std::vector<RunSummary> runs;
  std::map<std::pair<StrategyId, std::size_t>, std::vector<double>> table;
  for (auto id : kAllStrategies) {
    for (auto bs : batches) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        // Quantized so ties occur.
        const double a = std::round(acc(rng) * 20) / 20;
        runs.push_back(synthetic_run(id, bs, seed, a));
        table[{id, bs}].push_back(a);
      }
    }
  }
  const auto report = compare_runs(runs);
  ASSERT_EQ(report.columns, (std::vector<std::string>{"bs=32", "bs=64", "bs=128"}));
  for (std::size_t col = 0; col < 3; ++col) {
    double best = -1;
    std::vector<double> means;
    for (auto id : kAllStrategies) {
      const auto& v = table[{id, batches[col]}];
      means.push_back((v[0] + v[1] + v[2]) / 3);
      best = std::max(best, means.back());
    }
    for (std::size_t r = 0; r < means.size(); ++r) {
      const auto& cell = report.rows[r].second[col];
      ASSERT_TRUE(cell);
      EXPECT_EQ(cell->mean_accuracy, means[r]);
      EXPECT_EQ(cell->best, means[r] == best) << r << "," << col;
    }
  }
}

TEST(Report, MismatchedDataRejected) {
  auto a = synthetic_run(StrategyId::baseline, 64, 0, 0.5);
  auto b = synthetic_run(StrategyId::sam, 64, 0, 0.5);
  b.config.data.train_images = "other";
  EXPECT_THROW(compare_runs(std::vector{a, b}), std::invalid_argument);
  auto c = synthetic_run(StrategyId::sam, 64, 0, 0.5);
  c.config.model.arch = Architecture::tiny_mlp;
  EXPECT_THROW(compare_runs(std::vector{a, c}), std::invalid_argument);
  EXPECT_THROW(compare_runs(std::vector{a}), std::invalid_argument);
}

TEST(Report, WritesArtifactsAndLoadsRuns) {
  auto data = testing::make_synthetic_data("report");
  const auto dir = testing::temp_dir("report_runs");
  std::vector<RunSummary> runs;
  for (const char* id : {"baseline", "sadt_v1"}) {
    const auto out = (dir / id).string();
    run_experiment(parse_config_text(testing::synthetic_config_text(data, id, "epochs = 1\n", out)));
    runs.push_back(load_run(out));
    EXPECT_EQ(load_run(dir / id / "metrics.csv").rows.size(), runs.back().rows.size());
  }
  const auto report = compare_runs(runs);
  write_report(report, dir / "report");
  for (const char* f : {"table.md", "table.csv", "curves.csv", "train_accuracy.svg", "train_loss.svg",
                        "val_accuracy.svg", "val_loss.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "report" / f)) << f;
  }
  const auto svg = curve_svg(report, "val_loss");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
  const auto curves = curves_csv(report);
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 3);  // header + epochs 0, 1
}

}  // namespace
}  // namespace sadt
