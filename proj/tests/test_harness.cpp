// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sadt/checkpoint.hpp"
#include "sadt/harness.hpp"

namespace sadt {
namespace {

using testing::make_synthetic_data;
using testing::synthetic_config_text;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_phase(const RunLog& log, const std::string& phase) {
  return static_cast<std::size_t>(
      std::count_if(log.rows.begin(), log.rows.end(), [&](const LogRow& r) { return r.phase == phase; }));
}

class HarnessTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new testing::SyntheticData(make_synthetic_data("harness")); }
  static void TearDownTestSuite() { delete data_; }
  static ExperimentConfig config(const std::string& strategy, const std::string& extra = "",
                                 const std::string& out = "") {
    return parse_config_text(synthetic_config_text(*data_, strategy, extra, out));
  }
  static testing::SyntheticData* data_;
};
testing::SyntheticData* HarnessTest::data_ = nullptr;

TEST_F(HarnessTest, CsvHeaderIsExact) {
  const auto log = run_experiment(config("baseline", "epochs = 0\n"), false);
  const auto csv = to_csv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,epoch,phase,task_loss,kl_loss,lr,grad_norm,accuracy,sharpness,divergence,wall_ms");
}

TEST_F(HarnessTest, ZeroEpochsGivesInitialEvaluationOnly) {
  const auto log = run_experiment(config("sadt_v1", "epochs = 0\n"), false);
  EXPECT_EQ(log.steps, 0u);
  std::vector<std::string> phases;
  for (const auto& r : log.rows) phases.push_back(r.phase);
  EXPECT_EQ(phases, (std::vector<std::string>{"train", "val", "probe", "test"}));
  EXPECT_EQ(log.rows[2].divergence, 0.0);
}

TEST_F(HarnessTest, RowCountsAndFiniteValues) {
  const auto log = run_experiment(config("sadt_v2", "epochs = 3\nprobe_every = 2\n"), false);
  const std::size_t steps_per_epoch = (data_->train + 15) / 16;
  EXPECT_EQ(log.steps, 3 * steps_per_epoch);
  EXPECT_EQ(count_phase(log, "step"), log.steps);
  EXPECT_EQ(count_phase(log, "train"), 4u);
  EXPECT_EQ(count_phase(log, "val"), 4u);
  EXPECT_EQ(count_phase(log, "probe"), 2u);  // epochs 0 and 2
  EXPECT_EQ(count_phase(log, "test"), 1u);
  EXPECT_EQ(log.rows.size(), log.steps + 4 + 4 + 2 + 1);
  EXPECT_EQ(log.batch_hashes.size(), log.steps);
  for (const auto& r : log.rows) {
    for (const auto& v : {r.task_loss, r.kl_loss, r.lr, r.grad_norm, r.accuracy, r.sharpness, r.divergence}) {
      if (v) {
        ASSERT_TRUE(std::isfinite(*v));
      }
    }
    if (r.phase == "step") {
      ASSERT_GE(*r.kl_loss, 0.0);
      ASSERT_FALSE(r.wall_ms.has_value());
    }
  }
}

TEST_F(HarnessTest, LearningRateFollowsCosineSchedule) {
  const auto cfg = config("baseline");
  const auto log = run_experiment(cfg, false);
  const CosineSchedule s{cfg.train.lr0, cfg.train.total_steps};
  std::size_t t = 0;
  for (const auto& r : log.rows) {
    if (r.phase != "step") continue;
    ASSERT_EQ(r.step, t);
    ASSERT_EQ(*r.lr, s.lr(t));
    ++t;
  }
}

TEST_F(HarnessTest, IdenticalConfigsGiveByteIdenticalOutputs) {
  const auto dir = testing::temp_dir("harness_det");
  const auto a = config("sadt_v3", "", (dir / "a").string());
  const auto b = config("sadt_v3", "", (dir / "b").string());
  run_experiment(a);
  run_experiment(b);
  for (const char* f : {"metrics.csv", "batch_hashes.txt", "final.ckpt"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_FALSE(slurp(dir / "a" / f).empty()) << f;
  }
}

TEST_F(HarnessTest, AllStrategiesConsumeIdenticalBatches) {
  std::vector<std::uint64_t> reference;
  for (auto id : kAllStrategies) {
    const auto log = run_experiment(config(to_string(id)), false);
    if (reference.empty()) reference = log.batch_hashes;
    EXPECT_EQ(log.batch_hashes, reference) << to_string(id);
    for (const auto& r : log.rows) {
      if (r.phase == "step" && !is_sadt(id)) {
        ASSERT_EQ(*r.kl_loss, 0.0) << to_string(id);
      }
    }
  }
}

TEST_F(HarnessTest, SharedInitialisationAcrossStrategies) {
  const auto a = run_experiment(config("baseline", "epochs = 0\n"), false);
  const auto b = run_experiment(config("sam", "epochs = 0\n"), false);
  EXPECT_TRUE(a.final_params.bit_equal(b.final_params));
  EXPECT_EQ(to_csv(a).substr(0, 200), to_csv(b).substr(0, 200));
}

TEST_F(HarnessTest, OutputsWrittenAndReadable) {
  const auto dir = testing::temp_dir("harness_out");
  const auto cfg = config("agc", "", (dir / "run").string());
  const auto log = run_experiment(cfg);
  EXPECT_EQ(slurp(dir / "run" / "metrics.csv"), to_csv(log));
  EXPECT_TRUE(parse_config(dir / "run" / "config.ini") == cfg);
  EXPECT_TRUE(load_checkpoint(dir / "run" / "final.ckpt").bit_equal(log.final_params));
  const auto rows = parse_csv(slurp(dir / "run" / "metrics.csv"));
  ASSERT_EQ(rows.size(), log.rows.size());
  EXPECT_EQ(rows.back().accuracy, log.rows.back().accuracy);
  EXPECT_EQ(log.rows.back().accuracy, log.final_test.accuracy);
}

TEST_F(HarnessTest, WallTimeIsOptIn) {
  auto cfg = config("baseline", "epochs = 1\n");
  cfg.output.record_wall_time = true;
  const auto log = run_experiment(cfg, false);
  for (const auto& r : log.rows) {
    if (r.phase == "step") {
      ASSERT_TRUE(r.wall_ms && *r.wall_ms >= 0.0);
    }
  }
}

TEST_F(HarnessTest, NonFiniteLossAbortsWithDiagnostics) {
  const auto dir = testing::temp_dir("harness_abort");
  auto cfg = config("baseline", "epochs = 3\nlr0 = 1e200\n", (dir / "run").string());
  try {
    run_experiment(cfg);
    FAIL() << "expected abort";
  } catch (const ExperimentAborted& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "metrics.csv"));
  const auto last_good = load_checkpoint(dir / "run" / "last_good.ckpt");
  for (const auto& e : last_good.entries()) {
    for (double v : e.value.data()) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST_F(HarnessTest, TrainingImprovesSyntheticAccuracy) {
  const auto log = run_experiment(config("sadt_v1", "epochs = 4\nlr0 = 0.003\n"), false);
  EXPECT_GT(log.final_test.accuracy, 0.5);
}

TEST_F(HarnessTest, InsufficientDataRejected) {
  auto cfg = config("baseline");
  cfg.data.train_samples = 10000;
  EXPECT_THROW(run_experiment(cfg, false), std::exception);
}

TEST(CsvFormat, RoundTripsEmptyFields) {
  RunLog log;
  LogRow r;
  r.step = 3;
  r.epoch = 1;
  r.phase = "probe";
  r.sharpness = 0.1 + 0.2;
  log.rows.push_back(r);
  const auto csv = to_csv(log);
  EXPECT_NE(csv.find("3,1,probe,,,,,,0.30000000000000004,,"), std::string::npos) << csv;
  const auto back = parse_csv(csv);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].sharpness, 0.1 + 0.2);
  EXPECT_FALSE(back[0].task_loss.has_value());
  EXPECT_THROW(parse_csv("bad,header\n"), std::runtime_error);
}

}  // namespace
}  // namespace sadt
