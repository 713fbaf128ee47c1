// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sadt/config.hpp"

namespace sadt {
namespace {

const char* kMinimal =
    "[data]\n"
    "train_images = a\ntrain_labels = b\ntest_images = c\ntest_labels = d\n"
    "[strategy]\nid = sadt_v1\n";

TEST(Config, MinimalConfigEchoesDefaults) {
  const auto c = parse_config_text(kMinimal);
  EXPECT_EQ(c.strategy, StrategyId::sadt_v1);
  EXPECT_EQ(c.strategy_params.sigma_w, 0.0001);
  EXPECT_EQ(c.train.lr0, 0.0001);
  EXPECT_EQ(c.train.epochs, 20u);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.data.train_samples, 4096u);
  EXPECT_EQ(c.train.total_steps, 20u * 64u);
  const auto text = emit_config(c);
  for (const char* line : {"sigma_w = 0.0001", "lr0 = 0.0001", "rho = 0.05", "agc_lambda = 0.01",
                           "cutmix_alpha = 1", "ascent_lr = schedule", "rollback_to_w = false",
                           "total_steps = 1280", "probe_rho = 0.05", "arch = simple_cnn"}) {
    EXPECT_NE(text.find(line), std::string::npos) << line << "\n" << text;
  }
}

TEST(Config, UnknownKeyNamed) {
  try {
    parse_config_text(std::string(kMinimal) + "sttrategy = sam\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sttrategy"), std::string::npos) << e.what();
  }
  try {
    parse_config_text(std::string(kMinimal) + "[sttrategy]\nid = sam\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sttrategy"), std::string::npos) << e.what();
  }
}

TEST(Config, RoundTripIdentical) {
  auto c = parse_config_text(std::string(kMinimal) +
                             "[train]\nlr0 = 3.3e-4\nepochs = 3\n[model]\narch = tiny_mlp\nhidden = 16, 8\n");
  c.strategy_params.ascent_lr = 0.1 + 0.2;
  const auto text = emit_config(c);
  const auto back = parse_config_text(text);
  EXPECT_EQ(emit_config(back), text);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.strategy_params.ascent_lr, 0.1 + 0.2);
  EXPECT_EQ(back.model.hidden, (std::vector<std::size_t>{16, 8}));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config_text("[strategy]\nid = sam\n"), ConfigError);
  try {
    parse_config_text("[data]\ntrain_images = a\ntrain_labels = b\ntest_images = c\ntest_labels = d\n"
                      "[strategy]\nid = sadt_v9\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("strategy"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text(std::string(kMinimal) + "[train]\nepochs = many\n"), ConfigError);
  EXPECT_THROW(parse_config_text(std::string(kMinimal) + "[train]\nbatch_size = 0\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[data]\nformat = cifar\n[strategy]\nid = sam\n"), ConfigError);
  EXPECT_THROW(parse_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, CifarFilesList) {
  const auto c = parse_config_text("[data]\nformat = cifar\ntrain_files = a.bin, b.bin\ntest_files = t.bin\n"
                                   "[strategy]\nid = sam\n");
  EXPECT_EQ(c.data.train_files, (std::vector<std::string>{"a.bin", "b.bin"}));
  EXPECT_EQ(parse_config_text(emit_config(c)).data.train_files, c.data.train_files);
}

TEST(Config, SeedOverrides) {
  auto c = parse_config_text(std::string(kMinimal) + "[train]\nseed = 4\n");
  EXPECT_EQ(c.model.seed, 4u);
  override_seed(c, 9);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.model.seed, 9u);
  auto fixed = parse_config_text(std::string(kMinimal) + "[model]\nseed = 1\n[train]\nseed = 4\n");
  override_seed(fixed, 9);
  EXPECT_EQ(fixed.model.seed, 1u);
  override_output_dir(fixed, "elsewhere");
  EXPECT_EQ(fixed.output.dir, "elsewhere");
}

TEST(Config, ParsesFileWithComments) {
  const auto dir = testing::temp_dir("config_file");
  std::ofstream(dir / "c.ini") << "# experiment\n" << kMinimal << "# done\n";
  EXPECT_EQ(parse_config(dir / "c.ini").strategy, StrategyId::sadt_v1);
}

}  // namespace
}  // namespace sadt
