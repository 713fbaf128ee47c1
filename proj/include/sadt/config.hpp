// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sadt/nn.hpp"
#include "sadt/strategies.hpp"

namespace sadt {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DataFormat { idx, cifar };

struct DataConfig {
  DataFormat format = DataFormat::idx;
  std::string train_images, train_labels, test_images, test_labels;  // idx
  std::vector<std::string> train_files, test_files;                  // cifar
  std::size_t num_classes = 10;
  std::size_t train_samples = 4096;
  std::size_t test_samples = 1000;
  std::size_t train_eval_samples = 1000;  // unaugmented subset for the per-epoch train row
};

struct ModelConfig {
  Architecture arch = Architecture::simple_cnn;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64};  // tiny_mlp only
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double lr0 = kDefaultInitialLr;
  std::size_t total_steps = 0;  // resolved: epochs * ceil(train_samples / batch_size)
  bool cutmix = true;
  double cutmix_alpha = 1.0;
  std::uint64_t seed = 0;
  std::size_t probe_every = 1;  // epochs between sharpness/divergence probes; 0 = never
  double probe_rho = 0.05;
  std::size_t probe_batches = 4;
};

struct OutputConfig {
  std::string dir = "runs/default";
  bool record_wall_time = false;  // wall_ms makes logs run-dependent
  bool checkpoint = true;
};

struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;
  StrategyId strategy = StrategyId::baseline;
  StrategyParams strategy_params;
  TrainConfig train;
  OutputConfig output;

  /// False when model.seed was defaulted from train.seed; --seed then moves both.
  bool model_seed_explicit = false;
  bool total_steps_explicit = false;
};

/// Parses INI-style text with sections [data] [model] [strategy] [train]
/// [output]. Unknown sections or keys are rejected; every default is filled
/// in so that emit_config() shows the complete run description.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Fully resolved configuration in the same format; parse(emit(c)) == c.
std::string emit_config(const ExperimentConfig& config);

/// Command-line overrides (--seed, --out).
void override_seed(ExperimentConfig& config, std::uint64_t seed);
void override_output_dir(ExperimentConfig& config, const std::string& dir);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace sadt
