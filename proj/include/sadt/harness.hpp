// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sadt/config.hpp"
#include "sadt/data.hpp"
#include "sadt/metrics.hpp"

namespace sadt {

inline constexpr const char* kMetricsHeader =
    "step,epoch,phase,task_loss,kl_loss,lr,grad_norm,accuracy,sharpness,divergence,wall_ms";

/// One CSV row. Phases: "step" (one per batch), "train" / "val" (per-epoch
/// evaluation, epoch 0 = before training), "probe" (sharpness and divergence
/// from the initial weights) and a final "test".
struct LogRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::string phase;
  std::optional<double> task_loss, kl_loss, lr, grad_norm, accuracy, sharpness, divergence, wall_ms;
};

struct RunLog {
  ExperimentConfig config;
  std::vector<LogRow> rows;
  std::vector<std::uint64_t> batch_hashes;  // one per step, in order
  Evaluation final_test;
  std::size_t steps = 0;
  ParamSet final_params;
};

/// Training aborted on a non-finite loss; the last good parameters were
/// written next to the log.
class ExperimentAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_csv(const RunLog& log);
std::vector<LogRow> parse_csv(const std::string& text);

/// Train and validation/test sets as the config selects them.
struct LoadedData {
  Dataset train;
  Dataset test;
};
LoadedData load_data(const DataConfig& config);

/// Runs the configured experiment. When `write_outputs` is set the output
/// directory receives metrics.csv, config.ini (resolved), batch_hashes.txt
/// and final.ckpt.
RunLog run_experiment(const ExperimentConfig& config, bool write_outputs = true);
/// Same, on data already in memory.
RunLog run_experiment(const ExperimentConfig& config, const LoadedData& data, bool write_outputs = true);

void write_run_outputs(const RunLog& log, const std::filesystem::path& dir);

/// Keeps freed tensor buffers in the process heap instead of returning them
/// to the kernel after every step (glibc only; a no-op elsewhere).
void retain_heap_memory();

}  // namespace sadt
