// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sadt/nn.hpp"
#include "sadt/optim.hpp"

namespace sadt {

enum class StrategyId { baseline, gc, agc, sam, sadt_v1, sadt_v2, sadt_v3 };

inline constexpr StrategyId kAllStrategies[] = {StrategyId::baseline, StrategyId::gc,
                                                StrategyId::agc,      StrategyId::sam,
                                                StrategyId::sadt_v1,  StrategyId::sadt_v2,
                                                StrategyId::sadt_v3};

std::string to_string(StrategyId id);
StrategyId parse_strategy(const std::string& text);
/// Row label used in comparison tables ("Baseline", "SADT Variant1", ...).
std::string display_name(StrategyId id);
bool is_sadt(StrategyId id);

struct StrategyParams {
  double sigma_w = kDefaultNoiseSigma;  // parameter noise, v1/v2
  double sigma_g = kDefaultNoiseSigma;  // gradient noise, v3
  double rho = 0.05;                    // SAM neighbourhood
  double agc_lambda = kDefaultAgcLambda;
  std::optional<double> ascent_lr;      // v3; unset = the scheduled lr
  bool rollback_to_w = false;           // final SADT update from w instead of w_up
};

/// One training batch: inputs plus the (possibly mixed) target distribution.
struct StepBatch {
  const Tensor& images;
  const Tensor& targets;  // N x num_classes, rows sum to 1
};

struct StepReport {
  double task_loss = 0.0;
  double kl_loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;  // of the gradient handed to the final Adam step
  double wall_ms = 0.0;
  bool perturbation_skipped = false;  // SAM with a zero gradient
};

/// Raised when a loss or gradient turns non-finite. The model is left at the
/// parameters it had before the step.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called with intermediate parameter states inside a step ("w", "w_up",
/// "w_aux", "restored", "final", ...). Used by tests to audit rollbacks.
using StepObserver = std::function<void(std::string_view stage, const ParamSet& params)>;

struct StepContext {
  Model& model;
  AdamState& optimizer;
  StepBatch batch;
  double lr;
  std::uint64_t noise_seed = 0;
  const StepObserver* observer = nullptr;
};

StepReport baseline_step(StepContext& ctx);
StepReport gc_step(StepContext& ctx);
StepReport agc_step(StepContext& ctx, double lambda);
StepReport sam_step(StepContext& ctx, double rho);
StepReport sadt_v1_step(StepContext& ctx, double sigma_w, bool rollback_to_w = false);
StepReport sadt_v2_step(StepContext& ctx, double sigma_w, bool rollback_to_w = false);
StepReport sadt_v3_step(StepContext& ctx, double sigma_g, double ascent_lr, bool rollback_to_w = false);

/// Uniform front end over the step functions above.
class Strategy {
 public:
  Strategy(StrategyId id, StrategyParams params);

  StrategyId id() const { return id_; }
  const StrategyParams& params() const { return params_; }

  /// Throws std::invalid_argument if the model cannot run this strategy
  /// (Variant 2 needs a conv layer).
  void check_model(const Model& model) const;

  StepReport step(StepContext& ctx) const;

 private:
  StrategyId id_;
  StrategyParams params_;
};

}  // namespace sadt
