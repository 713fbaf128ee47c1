// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "sadt/data.hpp"
#include "sadt/nn.hpp"

namespace sadt {

inline constexpr double kDefaultProbeRho = 0.05;

struct SharpnessEstimate {
  double value = 0.0;
  double rho = 0.0;
  std::size_t batches = 0;
  std::size_t zero_gradient_batches = 0;  // contributed 0
};

struct DivergenceEstimate {
  double value = 0.0;
  std::size_t samples = 0;
};

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Mean loss of batch `index` with every parameter registered as a tape leaf
/// (in ParamSet order).
using BatchLoss = std::function<Var(Tape& tape, const ParamSet& params, std::size_t index)>;

/// Registers each parameter as a named leaf and returns the handles.
std::vector<Var> register_leaves(Tape& tape, const ParamSet& params);

/// Per batch: one normalised ascent step delta = rho * g / |g| and
/// loss(w + delta) - loss(w); averaged over `batch_count` batches. `params`
/// is restored bit for bit after every batch.
SharpnessEstimate estimate_sharpness(ParamSet& params, std::size_t batch_count, double rho,
                                     const BatchLoss& loss);

/// Hard-label cross-entropy sharpness of `model` over the given batches.
SharpnessEstimate estimate_sharpness(Model& model, const Dataset& data,
                                     std::span<const IndexBatch> batches, double rho);

/// Mean over samples of KL(f(x; a) || f(x; b)).
DivergenceEstimate model_divergence(const Model& a, const Model& b, const Dataset& data);

/// Top-1 accuracy and mean cross-entropy on hard labels.
Evaluation evaluate(const Model& model, const Dataset& data, std::size_t chunk = 256);

}  // namespace sadt
