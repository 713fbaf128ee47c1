// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sadt/params.hpp"
#include "sadt/rng.hpp"

namespace sadt {

inline constexpr double kDefaultInitialLr = 1e-4;
inline constexpr double kDefaultNoiseSigma = 1e-4;
inline constexpr double kDefaultAgcLambda = 0.01;
inline constexpr double kAgcWeightFloor = 1e-3;

/// lr(t) = initial_lr * 0.5 * (1 + cos(pi * t / total_steps)).
struct CosineSchedule {
  double initial_lr = kDefaultInitialLr;
  std::size_t total_steps = 1;

  double lr(std::size_t step) const;
};

double cosine_lr(const CosineSchedule& schedule, std::size_t step);

class AdamState {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  explicit AdamState(const ParamSet& params);

  std::uint64_t step() const { return step_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }

 private:
  friend void adam_step(ParamSet&, const GradSet&, AdamState&, double);

  std::vector<std::string> names_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t step_ = 0;
};

/// One bias-corrected Adam update in place; advances `state` by one step.
void adam_step(ParamSet& params, const GradSet& grads, AdamState& state, double lr);

/// Subtracts the per-unit mean from every weight gradient (conv: over
/// C x kh x kw per filter; dense: over inputs per output unit). Bias and
/// other gradients are returned unchanged.
GradSet gradient_centralize(GradSet grads);

/// Unit-wise clipping: if |g_u| / max(|w_u|, 1e-3) > lambda the unit is
/// rescaled to norm lambda * max(|w_u|, 1e-3). Weight units are output rows;
/// a bias vector is one unit.
GradSet adaptive_gradient_clip(const ParamSet& params, GradSet grads, double lambda);

/// Elementwise sum of the parts, accumulated in part order.
GradSet aggregate_gradients(std::span<const GradSet> parts);

enum class LayerFilter { all, last_conv, last_dense, gradient_all };

std::string to_string(LayerFilter filter);

/// What add_noise (or apply_offset) did to a tensor set: the exact offsets
/// applied and the values they were applied to. Single use.
struct NoiseRecord {
  std::vector<std::string> names;
  std::vector<Tensor> noise;
  std::vector<Tensor> base;
  double sigma = 0.0;
  std::uint64_t stream_id = 0;
  bool consumed = false;

  bool touches(const std::string& name) const;
};

/// Adds i.i.d. N(0, sigma^2) noise to the entries `filter` selects, drawn in
/// entry order from `rng`. Throws if the filter selects nothing.
NoiseRecord add_noise(ParamSet& target, double sigma, LayerFilter filter, Rng& rng,
                      std::uint64_t stream_id = 0);
/// Gradient sets only accept `all` / `gradient_all`.
NoiseRecord add_noise(GradSet& target, double sigma, LayerFilter filter, Rng& rng,
                      std::uint64_t stream_id = 0);

/// Moves every parameter by `scale * offset` and records it like noise.
NoiseRecord apply_offset(ParamSet& target, const GradSet& offset, double scale);

/// Undoes add_noise/apply_offset. The target must still be in the exact state
/// the record produced; the pre-noise values are restored bit for bit and the
/// record is consumed.
void subtract_noise(ParamSet& target, NoiseRecord& record);
void subtract_noise(GradSet& target, NoiseRecord& record);

}  // namespace sadt
