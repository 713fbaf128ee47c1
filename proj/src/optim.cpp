// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace sadt {

double CosineSchedule::lr(std::size_t step) const {
  if (step > total_steps) {
    throw std::out_of_range(fmt::format("schedule step {} beyond total {}", step, total_steps));
  }
  if (total_steps == 0) return initial_lr;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return initial_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double cosine_lr(const CosineSchedule& schedule, std::size_t step) { return schedule.lr(step); }

AdamState::AdamState(const ParamSet& params) {
  for (const auto& e : params.entries()) {
    names_.push_back(e.name);
    m_.push_back(Tensor::zeros(e.value.shape()));
    v_.push_back(Tensor::zeros(e.value.shape()));
  }
}

void adam_step(ParamSet& params, const GradSet& grads, AdamState& state, double lr) {
  grads.check_aligned(params);
  if (state.names_.size() != params.size()) {
    throw AlignmentError("optimizer state does not match parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.names_[i] != params[i].name || state.m_[i].shape() != params[i].value.shape()) {
      throw AlignmentError("optimizer state entry " + state.names_[i] + " does not match " +
                           params[i].name);
    }
  }
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double correction2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto g = grads[i].value.data();
    auto m = state.m_[i].data();
    auto v = state.v_[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = AdamState::kBeta1 * m[k] + (1.0 - AdamState::kBeta1) * g[k];
      v[k] = AdamState::kBeta2 * v[k] + (1.0 - AdamState::kBeta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= lr * (m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon));
    }
  }
}

namespace {

bool is_weight(const std::string& name, const Tensor& t) {
  const auto kind = classify_param(name);
  return (kind == LayerKind::conv || kind == LayerKind::dense) && t.rank() >= 2;
}

}  // namespace

GradSet gradient_centralize(GradSet grads) {
  for (auto& e : grads.entries()) {
    if (!is_weight(e.name, e.value)) continue;
    const std::size_t units = e.value.dim(0);
    const std::size_t len = e.value.size() / units;
    for (std::size_t u = 0; u < units; ++u) {
      double* row = e.value.raw() + u * len;
      double acc = 0.0;
      for (std::size_t k = 0; k < len; ++k) acc += row[k];
      const double mu = acc / static_cast<double>(len);
      for (std::size_t k = 0; k < len; ++k) row[k] -= mu;
    }
  }
  return grads;
}

GradSet adaptive_gradient_clip(const ParamSet& params, GradSet grads, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("AGC lambda must be positive");
  grads.check_aligned(params);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& g = grads[i].value;
    const auto& w = params[i].value;
    const std::size_t units = is_weight(grads[i].name, g) ? g.dim(0) : 1;
    const std::size_t len = g.size() / units;
    for (std::size_t u = 0; u < units; ++u) {
      double* gr = g.raw() + u * len;
      const double* wr = w.raw() + u * len;
      double gsq = 0.0, wsq = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        gsq += gr[k] * gr[k];
        wsq += wr[k] * wr[k];
      }
      const double g_norm = std::sqrt(gsq);
      const double w_norm = std::max(std::sqrt(wsq), kAgcWeightFloor);
      if (g_norm > 0.0 && g_norm / w_norm > lambda) {
        const double factor = lambda * w_norm / g_norm;
        for (std::size_t k = 0; k < len; ++k) gr[k] *= factor;
      }
    }
  }
  return grads;
}

GradSet aggregate_gradients(std::span<const GradSet> parts) {
  if (parts.empty()) throw std::invalid_argument("aggregate_gradients: no parts");
  GradSet out = parts.front();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    parts[p].check_aligned(out);
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto dst = out[i].value.data();
      auto src = parts[p][i].value.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  return out;
}

}  // namespace sadt
