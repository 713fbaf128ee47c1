// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/strategies.hpp"

#include <array>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "sadt/ops.hpp"

namespace sadt {

std::string to_string(StrategyId id) {
  switch (id) {
    case StrategyId::baseline: return "baseline";
    case StrategyId::gc: return "gc";
    case StrategyId::agc: return "agc";
    case StrategyId::sam: return "sam";
    case StrategyId::sadt_v1: return "sadt_v1";
    case StrategyId::sadt_v2: return "sadt_v2";
    case StrategyId::sadt_v3: return "sadt_v3";
  }
  return "?";
}

StrategyId parse_strategy(const std::string& text) {
  for (auto id : kAllStrategies) {
    if (to_string(id) == text) return id;
  }
  throw std::invalid_argument("unknown strategy id: " + text);
}

std::string display_name(StrategyId id) {
  switch (id) {
    case StrategyId::baseline: return "Baseline";
    case StrategyId::gc: return "GC";
    case StrategyId::agc: return "AGC";
    case StrategyId::sam: return "SAM";
    case StrategyId::sadt_v1: return "SADT Variant1";
    case StrategyId::sadt_v2: return "SADT Variant2";
    case StrategyId::sadt_v3: return "SADT Variant3";
  }
  return "?";
}

bool is_sadt(StrategyId id) {
  return id == StrategyId::sadt_v1 || id == StrategyId::sadt_v2 || id == StrategyId::sadt_v3;
}

namespace {

void observe(const StepContext& ctx, std::string_view stage) {
  if (ctx.observer != nullptr && *ctx.observer) (*ctx.observer)(stage, ctx.model.params());
}

void check_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) throw NonFiniteError(fmt::format("{} is not finite ({})", what, value));
}

void check_finite(const GradSet& grads, std::string_view what) {
  for (const auto& e : grads.entries()) {
    for (double v : e.value.data()) {
      if (!std::isfinite(v)) throw NonFiniteError(fmt::format("{} has a non-finite entry in {}", what, e.name));
    }
  }
}

struct TaskPass {
  double loss;
  Tensor logits;
  GradSet grads;
};

// Mixed-label cross-entropy and its gradient at the model's current weights.
TaskPass task_pass(const StepContext& ctx) {
  Tape tape;
  Var logits = ctx.model.forward(tape, ctx.batch.images);
  Var loss = ops::softmax_cross_entropy(logits, tape.constant(ctx.batch.targets));
  const double value = loss.value().item();
  check_finite(value, "task loss");
  Tensor logit_values = logits.value();
  GradSet grads = tape.backward(loss);
  check_finite(grads, "task gradient");
  return {value, std::move(logit_values), std::move(grads)};
}

struct DistillPass {
  double kl;
  GradSet grads;
};

// KL(f(x; w) || f(x; current)) with the teacher side held constant.
DistillPass distill_pass(const StepContext& ctx, const Tensor& teacher_logits) {
  Tape tape;
  Var student = ctx.model.forward(tape, ctx.batch.images);
  Var kl = ops::kl_divergence(tape.constant(teacher_logits), student, /*detach_p=*/true);
  const double value = kl.value().item();
  check_finite(value, "KL loss");
  GradSet grads = tape.backward(kl);
  check_finite(grads, "KL gradient");
  return {value, std::move(grads)};
}

StepReport descend(StepContext& ctx, const GradSet& grads, double task_loss) {
  adam_step(ctx.model.params(), grads, ctx.optimizer, ctx.lr);
  observe(ctx, "final");
  StepReport r;
  r.task_loss = task_loss;
  r.lr = ctx.lr;
  r.grad_norm = grads.global_norm();
  return r;
}

// Steps (1)-(2) shared by every variant: gradient at w, then a provisional
// Adam update on a throwaway copy of the optimizer state, giving w_up.
struct SelfTeacher {
  TaskPass task;
  std::optional<ParamSet> original;
};

SelfTeacher make_self_teacher(StepContext& ctx, bool rollback_to_w) {
  observe(ctx, "w");
  SelfTeacher st{task_pass(ctx), std::nullopt};
  if (rollback_to_w) st.original = ctx.model.params();
  AdamState transient = ctx.optimizer;
  adam_step(ctx.model.params(), st.task.grads, transient, ctx.lr);
  observe(ctx, "w_up");
  return st;
}

StepReport finish_sadt(StepContext& ctx, SelfTeacher& st, std::span<const GradSet> parts, double kl) {
  GradSet final_grads = aggregate_gradients(parts);
  if (st.original) ctx.model.params() = *st.original;
  auto report = descend(ctx, final_grads, st.task.loss);
  report.kl_loss = kl;
  return report;
}

}  // namespace

StepReport baseline_step(StepContext& ctx) {
  observe(ctx, "w");
  auto pass = task_pass(ctx);
  return descend(ctx, pass.grads, pass.loss);
}

StepReport gc_step(StepContext& ctx) {
  observe(ctx, "w");
  auto pass = task_pass(ctx);
  return descend(ctx, gradient_centralize(std::move(pass.grads)), pass.loss);
}

StepReport agc_step(StepContext& ctx, double lambda) {
  observe(ctx, "w");
  auto pass = task_pass(ctx);
  return descend(ctx, adaptive_gradient_clip(ctx.model.params(), std::move(pass.grads), lambda),
                 pass.loss);
}

StepReport sam_step(StepContext& ctx, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("SAM rho must be > 0");
  observe(ctx, "w");
  auto pass = task_pass(ctx);
  const double norm = pass.grads.global_norm();
  if (norm == 0.0) {
    auto report = descend(ctx, pass.grads, pass.loss);
    report.perturbation_skipped = true;
    return report;
  }
  auto record = apply_offset(ctx.model.params(), pass.grads, rho / norm);
  observe(ctx, "w_adv");
  auto adversarial = task_pass(ctx);
  subtract_noise(ctx.model.params(), record);
  observe(ctx, "restored");
  return descend(ctx, adversarial.grads, pass.loss);
}

StepReport sadt_v1_step(StepContext& ctx, double sigma_w, bool rollback_to_w) {
  auto st = make_self_teacher(ctx, rollback_to_w);
  Rng rng(derive_seed(ctx.noise_seed, {1}));
  auto record = add_noise(ctx.model.params(), sigma_w, LayerFilter::all, rng, 1);
  observe(ctx, "w_aux");
  auto aux = distill_pass(ctx, st.task.logits);
  subtract_noise(ctx.model.params(), record);
  observe(ctx, "restored");
  std::array<GradSet, 2> parts{std::move(st.task.grads), std::move(aux.grads)};
  return finish_sadt(ctx, st, parts, aux.kl);
}

StepReport sadt_v2_step(StepContext& ctx, double sigma_w, bool rollback_to_w) {
  ctx.model.last_conv_layer();  // throws for conv-free architectures
  auto st = make_self_teacher(ctx, rollback_to_w);

  // Two auxiliary teachers, each on its own noise sub-stream.
  Rng rng1(derive_seed(ctx.noise_seed, {1}));
  auto record1 = add_noise(ctx.model.params(), sigma_w, LayerFilter::last_conv, rng1, 1);
  observe(ctx, "w_aux1");
  auto aux1 = distill_pass(ctx, st.task.logits);
  subtract_noise(ctx.model.params(), record1);
  observe(ctx, "restored1");

  Rng rng2(derive_seed(ctx.noise_seed, {2}));
  auto record2 = add_noise(ctx.model.params(), sigma_w, LayerFilter::last_dense, rng2, 2);
  observe(ctx, "w_aux2");
  auto aux2 = distill_pass(ctx, st.task.logits);
  subtract_noise(ctx.model.params(), record2);
  observe(ctx, "restored2");

  std::array<GradSet, 3> parts{std::move(st.task.grads), std::move(aux1.grads), std::move(aux2.grads)};
  // kl_loss reports the sum of both teachers' KL terms.
  return finish_sadt(ctx, st, parts, aux1.kl + aux2.kl);
}

StepReport sadt_v3_step(StepContext& ctx, double sigma_g, double ascent_lr, bool rollback_to_w) {
  if (!(ascent_lr >= 0.0)) throw std::invalid_argument("ascent_lr must be >= 0");
  auto st = make_self_teacher(ctx, rollback_to_w);
  GradSet noisy = st.task.grads;
  Rng rng(derive_seed(ctx.noise_seed, {1}));
  add_noise(noisy, sigma_g, LayerFilter::gradient_all, rng, 1);
  auto ascent = apply_offset(ctx.model.params(), noisy, ascent_lr);
  observe(ctx, "w_aux");
  auto aux = distill_pass(ctx, st.task.logits);
  subtract_noise(ctx.model.params(), ascent);
  observe(ctx, "restored");
  std::array<GradSet, 2> parts{std::move(st.task.grads), std::move(aux.grads)};
  return finish_sadt(ctx, st, parts, aux.kl);
}

Strategy::Strategy(StrategyId id, StrategyParams params) : id_(id), params_(params) {
  if (!(params_.sigma_w >= 0.0) || !(params_.sigma_g >= 0.0)) {
    throw std::invalid_argument("noise scales must be >= 0");
  }
  if (id_ == StrategyId::sam && !(params_.rho > 0.0)) throw std::invalid_argument("SAM rho must be > 0");
  if (id_ == StrategyId::agc && !(params_.agc_lambda > 0.0)) {
    throw std::invalid_argument("AGC lambda must be > 0");
  }
  if (params_.ascent_lr && !(*params_.ascent_lr >= 0.0)) {
    throw std::invalid_argument("ascent_lr must be >= 0");
  }
}

void Strategy::check_model(const Model& model) const {
  if (id_ == StrategyId::sadt_v2) {
    if (!model.params().last_layer(LayerKind::conv)) {
      throw std::invalid_argument("strategy sadt_v2 needs a model with a conv layer, got " +
                                  to_string(model.spec().arch));
    }
  }
}

StepReport Strategy::step(StepContext& ctx) const {
  const ParamSet before = ctx.model.params();
  const AdamState state_before = ctx.optimizer;
  const auto start = std::chrono::steady_clock::now();
  StepReport report;
  try {
    switch (id_) {
      case StrategyId::baseline: report = baseline_step(ctx); break;
      case StrategyId::gc: report = gc_step(ctx); break;
      case StrategyId::agc: report = agc_step(ctx, params_.agc_lambda); break;
      case StrategyId::sam: report = sam_step(ctx, params_.rho); break;
      case StrategyId::sadt_v1: report = sadt_v1_step(ctx, params_.sigma_w, params_.rollback_to_w); break;
      case StrategyId::sadt_v2: report = sadt_v2_step(ctx, params_.sigma_w, params_.rollback_to_w); break;
      case StrategyId::sadt_v3:
        report = sadt_v3_step(ctx, params_.sigma_g, params_.ascent_lr.value_or(ctx.lr),
                              params_.rollback_to_w);
        break;
    }
  } catch (const NonFiniteError&) {
    ctx.model.params() = before;
    ctx.optimizer = state_before;
    throw;
  }
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace sadt
