// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "sadt/ops.hpp"
#include "sadt/optim.hpp"

namespace sadt {

std::vector<Var> register_leaves(Tape& tape, const ParamSet& params) {
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const auto& e : params.entries()) leaves.push_back(tape.leaf(e.name, e.value));
  return leaves;
}

SharpnessEstimate estimate_sharpness(ParamSet& params, std::size_t batch_count, double rho,
                                     const BatchLoss& loss) {
  if (!(rho > 0.0)) throw std::invalid_argument("sharpness rho must be > 0");
  if (batch_count == 0) throw std::invalid_argument("sharpness needs at least one batch");
  SharpnessEstimate est;
  est.rho = rho;
  est.batches = batch_count;
  double total = 0.0;
  for (std::size_t b = 0; b < batch_count; ++b) {
    Tape tape;
    Var l = loss(tape, params, b);
    const double base = l.value().item();
    GradSet grads = tape.backward(l);
    const double norm = grads.global_norm();
    if (norm == 0.0) {
      ++est.zero_gradient_batches;
      continue;
    }
    auto record = apply_offset(params, grads, rho / norm);
    Tape probe;
    const double perturbed = loss(probe, params, b).value().item();
    subtract_noise(params, record);
    total += perturbed - base;
  }
  est.value = total / static_cast<double>(batch_count);
  return est;
}

SharpnessEstimate estimate_sharpness(Model& model, const Dataset& data,
                                     std::span<const IndexBatch> batches, double rho) {
  std::vector<Tensor> images, targets;
  for (const auto& idx : batches) {
    images.push_back(data.gather_images(idx));
    targets.push_back(one_hot(data.gather_labels(idx), data.num_classes));
  }
  // The loss closure reads parameters through the model, which owns `params`.
  BatchLoss loss = [&](Tape& tape, const ParamSet&, std::size_t i) {
    Var logits = model.forward(tape, images[i]);
    return ops::softmax_cross_entropy(logits, tape.constant(targets[i]));
  };
  return estimate_sharpness(model.params(), batches.size(), rho, loss);
}

DivergenceEstimate model_divergence(const Model& a, const Model& b, const Dataset& data) {
  if (!(a.spec() == b.spec()) || !a.params().same_layout(b.params())) {
    throw std::invalid_argument("model_divergence: architectures differ");
  }
  if (data.size() == 0) throw std::invalid_argument("model_divergence: empty dataset");
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<std::size_t> idx(std::min(kChunk, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    Tensor x = data.gather_images(idx);
    Tape tape;
    Var pa = tape.constant(forward_logits(a, x));
    Var pb = tape.constant(forward_logits(b, x));
    total += ops::kl_divergence(pa, pb, true).value().item() * static_cast<double>(idx.size());
  }
  return {total / static_cast<double>(data.size()), data.size()};
}

Evaluation evaluate(const Model& model, const Dataset& data, std::size_t chunk) {
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    std::vector<std::size_t> idx(std::min(chunk, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto labels = data.gather_labels(idx);
    Tape tape;
    Var logits = model.forward(tape, data.gather_images(idx), false);
    Var logp = ops::log_softmax(logits);
    const std::size_t classes = logits.shape()[1];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double* row = logp.value().raw() + i * classes;
      const auto best = static_cast<std::size_t>(std::max_element(row, row + classes) - row);
      if (best == static_cast<std::size_t>(labels[i])) ++correct;
      loss_sum -= row[labels[i]];
    }
  }
  const double n = static_cast<double>(data.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

}  // namespace sadt
