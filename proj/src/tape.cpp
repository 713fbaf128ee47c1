// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/tape.hpp"

#include <fmt/format.h>

namespace sadt {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw TapeError("use of an empty Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ != nullptr && tape_->requires_grad(id_); }

void Tape::check_live() const {
  if (consumed_) throw TapeError("tape already consumed by backward()");
}

void Tape::check_owner(const Var& v) const {
  if (&v.tape() != this) throw TapeError("Var belongs to a different tape");
}

Var Tape::constant(Tensor value) {
  check_live();
  nodes_.push_back({std::move(value), {}, nullptr, std::nullopt, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(std::string name, Tensor value) {
  check_live();
  for (const auto& [existing, id] : leaves_) {
    if (existing == name) throw TapeError("duplicate leaf name: " + name);
  }
  nodes_.push_back({std::move(value), {}, nullptr, std::nullopt, true});
  leaves_.emplace_back(std::move(name), nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward_fn) {
  check_live();
  bool needs = false;
  for (auto p : parents) needs = needs || nodes_.at(p).requires_grad;
  if (!needs) {
    parents.clear();
    backward_fn = nullptr;
  }
  nodes_.push_back({std::move(value), std::move(parents), std::move(backward_fn), std::nullopt, needs});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_.at(id);
  if (!node.grad) node.grad = Tensor::zeros(node.value.shape());
  return *node.grad;
}

GradSet Tape::backward(Var loss) {
  check_live();
  check_owner(loss);
  if (loss.value().size() != 1) {
    throw TapeError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  consumed_ = true;
  if (nodes_[loss.id()].requires_grad) {
    grad(loss.id()).fill(1.0);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      auto& node = nodes_[i];
      if (!node.backward_fn || !node.grad) continue;
      // Move the gradient out so the closure can take a stable reference.
      Tensor g = std::move(*node.grad);
      node.grad.reset();
      node.backward_fn(*this, g);
      node.backward_fn = nullptr;
      node.grad = std::move(g);
    }
  }
  GradSet out;
  for (const auto& [name, id] : leaves_) {
    auto& node = nodes_[id];
    out.add(name, node.grad ? std::move(*node.grad) : Tensor::zeros(node.value.shape()));
  }
  return out;
}

}  // namespace sadt
