// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sadt/params.hpp"
#include "sadt/tensor.hpp"

namespace sadt {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Error raised by misuse of the tape (non-scalar loss, reuse after backward,
/// mixing handles from different tapes).
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order;
/// backward walks them once in reverse. Single-threaded.
class Tape {
 public:
  /// Accumulates into the parents' gradients given this node's output gradient.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A value that never receives a gradient (inputs, targets, detached logits).
  Var constant(Tensor value);
  /// A named parameter leaf; backward() reports its gradient.
  Var leaf(std::string name, Tensor value);

  /// Record an operation result. The node requires grad iff any parent does;
  /// otherwise `backward_fn` is dropped.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward_fn);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient buffer of a node, zero-initialised on first access. Used by
  /// backward closures.
  Tensor& grad(std::size_t id);

  /// Reverse sweep from a single-element loss. Returns the gradient of every
  /// leaf in registration order; leaves not reached get exact zeros. The tape
  /// cannot be used afterwards.
  GradSet backward(Var loss);

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Throws unless `v` belongs to this tape.
  void check_owner(const Var& v) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward_fn;
    std::optional<Tensor> grad;
    bool requires_grad = false;
  };

  void check_live() const;

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, std::size_t>> leaves_;
  bool consumed_ = false;
};

}  // namespace sadt
