// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sadt/tensor.hpp"

namespace sadt {

enum class LayerKind { conv, dense, bias, other };

/// Thrown when a GradSet, optimizer state or noise record does not line up
/// with the ParamSet it is applied to.
class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// "conv3.weight" -> "conv3". Names without a dot are their own layer.
std::string layer_of(std::string_view name);

/// Kind from the naming convention: "*.bias" is a bias, otherwise the layer
/// prefix decides ("conv*" / "dense*").
LayerKind classify_param(std::string_view name);

struct ParamEntry {
  std::string name;
  std::string layer;
  LayerKind kind;
  Tensor value;
};

/// Ordered, uniquely named parameter tensors of one model.
class ParamSet {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const ParamEntry> entries() const { return entries_; }
  std::span<ParamEntry> entries() { return entries_; }
  const ParamEntry& operator[](std::size_t i) const { return entries_[i]; }
  ParamEntry& operator[](std::size_t i) { return entries_[i]; }

  const ParamEntry* find(std::string_view name) const;
  ParamEntry* find(std::string_view name);

  std::size_t parameter_count() const;

  /// Layer name of the last conv (or dense) layer, in declaration order.
  std::optional<std::string> last_layer(LayerKind kind) const;

  bool bit_equal(const ParamSet& other) const;
  /// Same names in the same order with the same shapes.
  bool same_layout(const ParamSet& other) const;

 private:
  std::vector<ParamEntry> entries_;
};

struct GradEntry {
  std::string name;
  Tensor value;
};

/// Gradients aligned 1:1 (names, order, shapes) with a ParamSet.
class GradSet {
 public:
  static GradSet zeros_like(const ParamSet& params);

  void add(std::string name, Tensor value);

  std::size_t size() const { return entries_.size(); }
  std::span<const GradEntry> entries() const { return entries_; }
  std::span<GradEntry> entries() { return entries_; }
  const GradEntry& operator[](std::size_t i) const { return entries_[i]; }
  GradEntry& operator[](std::size_t i) { return entries_[i]; }
  const GradEntry* find(std::string_view name) const;

  void check_aligned(const ParamSet& params) const;
  void check_aligned(const GradSet& other) const;
  bool bit_equal(const GradSet& other) const;

  /// L2 norm over every component of every entry.
  double global_norm() const;

 private:
  std::vector<GradEntry> entries_;
};

}  // namespace sadt
