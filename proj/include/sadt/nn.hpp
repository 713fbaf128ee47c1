// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sadt/params.hpp"
#include "sadt/tape.hpp"

namespace sadt {

enum class Architecture { simple_cnn, tiny_mlp };

std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& text);

/// Everything needed to rebuild a model's forward rule.
struct ModelSpec {
  Architecture arch = Architecture::tiny_mlp;
  Shape input_shape;                   // per-sample: C x H x W (cnn) or any (mlp)
  std::vector<std::size_t> conv_widths;  // cnn only
  std::vector<std::size_t> hidden_dims;  // dense widths before the output layer
  std::size_t num_classes = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// Architecture description plus its parameters. Copying a Model copies its
/// parameters, so a copy is an independent model.
class Model {
 public:
  Model(ModelSpec spec, ParamSet params);

  const ModelSpec& spec() const { return spec_; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

  /// Raw logits [N x num_classes]. With `track_params` every parameter is
  /// registered on the tape as a named leaf, in ParamSet order, so that
  /// tape.backward() returns a GradSet aligned with params().
  Var forward(Tape& tape, const Tensor& images, bool track_params = true) const;

  std::string last_conv_layer() const;   // throws if the model has none
  std::string last_dense_layer() const;

 private:
  void check_input(const Tensor& images) const;

  ModelSpec spec_;
  ParamSet params_;
};

/// 3 x (3x3 conv, stride 1, pad 1, ReLU, 2x2 max-pool) with widths 32/64/64,
/// then dense 256 -> 128 -> num_classes with ReLU between. He-uniform weights,
/// zero biases.
Model build_simple_cnn(const Shape& input_shape, std::size_t num_classes, std::uint64_t seed);

/// Dense/ReLU stack; empty `hidden_dims` gives a single linear layer.
Model build_tiny_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                     std::size_t num_classes, std::uint64_t seed);

/// Builds the architecture `spec` describes with fresh seeded parameters.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

/// Logits without gradient tracking.
Tensor forward_logits(const Model& model, const Tensor& images);

/// Re-derives a ModelSpec from a parameter layout as written by the builders
/// (used when loading checkpoints). `input_shape` is the per-sample shape.
ModelSpec infer_model_spec(const ParamSet& params, const Shape& input_shape);

}  // namespace sadt
