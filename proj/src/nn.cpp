// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "sadt/ops.hpp"

namespace sadt {
namespace {

constexpr std::size_t kConvKernel = 3;
constexpr std::size_t kPoolWindow = 2;

Tensor he_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

std::size_t pooled(std::size_t extent, std::size_t times) {
  for (std::size_t i = 0; i < times; ++i) extent /= kPoolWindow;
  return extent;
}

ParamSet init_params(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamSet params;
  std::size_t features = shape_numel(spec.input_shape);
  if (spec.arch == Architecture::simple_cnn) {
    std::size_t channels = spec.input_shape[0];
    for (std::size_t i = 0; i < spec.conv_widths.size(); ++i) {
      const std::size_t width = spec.conv_widths[i];
      const auto name = fmt::format("conv{}", i + 1);
      params.add(name + ".weight", he_uniform({width, channels, kConvKernel, kConvKernel},
                                              channels * kConvKernel * kConvKernel, rng));
      params.add(name + ".bias", Tensor::zeros({width}));
      channels = width;
    }
    const std::size_t pools = spec.conv_widths.size();
    features = channels * pooled(spec.input_shape[1], pools) * pooled(spec.input_shape[2], pools);
  }
  std::vector<std::size_t> dims = spec.hidden_dims;
  dims.push_back(spec.num_classes);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto name = fmt::format("dense{}", i + 1);
    params.add(name + ".weight", he_uniform({dims[i], features}, features, rng));
    params.add(name + ".bias", Tensor::zeros({dims[i]}));
    features = dims[i];
  }
  return params;
}

void validate_spec(const ModelSpec& spec) {
  if (spec.num_classes == 0) throw std::invalid_argument("model needs at least one class");
  for (auto d : spec.hidden_dims) {
    if (d == 0) throw std::invalid_argument("dense widths must be positive");
  }
  if (spec.arch == Architecture::simple_cnn) {
    if (spec.input_shape.size() != 3) {
      throw ShapeError("simple_cnn input must be C x H x W, got " + shape_string(spec.input_shape));
    }
    const std::size_t min_extent = std::size_t{1} << spec.conv_widths.size();
    if (spec.input_shape[1] < min_extent || spec.input_shape[2] < min_extent) {
      throw ShapeError(fmt::format("simple_cnn input {} too small for {} 2x2 pools (need H,W >= {})",
                                   shape_string(spec.input_shape), spec.conv_widths.size(),
                                   min_extent));
    }
    for (auto w : spec.conv_widths) {
      if (w == 0) throw std::invalid_argument("conv widths must be positive");
    }
  } else if (spec.input_shape.empty() || shape_numel(spec.input_shape) == 0) {
    throw std::invalid_argument("tiny_mlp input dimension must be positive");
  }
}

}  // namespace

std::string to_string(Architecture arch) {
  return arch == Architecture::simple_cnn ? "simple_cnn" : "tiny_mlp";
}

Architecture parse_architecture(const std::string& text) {
  if (text == "simple_cnn") return Architecture::simple_cnn;
  if (text == "tiny_mlp") return Architecture::tiny_mlp;
  throw std::invalid_argument("unknown architecture: " + text);
}

Model::Model(ModelSpec spec, ParamSet params) : spec_(std::move(spec)), params_(std::move(params)) {
  validate_spec(spec_);
  if (!params_.same_layout(init_params(spec_, 0))) {
    throw AlignmentError("parameter layout does not match architecture " + to_string(spec_.arch));
  }
}

void Model::check_input(const Tensor& images) const {
  const auto& s = images.shape();
  if (s.empty()) throw ShapeError("model input needs a batch dimension");
  const Shape sample(s.begin() + 1, s.end());
  const bool ok = spec_.arch == Architecture::simple_cnn
                      ? sample == spec_.input_shape
                      : shape_numel(sample) == shape_numel(spec_.input_shape);
  if (!ok) {
    throw ShapeError(fmt::format("model expects samples of shape {}, got batch {}",
                                 shape_string(spec_.input_shape), shape_string(s)));
  }
}

Var Model::forward(Tape& tape, const Tensor& images, bool track_params) const {
  check_input(images);
  std::vector<Var> p;
  p.reserve(params_.size());
  for (const auto& e : params_.entries()) {
    p.push_back(track_params ? tape.leaf(e.name, e.value) : tape.constant(e.value));
  }
  std::size_t next = 0;
  Var x = tape.constant(images);
  if (spec_.arch == Architecture::simple_cnn) {
    for (std::size_t i = 0; i < spec_.conv_widths.size(); ++i) {
      x = ops::conv2d(x, p[next], 1, 1);
      x = ops::add_channel_bias(x, p[next + 1]);
      x = ops::max_pool2d(ops::relu(x), kPoolWindow);
      next += 2;
    }
  }
  x = ops::flatten(x);
  const std::size_t dense_layers = spec_.hidden_dims.size() + 1;
  for (std::size_t i = 0; i < dense_layers; ++i) {
    x = ops::linear(x, p[next], p[next + 1]);
    if (i + 1 < dense_layers) x = ops::relu(x);
    next += 2;
  }
  return x;
}

std::string Model::last_conv_layer() const {
  auto layer = params_.last_layer(LayerKind::conv);
  if (!layer) throw std::invalid_argument("architecture " + to_string(spec_.arch) + " has no conv layer");
  return *layer;
}

std::string Model::last_dense_layer() const {
  auto layer = params_.last_layer(LayerKind::dense);
  if (!layer) throw std::invalid_argument("architecture " + to_string(spec_.arch) + " has no dense layer");
  return *layer;
}

Model build_simple_cnn(const Shape& input_shape, std::size_t num_classes, std::uint64_t seed) {
  ModelSpec spec{Architecture::simple_cnn, input_shape, {32, 64, 64}, {256, 128}, num_classes};
  return build_model(spec, seed);
}

Model build_tiny_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                     std::size_t num_classes, std::uint64_t seed) {
  ModelSpec spec{Architecture::tiny_mlp, {input_dim}, {}, hidden_dims, num_classes};
  return build_model(spec, seed);
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  return Model(spec, init_params(spec, seed));
}

Tensor forward_logits(const Model& model, const Tensor& images) {
  Tape tape;
  return model.forward(tape, images, false).value();
}

ModelSpec infer_model_spec(const ParamSet& params, const Shape& input_shape) {
  ModelSpec spec;
  std::vector<std::size_t> dense;
  for (const auto& e : params.entries()) {
    if (e.kind == LayerKind::conv) spec.conv_widths.push_back(e.value.shape().at(0));
    if (e.kind == LayerKind::dense) dense.push_back(e.value.shape().at(0));
    if (e.kind == LayerKind::other) throw AlignmentError("unrecognised parameter " + e.name);
  }
  if (dense.empty()) throw AlignmentError("parameter set has no dense layers");
  spec.arch = spec.conv_widths.empty() ? Architecture::tiny_mlp : Architecture::simple_cnn;
  spec.num_classes = dense.back();
  dense.pop_back();
  spec.hidden_dims = dense;
  spec.input_shape = input_shape;
  if (spec.arch == Architecture::tiny_mlp) spec.input_shape = {shape_numel(input_shape)};
  return spec;
}

}  // namespace sadt
