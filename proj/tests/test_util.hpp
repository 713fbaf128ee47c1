// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "sadt/nn.hpp"
#include "sadt/ops.hpp"
#include "sadt/params.hpp"
#include "sadt/rng.hpp"
#include "sadt/tape.hpp"
#include "sadt/tensor.hpp"

namespace sadt::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

/// Rows drawn from a random Dirichlet-like distribution (normalized uniforms).
inline Tensor random_distribution(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = random_tensor({rows, cols}, rng, 0.05, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += t[r * cols + c];
    for (std::size_t c = 0; c < cols; ++c) t[r * cols + c] /= s;
  }
  return t;
}

inline ParamSet random_params(Rng& rng, std::size_t max_entries = 4) {
  std::uniform_int_distribution<std::size_t> count(1, max_entries), extent(1, 5);
  std::uniform_real_distribution<double> scale(0.0, 3.0);
  ParamSet p;
  const std::size_t n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scale(rng);
    const auto layer = "dense" + std::to_string(i + 1);
    if (i % 3 == 1) {
      p.add("conv" + std::to_string(i + 1) + ".weight",
            random_tensor({extent(rng), extent(rng), extent(rng), extent(rng)}, rng, -s, s));
    } else {
      p.add(layer + ".weight", random_tensor({extent(rng), extent(rng)}, rng, -s, s));
      p.add(layer + ".bias", random_tensor({extent(rng)}, rng, -s, s));
    }
  }
  return p;
}

inline GradSet random_grads(const ParamSet& params, Rng& rng, double scale = 1.0) {
  GradSet g;
  std::uniform_real_distribution<double> mag(0.0, scale);
  for (const auto& e : params.entries()) {
    const double s = mag(rng);
    g.add(e.name, random_tensor(e.value.shape(), rng, -s, s));
  }
  return g;
}

// Reference norms for AGC units: rows of a weight (dim 0), whole bias.
inline std::vector<double> unit_norms(const Tensor& t, LayerKind kind) {
  const std::size_t units = kind == LayerKind::bias || t.rank() < 2 ? 1 : t.dim(0);
  const std::size_t per = t.size() / units;
  std::vector<double> out(units, 0.0);
  for (std::size_t u = 0; u < units; ++u) {
    for (std::size_t i = 0; i < per; ++i) out[u] += t[u * per + i] * t[u * per + i];
    out[u] = std::sqrt(out[u]);
  }
  return out;
}

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t components = 0;
};

/// Relative error |a - n| / max(|a|, |n|, floor) between reverse-mode and
/// central-difference gradients over every component of every input.
inline GradCheckResult check_gradients(const std::vector<Tensor>& inputs, const LossBuilder& build,
                                       double h = 1e-5, double floor = 1e-6) {
  auto eval = [&](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (std::size_t i = 0; i < xs.size(); ++i) vars.push_back(tape.leaf("x" + std::to_string(i), xs[i]));
    return build(tape, vars).value().item();
  };
  Tape tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(tape.leaf("x" + std::to_string(i), inputs[i]));
  const GradSet grads = tape.backward(build(tape, vars));

  GradCheckResult result;
  auto xs = inputs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < xs[i].size(); ++k) {
      const double orig = xs[i][k];
      xs[i][k] = orig + h;
      const double up = eval(xs);
      xs[i][k] = orig - h;
      const double down = eval(xs);
      xs[i][k] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[i].value[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
      ++result.components;
    }
  }
  return result;
}

/// Gradient check of a model's mean cross-entropy over its parameters.
inline GradCheckResult check_model_gradients(const Model& model, const Tensor& images, const Tensor& targets,
                                             double h = 1e-5, double floor = 1e-6) {
  auto loss_of = [&](const Model& m) {
    Tape tape;
    return ops::softmax_cross_entropy(tape.constant(forward_logits(m, images)), tape.constant(targets))
        .value()
        .item();
  };
  Tape tape;
  const Var logits = model.forward(tape, images);
  const GradSet grads = tape.backward(ops::softmax_cross_entropy(logits, tape.constant(targets)));

  GradCheckResult result;
  Model probe = model;
  for (std::size_t i = 0; i < probe.params().size(); ++i) {
    auto& value = probe.params()[i].value;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double orig = value[k];
      value[k] = orig + h;
      const double up = loss_of(probe);
      value[k] = orig - h;
      const double down = loss_of(probe);
      value[k] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[i].value[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
      ++result.components;
    }
  }
  return result;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  // Per process: ctest runs each test case in its own process, possibly in parallel.
  auto dir = std::filesystem::temp_directory_path() / ("sadt_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace sadt::testing
