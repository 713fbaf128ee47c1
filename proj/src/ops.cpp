// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Core>
#include <fmt/format.h>

namespace sadt::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void same_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw TapeError("use of an empty Var");
  a.tape().check_owner(b);
}

void require_rank(const Var& v, std::size_t rank, const char* op, const char* what) {
  if (v.shape().size() != rank) {
    throw ShapeError(fmt::format("{}: {} must have rank {}, got {}", op, what, rank,
                                 shape_string(v.shape())));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op, shape_string(a.shape()),
                                 shape_string(b.shape())));
  }
}

struct RowStats {
  std::vector<double> max;
  std::vector<double> log_sum;  // log(sum(exp(x - max)))
};

RowStats row_log_sum_exp(const Tensor& x, std::size_t rows, std::size_t cols) {
  RowStats s{std::vector<double>(rows), std::vector<double>(rows)};
  for (std::size_t n = 0; n < rows; ++n) {
    const double* row = x.raw() + n * cols;
    double m = *std::max_element(row, row + cols);
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += std::exp(row[c] - m);
    s.max[n] = m;
    s.log_sum[n] = std::log(acc);
  }
  return s;
}

// log_softmax values for a [rows x cols] tensor.
Tensor log_softmax_values(const Tensor& x, std::size_t rows, std::size_t cols) {
  auto stats = row_log_sum_exp(x, rows, cols);
  Tensor out(x.shape());
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[n * cols + c] = (x[n * cols + c] - stats.max[n]) - stats.log_sum[n];
    }
  }
  return out;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  same_tape(a, b);
  require_rank(a, 2, "matmul", "lhs");
  require_rank(b, 2, "matmul", "rhs");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError(fmt::format("matmul: inner extents differ, {} x {}", shape_string(a.shape()),
                                 shape_string(b.shape())));
  }
  Tensor out({m, n});
  as_matrix(out, m, n).noalias() = as_matrix(a.value(), m, k) * as_matrix(b.value(), k, n);
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [=](Tape& t, const Tensor& g) {
    auto gm = as_matrix(g, m, n);
    if (t.requires_grad(ia)) {
      as_matrix(t.grad(ia), m, k).noalias() += gm * as_matrix(t.value(ib), k, n).transpose();
    }
    if (t.requires_grad(ib)) {
      as_matrix(t.grad(ib), k, n).noalias() += as_matrix(t.value(ia), m, k).transpose() * gm;
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  same_tape(x, weight);
  same_tape(x, bias);
  require_rank(x, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  require_rank(bias, 1, "linear", "bias");
  const std::size_t rows = x.shape()[0], in = x.shape()[1], out_dim = weight.shape()[0];
  if (weight.shape()[1] != in || bias.shape()[0] != out_dim) {
    throw ShapeError(fmt::format("linear: input {} incompatible with weight {} / bias {}",
                                 shape_string(x.shape()), shape_string(weight.shape()),
                                 shape_string(bias.shape())));
  }
  Tensor out({rows, out_dim});
  auto om = as_matrix(out, rows, out_dim);
  om.noalias() = as_matrix(x.value(), rows, in) * as_matrix(weight.value(), out_dim, in).transpose();
  om.rowwise() += as_matrix(bias.value(), 1, out_dim).row(0);
  const auto ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.tape().record(std::move(out), {ix, iw, ib}, [=](Tape& t, const Tensor& g) {
    auto gm = as_matrix(g, rows, out_dim);
    if (t.requires_grad(ix)) {
      as_matrix(t.grad(ix), rows, in).noalias() += gm * as_matrix(t.value(iw), out_dim, in);
    }
    if (t.requires_grad(iw)) {
      as_matrix(t.grad(iw), out_dim, in).noalias() +=
          gm.transpose() * as_matrix(t.value(ix), rows, in);
    }
    if (t.requires_grad(ib)) {
      as_matrix(t.grad(ib), 1, out_dim).row(0) += gm.colwise().sum();
    }
  });
}

Var conv2d(const Var& input, const Var& kernel, std::size_t stride, std::size_t padding) {
  same_tape(input, kernel);
  require_rank(input, 4, "conv2d", "input");
  require_rank(kernel, 4, "conv2d", "kernel");
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  const std::size_t batch = is[0], channels = is[1], height = is[2], width = is[3];
  const std::size_t filters = ks[0], kh = ks[2], kw = ks[3];
  if (ks[1] != channels) {
    throw ShapeError(fmt::format("conv2d: input {} has {} channels, kernel {} expects {}",
                                 shape_string(is), channels, shape_string(ks), ks[1]));
  }
  if (kh > height + 2 * padding || kw > width + 2 * padding) {
    throw ShapeError(fmt::format("conv2d: kernel {} larger than padded input {} (padding {})",
                                 shape_string(ks), shape_string(is), padding));
  }
  const std::size_t out_h = (height + 2 * padding - kh) / stride + 1;
  const std::size_t out_w = (width + 2 * padding - kw) / stride + 1;
  const std::size_t positions = out_h * out_w;
  const std::size_t patch = channels * kh * kw;
  const std::size_t cols_width = batch * positions;

  // Patch matrix [patch x (batch * positions)], column = n * positions + p.
  auto cols = std::make_shared<Buffer>(patch * cols_width, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        double* row = cols->data() + ((c * kh + i) * kw + j) * cols_width;
        for (std::size_t n = 0; n < batch; ++n) {
          const double* plane = input.value().raw() + (n * channels + c) * height * width;
          double* dst = row + n * positions;
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + i) -
                                     static_cast<std::ptrdiff_t>(padding);
            if (y < 0 || y >= static_cast<std::ptrdiff_t>(height)) continue;
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + j) -
                                       static_cast<std::ptrdiff_t>(padding);
              if (x < 0 || x >= static_cast<std::ptrdiff_t>(width)) continue;
              dst[oy * out_w + ox] = plane[y * width + x];
            }
          }
        }
      }
    }
  }

  RowMat product = as_matrix(kernel.value(), filters, patch) *
                   ConstMatMap(cols->data(), static_cast<Eigen::Index>(patch),
                               static_cast<Eigen::Index>(cols_width));
  Tensor out({batch, filters, out_h, out_w});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t f = 0; f < filters; ++f) {
      std::copy_n(product.data() + f * cols_width + n * positions, positions,
                  out.raw() + (n * filters + f) * positions);
    }
  }

  const auto ii = input.id(), ik = kernel.id();
  if (!input.requires_grad() && !kernel.requires_grad()) {
    return input.tape().record(std::move(out), {ii, ik}, nullptr);
  }
  return input.tape().record(std::move(out), {ii, ik}, [=](Tape& t, const Tensor& g) {
    // Gradient rearranged to [filters x (batch * positions)].
    RowMat grad_mat(static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(cols_width));
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t f = 0; f < filters; ++f) {
        std::copy_n(g.raw() + (n * filters + f) * positions, positions,
                    grad_mat.data() + f * cols_width + n * positions);
      }
    }
    ConstMatMap cols_mat(cols->data(), static_cast<Eigen::Index>(patch),
                         static_cast<Eigen::Index>(cols_width));
    if (t.requires_grad(ik)) {
      as_matrix(t.grad(ik), filters, patch).noalias() += grad_mat * cols_mat.transpose();
    }
    if (t.requires_grad(ii)) {
      RowMat grad_cols = as_matrix(t.value(ik), filters, patch).transpose() * grad_mat;
      Tensor& gin = t.grad(ii);
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < kh; ++i) {
          for (std::size_t j = 0; j < kw; ++j) {
            const double* row = grad_cols.data() + ((c * kh + i) * kw + j) * cols_width;
            for (std::size_t n = 0; n < batch; ++n) {
              double* plane = gin.raw() + (n * channels + c) * height * width;
              const double* src = row + n * positions;
              for (std::size_t oy = 0; oy < out_h; ++oy) {
                const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + i) -
                                         static_cast<std::ptrdiff_t>(padding);
                if (y < 0 || y >= static_cast<std::ptrdiff_t>(height)) continue;
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                  const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + j) -
                                           static_cast<std::ptrdiff_t>(padding);
                  if (x < 0 || x >= static_cast<std::ptrdiff_t>(width)) continue;
                  plane[y * width + x] += src[oy * out_w + ox];
                }
              }
            }
          }
        }
      }
    }
  });
}

Var add_channel_bias(const Var& x, const Var& bias) {
  same_tape(x, bias);
  require_rank(x, 4, "add_channel_bias", "input");
  require_rank(bias, 1, "add_channel_bias", "bias");
  const std::size_t batch = x.shape()[0], channels = x.shape()[1];
  const std::size_t plane = x.shape()[2] * x.shape()[3];
  if (bias.shape()[0] != channels) {
    throw ShapeError(fmt::format("add_channel_bias: bias {} vs input {}", shape_string(bias.shape()),
                                 shape_string(x.shape())));
  }
  Tensor out = x.value();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      double b = bias.value()[c];
      double* p = out.raw() + (n * channels + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) p[k] += b;
    }
  }
  const auto ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), {ix, ib}, [=](Tape& t, const Tensor& g) {
    if (t.requires_grad(ix)) {
      auto& gx = t.grad(ix);
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t c = 0; c < channels; ++c) {
          const double* p = g.raw() + (n * channels + c) * plane;
          double acc = 0.0;
          for (std::size_t k = 0; k < plane; ++k) acc += p[k];
          gb[c] += acc;
        }
      }
    }
  });
}

Var relu(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  const auto ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, const Tensor& g) {
    const auto& in = t.value(ix);
    auto& gx = t.grad(ix);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (in[k] > 0.0) gx[k] += g[k];
    }
  });
}

Var max_pool2d(const Var& x, std::size_t window) {
  require_rank(x, 4, "max_pool2d", "input");
  if (window < 1) throw ShapeError("max_pool2d: window must be >= 1");
  const auto& s = x.shape();
  const std::size_t planes = s[0] * s[1], height = s[2], width = s[3];
  if (height < window || width < window) {
    throw ShapeError(fmt::format("max_pool2d: input {} smaller than window {}", shape_string(s),
                                 window));
  }
  const std::size_t out_h = height / window, out_w = width / window;
  Tensor out({s[0], s[1], out_h, out_w});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const Tensor& in = x.value();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        std::size_t best = p * height * width + (oy * window) * width + ox * window;
        for (std::size_t i = 0; i < window; ++i) {
          for (std::size_t j = 0; j < window; ++j) {
            std::size_t idx = p * height * width + (oy * window + i) * width + ox * window + j;
            if (in[idx] > in[best]) best = idx;
          }
        }
        std::size_t o = (p * out_h + oy) * out_w + ox;
        out[o] = in[best];
        (*argmax)[o] = best;
      }
    }
  }
  const auto ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, const Tensor& g) {
    auto& gx = t.grad(ix);
    for (std::size_t o = 0; o < g.size(); ++o) gx[(*argmax)[o]] += g[o];
  });
}

Var flatten(const Var& x) {
  if (x.shape().empty()) throw ShapeError("flatten: scalar input");
  const std::size_t rows = x.shape()[0];
  Tensor out = x.value().reshaped({rows, x.value().size() / rows});
  const auto ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, const Tensor& g) {
    auto& gx = t.grad(ix);
    for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k];
  });
}

Var add(const Var& a, const Var& b) {
  same_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += b.value()[k];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [=](Tape& t, const Tensor& g) {
    for (auto id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      auto& gg = t.grad(id);
      for (std::size_t k = 0; k < g.size(); ++k) gg[k] += g[k];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  same_tape(a, b);
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= b.value()[k];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [=](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= b.value()[k];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [=](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      const auto& vb = t.value(ib);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * vb[k];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      const auto& va = t.value(ia);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * va[k];
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= factor;
  const auto ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, const Tensor& g) {
    auto& gx = t.grad(ix);
    for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * factor;
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const auto ix = x.id();
  return x.tape().record(Tensor::scalar(acc), {ix}, [=](Tape& t, const Tensor& g) {
    auto& gx = t.grad(ix);
    const double s = g[0];
    for (auto& v : gx.data()) v += s;
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var log_softmax(const Var& x) {
  require_rank(x, 2, "log_softmax", "input");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  Tensor out = log_softmax_values(x.value(), rows, cols);
  const auto ix = x.id();
  const auto iout = x.tape().node_count();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, const Tensor& g) {
    const auto& y = t.value(iout);
    auto& gx = t.grad(ix);
    for (std::size_t n = 0; n < rows; ++n) {
      double gsum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gsum += g[n * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        gx[n * cols + c] += g[n * cols + c] - std::exp(y[n * cols + c]) * gsum;
      }
    }
  });
}

Var softmax_cross_entropy(const Var& logits, const Var& target_dist) {
  same_tape(logits, target_dist);
  require_rank(logits, 2, "softmax_cross_entropy", "logits");
  require_rank(target_dist, 2, "softmax_cross_entropy", "target");
  if (logits.shape() != target_dist.shape()) {
    throw ShapeError(fmt::format("softmax_cross_entropy: logits {} vs target {} (class count mismatch)",
                                 shape_string(logits.shape()), shape_string(target_dist.shape())));
  }
  const std::size_t rows = logits.shape()[0], cols = logits.shape()[1];
  const Tensor& target = target_dist.value();
  std::vector<double> row_mass(rows, 0.0);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t c = 0; c < cols; ++c) row_mass[n] += target[n * cols + c];
    if (std::abs(row_mass[n] - 1.0) > 1e-9) {
      throw std::invalid_argument(
          fmt::format("softmax_cross_entropy: target row {} sums to {:.17g}, not 1", n, row_mass[n]));
    }
  }
  auto logp = std::make_shared<Tensor>(log_softmax_values(logits.value(), rows, cols));
  double acc = 0.0;
  for (std::size_t k = 0; k < logp->size(); ++k) acc -= target[k] * (*logp)[k];
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const auto il = logits.id(), it = target_dist.id();
  return logits.tape().record(
      Tensor::scalar(acc * inv_rows), {il, it}, [=](Tape& t, const Tensor& g) {
        const double s = g[0] * inv_rows;
        const auto& tgt = t.value(it);
        if (t.requires_grad(il)) {
          auto& gl = t.grad(il);
          for (std::size_t n = 0; n < rows; ++n) {
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t k = n * cols + c;
              gl[k] += s * (std::exp((*logp)[k]) * row_mass[n] - tgt[k]);
            }
          }
        }
        if (t.requires_grad(it)) {
          auto& gt = t.grad(it);
          for (std::size_t k = 0; k < gt.size(); ++k) gt[k] -= s * (*logp)[k];
        }
      });
}

Var kl_divergence(const Var& p_logits, const Var& q_logits, bool detach_p) {
  same_tape(p_logits, q_logits);
  require_rank(p_logits, 2, "kl_divergence", "p_logits");
  require_same_shape(p_logits, q_logits, "kl_divergence");
  const std::size_t rows = p_logits.shape()[0], cols = p_logits.shape()[1];
  auto logp = std::make_shared<Tensor>(log_softmax_values(p_logits.value(), rows, cols));
  auto logq = std::make_shared<Tensor>(log_softmax_values(q_logits.value(), rows, cols));
  auto row_kl = std::make_shared<std::vector<double>>(rows, 0.0);
  double acc = 0.0;
  for (std::size_t n = 0; n < rows; ++n) {
    double r = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t k = n * cols + c;
      r += std::exp((*logp)[k]) * ((*logp)[k] - (*logq)[k]);
    }
    (*row_kl)[n] = r;
    acc += r;
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const auto ip = p_logits.id(), iq = q_logits.id();
  std::vector<std::size_t> parents = detach_p ? std::vector<std::size_t>{iq}
                                              : std::vector<std::size_t>{ip, iq};
  return p_logits.tape().record(
      Tensor::scalar(acc * inv_rows), std::move(parents), [=](Tape& t, const Tensor& g) {
        const double s = g[0] * inv_rows;
        for (std::size_t n = 0; n < rows; ++n) {
          double p_mass = 0.0;
          for (std::size_t c = 0; c < cols; ++c) p_mass += std::exp((*logp)[n * cols + c]);
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t k = n * cols + c;
            const double p = std::exp((*logp)[k]);
            if (t.requires_grad(iq)) t.grad(iq)[k] += s * (std::exp((*logq)[k]) * p_mass - p);
            if (!detach_p && t.requires_grad(ip)) {
              t.grad(ip)[k] += s * p * (((*logp)[k] - (*logq)[k]) - (*row_kl)[n]);
            }
          }
        }
      });
}

Var detach(const Var& x) { return x.tape().constant(x.value()); }

}  // namespace sadt::ops
