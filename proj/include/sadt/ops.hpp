// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "sadt/tape.hpp"

/// Differentiable operations. Every op records one node on the tape shared by
/// its operands and throws ShapeError on contract violations.
namespace sadt::ops {

/// a[m x k] * b[k x n].
Var matmul(const Var& a, const Var& b);

/// x[N x in] * weight[out x in]^T + bias[out].
Var linear(const Var& x, const Var& weight, const Var& bias);

/// Cross-correlation (no kernel flip) with zero padding.
/// input[N x C x H x W], kernel[F x C x kh x kw] -> [N x F x H' x W'].
Var conv2d(const Var& input, const Var& kernel, std::size_t stride, std::size_t padding);

/// Adds bias[F] to every spatial position of channel f of x[N x F x H x W].
Var add_channel_bias(const Var& x, const Var& bias);

Var relu(const Var& x);

/// Non-overlapping max pooling with a square `window` (stride == window).
/// Trailing rows/columns that do not fill a window are dropped.
Var max_pool2d(const Var& x, std::size_t window);

/// [N x ...] -> [N x prod(...)].
Var flatten(const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var sum(const Var& x);
Var mean(const Var& x);

/// Row-wise log-softmax of x[N x C], computed with row-max subtraction.
Var log_softmax(const Var& x);

/// Mean over rows of -sum_c target[n,c] * log_softmax(logits)[n,c]. Each row
/// of `target_dist` must sum to 1 within 1e-9.
Var softmax_cross_entropy(const Var& logits, const Var& target_dist);

/// Mean over rows of KL(softmax(p) || softmax(q)). With `detach_p` no
/// gradient reaches `p_logits`.
Var kl_divergence(const Var& p_logits, const Var& q_logits, bool detach_p);

/// Copy of x's value as a tape constant.
Var detach(const Var& x);

}  // namespace sadt::ops
