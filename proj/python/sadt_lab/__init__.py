# Copyright 2026 The SADT Lab Authors.
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the SADT training lab."""

from ._sadt import (
    STRATEGIES,
    ConfigError,
    compare_runs,
    conv2d,
    cosine_lr,
    cutmix,
    kl_divergence,
    resolve_config,
    run_experiment,
    softmax_cross_entropy,
)

__all__ = [
    "STRATEGIES",
    "ConfigError",
    "compare_runs",
    "conv2d",
    "cosine_lr",
    "cutmix",
    "kl_divergence",
    "resolve_config",
    "run_experiment",
    "softmax_cross_entropy",
]
