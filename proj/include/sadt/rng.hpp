// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sadt {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent sub-stream seed for (base, path...). Used so that every
/// (epoch, batch, purpose) triple gets its own stream regardless of how many
/// draws other consumers made.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ull));
  return s;
}

// Purpose tags for derive_seed.
inline constexpr std::uint64_t kStreamShuffle = 1;
inline constexpr std::uint64_t kStreamCutMix = 2;
inline constexpr std::uint64_t kStreamNoise = 3;

}  // namespace sadt
