// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "sadt/params.hpp"

namespace sadt {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'D', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers and payload little-endian):
//   "SADTCKPT" | version u32 | entries until EOF:
//   name_len u32 | name bytes (UTF-8) | rank u32 | extents u64[rank] | f64[numel]
std::string serialize_params(const ParamSet& params);
ParamSet deserialize_params(const std::string& bytes);

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace sadt
