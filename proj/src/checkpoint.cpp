// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace sadt {
namespace {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ == bytes_.size(); }

  template <typename T>
  T get_le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(fmt::format("checkpoint truncated at byte {}", pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_params(const ParamSet& params) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le(out, kCheckpointVersion);
  for (const auto& e : params.entries()) {
    put_le(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_le(out, static_cast<std::uint32_t>(e.value.rank()));
    for (auto extent : e.value.shape()) put_le(out, static_cast<std::uint64_t>(extent));
    for (double v : e.value.data()) put_le(out, v);
  }
  return out;
}

ParamSet deserialize_params(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_bytes(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    throw CheckpointError("bad checkpoint magic");
  }
  const auto version = in.get_le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(fmt::format("unsupported checkpoint version {}", version));
  }
  ParamSet params;
  while (!in.at_end()) {
    const auto name_len = in.get_le<std::uint32_t>();
    auto name = in.get_bytes(name_len);
    const auto rank = in.get_le<std::uint32_t>();
    Shape shape(rank);
    for (auto& extent : shape) extent = static_cast<std::size_t>(in.get_le<std::uint64_t>());
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) v = in.get_le<double>();
    params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << serialize_params(params);
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_params(buf.str());
}

}  // namespace sadt
