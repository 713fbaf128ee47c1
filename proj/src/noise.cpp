// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

#include "sadt/optim.hpp"

namespace sadt {

std::string to_string(LayerFilter filter) {
  switch (filter) {
    case LayerFilter::all: return "all";
    case LayerFilter::last_conv: return "last-conv";
    case LayerFilter::last_dense: return "last-dense";
    case LayerFilter::gradient_all: return "gradient-all";
  }
  return "?";
}

bool NoiseRecord::touches(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

namespace {

// Entries are (name, tensor*) so that ParamSet and GradSet share the logic.
struct Slot {
  const std::string* name;
  Tensor* value;
};

NoiseRecord perturb(std::vector<Slot> slots, double sigma, Rng& rng, std::uint64_t stream_id,
                    LayerFilter filter) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (slots.empty()) {
    throw std::invalid_argument("noise filter " + to_string(filter) + " selects no tensors");
  }
  NoiseRecord record;
  record.sigma = sigma;
  record.stream_id = stream_id;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& slot : slots) {
    Tensor noise(slot.value->shape());
    if (sigma > 0.0) {
      for (auto& v : noise.data()) v = sigma * normal(rng);
    }
    record.names.push_back(*slot.name);
    record.base.push_back(*slot.value);
    auto dst = slot.value->data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += noise[k];
    record.noise.push_back(std::move(noise));
  }
  return record;
}

// Restores the recorded base values after checking that each tensor is still
// base + noise bit for bit. Plain subtraction (base + n) - n is not an exact
// inverse in floating point, so the stored base is what guarantees the rollback.
void restore(std::vector<Slot> slots, NoiseRecord& record) {
  if (record.consumed) throw AlignmentError("noise record already consumed");
  if (slots.size() != record.names.size()) {
    throw AlignmentError("noise record does not match target");
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (*slots[i].name != record.names[i] ||
        slots[i].value->shape() != record.base[i].shape()) {
      throw AlignmentError(fmt::format("noise record entry {} ({}) does not match target", i,
                                       record.names[i]));
    }
    Tensor expected = record.base[i];
    auto e = expected.data();
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += record.noise[i][k];
    if (!expected.bit_equal(*slots[i].value)) {
      throw AlignmentError("target " + record.names[i] + " is not in the state this noise record produced");
    }
  }
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i].value = record.base[i];
  record.consumed = true;
}

std::vector<Slot> select(ParamSet& target, LayerFilter filter) {
  std::optional<std::string> layer;
  if (filter == LayerFilter::last_conv) layer = target.last_layer(LayerKind::conv);
  if (filter == LayerFilter::last_dense) layer = target.last_layer(LayerKind::dense);
  std::vector<Slot> slots;
  if ((filter == LayerFilter::last_conv || filter == LayerFilter::last_dense) && !layer) {
    return slots;
  }
  for (auto& e : target.entries()) {
    if (layer && e.layer != *layer) continue;
    slots.push_back({&e.name, &e.value});
  }
  return slots;
}

std::vector<Slot> select_by_names(ParamSet& target, const NoiseRecord& record) {
  std::vector<Slot> slots;
  for (const auto& name : record.names) {
    auto* e = target.find(name);
    if (e == nullptr) throw AlignmentError("noise record entry " + name + " missing from target");
    slots.push_back({&e->name, &e->value});
  }
  return slots;
}

}  // namespace

NoiseRecord add_noise(ParamSet& target, double sigma, LayerFilter filter, Rng& rng,
                      std::uint64_t stream_id) {
  return perturb(select(target, filter), sigma, rng, stream_id, filter);
}

NoiseRecord add_noise(GradSet& target, double sigma, LayerFilter filter, Rng& rng,
                      std::uint64_t stream_id) {
  if (filter != LayerFilter::all && filter != LayerFilter::gradient_all) {
    throw std::invalid_argument("gradient noise supports only the all/gradient-all filters");
  }
  std::vector<Slot> slots;
  for (auto& e : target.entries()) slots.push_back({&e.name, &e.value});
  return perturb(std::move(slots), sigma, rng, stream_id, filter);
}

NoiseRecord apply_offset(ParamSet& target, const GradSet& offset, double scale) {
  offset.check_aligned(target);
  NoiseRecord record;
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& e = target[i];
    Tensor delta = offset[i].value;
    for (auto& v : delta.data()) v *= scale;
    record.names.push_back(e.name);
    record.base.push_back(e.value);
    auto dst = e.value.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += delta[k];
    record.noise.push_back(std::move(delta));
  }
  return record;
}

void subtract_noise(ParamSet& target, NoiseRecord& record) {
  if (record.consumed) throw AlignmentError("noise record already consumed");
  restore(select_by_names(target, record), record);
}

void subtract_noise(GradSet& target, NoiseRecord& record) {
  if (record.consumed) throw AlignmentError("noise record already consumed");
  std::vector<Slot> slots;
  for (auto& e : target.entries()) slots.push_back({&e.name, &e.value});
  restore(std::move(slots), record);
}

}  // namespace sadt
