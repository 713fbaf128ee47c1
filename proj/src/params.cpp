// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/params.hpp"

#include <cmath>
#include <utility>

#include <fmt/format.h>

namespace sadt {

std::string layer_of(std::string_view name) {
  auto dot = name.find('.');
  return std::string(name.substr(0, dot));
}

LayerKind classify_param(std::string_view name) {
  if (name.ends_with(".bias")) return LayerKind::bias;
  if (name.starts_with("conv")) return LayerKind::conv;
  if (name.starts_with("dense")) return LayerKind::dense;
  return LayerKind::other;
}

void ParamSet::add(std::string name, Tensor value) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
  auto layer = layer_of(name);
  auto kind = classify_param(name);
  entries_.push_back({std::move(name), std::move(layer), kind, std::move(value)});
}

const ParamEntry* ParamSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

ParamEntry* ParamSet::find(std::string_view name) {
  return const_cast<ParamEntry*>(std::as_const(*this).find(name));
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::optional<std::string> ParamSet::last_layer(LayerKind kind) const {
  std::optional<std::string> layer;
  for (const auto& e : entries_) {
    if (e.kind == kind) layer = e.layer;
  }
  return layer;
}

bool ParamSet::bit_equal(const ParamSet& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].value.bit_equal(other.entries_[i].value)) return false;
  }
  return true;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].value.shape() != other.entries_[i].value.shape()) {
      return false;
    }
  }
  return true;
}

GradSet GradSet::zeros_like(const ParamSet& params) {
  GradSet g;
  for (const auto& e : params.entries()) g.add(e.name, Tensor::zeros(e.value.shape()));
  return g;
}

void GradSet::add(std::string name, Tensor value) {
  entries_.push_back({std::move(name), std::move(value)});
}

const GradEntry* GradSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void GradSet::check_aligned(const ParamSet& params) const {
  if (entries_.size() != params.size()) {
    throw AlignmentError(fmt::format("gradient set has {} entries, parameter set has {}",
                                     entries_.size(), params.size()));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& g = entries_[i];
    const auto& p = params[i];
    if (g.name != p.name || g.value.shape() != p.value.shape()) {
      throw AlignmentError(fmt::format("entry {}: gradient {} {} vs parameter {} {}", i, g.name,
                                       shape_string(g.value.shape()), p.name,
                                       shape_string(p.value.shape())));
    }
  }
}

void GradSet::check_aligned(const GradSet& other) const {
  if (entries_.size() != other.size()) {
    throw AlignmentError(fmt::format("gradient sets have {} and {} entries", entries_.size(),
                                     other.size()));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other[i].name ||
        entries_[i].value.shape() != other[i].value.shape()) {
      throw AlignmentError(fmt::format("entry {}: {} {} vs {} {}", i, entries_[i].name,
                                       shape_string(entries_[i].value.shape()), other[i].name,
                                       shape_string(other[i].value.shape())));
    }
  }
}

bool GradSet::bit_equal(const GradSet& other) const {
  if (entries_.size() != other.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other[i].name || !entries_[i].value.bit_equal(other[i].value)) {
      return false;
    }
  }
  return true;
}

double GradSet::global_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    for (double v : e.value.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

}  // namespace sadt
