// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "sadt/rng.hpp"
#include "sadt/tensor.hpp"

namespace sadt {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;

/// Labelled images, pixels scaled to [0, 1].
struct Dataset {
  Tensor images;            // n x C x H x W
  std::vector<int> labels;  // n, each in [0, num_classes)
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const { return Shape(images.shape().begin() + 1, images.shape().end()); }

  /// First `n` samples (all of them if n >= size()).
  Dataset head(std::size_t n) const;
  Tensor gather_images(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;

  void validate() const;
};

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes = 10);
Dataset load_cifar_binary(std::span<const std::filesystem::path> paths, std::size_t num_classes = 10);

using IndexBatch = std::vector<std::size_t>;

/// Seeded Fisher-Yates permutation of [0, n) cut into batches; the final short
/// batch is kept.
std::vector<IndexBatch> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t epoch_seed);

/// Pasted rectangle [x0, x1) x [y0, y1).
struct Box {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::size_t area() const { return (x1 - x0) * (y1 - y0); }
};

struct MixedBatch {
  Tensor images;
  std::vector<int> label_a;
  std::vector<int> label_b;
  std::vector<std::size_t> partner;  // image i received the box from partner[i]
  Box box;
  double lambda = 1.0;  // 1 - box area / (H * W)
  std::uint64_t seed = 0;

  /// Soft targets lambda * onehot(a) + (1 - lambda) * onehot(b).
  Tensor targets(std::size_t num_classes) const;
};

/// CutMix: lambda0 ~ Beta(alpha, alpha), a box of area (1 - lambda0) * H * W
/// centred uniformly and clipped to the image, pasted from a seeded
/// permutation of the batch; lambda is recomputed from the clipped box.
MixedBatch cutmix(const Tensor& images, std::span<const int> labels, double alpha, std::uint64_t seed);

/// Pastes `box` from image partner[i] into image i.
MixedBatch cutmix_with_box(const Tensor& images, std::span<const int> labels, const Box& box,
                           std::span<const std::size_t> partner);

/// A batch left unaugmented (lambda = 1, label_b = label_a).
MixedBatch plain_batch(const Tensor& images, std::span<const int> labels);

/// Targets for hard labels.
Tensor one_hot(std::span<const int> labels, std::size_t num_classes);

/// FNV-1a over image bits, labels and lambda; identifies the exact batch a
/// strategy consumed.
std::uint64_t batch_hash(const MixedBatch& batch);

}  // namespace sadt
