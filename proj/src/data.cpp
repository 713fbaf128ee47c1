// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace sadt {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint32_t read_be32(const std::string& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) throw DataError("truncated IDX header in " + path.string());
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

constexpr double kPixelMax = 255.0;

}  // namespace

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return {gather_images(idx), gather_labels(idx), num_classes};
}

Tensor Dataset::gather_images(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("empty index selection");
  Shape shape = images.shape();
  const std::size_t stride = images.size() / shape[0];
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw DataError(fmt::format("sample index {} out of range", indices[i]));
    std::copy_n(images.raw() + indices[i] * stride, stride, out.raw() + i * stride);
  }
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(labels.at(i));
  return out;
}

void Dataset::validate() const {
  if (images.rank() < 2 || images.dim(0) != labels.size()) {
    throw DataError(fmt::format("dataset has {} labels for images {}", labels.size(),
                                shape_string(images.shape())));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DataError(fmt::format("label {} outside [0, {})", y, num_classes));
    }
  }
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (read_be32(img, 0, images_path) != kIdxImageMagic) {
    throw DataError(fmt::format("bad IDX image magic 0x{:08x} in {}", read_be32(img, 0, images_path),
                                images_path.string()));
  }
  if (read_be32(lab, 0, labels_path) != kIdxLabelMagic) {
    throw DataError(fmt::format("bad IDX label magic 0x{:08x} in {}", read_be32(lab, 0, labels_path),
                                labels_path.string()));
  }
  const std::size_t n = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  const std::size_t n_labels = read_be32(lab, 4, labels_path);
  if (n != n_labels) {
    throw DataError(fmt::format("IDX count mismatch: {} images vs {} labels", n, n_labels));
  }
  if (n == 0 || rows == 0 || cols == 0) throw DataError("IDX file with empty dimension");
  const std::size_t pixels = n * rows * cols;
  if (img.size() < 16 + pixels) {
    throw DataError(fmt::format("truncated IDX images: need {} bytes, have {}", 16 + pixels, img.size()));
  }
  if (lab.size() < 8 + n) {
    throw DataError(fmt::format("truncated IDX labels: need {} bytes, have {}", 8 + n, lab.size()));
  }
  Dataset ds;
  ds.num_classes = num_classes;
  ds.images = Tensor({n, 1, rows, cols});
  for (std::size_t k = 0; k < pixels; ++k) {
    ds.images[k] = static_cast<unsigned char>(img[16 + k]) / kPixelMax;
  }
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<unsigned char>(lab[8 + i]);
  ds.validate();
  return ds;
}

Dataset load_cifar_binary(std::span<const std::filesystem::path> paths, std::size_t num_classes) {
  if (paths.empty()) throw DataError("no CIFAR files given");
  std::vector<std::string> blobs;
  std::size_t n = 0;
  for (const auto& p : paths) {
    blobs.push_back(read_file(p));
    if (blobs.back().empty() || blobs.back().size() % kCifarRecordBytes != 0) {
      throw DataError(fmt::format("{}: length {} is not a positive multiple of {}", p.string(),
                                  blobs.back().size(), kCifarRecordBytes));
    }
    n += blobs.back().size() / kCifarRecordBytes;
  }
  Dataset ds;
  ds.num_classes = num_classes;
  ds.images = Tensor({n, 3, 32, 32});
  ds.labels.reserve(n);
  std::size_t i = 0;
  for (const auto& blob : blobs) {
    for (std::size_t off = 0; off < blob.size(); off += kCifarRecordBytes, ++i) {
      ds.labels.push_back(static_cast<unsigned char>(blob[off]));
      double* dst = ds.images.raw() + i * (kCifarRecordBytes - 1);
      for (std::size_t k = 1; k < kCifarRecordBytes; ++k) {
        dst[k - 1] = static_cast<unsigned char>(blob[off + k]) / kPixelMax;
      }
    }
  }
  ds.validate();
  return ds;
}

std::vector<IndexBatch> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t epoch_seed) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(epoch_seed);
  // Explicit Fisher-Yates so the permutation does not depend on std::shuffle's
  // implementation.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<IndexBatch> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Tensor MixedBatch::targets(std::size_t num_classes) const {
  Tensor t({label_a.size(), num_classes});
  for (std::size_t i = 0; i < label_a.size(); ++i) {
    t[i * num_classes + static_cast<std::size_t>(label_a[i])] += lambda;
    t[i * num_classes + static_cast<std::size_t>(label_b[i])] += 1.0 - lambda;
  }
  return t;
}

MixedBatch cutmix_with_box(const Tensor& images, std::span<const int> labels, const Box& box,
                           std::span<const std::size_t> partner) {
  if (images.rank() != 4) throw ShapeError("cutmix expects N x C x H x W images");
  const std::size_t n = images.dim(0), channels = images.dim(1);
  const std::size_t height = images.dim(2), width = images.dim(3);
  if (labels.size() != n || partner.size() != n) throw ShapeError("cutmix: batch size mismatch");
  if (n < 2) throw std::invalid_argument("cutmix needs a batch of at least 2 images");
  if (box.x0 > box.x1 || box.y0 > box.y1 || box.x1 > width || box.y1 > height) {
    throw std::invalid_argument("cutmix box outside the image");
  }
  MixedBatch out;
  out.images = images;
  out.label_a.assign(labels.begin(), labels.end());
  out.partner.assign(partner.begin(), partner.end());
  out.box = box;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = partner[i];
    if (j >= n) throw std::invalid_argument("cutmix partner index out of range");
    out.label_b.push_back(labels[j]);
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = images.raw() + (j * channels + c) * height * width;
      double* dst = out.images.raw() + (i * channels + c) * height * width;
      for (std::size_t y = box.y0; y < box.y1; ++y) {
        std::copy(src + y * width + box.x0, src + y * width + box.x1, dst + y * width + box.x0);
      }
    }
  }
  out.lambda = 1.0 - static_cast<double>(box.area()) / static_cast<double>(height * width);
  return out;
}

MixedBatch cutmix(const Tensor& images, std::span<const int> labels, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("cutmix alpha must be > 0");
  if (images.rank() != 4) throw ShapeError("cutmix expects N x C x H x W images");
  const std::size_t n = images.dim(0);
  if (n < 2) throw std::invalid_argument("cutmix needs a batch of at least 2 images");
  const auto height = static_cast<std::ptrdiff_t>(images.dim(2));
  const auto width = static_cast<std::ptrdiff_t>(images.dim(3));

  Rng rng(seed);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double ga = gamma(rng);
  const double gb = gamma(rng);
  const double lambda0 = ga + gb > 0.0 ? ga / (ga + gb) : 0.5;

  std::vector<std::size_t> partner(n);
  std::iota(partner.begin(), partner.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(partner[i - 1], partner[pick(rng)]);
  }

  const double cut_ratio = std::sqrt(1.0 - lambda0);
  const auto cut_w = static_cast<std::ptrdiff_t>(std::floor(static_cast<double>(width) * cut_ratio));
  const auto cut_h = static_cast<std::ptrdiff_t>(std::floor(static_cast<double>(height) * cut_ratio));
  std::uniform_int_distribution<std::ptrdiff_t> pick_x(0, width - 1), pick_y(0, height - 1);
  const auto cx = pick_x(rng);
  const auto cy = pick_y(rng);
  Box box;
  box.x0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(cx - cut_w / 2, 0, width));
  box.x1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(cx + cut_w / 2, 0, width));
  box.y0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(cy - cut_h / 2, 0, height));
  box.y1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(cy + cut_h / 2, 0, height));

  auto out = cutmix_with_box(images, labels, box, partner);
  out.seed = seed;
  return out;
}

MixedBatch plain_batch(const Tensor& images, std::span<const int> labels) {
  MixedBatch out;
  out.images = images;
  out.label_a.assign(labels.begin(), labels.end());
  out.label_b = out.label_a;
  out.partner.resize(labels.size());
  std::iota(out.partner.begin(), out.partner.end(), std::size_t{0});
  out.lambda = 1.0;
  return out;
}

Tensor one_hot(std::span<const int> labels, std::size_t num_classes) {
  Tensor t({labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::invalid_argument(fmt::format("label {} outside [0, {})", labels[i], num_classes));
    }
    t[i * num_classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return t;
}

std::uint64_t batch_hash(const MixedBatch& batch) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ull;
    }
  };
  for (double v : batch.images.data()) mix(std::bit_cast<std::uint64_t>(v));
  for (int y : batch.label_a) mix(static_cast<std::uint64_t>(y));
  for (int y : batch.label_b) mix(static_cast<std::uint64_t>(y));
  mix(std::bit_cast<std::uint64_t>(batch.lambda));
  return h;
}

}  // namespace sadt
