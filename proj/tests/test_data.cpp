// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "sadt/data.hpp"
#include "test_util.hpp"

namespace sadt {
namespace {

using testing::put_be32;
using testing::random_tensor;
using testing::temp_dir;
using testing::write_bytes;

std::vector<std::uint8_t> idx_images(std::size_t n, std::size_t rows, std::size_t cols,
                                     const std::function<std::uint8_t(std::size_t)>& pixel) {
  std::vector<std::uint8_t> out;
  put_be32(out, 0x00000803);
  put_be32(out, static_cast<std::uint32_t>(n));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  for (std::size_t i = 0; i < n * rows * cols; ++i) out.push_back(pixel(i));
  return out;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels, std::uint32_t magic = 0x00000801) {
  std::vector<std::uint8_t> out;
  put_be32(out, magic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

TEST(LoadIdx, HandCraftedFixture) {
  const auto dir = temp_dir("idx");
  write_bytes(dir / "img", idx_images(4, 28, 28, [](std::size_t i) { return static_cast<std::uint8_t>(i % 251); }));
  write_bytes(dir / "lbl", idx_labels({7, 0, 3, 9}));
  const auto d = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(d.images.shape(), (Shape{4, 1, 28, 28}));
  EXPECT_EQ(d.labels, (std::vector<int>{7, 0, 3, 9}));
  EXPECT_EQ(d.num_classes, 10u);
  for (std::size_t i = 0; i < d.images.size(); ++i) ASSERT_EQ(d.images[i], static_cast<double>(i % 251) / 255.0);
  EXPECT_TRUE(load_idx(dir / "img", dir / "lbl").images.bit_equal(d.images));
}

TEST(LoadIdx, ZeroBytesGiveZeros) {
  const auto dir = temp_dir("idx_zero");
  write_bytes(dir / "img", idx_images(2, 3, 3, [](std::size_t) { return 0; }));
  write_bytes(dir / "lbl", idx_labels({1, 2}));
  EXPECT_TRUE(load_idx(dir / "img", dir / "lbl").images.bit_equal(Tensor::zeros({2, 1, 3, 3})));
}

TEST(LoadIdx, Errors) {
  const auto dir = temp_dir("idx_err");
  write_bytes(dir / "img", idx_images(2, 3, 3, [](std::size_t) { return 1; }));
  write_bytes(dir / "bad_magic", idx_labels({1, 2}, 0x00000803));
  write_bytes(dir / "three", idx_labels({1, 2, 3}));
  auto truncated = idx_images(2, 3, 3, [](std::size_t) { return 1; });
  truncated.pop_back();
  write_bytes(dir / "trunc", truncated);
  write_bytes(dir / "lbl", idx_labels({1, 2}));
  write_bytes(dir / "big_label", idx_labels({1, 12}));
  try {
    load_idx(dir / "img", dir / "bad_magic");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_idx(dir / "img", dir / "three"), DataError);
  EXPECT_THROW(load_idx(dir / "trunc", dir / "lbl"), DataError);
  EXPECT_THROW(load_idx(dir / "img", dir / "big_label"), DataError);
  EXPECT_THROW(load_idx(dir / "missing", dir / "lbl"), DataError);
}

std::vector<std::uint8_t> cifar_record(std::uint8_t label, std::uint8_t fill) {
  std::vector<std::uint8_t> r(kCifarRecordBytes, fill);
  r[0] = label;
  return r;
}

TEST(LoadCifar, TwoRecordFixture) {
  const auto dir = temp_dir("cifar");
  auto bytes = cifar_record(3, 255);
  auto second = cifar_record(8, 0);
  second[1 + 1024 + 5] = 51;  // green plane, pixel 5
  bytes.insert(bytes.end(), second.begin(), second.end());
  write_bytes(dir / "batch.bin", bytes);
  const std::filesystem::path paths[] = {dir / "batch.bin"};
  const auto d = load_cifar_binary(paths);
  EXPECT_EQ(d.images.shape(), (Shape{2, 3, 32, 32}));
  EXPECT_EQ(d.labels, (std::vector<int>{3, 8}));
  EXPECT_EQ(d.images[0], 1.0);
  EXPECT_EQ(d.images[3071], 1.0);
  EXPECT_EQ(d.images[3072 + 1024 + 5], 0.2);
  EXPECT_EQ(d.images[3072 + 1024 + 4], 0.0);
}

TEST(LoadCifar, TruncatedFile) {
  const auto dir = temp_dir("cifar_trunc");
  auto bytes = cifar_record(1, 7);
  bytes.pop_back();
  write_bytes(dir / "batch.bin", bytes);
  const std::filesystem::path paths[] = {dir / "batch.bin"};
  EXPECT_THROW(load_cifar_binary(paths), DataError);
}

TEST(MakeBatches, PartitionAndDeterminism) {
  auto batches = make_batches(10, 4, 123);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 4u);
  EXPECT_EQ(batches[1].size(), 4u);
  EXPECT_EQ(batches[2].size(), 2u);
  EXPECT_EQ(make_batches(10, 4, 123), batches);
  EXPECT_NE(make_batches(10, 4, 124), batches);
  std::multiset<std::size_t> seen;
  for (const auto& b : batches) seen.insert(b.begin(), b.end());
  EXPECT_EQ(seen, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_THROW(make_batches(10, 0, 1), std::invalid_argument);
}

TEST(MakeBatches, UnionIsPermutationForManySeeds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<std::size_t> all;
    for (const auto& b : make_batches(97, 8, seed)) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 97; ++i) ASSERT_EQ(all[i], i);
  }
}

TEST(CutMix, DegenerateBox) {
  Rng rng(1);
  const auto images = random_tensor({3, 2, 5, 6}, rng);
  const std::vector<int> labels = {0, 1, 2};
  const std::vector<std::size_t> partner = {1, 2, 0};
  const auto m = cutmix_with_box(images, labels, Box{2, 2, 2, 4}, partner);
  EXPECT_EQ(m.lambda, 1.0);
  EXPECT_TRUE(m.images.bit_equal(images));
  const auto t = m.targets(3);
  EXPECT_TRUE(t.bit_equal(one_hot(labels, 3)));
}

TEST(CutMix, FullBox) {
  Rng rng(2);
  const auto images = random_tensor({3, 2, 5, 6}, rng);
  const std::vector<int> labels = {0, 1, 2};
  const std::vector<std::size_t> partner = {2, 0, 1};
  const auto m = cutmix_with_box(images, labels, Box{0, 0, 6, 5}, partner);
  EXPECT_EQ(m.lambda, 0.0);
  const std::size_t per = 2 * 5 * 6;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < per; ++k) ASSERT_EQ(m.images[i * per + k], images[partner[i] * per + k]);
  }
  EXPECT_EQ(m.label_b, (std::vector<int>{2, 0, 1}));
}

TEST(CutMix, RandomDrawsMatchRegionOracle) {
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> extent(2, 9), batch(2, 6);
  std::uniform_real_distribution<double> alpha(0.2, 3.0);
  for (int draw = 0; draw < 200; ++draw) {
    const std::size_t n = batch(rng), c = 1 + draw % 3, h = extent(rng), w = extent(rng);
    const auto images = random_tensor({n, c, h, w}, rng);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 4);
    const auto m = cutmix(images, labels, alpha(rng), rng());
    const auto& b = m.box;
    ASSERT_LE(b.x0, b.x1);
    ASSERT_LE(b.x1, w);
    ASSERT_LE(b.y0, b.y1);
    ASSERT_LE(b.y1, h);
    ASSERT_EQ(m.lambda, 1.0 - static_cast<double>(b.area()) / static_cast<double>(h * w));
    ASSERT_GE(m.lambda, 0.0);
    ASSERT_LE(m.lambda, 1.0);
    std::vector<std::size_t> sorted = m.partner;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(sorted[i], i);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(m.label_a[i], labels[i]);
      ASSERT_EQ(m.label_b[i], labels[m.partner[i]]);
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            const bool inside = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
            const std::size_t src = inside ? m.partner[i] : i;
            const std::size_t off = ((ch * h) + y) * w + x;
            ASSERT_EQ(std::bit_cast<std::uint64_t>(m.images[(i * c * h * w) + off]),
                      std::bit_cast<std::uint64_t>(images[(src * c * h * w) + off]));
          }
        }
      }
    }
  }
}

TEST(CutMix, DeterministicAndValidated) {
  Rng rng(4);
  const auto images = random_tensor({4, 1, 8, 8}, rng);
  const std::vector<int> labels = {0, 1, 2, 3};
  const auto a = cutmix(images, labels, 1.0, 55);
  const auto b = cutmix(images, labels, 1.0, 55);
  EXPECT_TRUE(a.images.bit_equal(b.images));
  EXPECT_EQ(batch_hash(a), batch_hash(b));
  EXPECT_NE(batch_hash(a), batch_hash(cutmix(images, labels, 1.0, 56)));
  EXPECT_THROW(cutmix(random_tensor({1, 1, 8, 8}, rng), std::vector<int>{0}, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(cutmix(images, labels, 0.0, 1), std::invalid_argument);
}

TEST(CutMix, TargetsMixProportionally) {
  Rng rng(5);
  const auto images = random_tensor({2, 1, 4, 4}, rng);
  const std::vector<int> labels = {0, 2};
  const std::vector<std::size_t> partner = {1, 0};
  const auto m = cutmix_with_box(images, labels, Box{0, 0, 2, 2}, partner);
  EXPECT_EQ(m.lambda, 0.75);
  const auto t = m.targets(3);
  EXPECT_TRUE(t.bit_equal(Tensor({2, 3}, {0.75, 0.0, 0.25, 0.25, 0.0, 0.75})));
}

TEST(DatasetOps, HeadAndValidate) {
  Rng rng(6);
  Dataset d{random_tensor({5, 1, 2, 2}, rng), {0, 1, 2, 3, 4}, 5};
  EXPECT_NO_THROW(d.validate());
  EXPECT_EQ(d.head(3).size(), 3u);
  EXPECT_EQ(d.head(99).size(), 5u);
  d.labels[2] = 7;
  EXPECT_THROW(d.validate(), DataError);
}

}  // namespace
}  // namespace sadt
