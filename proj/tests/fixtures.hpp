// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sadt/config.hpp"
#include "test_util.hpp"

namespace sadt::testing {

// Class k lights a 2x2 patch whose position depends on k, over uniform noise.
inline void write_synthetic_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                                std::size_t n, std::size_t side, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(0, 90);
  std::vector<std::uint8_t> img, lbl;
  put_be32(img, 0x00000803);
  put_be32(img, static_cast<std::uint32_t>(n));
  put_be32(img, static_cast<std::uint32_t>(side));
  put_be32(img, static_cast<std::uint32_t>(side));
  put_be32(lbl, 0x00000801);
  put_be32(lbl, static_cast<std::uint32_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = (i * 7 + seed) % classes;
    const std::size_t px = (k * 3) % (side - 1), py = (k * 5 / 2) % (side - 1);
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const bool lit = (x == px || x == px + 1) && (y == py || y == py + 1);
        img.push_back(static_cast<std::uint8_t>(lit ? 255 : noise(rng)));
      }
    }
    lbl.push_back(static_cast<std::uint8_t>(k));
  }
  write_bytes(images, img);
  write_bytes(labels, lbl);
}

struct SyntheticData {
  std::filesystem::path dir;
  std::size_t train = 0, test = 0;
};

inline SyntheticData make_synthetic_data(const std::string& name, std::size_t train = 96, std::size_t test = 40,
                                         std::size_t side = 8) {
  SyntheticData d{temp_dir(name), train, test};
  write_synthetic_idx(d.dir / "train-images", d.dir / "train-labels", train, side, 4, 1);
  write_synthetic_idx(d.dir / "test-images", d.dir / "test-labels", test, side, 4, 2);
  return d;
}

inline std::string synthetic_config_text(const SyntheticData& d, const std::string& strategy,
                                         const std::string& extra_train = "", const std::string& out = "") {
  auto p = [&](const char* f) { return (d.dir / f).string(); };
  std::string text = "[data]\nformat = idx\n";
  text += "train_images = " + p("train-images") + "\ntrain_labels = " + p("train-labels") + "\n";
  text += "test_images = " + p("test-images") + "\ntest_labels = " + p("test-labels") + "\n";
  text += "num_classes = 4\ntrain_samples = " + std::to_string(d.train) + "\ntest_samples = " +
          std::to_string(d.test) + "\ntrain_eval_samples = 32\n";
  text += "[strategy]\nid = " + strategy + "\n";
  // extra_train lines ("key = value") override the defaults below.
  std::map<std::string, std::string> train = {
      {"epochs", "2"}, {"batch_size", "16"}, {"lr0", "0.001"}, {"probe_batches", "2"}};
  std::istringstream extra(extra_train);
  for (std::string line; std::getline(extra, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string v) {
      v.erase(0, v.find_first_not_of(' '));
      v.erase(v.find_last_not_of(' ') + 1);
      return v;
    };
    train[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  text += "[train]\n";
  for (const auto& [k, v] : train) text += k + " = " + v + "\n";
  text += "[output]\ndir = " + (out.empty() ? (d.dir / ("run_" + strategy)).string() : out) + "\n";
  return text;
}

}  // namespace sadt::testing
