// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sadt/checkpoint.hpp"
#include "sadt/config.hpp"
#include "sadt/data.hpp"
#include "sadt/harness.hpp"
#include "sadt/metrics.hpp"
#include "sadt/nn.hpp"
#include "sadt/report.hpp"
#include "sadt/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool resolve_only = false;
};

sadt::ExperimentConfig resolve(const TrainArgs& args) {
  auto config = sadt::parse_config(args.config);
  if (args.seed) sadt::override_seed(config, *args.seed);
  if (args.out) sadt::override_output_dir(config, *args.out);
  return config;
}

int run_train(const TrainArgs& args) {
  const auto config = resolve(args);
  if (args.resolve_only) {
    std::cout << sadt::emit_config(config);
    return 0;
  }
  const auto log = sadt::run_experiment(config);
  fmt::print("{}: {} steps, test accuracy {:.4f}, test loss {:.6f} -> {}\n", sadt::display_name(config.strategy),
             log.steps, log.final_test.accuracy, log.final_test.mean_loss, config.output.dir);
  return 0;
}

int run_compare(const std::vector<std::string>& logs, const std::string& out) {
  std::vector<sadt::RunSummary> runs;
  for (const auto& path : logs) runs.push_back(sadt::load_run(path));
  const auto report = sadt::compare_runs(runs);
  sadt::write_report(report, out);
  std::cout << sadt::table_markdown(report);
  return 0;
}

bool looks_like_idx_images(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[4] = {};
  in.read(reinterpret_cast<char*>(magic), 4);
  const std::uint32_t value = (std::uint32_t{magic[0]} << 24) | (std::uint32_t{magic[1]} << 16) |
                              (std::uint32_t{magic[2]} << 8) | std::uint32_t{magic[3]};
  return in.gcount() == 4 && value == sadt::kIdxImageMagic;
}

struct ProbeArgs {
  std::string checkpoint;
  std::string data;
  std::string labels;
  std::string reference;
  double rho = 0.05;
  std::size_t num_classes = 10;
  std::size_t samples = 1000;
  std::size_t batch_size = 64;
  std::size_t batches = 4;
  std::uint64_t seed = 0;
};

int run_probe(const ProbeArgs& args) {
  sadt::Dataset data;
  if (looks_like_idx_images(args.data)) {
    if (args.labels.empty()) throw std::invalid_argument("--labels is required for IDX image files");
    data = sadt::load_idx(args.data, args.labels, args.num_classes);
  } else {
    const fs::path files[] = {args.data};
    data = sadt::load_cifar_binary(files, args.num_classes);
  }
  data = data.head(args.samples);

  auto params = sadt::load_checkpoint(args.checkpoint);
  auto spec = sadt::infer_model_spec(params, data.sample_shape());
  sadt::Model model(spec, std::move(params));

  auto batches = sadt::make_batches(data.size(), args.batch_size,
                                    sadt::derive_seed(args.seed, {sadt::kStreamShuffle}));
  if (batches.size() > args.batches) batches.resize(args.batches);
  const auto sharp = sadt::estimate_sharpness(model, data, batches, args.rho);
  const auto eval = sadt::evaluate(model, data);

  nlohmann::ordered_json out;
  out["checkpoint"] = args.checkpoint;
  out["architecture"] = sadt::to_string(spec.arch);
  out["parameters"] = model.params().parameter_count();
  out["samples"] = data.size();
  out["rho"] = args.rho;
  out["sharpness"] = sharp.value;
  out["sharpness_batches"] = sharp.batches;
  out["zero_gradient_batches"] = sharp.zero_gradient_batches;
  out["accuracy"] = eval.accuracy;
  out["loss"] = eval.mean_loss;
  if (!args.reference.empty()) {
    sadt::Model reference(spec, sadt::load_checkpoint(args.reference));
    out["reference"] = args.reference;
    out["divergence"] = sadt::model_divergence(reference, model, data).value;
  } else {
    out["divergence"] = nullptr;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

void add_train_options(CLI::App& app, TrainArgs& args) {
  app.add_option("--config", args.config, "Experiment config (INI)")->check(CLI::ExistingFile);
  app.add_option("--seed", args.seed, "Override train.seed (and model.seed unless set explicitly)");
  app.add_option("--out", args.out, "Override output.dir");
  app.add_flag("--resolve-config", args.resolve_only, "Print the resolved config and exit");
}

}  // namespace

int main(int argc, char** argv) {
  sadt::retain_heap_memory();
  CLI::App app{"SADT training lab"};
  app.require_subcommand(0, 1);

  TrainArgs top_args;
  add_train_options(app, top_args);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Run one experiment");
  add_train_options(*train, train_args);
  train->get_option("--config")->required();

  std::vector<std::string> logs;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Compare finished runs");
  compare->add_option("--logs", logs, "Run directories or metrics.csv files")->required()->expected(1, -1);
  compare->add_option("--out", compare_out, "Report directory")->required();

  ProbeArgs probe_args;
  auto* probe = app.add_subcommand("probe", "Sharpness / divergence of a saved model");
  probe->add_option("--checkpoint", probe_args.checkpoint)->required()->check(CLI::ExistingFile);
  probe->add_option("--data", probe_args.data, "IDX image file or CIFAR binary batch")
      ->required()
      ->check(CLI::ExistingFile);
  probe->add_option("--labels", probe_args.labels, "IDX label file")->check(CLI::ExistingFile);
  probe->add_option("--rho", probe_args.rho)->required()->check(CLI::PositiveNumber);
  probe->add_option("--reference", probe_args.reference, "Checkpoint to measure divergence against")
      ->check(CLI::ExistingFile);
  probe->add_option("--num-classes", probe_args.num_classes)->capture_default_str();
  probe->add_option("--samples", probe_args.samples)->capture_default_str();
  probe->add_option("--batch-size", probe_args.batch_size)->capture_default_str();
  probe->add_option("--batches", probe_args.batches)->capture_default_str();
  probe->add_option("--seed", probe_args.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(train_args);
    if (compare->parsed()) return run_compare(logs, compare_out);
    if (probe->parsed()) return run_probe(probe_args);
    if (top_args.resolve_only) {
      if (top_args.config.empty()) throw std::invalid_argument("--resolve-config needs --config");
      return run_train(top_args);
    }
    std::cerr << app.help();
    return 1;
  } catch (const sadt::ExperimentAborted& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
