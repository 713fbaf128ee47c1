// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/harness.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "sadt/checkpoint.hpp"
#include "sadt/rng.hpp"

namespace sadt {
namespace {

LogRow make_row(std::size_t step, std::size_t epoch, std::string phase) {
  LogRow row;
  row.step = step;
  row.epoch = epoch;
  row.phase = std::move(phase);
  return row;
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string hashes_text(const RunLog& log) {
  std::string out;
  for (std::size_t i = 0; i < log.batch_hashes.size(); ++i) {
    out += fmt::format("{} {:016x}\n", i, log.batch_hashes[i]);
  }
  return out;
}

class Runner {
 public:
  Runner(const ExperimentConfig& config, const LoadedData& data)
      : config_(config),
        train_(data.train),
        test_(data.test),
        model_(build_model(model_spec(config, data.train), config.model.seed)),
        initial_(model_),
        optimizer_(model_.params()),
        strategy_(config.strategy, config.strategy_params),
        schedule_{config.train.lr0, config.train.total_steps} {
    strategy_.check_model(model_);
    train_eval_ = train_.head(config.data.train_eval_samples);
    // Probe set: the first probe_batches * batch_size training samples, unshuffled.
    const std::size_t probe_n = std::min(train_.size(), config.train.probe_batches * config.train.batch_size);
    for (std::size_t start = 0; start < probe_n; start += config.train.batch_size) {
      IndexBatch b(std::min(config.train.batch_size, probe_n - start));
      std::iota(b.begin(), b.end(), start);
      probe_batches_.push_back(std::move(b));
    }
    probe_data_ = train_.head(probe_n);
    log_.config = config;
  }

  RunLog run() {
    evaluate_epoch(0);
    const auto& t = config_.train;
    for (std::size_t epoch = 1; epoch <= t.epochs; ++epoch) {
      const auto batches = make_batches(train_.size(), t.batch_size, derive_seed(t.seed, {kStreamShuffle, epoch}));
      for (std::size_t b = 0; b < batches.size(); ++b) train_batch(epoch, b, batches[b]);
      evaluate_epoch(epoch);
    }
    log_.final_test = evaluate(model_, test_);
    LogRow row = make_row(log_.steps, t.epochs, "test");
    row.task_loss = log_.final_test.mean_loss;
    row.accuracy = log_.final_test.accuracy;
    log_.rows.push_back(row);
    log_.final_params = model_.params();
    return std::move(log_);
  }

  const RunLog& partial() const { return log_; }
  const Model& model() const { return model_; }

 private:
  static ModelSpec model_spec(const ExperimentConfig& config, const Dataset& train) {
    ModelSpec spec;
    spec.arch = config.model.arch;
    spec.num_classes = config.data.num_classes;
    if (spec.arch == Architecture::simple_cnn) {
      spec.input_shape = train.sample_shape();
      spec.conv_widths = {32, 64, 64};
      spec.hidden_dims = {256, 128};
    } else {
      spec.input_shape = {shape_numel(train.sample_shape())};
      spec.hidden_dims = config.model.hidden;
    }
    return spec;
  }

  void train_batch(std::size_t epoch, std::size_t index, const IndexBatch& idx) {
    const auto& t = config_.train;
    const Tensor images = train_.gather_images(idx);
    const auto labels = train_.gather_labels(idx);
    const MixedBatch batch =
        t.cutmix && idx.size() >= 2
            ? cutmix(images, labels, t.cutmix_alpha, derive_seed(t.seed, {kStreamCutMix, epoch, index}))
            : plain_batch(images, labels);
    log_.batch_hashes.push_back(batch_hash(batch));
    const Tensor targets = batch.targets(config_.data.num_classes);

    StepContext ctx{model_, optimizer_, {batch.images, targets}, schedule_.lr(log_.steps),
                    derive_seed(t.seed, {kStreamNoise, epoch, index})};
    const StepReport report = strategy_.step(ctx);
    LogRow row = make_row(log_.steps, epoch, "step");
    row.task_loss = report.task_loss;
    row.kl_loss = report.kl_loss;
    row.lr = report.lr;
    row.grad_norm = report.grad_norm;
    if (config_.output.record_wall_time) row.wall_ms = report.wall_ms;
    log_.rows.push_back(row);
    ++log_.steps;
  }

  void evaluate_epoch(std::size_t epoch) {
    const std::pair<const char*, const Dataset*> phases[] = {{"train", &train_eval_}, {"val", &test_}};
    for (auto [phase, data] : phases) {
      const auto ev = evaluate(model_, *data);
      LogRow row = make_row(log_.steps, epoch, phase);
      row.task_loss = ev.mean_loss;
      row.accuracy = ev.accuracy;
      log_.rows.push_back(row);
    }
    const auto every = config_.train.probe_every;
    if (every > 0 && epoch % every == 0) {
      LogRow row = make_row(log_.steps, epoch, "probe");
      row.sharpness = estimate_sharpness(model_, train_, probe_batches_, config_.train.probe_rho).value;
      row.divergence = model_divergence(initial_, model_, probe_data_).value;
      log_.rows.push_back(row);
    }
  }

  const ExperimentConfig& config_;
  const Dataset& train_;
  const Dataset& test_;
  Dataset train_eval_;
  Dataset probe_data_;
  std::vector<IndexBatch> probe_batches_;
  Model model_;
  Model initial_;
  AdamState optimizer_;
  Strategy strategy_;
  CosineSchedule schedule_;
  RunLog log_;
};

}  // namespace

std::string to_csv(const RunLog& log) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : log.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.step, r.epoch, r.phase, cell(r.task_loss),
                       cell(r.kl_loss), cell(r.lr), cell(r.grad_norm), cell(r.accuracy),
                       cell(r.sharpness), cell(r.divergence), cell(r.wall_ms));
  }
  return out;
}

std::vector<LogRow> parse_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics CSV header mismatch");
  }
  std::vector<LogRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 11) throw std::runtime_error("metrics CSV row with " + std::to_string(f.size()) + " fields");
    LogRow r = make_row(std::stoull(f[0]), std::stoull(f[1]), f[2]);
    r.task_loss = parse_cell(f[3]);
    r.kl_loss = parse_cell(f[4]);
    r.lr = parse_cell(f[5]);
    r.grad_norm = parse_cell(f[6]);
    r.accuracy = parse_cell(f[7]);
    r.sharpness = parse_cell(f[8]);
    r.divergence = parse_cell(f[9]);
    r.wall_ms = parse_cell(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

LoadedData load_data(const DataConfig& c) {
  LoadedData d;
  if (c.format == DataFormat::idx) {
    d.train = load_idx(c.train_images, c.train_labels, c.num_classes);
    d.test = load_idx(c.test_images, c.test_labels, c.num_classes);
  } else {
    std::vector<std::filesystem::path> tr(c.train_files.begin(), c.train_files.end());
    std::vector<std::filesystem::path> te(c.test_files.begin(), c.test_files.end());
    d.train = load_cifar_binary(tr, c.num_classes);
    d.test = load_cifar_binary(te, c.num_classes);
  }
  if (d.train.size() < c.train_samples) {
    throw ConfigError(fmt::format("training data has {} samples, data.train_samples asks for {}",
                                  d.train.size(), c.train_samples));
  }
  if (d.test.size() < c.test_samples) {
    throw ConfigError(fmt::format("test data has {} samples, data.test_samples asks for {}", d.test.size(),
                                  c.test_samples));
  }
  d.train = d.train.head(c.train_samples);
  d.test = d.test.head(c.test_samples);
  return d;
}

void write_run_outputs(const RunLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "metrics.csv", to_csv(log));
  write_text(dir / "config.ini", emit_config(log.config));
  write_text(dir / "batch_hashes.txt", hashes_text(log));
  if (log.config.output.checkpoint && !log.final_params.empty()) {
    save_checkpoint(log.final_params, dir / "final.ckpt");
  }
}

RunLog run_experiment(const ExperimentConfig& config, bool write_outputs) {
  return run_experiment(config, load_data(config.data), write_outputs);
}

RunLog run_experiment(const ExperimentConfig& config, const LoadedData& data, bool write_outputs) {
  Runner runner(config, data);
  try {
    RunLog log = runner.run();
    if (write_outputs) write_run_outputs(log, config.output.dir);
    return log;
  } catch (const NonFiniteError& e) {
    const auto& partial = runner.partial();
    std::string tail;
    const auto csv = to_csv(partial);
    std::vector<std::string> lines;
    std::stringstream ss(csv);
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    for (std::size_t i = lines.size() > 6 ? lines.size() - 6 : 0; i < lines.size(); ++i) tail += lines[i] + "\n";
    const std::filesystem::path dir = config.output.dir;
    if (write_outputs) {
      std::filesystem::create_directories(dir);
      write_text(dir / "metrics.csv", csv);
      write_text(dir / "config.ini", emit_config(config));
      write_text(dir / "batch_hashes.txt", hashes_text(partial));
      save_checkpoint(runner.model().params(), dir / "last_good.ckpt");
    }
    throw ExperimentAborted(fmt::format("training aborted at step {}: {}\nlast log rows:\n{}", partial.steps,
                                        e.what(), tail));
  }
}

void retain_heap_memory() {
#ifdef __GLIBC__
  constexpr int kOneGiB = 1 << 30;
  mallopt(M_MMAP_THRESHOLD, kOneGiB);
  mallopt(M_TRIM_THRESHOLD, kOneGiB);
#endif
}

}  // namespace sadt
