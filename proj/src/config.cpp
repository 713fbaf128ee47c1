// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sadt/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace sadt {
namespace {

namespace pt = boost::property_tree;

// Accepted keys per section.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data",
       {"format", "train_images", "train_labels", "test_images", "test_labels", "train_files",
        "test_files", "num_classes", "train_samples", "test_samples", "train_eval_samples"}},
      {"model", {"arch", "seed", "hidden"}},
      {"strategy", {"id", "sigma_w", "sigma_g", "rho", "agc_lambda", "ascent_lr", "rollback_to_w"}},
      {"train",
       {"epochs", "batch_size", "lr0", "total_steps", "cutmix", "cutmix_alpha", "seed", "probe_every",
        "probe_rho", "probe_batches"}},
      {"output", {"dir", "record_wall_time", "checkpoint"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(fmt::format("{}: not a number: '{}'", key, text));
  return v;
}

std::uint64_t to_uint(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("{}: not a non-negative integer: '{}'", key, text));
  }
  return v;
}

bool to_bool(const std::string& text, const std::string& key) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

std::vector<std::string> to_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string number(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  return fmt::format("{}", v);
}

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

ExperimentConfig parse_config_text(const std::string& raw) {
  // Drop '#' comment lines; the INI reader itself only knows ';'.
  std::stringstream in(raw), cleaned;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty() && t[0] == '#') continue;
    cleaned << line << '\n';
  }
  pt::ptree tree;
  try {
    pt::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  std::map<std::string, std::map<std::string, std::string>> values;
  for (const auto& [section, body] : tree) {
    auto it = schema().find(section);
    if (it == schema().end()) {
      if (body.empty()) throw ConfigError("unknown key '" + section + "' outside any section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      values[section][key] = trim(value.data());
    }
  }
  auto get = [&](const std::string& s, const std::string& k) -> std::optional<std::string> {
    auto sec = values.find(s);
    if (sec == values.end()) return std::nullopt;
    auto kv = sec->second.find(k);
    if (kv == sec->second.end()) return std::nullopt;
    return kv->second;
  };

  ExperimentConfig c;
  auto& d = c.data;
  if (auto v = get("data", "format")) {
    if (*v == "idx") d.format = DataFormat::idx;
    else if (*v == "cifar") d.format = DataFormat::cifar;
    else throw ConfigError("data.format: expected idx or cifar, got '" + *v + "'");
  }
  if (d.format == DataFormat::idx) {
    for (auto [key, field] : {std::pair{"train_images", &d.train_images}, {"train_labels", &d.train_labels},
                              {"test_images", &d.test_images}, {"test_labels", &d.test_labels}}) {
      auto v = get("data", key);
      if (!v || v->empty()) throw ConfigError(std::string("missing dataset path data.") + key);
      *field = *v;
    }
  } else {
    auto tr = get("data", "train_files");
    auto te = get("data", "test_files");
    if (!tr || to_list(*tr).empty()) throw ConfigError("missing dataset path data.train_files");
    if (!te || to_list(*te).empty()) throw ConfigError("missing dataset path data.test_files");
    d.train_files = to_list(*tr);
    d.test_files = to_list(*te);
  }
  if (auto v = get("data", "num_classes")) d.num_classes = to_uint(*v, "data.num_classes");
  if (auto v = get("data", "train_samples")) d.train_samples = to_uint(*v, "data.train_samples");
  if (auto v = get("data", "test_samples")) d.test_samples = to_uint(*v, "data.test_samples");
  if (auto v = get("data", "train_eval_samples")) d.train_eval_samples = to_uint(*v, "data.train_eval_samples");
  if (d.num_classes < 2) throw ConfigError("data.num_classes must be >= 2");
  if (d.train_samples == 0 || d.test_samples == 0) throw ConfigError("data sample counts must be positive");

  auto id = get("strategy", "id");
  if (!id) throw ConfigError("missing strategy.id");
  try {
    c.strategy = parse_strategy(*id);
  } catch (const std::invalid_argument&) {
    throw ConfigError("invalid strategy id '" + *id + "'");
  }
  auto& sp = c.strategy_params;
  if (auto v = get("strategy", "sigma_w")) sp.sigma_w = to_double(*v, "strategy.sigma_w");
  if (auto v = get("strategy", "sigma_g")) sp.sigma_g = to_double(*v, "strategy.sigma_g");
  if (auto v = get("strategy", "rho")) sp.rho = to_double(*v, "strategy.rho");
  if (auto v = get("strategy", "agc_lambda")) sp.agc_lambda = to_double(*v, "strategy.agc_lambda");
  if (auto v = get("strategy", "ascent_lr"); v && *v != "schedule") sp.ascent_lr = to_double(*v, "strategy.ascent_lr");
  if (auto v = get("strategy", "rollback_to_w")) sp.rollback_to_w = to_bool(*v, "strategy.rollback_to_w");
  if (sp.sigma_w < 0 || sp.sigma_g < 0) throw ConfigError("noise scales must be >= 0");
  if (!(sp.rho > 0)) throw ConfigError("strategy.rho must be > 0");
  if (!(sp.agc_lambda > 0)) throw ConfigError("strategy.agc_lambda must be > 0");
  if (sp.ascent_lr && *sp.ascent_lr < 0) throw ConfigError("strategy.ascent_lr must be >= 0");

  auto& t = c.train;
  if (auto v = get("train", "epochs")) t.epochs = to_uint(*v, "train.epochs");
  if (auto v = get("train", "batch_size")) t.batch_size = to_uint(*v, "train.batch_size");
  if (auto v = get("train", "lr0")) t.lr0 = to_double(*v, "train.lr0");
  if (auto v = get("train", "cutmix")) t.cutmix = to_bool(*v, "train.cutmix");
  if (auto v = get("train", "cutmix_alpha")) t.cutmix_alpha = to_double(*v, "train.cutmix_alpha");
  if (auto v = get("train", "seed")) t.seed = to_uint(*v, "train.seed");
  if (auto v = get("train", "probe_every")) t.probe_every = to_uint(*v, "train.probe_every");
  if (auto v = get("train", "probe_rho")) t.probe_rho = to_double(*v, "train.probe_rho");
  if (auto v = get("train", "probe_batches")) t.probe_batches = to_uint(*v, "train.probe_batches");
  if (t.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (t.lr0 < 0) throw ConfigError("train.lr0 must be >= 0");
  if (!(t.cutmix_alpha > 0)) throw ConfigError("train.cutmix_alpha must be > 0");
  if (!(t.probe_rho > 0)) throw ConfigError("train.probe_rho must be > 0");
  if (t.probe_batches == 0) throw ConfigError("train.probe_batches must be >= 1");
  const std::size_t per_epoch = (d.train_samples + t.batch_size - 1) / t.batch_size;
  if (auto v = get("train", "total_steps")) {
    t.total_steps = to_uint(*v, "train.total_steps");
    c.total_steps_explicit = true;
    if (t.total_steps < t.epochs * per_epoch) {
      throw ConfigError(fmt::format("train.total_steps = {} is shorter than the {} steps the run takes",
                                    t.total_steps, t.epochs * per_epoch));
    }
  } else {
    t.total_steps = t.epochs * per_epoch;
  }

  auto& m = c.model;
  if (auto v = get("model", "arch")) {
    try {
      m.arch = parse_architecture(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("model.arch: ") + e.what());
    }
  }
  if (auto v = get("model", "seed")) {
    m.seed = to_uint(*v, "model.seed");
    c.model_seed_explicit = true;
  } else {
    m.seed = t.seed;
  }
  if (auto v = get("model", "hidden")) {
    m.hidden.clear();
    for (const auto& item : to_list(*v)) m.hidden.push_back(to_uint(item, "model.hidden"));
  }

  auto& o = c.output;
  if (auto v = get("output", "dir")) o.dir = *v;
  if (auto v = get("output", "record_wall_time")) o.record_wall_time = to_bool(*v, "output.record_wall_time");
  if (auto v = get("output", "checkpoint")) o.checkpoint = to_bool(*v, "output.checkpoint");
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string emit_config(const ExperimentConfig& c) {
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  const auto& d = c.data;
  out += "[data]\n";
  if (d.format == DataFormat::idx) {
    line("format", "idx");
    line("train_images", d.train_images);
    line("train_labels", d.train_labels);
    line("test_images", d.test_images);
    line("test_labels", d.test_labels);
  } else {
    line("format", "cifar");
    line("train_files", fmt::format("{}", fmt::join(d.train_files, ",")));
    line("test_files", fmt::format("{}", fmt::join(d.test_files, ",")));
  }
  line("num_classes", std::to_string(d.num_classes));
  line("train_samples", std::to_string(d.train_samples));
  line("test_samples", std::to_string(d.test_samples));
  line("train_eval_samples", std::to_string(d.train_eval_samples));

  out += "\n[model]\n";
  line("arch", to_string(c.model.arch));
  line("seed", std::to_string(c.model.seed));
  line("hidden", fmt::format("{}", fmt::join(c.model.hidden, ",")));

  const auto& sp = c.strategy_params;
  out += "\n[strategy]\n";
  line("id", to_string(c.strategy));
  line("sigma_w", number(sp.sigma_w));
  line("sigma_g", number(sp.sigma_g));
  line("rho", number(sp.rho));
  line("agc_lambda", number(sp.agc_lambda));
  line("ascent_lr", sp.ascent_lr ? number(*sp.ascent_lr) : "schedule");
  line("rollback_to_w", flag(sp.rollback_to_w));

  const auto& t = c.train;
  out += "\n[train]\n";
  line("epochs", std::to_string(t.epochs));
  line("batch_size", std::to_string(t.batch_size));
  line("lr0", number(t.lr0));
  line("total_steps", std::to_string(t.total_steps));
  line("cutmix", flag(t.cutmix));
  line("cutmix_alpha", number(t.cutmix_alpha));
  line("seed", std::to_string(t.seed));
  line("probe_every", std::to_string(t.probe_every));
  line("probe_rho", number(t.probe_rho));
  line("probe_batches", std::to_string(t.probe_batches));

  out += "\n[output]\n";
  line("dir", c.output.dir);
  line("record_wall_time", flag(c.output.record_wall_time));
  line("checkpoint", flag(c.output.checkpoint));
  return out;
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.train.seed = seed;
  if (!config.model_seed_explicit) config.model.seed = seed;
}

void override_output_dir(ExperimentConfig& config, const std::string& dir) { config.output.dir = dir; }

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return emit_config(a) == emit_config(b);
}

}  // namespace sadt
