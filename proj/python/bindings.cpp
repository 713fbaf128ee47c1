// Copyright 2026 The SADT Lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sadt/config.hpp"
#include "sadt/data.hpp"
#include "sadt/harness.hpp"
#include "sadt/ops.hpp"
#include "sadt/optim.hpp"
#include "sadt/report.hpp"
#include "sadt/strategies.hpp"
#include "sadt/tape.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

sadt::Tensor to_tensor(const Array& a) {
  sadt::Shape shape(a.shape(), a.shape() + a.ndim());
  return sadt::Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const sadt::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.raw(), t.raw() + t.size(), out.mutable_data());
  return out;
}

py::object conv2d(const Array& x, const Array& kernel, std::size_t stride, std::size_t padding,
                  const std::optional<Array>& upstream) {
  sadt::Tape tape;
  auto vx = tape.leaf("input", to_tensor(x));
  auto vk = tape.leaf("kernel", to_tensor(kernel));
  auto out = sadt::ops::conv2d(vx, vk, stride, padding);
  if (!upstream) return to_array(out.value());
  auto loss = sadt::ops::sum(sadt::ops::mul(out, tape.constant(to_tensor(*upstream))));
  const auto grads = tape.backward(loss);
  return py::make_tuple(to_array(out.value()), to_array(grads[0].value), to_array(grads[1].value));
}

py::tuple softmax_cross_entropy(const Array& logits, const Array& targets) {
  sadt::Tape tape;
  auto z = tape.leaf("logits", to_tensor(logits));
  auto loss = sadt::ops::softmax_cross_entropy(z, tape.constant(to_tensor(targets)));
  const double value = loss.value().item();
  const auto grads = tape.backward(loss);
  return py::make_tuple(value, to_array(grads[0].value));
}

py::tuple kl_divergence(const Array& p_logits, const Array& q_logits) {
  sadt::Tape tape;
  auto p = tape.leaf("p", to_tensor(p_logits));
  auto q = tape.leaf("q", to_tensor(q_logits));
  auto kl = sadt::ops::kl_divergence(p, q, true);
  const double value = kl.value().item();
  const auto grads = tape.backward(kl);
  return py::make_tuple(value, to_array(grads[1].value));
}

py::dict cutmix(const Array& images, const std::vector<int>& labels, double alpha, std::uint64_t seed) {
  const auto m = sadt::cutmix(to_tensor(images), labels, alpha, seed);
  py::dict d;
  d["images"] = to_array(m.images);
  d["label_a"] = m.label_a;
  d["label_b"] = m.label_b;
  d["partner"] = m.partner;
  d["box"] = py::make_tuple(m.box.x0, m.box.y0, m.box.x1, m.box.y1);
  d["lam"] = m.lambda;
  return d;
}

py::object optional_value(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict run_experiment(const std::string& config_text, bool write_outputs, std::optional<std::uint64_t> seed,
                        std::optional<std::string> out) {
  auto config = sadt::parse_config_text(config_text);
  if (seed) sadt::override_seed(config, *seed);
  if (out) sadt::override_output_dir(config, *out);
  sadt::RunLog log;
  {
    py::gil_scoped_release release;
    log = sadt::run_experiment(config, write_outputs);
  }
  py::list rows;
  for (const auto& r : log.rows) {
    py::dict row;
    row["step"] = r.step;
    row["epoch"] = r.epoch;
    row["phase"] = r.phase;
    row["task_loss"] = optional_value(r.task_loss);
    row["kl_loss"] = optional_value(r.kl_loss);
    row["lr"] = optional_value(r.lr);
    row["grad_norm"] = optional_value(r.grad_norm);
    row["accuracy"] = optional_value(r.accuracy);
    row["sharpness"] = optional_value(r.sharpness);
    row["divergence"] = optional_value(r.divergence);
    row["wall_ms"] = optional_value(r.wall_ms);
    rows.append(row);
  }
  py::dict d;
  d["rows"] = rows;
  d["batch_hashes"] = log.batch_hashes;
  d["steps"] = log.steps;
  d["final_test_accuracy"] = log.final_test.accuracy;
  d["final_test_loss"] = log.final_test.mean_loss;
  d["csv"] = sadt::to_csv(log);
  return d;
}

std::string compare_runs(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out) {
  std::vector<sadt::RunSummary> summaries;
  for (const auto& r : runs) summaries.push_back(sadt::load_run(r));
  const auto report = sadt::compare_runs(summaries);
  sadt::write_report(report, out);
  return sadt::table_markdown(report);
}

}  // namespace

PYBIND11_MODULE(_sadt, m) {
  m.doc() = "SADT training lab";
  sadt::retain_heap_memory();
  py::register_exception<sadt::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::list strategies;
  for (auto id : sadt::kAllStrategies) strategies.append(sadt::to_string(id));
  m.attr("STRATEGIES") = strategies;

  m.def("conv2d", &conv2d, py::arg("input"), py::arg("kernel"), py::arg("stride") = 1, py::arg("padding") = 0,
        py::arg("upstream") = py::none(),
        "Cross-correlation of N x C x H x W input with F x C x kh x kw kernel. With `upstream`, also returns the "
        "gradients of sum(output * upstream) for input and kernel.");
  m.def("softmax_cross_entropy", &softmax_cross_entropy, py::arg("logits"), py::arg("targets"),
        "Mean soft-target cross-entropy and its gradient for the logits.");
  m.def("kl_divergence", &kl_divergence, py::arg("p_logits"), py::arg("q_logits"),
        "Batch-mean KL(softmax(p) || softmax(q)) with p detached, and its gradient for q.");
  m.def(
      "cosine_lr",
      [](double initial_lr, std::size_t total_steps, std::size_t step) {
        return sadt::CosineSchedule{initial_lr, total_steps}.lr(step);
      },
      py::arg("initial_lr"), py::arg("total_steps"), py::arg("step"));
  m.def("cutmix", &cutmix, py::arg("images"), py::arg("labels"), py::arg("alpha"), py::arg("seed"));
  m.def(
      "resolve_config", [](const std::string& text) { return sadt::emit_config(sadt::parse_config_text(text)); },
      py::arg("text"), "Fully resolved configuration text.");
  m.def("run_experiment", &run_experiment, py::arg("config_text"), py::arg("write_outputs") = false,
        py::arg("seed") = py::none(), py::arg("out") = py::none(),
        "Runs one experiment and returns its log rows, batch hashes and final test metrics.");
  m.def("compare_runs", &compare_runs, py::arg("runs"), py::arg("out"),
        "Writes the comparison report for the given run directories and returns the markdown table.");
}
