#include "cot/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cot/errors.hpp"
#include "cot/io.hpp"
#include "cot/kernels.hpp"

namespace cot {

namespace {

constexpr double kTemperatureMin = 1e-2;
constexpr double kTemperatureMax = 1e2;

// Mean negative log-likelihood of softmax(logits/T) against the labels,
// evaluated through max-shifted log-sum-exp.
double mean_nll(const LogitsDataset& data,
                std::span<const std::int32_t> labels, double temperature) {
  const std::size_t n = data.size();
  const std::size_t k_classes = data.num_classes();
  const double inv_t = 1.0 / temperature;
  std::vector<double> row_nll(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const double* z = data.logits().data() + static_cast<std::size_t>(i) * k_classes;
    double zmax = z[0];
    for (std::size_t k = 1; k < k_classes; ++k) zmax = std::max(zmax, z[k]);
    double denom = 0.0;
    for (std::size_t k = 0; k < k_classes; ++k) {
      denom += std::exp((z[k] - zmax) * inv_t);
    }
    const double zy = z[labels[static_cast<std::size_t>(i)]];
    row_nll[static_cast<std::size_t>(i)] =
        (zmax - zy) * inv_t + std::log(denom);
  }
  return kernels::sum(row_nll) / static_cast<double>(n);
}

}  // namespace

CalibrationModel fit_temperature(const LogitsDataset& val) {
  const std::vector<std::int32_t> labels = required_labels(val);
  if (std::set<std::int32_t>(labels.begin(), labels.end()).size() < 2) {
    throw ValidationError(
        "validation set has a single class; temperature is not identifiable");
  }

  const auto nll = [&](double t) { return mean_nll(val, labels, t); };

  // Golden-section search on x = log T.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(kTemperatureMin);
  double b = std::log(kTemperatureMax);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = nll(std::exp(c));
  double fd = nll(std::exp(d));
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = nll(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = nll(std::exp(d));
    }
  }
  double temperature = std::exp((a + b) / 2.0);
  temperature = std::clamp(temperature, kTemperatureMin, kTemperatureMax);

  const double nll_before = nll(1.0);
  double nll_after = nll(temperature);
  if (nll_after > nll_before) {
    temperature = 1.0;
    nll_after = nll_before;
  }

  CalibrationModel model;
  model.temperature = temperature;
  model.num_classes = val.num_classes();

  SoftmaxMatrix before(val.num_classes(), [&] {
    std::vector<double> p(val.logits().size());
    kernels::softmax_rows(val.logits().data(), val.size(), val.num_classes(),
                          1.0, p.data());
    return p;
  }());
  const SoftmaxMatrix after = apply_temperature(val, model);

  std::size_t correct = 0;
  std::vector<double> confidences(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    const auto row = after.row(i);
    const std::size_t pred = argmax_index(row);
    confidences[i] = row[pred];
    if (pred == static_cast<std::size_t>(labels[i])) ++correct;
  }

  model.diagnostics.nll_before = nll_before;
  model.diagnostics.nll_after = nll_after;
  model.diagnostics.ece_before = expected_calibration_error(before, labels);
  model.diagnostics.ece_after = expected_calibration_error(after, labels);
  model.diagnostics.accuracy =
      static_cast<double>(correct) / static_cast<double>(val.size());
  model.diagnostics.mean_confidence_after =
      kernels::sum(confidences) / static_cast<double>(val.size());
  return model;
}

double expected_calibration_error(const SoftmaxMatrix& probs,
                                  std::span<const std::int32_t> labels,
                                  std::size_t num_bins) {
  if (labels.size() != probs.size()) {
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " != row count " + std::to_string(probs.size()));
  }
  if (num_bins == 0) throw ValidationError("num_bins must be positive");
  const std::size_t n = probs.size();
  std::vector<double> bin_confidence(num_bins, 0.0);
  std::vector<double> bin_accuracy(num_bins, 0.0);
  std::vector<std::size_t> bin_count(num_bins, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.num_classes()) {
      throw ValidationError("row " + std::to_string(i) + ": label " +
                            std::to_string(y) + " outside [0, " +
                            std::to_string(probs.num_classes()) + ")");
    }
    const auto row = probs.row(i);
    const std::size_t pred = argmax_index(row);
    const double confidence = row[pred];
    const std::size_t bin = std::min(
        num_bins - 1, static_cast<std::size_t>(confidence *
                                               static_cast<double>(num_bins)));
    bin_confidence[bin] += confidence;
    bin_accuracy[bin] += pred == static_cast<std::size_t>(y) ? 1.0 : 0.0;
    bin_count[bin] += 1;
  }
  double ece = 0.0;
  for (std::size_t b = 0; b < num_bins; ++b) {
    if (bin_count[b] == 0) continue;
    ece += std::abs(bin_accuracy[b] - bin_confidence[b]);
  }
  return ece / static_cast<double>(n);
}

SoftmaxMatrix apply_temperature(const LogitsDataset& data,
                                const CalibrationModel& model) {
  if (model.num_classes != data.num_classes()) {
    throw ValidationError("calibration is for " +
                          std::to_string(model.num_classes) +
                          " classes, data has " +
                          std::to_string(data.num_classes()));
  }
  std::vector<double> p(data.logits().size());
  kernels::softmax_rows(data.logits().data(), data.size(), data.num_classes(),
                        model.temperature, p.data());
  return SoftmaxMatrix(data.num_classes(), std::move(p));
}

std::string calibration_to_json(const CalibrationModel& model) {
  JsonWriter w;
  w.begin_object();
  w.key("schema_version").value(std::int64_t{1});
  w.key("temperature").value(model.temperature);
  w.key("num_classes").value(model.num_classes);
  w.key("nll_before").value(model.diagnostics.nll_before);
  w.key("nll_after").value(model.diagnostics.nll_after);
  w.key("ece_before").value(model.diagnostics.ece_before);
  w.key("ece_after").value(model.diagnostics.ece_after);
  w.key("accuracy").value(model.diagnostics.accuracy);
  w.key("mean_confidence_after").value(model.diagnostics.mean_confidence_after);
  w.end_object();
  return std::move(w).str();
}

CalibrationModel read_calibration_json(const std::string& path) {
  const nlohmann::json parsed =
      nlohmann::json::parse(read_file(path), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ValidationError(path + ": not a valid calibration JSON object");
  }
  CalibrationModel model;
  try {
    model.temperature = parsed.at("temperature").get<double>();
    model.num_classes = parsed.at("num_classes").get<std::size_t>();
    model.diagnostics.nll_before = parsed.value("nll_before", 0.0);
    model.diagnostics.nll_after = parsed.value("nll_after", 0.0);
    model.diagnostics.ece_before = parsed.value("ece_before", 0.0);
    model.diagnostics.ece_after = parsed.value("ece_after", 0.0);
    model.diagnostics.accuracy = parsed.value("accuracy", 0.0);
    model.diagnostics.mean_confidence_after =
        parsed.value("mean_confidence_after", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (!(model.temperature >= kTemperatureMin &&
        model.temperature <= kTemperatureMax)) {
    throw ValidationError(path + ": temperature " +
                          std::to_string(model.temperature) +
                          " outside [1e-2, 1e2]");
  }
  if (model.num_classes < 2) {
    throw ValidationError(path + ": num_classes must be at least 2");
  }
  return model;
}

}  // namespace cot
