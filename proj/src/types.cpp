#include "cot/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cot/errors.hpp"
#include "cot/kernels.hpp"

namespace cot {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

std::string at_row(std::size_t i) { return "row " + std::to_string(i) + ": "; }

}  // namespace

LogitsDataset::LogitsDataset(std::size_t num_classes,
                             std::vector<std::optional<std::int32_t>> labels,
                             std::vector<double> logits)
    : num_classes_(num_classes),
      labels_(std::move(labels)),
      logits_(std::move(logits)) {
  require(num_classes_ >= 2, "dataset needs at least 2 classes, got " +
                                 std::to_string(num_classes_));
  require(!labels_.empty(), "dataset has no rows");
  require(logits_.size() == labels_.size() * num_classes_,
          "logits size " + std::to_string(logits_.size()) + " != " +
              std::to_string(labels_.size()) + " rows x " +
              std::to_string(num_classes_) + " classes");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i]) {
      const std::int32_t y = *labels_[i];
      require(y >= 0 && static_cast<std::size_t>(y) < num_classes_,
              at_row(i) + "label " + std::to_string(y) +
                  " outside [0, " + std::to_string(num_classes_) + ")");
    }
    for (std::size_t k = 0; k < num_classes_; ++k) {
      require(std::isfinite(logits_[i * num_classes_ + k]),
              at_row(i) + "logit " + std::to_string(k) + " is not finite");
    }
  }
}

bool LogitsDataset::fully_labeled() const {
  return std::all_of(labels_.begin(), labels_.end(),
                     [](const auto& l) { return l.has_value(); });
}

SoftmaxMatrix::SoftmaxMatrix(std::size_t num_classes,
                             std::vector<double> values)
    : num_classes_(num_classes), values_(std::move(values)) {
  require(num_classes_ >= 2, "softmax matrix needs at least 2 classes");
  require(!values_.empty() && values_.size() % num_classes_ == 0,
          "softmax matrix size " + std::to_string(values_.size()) +
              " is not a positive multiple of " + std::to_string(num_classes_));
  const std::size_t rows = values_.size() / num_classes_;
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = values_.data() + i * num_classes_;
    double s = 0.0;
    for (std::size_t k = 0; k < num_classes_; ++k) {
      require(std::isfinite(row[k]) && row[k] >= 0.0 && row[k] <= 1.0,
              at_row(i) + "probability " + std::to_string(k) +
                  " outside [0, 1]");
      s += row[k];
    }
    require(std::abs(s - 1.0) <= 1e-9,
            at_row(i) + "probabilities sum to " + std::to_string(s) +
                ", not 1 within 1e-9");
    for (std::size_t k = 0; k < num_classes_; ++k) row[k] /= s;
  }
}

LabelDistribution::LabelDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  require(probs_.size() >= 2, "label distribution needs at least 2 classes");
  double s = 0.0;
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    require(std::isfinite(probs_[k]) && probs_[k] >= 0.0,
            "class " + std::to_string(k) + ": probability is negative or not finite");
    s += probs_[k];
  }
  require(std::abs(s - 1.0) <= 1e-9,
          "label probabilities sum to " + std::to_string(s) +
              ", not 1 within 1e-9");
  for (double& p : probs_) p /= s;
}

LabelDistribution LabelDistribution::uniform(std::size_t num_classes) {
  require(num_classes >= 2, "label distribution needs at least 2 classes");
  return LabelDistribution(
      std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> points,
                                   std::vector<double> weights)
    : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
  require(dim_ >= 1, "measure needs dimension >= 1");
  require(!weights_.empty(), "measure has no points");
  require(points_.size() == weights_.size() * dim_,
          "points size " + std::to_string(points_.size()) + " != " +
              std::to_string(weights_.size()) + " points x dim " +
              std::to_string(dim_));
  for (double x : points_) {
    require(std::isfinite(x), "measure has a non-finite coordinate");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    require(std::isfinite(weights_[i]) && weights_[i] > 0.0,
            "point " + std::to_string(i) + ": weight must be positive");
    s += weights_[i];
  }
  require(std::abs(s - 1.0) <= 1e-9,
          "weights sum to " + std::to_string(s) + ", not 1 within 1e-9");
  for (double& w : weights_) w /= s;
}

bool EmpiricalMeasure::has_uniform_weights() const {
  const double n = static_cast<double>(size());
  for (double w : weights_) {
    if (std::abs(w * n - 1.0) > 1e-9) return false;
  }
  return true;
}

std::size_t argmax_index(std::span<const double> xs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (xs[k] > xs[best]) best = k;
  }
  return best;
}

std::vector<double> softmax(std::span<const double> logits,
                            double temperature) {
  if (logits.empty()) throw ValidationError("softmax of an empty vector");
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw ValidationError("temperature must be positive and finite, got " +
                          std::to_string(temperature));
  }
  for (double z : logits) {
    if (!std::isfinite(z)) throw ValidationError("softmax input is not finite");
  }
  std::vector<double> out(logits.size());
  kernels::softmax_rows_serial(logits.data(), 1, logits.size(), temperature,
                               out.data());
  return out;
}

EmpiricalMeasure one_hot_measure(std::span<const std::int32_t> labels,
                                 std::size_t num_classes) {
  if (labels.empty()) throw ValidationError("one_hot_measure of no labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ValidationError(at_row(i) + "label " + std::to_string(labels[i]) +
                            " outside [0, " + std::to_string(num_classes) +
                            ")");
    }
  }
  std::vector<double> points(labels.size() * num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    points[i * num_classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  std::vector<double> weights(labels.size(),
                              1.0 / static_cast<double>(labels.size()));
  return EmpiricalMeasure(num_classes, std::move(points), std::move(weights));
}

EmpiricalMeasure measure_from_rows(const SoftmaxMatrix& probs) {
  std::vector<double> weights(probs.size(),
                              1.0 / static_cast<double>(probs.size()));
  return EmpiricalMeasure(probs.num_classes(), probs.values(),
                          std::move(weights));
}

std::vector<std::int32_t> synthesize_labels(const LabelDistribution& dist,
                                            std::size_t n) {
  if (n == 0) throw ValidationError("synthesize_labels needs n >= 1");
  const std::size_t k_classes = dist.num_classes();
  std::vector<std::size_t> counts(k_classes);
  std::vector<double> remainders(k_classes);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    const double exact = static_cast<double>(n) * dist.prob(k);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    remainders[k] = exact - std::floor(exact);
    assigned += counts[k];
  }
  std::vector<std::size_t> order(k_classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t idx = 0; assigned < n; ++idx) {
    counts[order[idx % k_classes]] += 1;
    ++assigned;
  }
  std::vector<std::int32_t> labels;
  labels.reserve(n);
  for (std::size_t k = 0; k < k_classes; ++k) {
    labels.insert(labels.end(), counts[k], static_cast<std::int32_t>(k));
  }
  return labels;
}

LabelDistribution empirical_label_distribution(
    std::span<const std::int32_t> labels, std::size_t num_classes) {
  if (labels.empty()) {
    throw ValidationError("empirical distribution of no labels");
  }
  std::vector<double> probs(num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ValidationError(at_row(i) + "label " + std::to_string(labels[i]) +
                            " outside [0, " + std::to_string(num_classes) +
                            ")");
    }
    probs[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  for (double& p : probs) p /= static_cast<double>(labels.size());
  return LabelDistribution(std::move(probs));
}

std::vector<std::int32_t> required_labels(const LogitsDataset& data) {
  std::vector<std::int32_t> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.label(i)) {
      throw ValidationError(at_row(i) + "row is unlabeled but a label is required");
    }
    out.push_back(*data.label(i));
  }
  return out;
}

}  // namespace cot
