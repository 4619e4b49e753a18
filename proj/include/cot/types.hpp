#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cot {

// Rows of raw classifier logits with optional ground-truth labels.
// Unlabeled rows carry std::nullopt (written as -1 in CSV).
class LogitsDataset {
 public:
  LogitsDataset(std::size_t num_classes,
                std::vector<std::optional<std::int32_t>> labels,
                std::vector<double> logits);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return labels_.size(); }

  std::span<const double> row(std::size_t i) const {
    return {logits_.data() + i * num_classes_, num_classes_};
  }
  const std::optional<std::int32_t>& label(std::size_t i) const {
    return labels_[i];
  }

  const std::vector<double>& logits() const { return logits_; }
  const std::vector<std::optional<std::int32_t>>& labels() const {
    return labels_;
  }

  bool fully_labeled() const;

 private:
  std::size_t num_classes_;
  std::vector<std::optional<std::int32_t>> labels_;
  std::vector<double> logits_;
};

// Row-stochastic matrix of predicted class probabilities. Construction
// validates entries and renormalizes each row by its exact sum; row sums
// must already be within 1e-9 of one.
class SoftmaxMatrix {
 public:
  SoftmaxMatrix(std::size_t num_classes, std::vector<double> values);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return values_.size() / num_classes_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * num_classes_, num_classes_};
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t num_classes_;
  std::vector<double> values_;
};

// Probability vector over classes; renormalized on construction.
class LabelDistribution {
 public:
  LabelDistribution(std::vector<double> probs);

  static LabelDistribution uniform(std::size_t num_classes);

  std::size_t num_classes() const { return probs_.size(); }
  double prob(std::size_t k) const { return probs_[k]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Weighted point cloud in R^dim; weights are strictly positive and are
// renormalized on construction to sum to one (input sum within 1e-9).
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::size_t dim, std::vector<double> points,
                   std::vector<double> weights);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }

  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * dim_, dim_};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  // True when every weight w_i satisfies |w_i * size - 1| <= 1e-9.
  bool has_uniform_weights() const;

 private:
  std::size_t dim_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax_index(std::span<const double> xs);

// Max-shifted softmax of a single logit vector at the given temperature.
std::vector<double> softmax(std::span<const double> logits,
                            double temperature = 1.0);

// Uniformly weighted measure whose points are one-hot vectors of `labels`.
EmpiricalMeasure one_hot_measure(std::span<const std::int32_t> labels,
                                 std::size_t num_classes);

// Uniformly weighted measure whose points are the matrix rows.
EmpiricalMeasure measure_from_rows(const SoftmaxMatrix& probs);

// Deterministic label multiset of size n with per-class counts within one
// of n * probs[k] (largest-remainder rounding, remainder ties to the lower
// class); returned sorted ascending.
std::vector<std::int32_t> synthesize_labels(const LabelDistribution& dist,
                                            std::size_t n);

// Relative class frequencies of `labels`.
LabelDistribution empirical_label_distribution(
    std::span<const std::int32_t> labels, std::size_t num_classes);

// Labels of all labeled rows, in row order; throws ValidationError naming
// the first unlabeled row if any row lacks a label.
std::vector<std::int32_t> required_labels(const LogitsDataset& data);

}  // namespace cot
