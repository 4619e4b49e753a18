#include "cot/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cot/errors.hpp"
#include "cot/io.hpp"
#include "cot/kernels.hpp"
#include "cot/ot.hpp"
#include "cot/rng.hpp"

namespace cot {

namespace {

double atc_score_value(std::span<const double> row, AtcScore score) {
  if (score == AtcScore::kMaxConfidence) {
    return row[argmax_index(row)];
  }
  double entropy = 0.0;
  for (const double p : row) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return -entropy / std::log(static_cast<double>(row.size()));
}

double weighted_batch_mean(const std::vector<BatchValue>& batches) {
  double weighted = 0.0;
  double total = 0.0;
  for (const BatchValue& b : batches) {
    weighted += static_cast<double>(b.size) * b.value;
    total += static_cast<double>(b.size);
  }
  return weighted / total;
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::kCot: return "COT";
    case Method::kAc: return "AC";
    case Method::kEntropy: return "ENTROPY";
    case Method::kAtcMc: return "ATC_MC";
    case Method::kAtcNe: return "ATC_NE";
    case Method::kGde: return "GDE";
  }
  throw ValidationError("unknown method tag");
}

std::string estimate_report_to_json(const EstimateReport& report) {
  JsonWriter w;
  w.begin_object();
  w.key("schema_version").value(std::int64_t{1});
  w.key("method").value(method_name(report.method));
  w.key("estimate").value(report.estimate);
  w.key("direct").value(report.is_direct_error_estimate);
  w.key("batches").begin_array();
  for (const BatchValue& b : report.per_batch) {
    w.begin_object();
    w.key("size").value(b.size);
    w.key("value").value(b.value);
    w.end_object();
  }
  w.end_array();
  w.key("meta").begin_object();
  w.key("num_target_samples").value(report.meta.num_target_samples);
  w.key("num_source_labels").value(report.meta.num_source_labels);
  w.key("temperature_used").value(report.meta.temperature_used);
  w.end_object();
  w.end_object();
  return std::move(w).str();
}

EstimateReport cot_estimate(const SoftmaxMatrix& target_probs,
                            std::span<const std::int32_t> source_labels,
                            double temperature_used) {
  const EmpiricalMeasure target = measure_from_rows(target_probs);
  const EmpiricalMeasure source =
      one_hot_measure(source_labels, target_probs.num_classes());
  const TransportPlan plan = solve_emd(target, source);
  EstimateReport report;
  report.method = Method::kCot;
  // The simplex L1 diameter is 2, so the estimate lands in [0,1] up to
  // rounding of the mass units; clamp the rounding away.
  report.estimate = std::clamp(0.5 * plan.total_cost, 0.0, 1.0);
  report.is_direct_error_estimate = true;
  report.per_batch = {{target_probs.size(), report.estimate}};
  report.meta = {target_probs.size(), source_labels.size(), temperature_used};
  return report;
}

EstimateReport cot_estimate(const SoftmaxMatrix& target_probs,
                            const LabelDistribution& source_dist,
                            double temperature_used) {
  if (source_dist.num_classes() != target_probs.num_classes()) {
    throw ValidationError("label distribution has " +
                          std::to_string(source_dist.num_classes()) +
                          " classes, target has " +
                          std::to_string(target_probs.num_classes()));
  }
  const std::vector<std::int32_t> labels =
      synthesize_labels(source_dist, target_probs.size());
  return cot_estimate(target_probs, labels, temperature_used);
}

namespace {

EstimateReport cot_batched_impl(const SoftmaxMatrix& target_probs,
                                const LabelDistribution& dist,
                                std::size_t num_source_labels,
                                std::size_t batch_size, std::uint64_t seed,
                                double temperature_used) {
  const std::size_t n = target_probs.size();
  const std::size_t k_classes = target_probs.num_classes();
  if (batch_size < k_classes) {
    throw ValidationError("batch_size " + std::to_string(batch_size) +
                          " is below the class count " +
                          std::to_string(k_classes));
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(perm);

  struct Batch {
    std::size_t begin;
    std::size_t size;
  };
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t size = std::min(batch_size, n - start);
    if (size < k_classes) break;  // drop a short final batch
    batches.push_back({start, size});
  }
  if (batches.empty()) {
    throw ValidationError("no batch reaches the class count " +
                          std::to_string(k_classes) + "; have " +
                          std::to_string(n) + " rows");
  }

  std::vector<BatchValue> values(batches.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(batches.size()); ++b) {
    const Batch batch = batches[static_cast<std::size_t>(b)];
    std::vector<double> rows(batch.size * k_classes);
    for (std::size_t r = 0; r < batch.size; ++r) {
      const auto row = target_probs.row(perm[batch.begin + r]);
      std::copy(row.begin(), row.end(), rows.begin() + r * k_classes);
    }
    const SoftmaxMatrix batch_probs(k_classes, std::move(rows));
    const std::vector<std::int32_t> labels =
        synthesize_labels(dist, batch.size);
    const EmpiricalMeasure target = measure_from_rows(batch_probs);
    const EmpiricalMeasure source = one_hot_measure(labels, k_classes);
    values[static_cast<std::size_t>(b)] = {
        batch.size,
        std::clamp(0.5 * solve_emd(target, source).total_cost, 0.0, 1.0)};
  }

  EstimateReport report;
  report.method = Method::kCot;
  report.per_batch = std::move(values);
  report.estimate = weighted_batch_mean(report.per_batch);
  report.is_direct_error_estimate = true;
  report.meta = {n, num_source_labels, temperature_used};
  return report;
}

}  // namespace

EstimateReport cot_estimate_batched(const SoftmaxMatrix& target_probs,
                                    std::span<const std::int32_t> source_labels,
                                    std::size_t batch_size, std::uint64_t seed,
                                    double temperature_used) {
  if (batch_size >= target_probs.size()) {
    return cot_estimate(target_probs, source_labels, temperature_used);
  }
  const LabelDistribution dist = empirical_label_distribution(
      source_labels, target_probs.num_classes());
  return cot_batched_impl(target_probs, dist, source_labels.size(), batch_size,
                          seed, temperature_used);
}

EstimateReport cot_estimate_batched(const SoftmaxMatrix& target_probs,
                                    const LabelDistribution& source_dist,
                                    std::size_t batch_size, std::uint64_t seed,
                                    double temperature_used) {
  if (source_dist.num_classes() != target_probs.num_classes()) {
    throw ValidationError("label distribution has " +
                          std::to_string(source_dist.num_classes()) +
                          " classes, target has " +
                          std::to_string(target_probs.num_classes()));
  }
  if (batch_size >= target_probs.size()) {
    return cot_estimate(target_probs, source_dist, temperature_used);
  }
  return cot_batched_impl(target_probs, source_dist, 0, batch_size, seed,
                          temperature_used);
}

EstimateReport ac_estimate(const SoftmaxMatrix& target_probs,
                           double temperature_used) {
  std::vector<double> confidences(target_probs.size());
  for (std::size_t i = 0; i < target_probs.size(); ++i) {
    const auto row = target_probs.row(i);
    confidences[i] = row[argmax_index(row)];
  }
  EstimateReport report;
  report.method = Method::kAc;
  report.estimate = std::clamp(
      1.0 - kernels::sum(confidences) / static_cast<double>(confidences.size()),
      0.0, 1.0);
  report.is_direct_error_estimate = true;
  report.meta = {target_probs.size(), 0, temperature_used};
  return report;
}

EstimateReport entropy_score(const SoftmaxMatrix& target_probs,
                             double temperature_used) {
  const double inv_log_k =
      1.0 / std::log(static_cast<double>(target_probs.num_classes()));
  std::vector<double> entropies(target_probs.size());
  for (std::size_t i = 0; i < target_probs.size(); ++i) {
    double entropy = 0.0;
    for (const double p : target_probs.row(i)) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    entropies[i] = entropy * inv_log_k;
  }
  EstimateReport report;
  report.method = Method::kEntropy;
  report.estimate =
      kernels::sum(entropies) / static_cast<double>(entropies.size());
  // Normalized entropy can exceed 1 by an ulp when rows are near-uniform.
  report.estimate = std::clamp(report.estimate, 0.0, 1.0);
  report.is_direct_error_estimate = false;
  report.meta = {target_probs.size(), 0, temperature_used};
  return report;
}

double atc_fit_threshold(const SoftmaxMatrix& val_probs,
                         std::span<const std::int32_t> val_labels,
                         AtcScore score) {
  const std::size_t n = val_probs.size();
  if (val_labels.size() != n) {
    throw ValidationError("label count " + std::to_string(val_labels.size()) +
                          " != row count " + std::to_string(n));
  }
  std::vector<double> scores(n);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t y = val_labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= val_probs.num_classes()) {
      throw ValidationError("row " + std::to_string(i) + ": label " +
                            std::to_string(y) + " outside [0, " +
                            std::to_string(val_probs.num_classes()) + ")");
    }
    const auto row = val_probs.row(i);
    scores[i] = atc_score_value(row, score);
    if (argmax_index(row) != static_cast<std::size_t>(y)) ++wrong;
  }
  if (wrong == 0) return -std::numeric_limits<double>::infinity();
  if (wrong == n) return std::numeric_limits<double>::infinity();
  // t = (wrong+1)-th smallest score, so exactly the `wrong` lowest-scoring
  // samples fall strictly below t (up to score ties).
  std::nth_element(scores.begin(), scores.begin() + wrong, scores.end());
  return scores[wrong];
}

EstimateReport atc_estimate(const SoftmaxMatrix& target_probs, double threshold,
                            AtcScore score, double temperature_used) {
  std::size_t below = 0;
  for (std::size_t i = 0; i < target_probs.size(); ++i) {
    if (atc_score_value(target_probs.row(i), score) < threshold) ++below;
  }
  EstimateReport report;
  report.method =
      score == AtcScore::kMaxConfidence ? Method::kAtcMc : Method::kAtcNe;
  report.estimate =
      static_cast<double>(below) / static_cast<double>(target_probs.size());
  report.is_direct_error_estimate = true;
  report.meta = {target_probs.size(), 0, temperature_used};
  return report;
}

EstimateReport gde_estimate(const SoftmaxMatrix& probs_a,
                            const SoftmaxMatrix& probs_b,
                            double temperature_used) {
  if (probs_a.size() != probs_b.size() ||
      probs_a.num_classes() != probs_b.num_classes()) {
    throw ValidationError(
        "disagreement needs matching shapes, got " +
        std::to_string(probs_a.size()) + "x" +
        std::to_string(probs_a.num_classes()) + " vs " +
        std::to_string(probs_b.size()) + "x" +
        std::to_string(probs_b.num_classes()));
  }
  std::size_t disagree = 0;
  for (std::size_t i = 0; i < probs_a.size(); ++i) {
    if (argmax_index(probs_a.row(i)) != argmax_index(probs_b.row(i))) {
      ++disagree;
    }
  }
  EstimateReport report;
  report.method = Method::kGde;
  report.estimate =
      static_cast<double>(disagree) / static_cast<double>(probs_a.size());
  report.is_direct_error_estimate = true;
  report.meta = {probs_a.size(), 0, temperature_used};
  return report;
}

}  // namespace cot
