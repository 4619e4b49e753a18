#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cot/types.hpp"

namespace cot {

enum class Method { kCot, kAc, kEntropy, kAtcMc, kAtcNe, kGde };

// Canonical report tag: COT, AC, ENTROPY, ATC_MC, ATC_NE, GDE.
std::string method_name(Method method);

enum class AtcScore { kMaxConfidence, kNegativeEntropy };

struct BatchValue {
  std::size_t size;
  double value;
};

struct ReportMeta {
  std::size_t num_target_samples = 0;
  std::size_t num_source_labels = 0;
  double temperature_used = 1.0;
};

// One estimator output. `estimate` is always in [0,1]; for direct methods it
// approximates the error rate itself, otherwise it is a correlate only.
struct EstimateReport {
  Method method;
  double estimate = 0.0;
  bool is_direct_error_estimate = false;
  std::vector<BatchValue> per_batch;
  ReportMeta meta;
};

std::string estimate_report_to_json(const EstimateReport& report);

// COT: half the EMD between the target softmax cloud and the one-hot cloud
// of the source labels.
EstimateReport cot_estimate(const SoftmaxMatrix& target_probs,
                            std::span<const std::int32_t> source_labels,
                            double temperature_used = 1.0);
// Same, with source labels synthesized from a label distribution at the
// target's size.
EstimateReport cot_estimate(const SoftmaxMatrix& target_probs,
                            const LabelDistribution& source_dist,
                            double temperature_used = 1.0);

// Batched COT: shuffle rows with the seed, split into consecutive batches
// (short final batch dropped when below K), solve each batch against labels
// synthesized at the batch's size from the empirical label distribution,
// and average weighted by batch size. With batch_size >= n this is exactly
// cot_estimate.
EstimateReport cot_estimate_batched(const SoftmaxMatrix& target_probs,
                                    std::span<const std::int32_t> source_labels,
                                    std::size_t batch_size, std::uint64_t seed,
                                    double temperature_used = 1.0);
EstimateReport cot_estimate_batched(const SoftmaxMatrix& target_probs,
                                    const LabelDistribution& source_dist,
                                    std::size_t batch_size, std::uint64_t seed,
                                    double temperature_used = 1.0);

// Averaged confidence: 1 - mean max-probability.
EstimateReport ac_estimate(const SoftmaxMatrix& target_probs,
                           double temperature_used = 1.0);

// Mean Shannon entropy over rows, normalized by ln K into [0,1]. A
// correlate of error, not a direct estimate.
EstimateReport entropy_score(const SoftmaxMatrix& target_probs,
                             double temperature_used = 1.0);

// Threshold t such that scores strictly below t mark predicted-wrong
// samples and the below-t fraction on validation matches its error rate.
// Sentinels: -inf when validation error is 0, +inf when it is 1.
double atc_fit_threshold(const SoftmaxMatrix& val_probs,
                         std::span<const std::int32_t> val_labels,
                         AtcScore score);

EstimateReport atc_estimate(const SoftmaxMatrix& target_probs, double threshold,
                            AtcScore score, double temperature_used = 1.0);

// Disagreement rate between two models' argmax predictions on the same rows.
EstimateReport gde_estimate(const SoftmaxMatrix& probs_a,
                            const SoftmaxMatrix& probs_b,
                            double temperature_used = 1.0);

}  // namespace cot
