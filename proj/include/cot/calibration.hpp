#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "cot/types.hpp"

namespace cot {

struct CalibrationDiagnostics {
  double nll_before = 0.0;
  double nll_after = 0.0;
  double ece_before = 0.0;
  double ece_after = 0.0;
  double accuracy = 0.0;
  double mean_confidence_after = 0.0;
};

// Fitted temperature-scaling model. T always lies in [1e-2, 1e2] and never
// increases validation NLL relative to T=1.
struct CalibrationModel {
  double temperature = 1.0;
  std::size_t num_classes = 0;
  CalibrationDiagnostics diagnostics;
};

// Minimizes mean NLL of softmax(logits/T) by golden-section search on log T
// over [log 1e-2, log 1e2] (absolute tolerance 1e-4 in log-space), falling
// back to T=1 whenever the search does not beat it.
CalibrationModel fit_temperature(const LogitsDataset& val);

// Equal-width binning of max-confidence; ECE = sum over bins of
// (bin_size/n) * |bin_accuracy - bin_confidence|.
double expected_calibration_error(const SoftmaxMatrix& probs,
                                  std::span<const std::int32_t> labels,
                                  std::size_t num_bins = 15);

// Row-wise softmax(logits / model.temperature); argmax per row is unchanged
// relative to any other temperature.
SoftmaxMatrix apply_temperature(const LogitsDataset& data,
                                const CalibrationModel& model);

std::string calibration_to_json(const CalibrationModel& model);
CalibrationModel read_calibration_json(const std::string& path);

}  // namespace cot
