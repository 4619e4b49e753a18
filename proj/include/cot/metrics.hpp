#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cot {

// One scatter point: a method's estimate against the true error of a target.
struct EvaluationRecord {
  std::string target_id;
  double predicted;
  double true_error;
};

struct EvaluationReport {
  std::string method;
  std::size_t n_points = 0;
  double r_squared = 0.0;
  double spearman_rho = 0.0;
  std::optional<double> mae;  // absent for non-direct methods
};

// R-squared of the OLS fit of true_error on predicted; for one regressor
// this is the squared Pearson correlation.
double r_squared(std::span<const EvaluationRecord> points);

// Pearson correlation of average ranks (ties get their mean rank).
double spearman_rho(std::span<const EvaluationRecord> points);

// Mean |predicted - true_error| in percentage points (x100).
double mean_absolute_error(std::span<const EvaluationRecord> points);

// Assembles the three metrics; mae only when include_mae (direct methods).
EvaluationReport evaluate_records(const std::string& method,
                                  std::span<const EvaluationRecord> points,
                                  bool include_mae);

std::string evaluation_report_to_json(const EvaluationReport& report);

// CSV with header target_id,predicted,true_error.
std::string scatter_csv(std::span<const EvaluationRecord> points);

}  // namespace cot
