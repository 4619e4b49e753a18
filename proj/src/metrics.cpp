#include "cot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cot/errors.hpp"
#include "cot/io.hpp"

namespace cot {

namespace {

void validate_points(std::span<const EvaluationRecord> points,
                     std::size_t minimum) {
  if (points.size() < minimum) {
    throw ValidationError("need at least " + std::to_string(minimum) +
                          " points, got " + std::to_string(points.size()));
  }
  for (const EvaluationRecord& p : points) {
    if (!std::isfinite(p.predicted)) {
      throw ValidationError("target '" + p.target_id +
                            "': predicted value is not finite");
    }
    if (!(p.true_error >= 0.0 && p.true_error <= 1.0)) {
      throw ValidationError("target '" + p.target_id + "': true_error " +
                            std::to_string(p.true_error) + " outside [0, 1]");
    }
  }
}

double squared_pearson(const std::vector<double>& xs,
                       const std::vector<double>& ys,
                       const std::string& x_name, const std::string& y_name) {
  const double n = static_cast<double>(xs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0) {
    throw UndefinedFitError("fit undefined: zero variance in " + x_name);
  }
  if (syy <= 0.0) {
    throw UndefinedFitError("fit undefined: zero variance in " + y_name);
  }
  return (sxy * sxy) / (sxx * syy);
}

// Average ranks 1..n; tied values share the mean of their rank range.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = static_cast<double>(i + j + 2) / 2.0;  // 1-based mean
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double r_squared(std::span<const EvaluationRecord> points) {
  validate_points(points, 2);
  std::vector<double> xs(points.size());
  std::vector<double> ys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs[i] = points[i].predicted;
    ys[i] = points[i].true_error;
  }
  return squared_pearson(xs, ys, "predicted values", "true errors");
}

double spearman_rho(std::span<const EvaluationRecord> points) {
  validate_points(points, 2);
  std::vector<double> xs(points.size());
  std::vector<double> ys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs[i] = points[i].predicted;
    ys[i] = points[i].true_error;
  }
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  const double n = static_cast<double>(points.size());
  double mean = (n + 1.0) / 2.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0) {
    throw UndefinedFitError("fit undefined: all predicted ranks tied");
  }
  if (syy <= 0.0) {
    throw UndefinedFitError("fit undefined: all true-error ranks tied");
  }
  return sxy / std::sqrt(sxx * syy);
}

double mean_absolute_error(std::span<const EvaluationRecord> points) {
  validate_points(points, 1);
  double total = 0.0;
  for (const EvaluationRecord& p : points) {
    total += std::abs(p.predicted - p.true_error);
  }
  return 100.0 * total / static_cast<double>(points.size());
}

EvaluationReport evaluate_records(const std::string& method,
                                  std::span<const EvaluationRecord> points,
                                  bool include_mae) {
  EvaluationReport report;
  report.method = method;
  report.n_points = points.size();
  report.r_squared = r_squared(points);
  report.spearman_rho = spearman_rho(points);
  if (include_mae) report.mae = mean_absolute_error(points);
  return report;
}

std::string evaluation_report_to_json(const EvaluationReport& report) {
  JsonWriter w;
  w.begin_object();
  w.key("schema_version").value(std::int64_t{1});
  w.key("method").value(report.method);
  w.key("n_points").value(report.n_points);
  w.key("r_squared").value(report.r_squared);
  w.key("spearman_rho").value(report.spearman_rho);
  w.key("mae");
  if (report.mae) {
    w.value(*report.mae);
  } else {
    w.null();
  }
  w.end_object();
  return std::move(w).str();
}

std::string scatter_csv(std::span<const EvaluationRecord> points) {
  std::string out = "target_id,predicted,true_error\n";
  for (const EvaluationRecord& p : points) {
    out += p.target_id;
    out += ',';
    out += format_double(p.predicted);
    out += ',';
    out += format_double(p.true_error);
    out += '\n';
  }
  return out;
}

}  // namespace cot
