#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cot/errors.hpp"
#include "cot/metrics.hpp"

using namespace cot;

namespace {

std::vector<EvaluationRecord> records(const std::vector<double>& pred,
                                      const std::vector<double>& truth) {
  std::vector<EvaluationRecord> out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out.push_back({"t" + std::to_string(i), pred[i], truth[i]});
  }
  return out;
}

}  // namespace

TEST_CASE("r-squared is one on an exact line and zero when orthogonal") {
  const auto line = records({0.1, 0.2, 0.3, 0.4}, {0.15, 0.25, 0.35, 0.45});
  CHECK(r_squared(line) == doctest::Approx(1.0).epsilon(1e-12));

  // Symmetric design: predictions carry no linear signal about the truth.
  const auto flat = records({0.1, 0.2, 0.3}, {0.2, 0.4, 0.2});
  CHECK(r_squared(flat) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("r-squared matches a hand-computed five-point fit") {
  const auto pts = records({0.1, 0.2, 0.3, 0.4, 0.5},
                           {0.12, 0.18, 0.33, 0.41, 0.46});
  CHECK(r_squared(pts) == doctest::Approx(0.9696721311475409).epsilon(1e-13));
}

TEST_CASE("r-squared input validation") {
  CHECK_THROWS_AS(static_cast<void>(r_squared(records({0.1}, {0.1}))),
                  ValidationError);
  CHECK_THROWS_AS(
      static_cast<void>(r_squared(records({0.1, 0.2}, {0.5, 1.5}))),
      ValidationError);  // true error outside [0,1]
  CHECK_THROWS_WITH_AS(
      static_cast<void>(r_squared(records({0.3, 0.3}, {0.1, 0.9}))),
      doctest::Contains("predicted"), UndefinedFitError);
  CHECK_THROWS_WITH_AS(
      static_cast<void>(r_squared(records({0.1, 0.9}, {0.3, 0.3}))),
      doctest::Contains("true"), UndefinedFitError);
}

TEST_CASE("spearman is exact on monotone data and averages tied ranks") {
  const auto mono = records({0.1, 0.5, 0.2, 0.9}, {0.11, 0.52, 0.33, 0.97});
  CHECK(spearman_rho(mono) == doctest::Approx(1.0).epsilon(1e-12));

  const auto anti = records({0.9, 0.5, 0.1}, {0.1, 0.5, 0.9});
  CHECK(spearman_rho(anti) == doctest::Approx(-1.0).epsilon(1e-12));

  // Predictions {1,1,2} share a tied pair: ranks {1.5, 1.5, 3} against
  // {1,2,3} give rho = sqrt(3)/2.
  const auto tied = records({0.1, 0.1, 0.2}, {0.1, 0.2, 0.3});
  CHECK(spearman_rho(tied) ==
        doctest::Approx(0.8660254037844386).epsilon(1e-12));

  CHECK_THROWS_AS(
      static_cast<void>(spearman_rho(records({0.2, 0.2}, {0.1, 0.9}))),
      UndefinedFitError);
}

TEST_CASE("spearman ignores any monotone rescaling of predictions") {
  const std::vector<double> pred = {0.3, 0.1, 0.7, 0.55, 0.42};
  const std::vector<double> truth = {0.25, 0.15, 0.6, 0.61, 0.38};
  std::vector<double> squashed;
  for (const double p : pred) squashed.push_back(p * p);  // monotone on [0,1]
  CHECK(spearman_rho(records(pred, truth)) ==
        doctest::Approx(spearman_rho(records(squashed, truth)))
            .epsilon(1e-14));
}

TEST_CASE("mae reports percentage points") {
  const auto pts = records({0.10, 0.30}, {0.12, 0.26});
  CHECK(mean_absolute_error(pts) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("metric order does not depend on record order") {
  auto pts = records({0.1, 0.4, 0.25, 0.33}, {0.12, 0.38, 0.31, 0.3});
  const double r2 = r_squared(pts);
  const double rho = spearman_rho(pts);
  const double mae = mean_absolute_error(pts);
  std::reverse(pts.begin(), pts.end());
  CHECK(r_squared(pts) == doctest::Approx(r2).epsilon(1e-14));
  CHECK(spearman_rho(pts) == doctest::Approx(rho).epsilon(1e-14));
  CHECK(mean_absolute_error(pts) == doctest::Approx(mae).epsilon(1e-14));
}

TEST_CASE("evaluate_records includes mae only for direct methods") {
  const auto pts = records({0.1, 0.2, 0.32}, {0.12, 0.21, 0.3});
  const EvaluationReport direct = evaluate_records("COT", pts, true);
  CHECK(direct.method == "COT");
  CHECK(direct.n_points == 3);
  REQUIRE(direct.mae.has_value());
  CHECK(*direct.mae == doctest::Approx(mean_absolute_error(pts)));

  const EvaluationReport indirect = evaluate_records("ENTROPY", pts, false);
  CHECK_FALSE(indirect.mae.has_value());
  const std::string json = evaluation_report_to_json(indirect);
  CHECK(json.find("\"mae\": null") != std::string::npos);
}

TEST_CASE("scatter csv lists records under a fixed header") {
  const auto pts = records({0.5}, {0.25});
  CHECK(scatter_csv(pts) ==
        "target_id,predicted,true_error\nt0,0.5,0.25\n");
}
