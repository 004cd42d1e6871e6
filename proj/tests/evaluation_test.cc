// Copyright 2026 The seqhpo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.h"
#include "seqhpo/evaluation.h"
#include "seqhpo/gp.h"

namespace seqhpo {
namespace {

TEST_CASE("best-so-far curves") {
  CHECK(best_so_far_curve(std::vector{0.2, 0.5, 0.3}, {0.0, 1.0}) == std::vector{0.2, 0.5, 0.5});
  CHECK(best_so_far_curve(std::vector{3.0, 3.0}, {3.0, 5.0}) == std::vector{0.0, 0.0});
  CHECK(best_so_far_curve(std::vector{5.0}, {3.0, 5.0}) == std::vector{1.0});
  std::size_t clamped = 0;
  CHECK(best_so_far_curve(std::vector{0.0, 7.0}, {3.0, 5.0}, &clamped).back() == 1.0);
  CHECK(clamped == 1);
  CHECK_THROWS_AS(best_so_far_curve(std::vector{1.0}, {1.0, 1.0}), NumericError);

  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ys(1 + uniform_index(rng, 50));
    for (double& y : ys) y = 4.0 * uniform01(rng) - 2.0;
    const auto c = best_so_far_curve(ys, {-1.0, 1.5});
    CHECK(std::is_sorted(c.begin(), c.end()));
  }
}

TEST_CASE("random-sample median") {
  const SearchSpace line({ParameterConfig::Double("x", -5.0, 5.0)});
  Rng rng(2);
  CHECK(estimate_y_rand([](std::span<const double>) { return 4.5; }, line, 101, rng) == 4.5);
  Rng a(3), b(3);
  const auto slope = [](std::span<const double> x) { return 2.0 * x[0] + 1.0; };
  const double m = estimate_y_rand(slope, line, 10000, a);
  // Sample median of 10k uniforms on [-5, 5]: sd about 1.2533 * 2.887 / 100.
  CHECK(std::abs(m - 1.0) <= 2.0 * 3.0 * 0.0362);
  CHECK(m == estimate_y_rand(slope, line, 10000, b));
  CHECK(median({1.0, 4.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("log predictive likelihood") {
  const PiecewiseConstDist uniform(0.0, 1.0, Eigen::VectorXd::Constant(1000, 1e-3));
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(1000);
  delta[437] = 1.0;
  const PiecewiseConstDist sharp(0.0, 1.0, delta);
  const std::vector preds = {uniform, uniform};
  const std::vector<std::size_t> ids = {0, 1};
  CHECK(log_pred_likelihood(preds, std::vector{0.1, 0.9}, ids).mean == 0.0);
  const std::vector sharp_preds = {sharp};
  CHECK(log_pred_likelihood(sharp_preds, std::vector{0.4375}, std::vector<std::size_t>{0}).mean ==
        doctest::Approx(std::log(1000.0)));
  const auto missed = log_pred_likelihood(sharp_preds, std::vector{0.9}, std::vector<std::size_t>{0});
  CHECK(missed.floored == 1);
  CHECK(missed.mean == kLogDensityFloor);

  const auto s = summarize_log_likelihood({{1.0, 3.0}, {4.0}, {0.0}});
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.standard_error == doctest::Approx(std::sqrt(8.0 / 2.0) / std::sqrt(3.0)));
}

TEST_CASE("calibration error examples") {
  std::vector<double> conf(10, 0.9);
  bool hits[10] = {true, true, true, true, true, true, false, false, false, false};
  CHECK(ece_from_classifications(conf, hits) == doctest::Approx(30.0));

  Eigen::VectorXd mass = Eigen::VectorXd::Zero(1000);
  mass.segment(120, 10).setConstant(0.1);  // one whole interval, [0.12, 0.13)
  const PiecewiseConstDist certain(0.0, 1.0, mass);
  const std::vector preds(20, certain);
  const std::vector<double> outcomes(20, 0.125);
  CHECK(ece(preds, outcomes) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(ece({}, {}), DataError);
}

TEST_CASE("calibrated predictions have small ECE and uniform PIT values") {
  Rng rng(2024);
  const auto big = testing::calibrated_sample(50000, rng);
  CHECK(ece(big.predictions, big.outcomes) <= 0.5);
  const auto pit = calibration_cdf(std::span(big.predictions).first(10000),
                                   std::span(big.outcomes).first(10000));
  CHECK(pit.sup_deviation <= 0.02);
  CHECK(pit.cumulative.back() == 1.0);
  CHECK(std::is_sorted(pit.cumulative.begin(), pit.cumulative.end()));

  // An overly wide predictor evaluated at its own center.
  const PiecewiseConstDist wide(0.0, 1.0, Eigen::VectorXd::Constant(1000, 1e-3));
  const std::vector preds(5, wide);
  const auto centered = calibration_cdf(preds, std::vector<double>(5, 0.5));
  for (double f : centered.cdf_values) CHECK(f == doctest::Approx(0.5));
  CHECK(calibration_cdf({}, {}).cumulative.empty());
}

TEST_CASE("performance profile hand fixture") {
  CurvesByMethod curves;
  curves["A"] = {{0.5, 0.9, 1.0}, {0.1, 0.2, 0.3}, {0.0, 0.0, 0.95}};
  curves["B"] = {{0.2, 0.2, 0.95}, {0.4, 0.4, 0.4}, {1.0, 1.0, 1.0}};
  ProfileConfig cfg;
  cfg.at_trial = 3;
  auto p = performance_profile(curves, cfg);
  CHECK(p["A"] == std::vector{0.0, 1.0 / 3.0, 2.0 / 3.0});
  CHECK(p["B"] == std::vector{2.0 / 3.0, 2.0 / 3.0, 1.0});
  cfg.rule = ThresholdRule::kMedianOfBest;
  p = performance_profile(curves, cfg);
  CHECK(p["A"] == std::vector{0.0, 0.0, 1.0 / 3.0});
  CHECK(p["B"] == std::vector{2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0});

  // Task order does not matter.
  CurvesByMethod shuffled = curves;
  for (auto& [m, tasks] : shuffled) std::reverse(tasks.begin(), tasks.end());
  CHECK(performance_profile(shuffled, cfg) == p);

  CurvesByMethod trivial;
  trivial["win"] = {{1.0, 1.0}, {1.0, 1.0}};
  trivial["lose"] = {{0.0, 0.0}, {0.0, 0.0}};
  cfg.rule = ThresholdRule::kFractionOfBest;
  const auto t = performance_profile(trivial, cfg);
  CHECK(t.at("win") == std::vector{1.0, 1.0});
  CHECK(t.at("lose") == std::vector{0.0, 0.0});

  trivial["short"] = {{1.0, 1.0}};
  CHECK_THROWS_AS(performance_profile(trivial, cfg), DataError);
}

TEST_CASE("profiles are monotone in the trial index") {
  Rng rng(5);
  CurvesByMethod curves;
  for (const char* m : {"a", "b", "c"}) {
    for (int k = 0; k < 10; ++k) {
      std::vector<double> c(40);
      for (double& v : c) v = uniform01(rng);
      curves[m].push_back(c);
    }
  }
  for (const auto& [m, frac] : performance_profile(curves)) {
    CHECK(std::is_sorted(frac.begin(), frac.end()));
    CHECK(frac.front() >= 0.0);
    CHECK(frac.back() <= 1.0);
  }
}

TEST_CASE("imitation helpers and tables") {
  std::vector<double> uniform(1000, 1e-3);
  for (double m : decile_mass(uniform)) CHECK(m == doctest::Approx(0.1));
  CHECK(total_variation(std::vector{0.5, 0.5}, std::vector{1.0, 0.0}) == 0.5);
  CHECK(mean_abs_deviation(std::vector{0.1, 0.3}, 0.2) == doctest::Approx(0.1));
  CHECK(unit_histogram(std::vector{0.05, 0.95, 1.0, 0.5}, 2) == std::vector{0.25, 0.75});

  const auto g = gaussian_to_piecewise(0.5, 0.01, 0.0, 1.0);
  CHECK(g.probs().sum() == doctest::Approx(1.0));
  CHECK(g.cdf(0.5) == doctest::Approx(0.5).epsilon(1e-6));
  const auto far = gaussian_to_piecewise(100.0, 1e-6, 0.0, 1.0);
  CHECK(far.probs()[999] == 1.0);

  std::ostringstream out;
  write_curve_table(out, {{0.0, 1.0}, {1.0, 1.0}});
  CHECK(out.str() == "trial,mean,std\n1,0.5,0.5\n2,1,0\n");
}

}  // namespace
}  // namespace seqhpo
