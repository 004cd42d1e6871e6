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

// Metrics over optimization trajectories and predictive distributions.

#ifndef SEQHPO_EVALUATION_H_
#define SEQHPO_EVALUATION_H_

#include <cstddef>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "seqhpo/core_types.h"
#include "seqhpo/decoder.h"
#include "seqhpo/random.h"

namespace seqhpo {

struct NormalizationAnchors {
  double y_rand = 0.0;  // median of random-sample values
  double y_max = 1.0;   // known or best-found maximum

  void validate() const;
};

// Running max of (y - y_rand) / (y_max - y_rand), clamped to at most 1.
// `clamped` counts the entries that exceeded y_max.
std::vector<double> best_so_far_curve(std::span<const double> ys, const NormalizationAnchors& anchors,
                                      std::size_t* clamped = nullptr);

double median(std::vector<double> values);

using Objective = std::function<double(std::span<const double>)>;
double estimate_y_rand(const Objective& objective, const SearchSpace& space, std::size_t samples,
                       Rng& rng);

// log density with kLogDensityFloor for outcomes that get no mass.
double log_density_or_floor(const PiecewiseConstDist& dist, double y);

struct LogLikelihoodSummary {
  double mean = 0.0;
  double standard_error = 0.0;  // across functions
  std::size_t floored = 0;      // outcomes that hit the floor
};

// One list of log densities per function: each function contributes its
// mean, and the summary averages functions.
LogLikelihoodSummary summarize_log_likelihood(const std::vector<std::vector<double>>& per_function);

LogLikelihoodSummary log_pred_likelihood(std::span<const PiecewiseConstDist> predictions,
                                         std::span<const double> outcomes,
                                         std::span<const std::size_t> function_ids);

// Calibration error in percent from per-prediction confidences and hits.
double ece_from_classifications(std::span<const double> confidence, std::span<const bool> correct,
                                int confidence_bins = 10);

// Each prediction becomes a `value_bins`-way classifier over equal intervals
// of its support, predicting the most probable interval.
double ece(std::span<const PiecewiseConstDist> predictions, std::span<const double> outcomes,
           int value_bins = 100, int confidence_bins = 10);

struct CalibrationReport {
  std::vector<double> cdf_values;  // F(y) per outcome
  std::vector<double> grid;
  std::vector<double> cumulative;  // fraction of F values <= grid point
  double sup_deviation = 0.0;      // Kolmogorov distance to the uniform CDF
};

CalibrationReport calibration_cdf(std::span<const PiecewiseConstDist> predictions,
                                  std::span<const double> outcomes, int grid_points = 101);

enum class ThresholdRule {
  kFractionOfBest,  // fraction * best value of any method at `at_trial`
  kMedianOfBest,    // median over methods of the value at `at_trial`
};

struct ProfileConfig {
  ThresholdRule rule = ThresholdRule::kFractionOfBest;
  double fraction = 0.9;
  std::size_t at_trial = 50;  // 1-based; clamped to the curve length
};

using CurvesByMethod = std::map<std::string, std::vector<std::vector<double>>>;

// For each method, the fraction of tasks whose best-so-far value has reached
// the task threshold after each trial. All methods must share the task list
// and curve length.
std::map<std::string, std::vector<double>> performance_profile(const CurvesByMethod& curves,
                                                               const ProfileConfig& config = {});

// Mass per decile of a distribution over equal-width bins.
std::vector<double> decile_mass(std::span<const double> bin_probs);
// Normalized histogram of values in [0, 1].
std::vector<double> unit_histogram(std::span<const double> values, int bins);
double total_variation(std::span<const double> p, std::span<const double> q);
double mean_abs_deviation(std::span<const double> p, double target);

// Gaussian predictive spread over `bins` equal intervals of [lo, hi] and
// renormalized there.
PiecewiseConstDist gaussian_to_piecewise(double mean, double variance, double lo, double hi,
                                         int bins = 1000);

// "trial,mean,std" rows over equal-length curves.
void write_curve_table(std::ostream& out, const std::vector<std::vector<double>>& curves);

}  // namespace seqhpo

#endif  // SEQHPO_EVALUATION_H_
