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

#include "seqhpo/evaluation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>

#include "seqhpo/gp.h"
#include "seqhpo/policy_zoo.h"

namespace seqhpo {

void NormalizationAnchors::validate() const {
  if (!std::isfinite(y_rand) || !std::isfinite(y_max) || !(y_max > y_rand))
    throw NumericError("normalization needs y_max > y_rand");
}

std::vector<double> best_so_far_curve(std::span<const double> ys, const NormalizationAnchors& anchors,
                                      std::size_t* clamped) {
  anchors.validate();
  std::vector<double> out;
  out.reserve(ys.size());
  double best = -std::numeric_limits<double>::infinity();
  std::size_t over = 0;
  for (double y : ys) {
    double v = (y - anchors.y_rand) / (anchors.y_max - anchors.y_rand);
    if (v > 1.0) {
      ++over;
      v = 1.0;
    }
    best = std::max(best, v);
    out.push_back(best);
  }
  if (clamped) *clamped = over;
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double estimate_y_rand(const Objective& objective, const SearchSpace& space, std::size_t samples,
                       Rng& rng) {
  if (samples < 1) throw UsageError("y_rand needs at least one sample");
  std::vector<double> ys;
  ys.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) ys.push_back(objective(random_point(space, rng)));
  return median(std::move(ys));
}

double log_density_or_floor(const PiecewiseConstDist& dist, double y) {
  const double p = dist.density(y);
  return p > 0.0 ? std::max(kLogDensityFloor, std::log(p)) : kLogDensityFloor;
}

LogLikelihoodSummary summarize_log_likelihood(const std::vector<std::vector<double>>& per_function) {
  LogLikelihoodSummary s;
  std::vector<double> means;
  for (const auto& values : per_function) {
    if (values.empty()) continue;
    for (double v : values) s.floored += v <= kLogDensityFloor;
    means.push_back(std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()));
  }
  if (means.empty()) throw DataError("no predictions to summarize");
  const double n = static_cast<double>(means.size());
  s.mean = std::accumulate(means.begin(), means.end(), 0.0) / n;
  if (means.size() > 1) {
    double ss = 0.0;
    for (double m : means) ss += (m - s.mean) * (m - s.mean);
    s.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

LogLikelihoodSummary log_pred_likelihood(std::span<const PiecewiseConstDist> predictions,
                                         std::span<const double> outcomes,
                                         std::span<const std::size_t> function_ids) {
  if (predictions.size() != outcomes.size() || predictions.size() != function_ids.size())
    throw DataError("predictions, outcomes and function ids differ in length");
  std::map<std::size_t, std::vector<double>> groups;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    groups[function_ids[i]].push_back(log_density_or_floor(predictions[i], outcomes[i]));
  std::vector<std::vector<double>> per_function;
  for (auto& [id, values] : groups) per_function.push_back(std::move(values));
  return summarize_log_likelihood(per_function);
}

double ece_from_classifications(std::span<const double> confidence, std::span<const bool> correct,
                                int confidence_bins) {
  if (confidence.empty()) throw DataError("calibration error of an empty sample");
  if (confidence.size() != correct.size()) throw DataError("confidences and hits differ in length");
  if (confidence_bins < 1) throw UsageError("need at least one confidence bin");
  const auto bins = static_cast<std::size_t>(confidence_bins);
  std::vector<double> conf_sum(bins, 0.0), hits(bins, 0.0), count(bins, 0.0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(confidence[i] * static_cast<double>(bins)));
    conf_sum[b] += confidence[i];
    hits[b] += correct[i] ? 1.0 : 0.0;
    count[b] += 1.0;
  }
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b)
    if (count[b] > 0.0) total += std::abs(hits[b] - conf_sum[b]);
  return 100.0 * total / static_cast<double>(confidence.size());
}

namespace {

// Mass of each of `intervals` equal-width pieces of the support.
std::vector<double> interval_masses(const PiecewiseConstDist& d, int intervals) {
  std::vector<double> out(static_cast<std::size_t>(intervals), 0.0);
  if (d.log_scale()) {
    double prev = 0.0;
    const double width = (d.hi() - d.lo()) / intervals;
    for (int k = 0; k < intervals; ++k) {
      const double next = k + 1 == intervals ? 1.0 : d.cdf(d.lo() + (k + 1) * width);
      out[static_cast<std::size_t>(k)] = next - prev;
      prev = next;
    }
    return out;
  }
  // Sweep bins and intervals together in unit coordinates.
  const auto bins = d.bins();
  const double bin_w = 1.0 / static_cast<double>(bins);
  const double int_w = 1.0 / intervals;
  int k = 0;
  for (Eigen::Index b = 0; b < bins; ++b) {
    double left = static_cast<double>(b) * bin_w;
    const double right = static_cast<double>(b + 1) * bin_w;
    while (left < right) {
      while (k + 1 < intervals && (k + 1) * int_w <= left) ++k;
      const double edge = k + 1 == intervals ? right : std::min(right, (k + 1) * int_w);
      out[static_cast<std::size_t>(k)] += d.probs()[b] * (edge - left) / bin_w;
      left = edge;
    }
  }
  return out;
}

}  // namespace

double ece(std::span<const PiecewiseConstDist> predictions, std::span<const double> outcomes,
           int value_bins, int confidence_bins) {
  if (predictions.size() != outcomes.size()) throw DataError("predictions and outcomes differ in length");
  if (value_bins < 2) throw UsageError("need at least two value bins");
  std::vector<double> confidence;
  std::unique_ptr<bool[]> correct(new bool[predictions.size()]);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& d = predictions[i];
    const auto masses = interval_masses(d, value_bins);
    const auto best = std::max_element(masses.begin(), masses.end());
    const double width = (d.hi() - d.lo()) / value_bins;
    const int actual = std::clamp(static_cast<int>(std::floor((outcomes[i] - d.lo()) / width)), 0, value_bins - 1);
    confidence.push_back(*best);
    correct[i] = actual == static_cast<int>(best - masses.begin());
  }
  return ece_from_classifications(confidence, std::span<const bool>(correct.get(), predictions.size()),
                                  confidence_bins);
}

CalibrationReport calibration_cdf(std::span<const PiecewiseConstDist> predictions,
                                  std::span<const double> outcomes, int grid_points) {
  if (predictions.size() != outcomes.size()) throw DataError("predictions and outcomes differ in length");
  CalibrationReport r;
  if (predictions.empty()) return r;
  if (grid_points < 2) throw UsageError("calibration grid needs at least two points");
  for (std::size_t i = 0; i < predictions.size(); ++i) r.cdf_values.push_back(predictions[i].cdf(outcomes[i]));
  std::vector<double> sorted = r.cdf_values;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  for (int g = 0; g < grid_points; ++g) {
    const double t = static_cast<double>(g) / (grid_points - 1);
    r.grid.push_back(t);
    r.cumulative.push_back(static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) / n);
  }
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - sorted[i];
    const double below = sorted[i] - static_cast<double>(i) / n;
    r.sup_deviation = std::max({r.sup_deviation, above, below});
  }
  return r;
}

std::map<std::string, std::vector<double>> performance_profile(const CurvesByMethod& curves,
                                                               const ProfileConfig& config) {
  if (curves.empty()) throw DataError("no methods to profile");
  const std::size_t tasks = curves.begin()->second.size();
  if (tasks == 0) throw DataError("no tasks to profile");
  const std::size_t length = curves.begin()->second.front().size();
  if (length == 0) throw DataError("empty curves");
  for (const auto& [method, per_task] : curves) {
    if (per_task.size() != tasks) throw DataError("method '" + method + "' has a different task set");
    for (const auto& c : per_task)
      if (c.size() != length) throw DataError("method '" + method + "' has a curve of different length");
  }
  if (config.at_trial < 1) throw UsageError("profile anchor trial is 1-based");
  const std::size_t anchor = std::min(config.at_trial, length) - 1;

  // Running maxima so that success is monotone even for raw curves.
  CurvesByMethod best = curves;
  for (auto& [method, per_task] : best)
    for (auto& c : per_task)
      for (std::size_t t = 1; t < c.size(); ++t) c[t] = std::max(c[t], c[t - 1]);

  std::vector<double> threshold(tasks);
  for (std::size_t k = 0; k < tasks; ++k) {
    std::vector<double> at;
    for (const auto& [method, per_task] : best) at.push_back(per_task[k][anchor]);
    threshold[k] = config.rule == ThresholdRule::kFractionOfBest
                       ? config.fraction * *std::max_element(at.begin(), at.end())
                       : median(at);
  }
  std::map<std::string, std::vector<double>> out;
  for (const auto& [method, per_task] : best) {
    std::vector<double> fraction(length, 0.0);
    for (std::size_t t = 0; t < length; ++t) {
      std::size_t hits = 0;
      for (std::size_t k = 0; k < tasks; ++k) hits += per_task[k][t] >= threshold[k];
      fraction[t] = static_cast<double>(hits) / static_cast<double>(tasks);
    }
    out[method] = std::move(fraction);
  }
  return out;
}

std::vector<double> decile_mass(std::span<const double> bin_probs) {
  std::vector<double> out(10, 0.0);
  const auto n = bin_probs.size();
  for (std::size_t b = 0; b < n; ++b) out[std::min<std::size_t>(9, 10 * b / n)] += bin_probs[b];
  return out;
}

std::vector<double> unit_histogram(std::span<const double> values, int bins) {
  if (bins < 1) throw UsageError("histogram needs at least one bin");
  std::vector<double> out(static_cast<std::size_t>(bins), 0.0);
  if (values.empty()) return out;
  for (double v : values)
    out[static_cast<std::size_t>(std::clamp(static_cast<int>(v * bins), 0, bins - 1))] += 1.0;
  for (double& h : out) h /= static_cast<double>(values.size());
  return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DataError("distributions differ in support size");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

double mean_abs_deviation(std::span<const double> p, double target) {
  if (p.empty()) return 0.0;
  double total = 0.0;
  for (double v : p) total += std::abs(v - target);
  return total / static_cast<double>(p.size());
}

PiecewiseConstDist gaussian_to_piecewise(double mean, double variance, double lo, double hi, int bins) {
  if (!(hi > lo) || bins < 1) throw UsageError("invalid discretization range");
  const double sd = std::sqrt(std::max(variance, 1e-300));
  auto phi = [&](double x) { return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2)); };
  Eigen::VectorXd probs(bins);
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) probs[b] = std::max(0.0, phi(lo + (b + 1) * width) - phi(lo + b * width));
  if (!(probs.sum() > 0.0)) {
    // No resolvable mass inside the range: put it all in the nearest bin.
    probs.setZero();
    probs[std::clamp(static_cast<int>((mean - lo) / width), 0, bins - 1)] = 1.0;
  }
  return PiecewiseConstDist(lo, hi, probs / probs.sum());
}

void write_curve_table(std::ostream& out, const std::vector<std::vector<double>>& curves) {
  out << "trial,mean,std\n";
  if (curves.empty()) return;
  const std::size_t length = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != length) throw DataError("curves differ in length");
  const double n = static_cast<double>(curves.size());
  for (std::size_t t = 0; t < length; ++t) {
    double sum = 0.0, sq = 0.0;
    for (const auto& c : curves) {
      sum += c[t];
      sq += c[t] * c[t];
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    out << (t + 1) << ',' << format_number(mean) << ',' << format_number(std::sqrt(var)) << '\n';
  }
}

}  // namespace seqhpo
