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

#include "seqhpo/core_types.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace seqhpo {

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::kDouble: return "DOUBLE";
    case ParamKind::kInteger: return "INTEGER";
    case ParamKind::kDiscrete: return "DISCRETE";
    case ParamKind::kCategorical: return "CATEGORICAL";
  }
  return "?";
}

std::string_view to_string(ScaleType scale) {
  return scale == ScaleType::kLog ? "LOG" : "LINEAR";
}

std::string_view to_string(Goal goal) {
  return goal == Goal::kMinimize ? "MINIMIZE" : "MAXIMIZE";
}

ParamKind parse_param_kind(std::string_view s) {
  if (s == "DOUBLE") return ParamKind::kDouble;
  if (s == "INTEGER") return ParamKind::kInteger;
  if (s == "DISCRETE") return ParamKind::kDiscrete;
  if (s == "CATEGORICAL") return ParamKind::kCategorical;
  throw DataError("unknown parameter type '" + std::string(s) + "'");
}

ScaleType parse_scale_type(std::string_view s) {
  if (s == "LINEAR") return ScaleType::kLinear;
  if (s == "LOG") return ScaleType::kLog;
  throw DataError("unknown scale type '" + std::string(s) + "'");
}

Goal parse_goal(std::string_view s) {
  if (s == "MAXIMIZE") return Goal::kMaximize;
  if (s == "MINIMIZE") return Goal::kMinimize;
  throw DataError("unknown goal '" + std::string(s) + "'");
}

ParameterConfig ParameterConfig::Double(std::string name, double min_value, double max_value,
                                        ScaleType scale) {
  ParameterConfig cfg;
  cfg.name_ = std::move(name);
  cfg.kind_ = ParamKind::kDouble;
  cfg.min_value_ = min_value;
  cfg.max_value_ = max_value;
  cfg.scale_ = scale;
  cfg.validate();
  return cfg;
}

ParameterConfig ParameterConfig::Integer(std::string name, double min_value, double max_value,
                                         ScaleType scale) {
  ParameterConfig cfg;
  cfg.name_ = std::move(name);
  cfg.kind_ = ParamKind::kInteger;
  cfg.min_value_ = min_value;
  cfg.max_value_ = max_value;
  cfg.scale_ = scale;
  cfg.validate();
  return cfg;
}

ParameterConfig ParameterConfig::Discrete(std::string name, std::vector<double> values) {
  ParameterConfig cfg;
  cfg.name_ = std::move(name);
  cfg.kind_ = ParamKind::kDiscrete;
  cfg.values_ = std::move(values);
  cfg.validate();
  return cfg;
}

ParameterConfig ParameterConfig::Categorical(std::string name,
                                             std::vector<std::string> categories) {
  ParameterConfig cfg;
  cfg.name_ = std::move(name);
  cfg.kind_ = ParamKind::kCategorical;
  cfg.categories_ = std::move(categories);
  cfg.validate();
  return cfg;
}

void ParameterConfig::validate() const {
  const std::string where = "parameter '" + name_ + "': ";
  switch (kind_) {
    case ParamKind::kDouble:
    case ParamKind::kInteger:
      if (!std::isfinite(min_value_) || !std::isfinite(max_value_))
        throw DataError(where + "bounds must be finite");
      if (min_value_ > max_value_) throw DataError(where + "min_value > max_value");
      if (scale_ == ScaleType::kLog && min_value_ <= 0.0)
        throw DataError(where + "LOG scale requires min_value > 0");
      if (kind_ == ParamKind::kInteger &&
          (min_value_ != std::round(min_value_) || max_value_ != std::round(max_value_)))
        throw DataError(where + "INTEGER bounds must be integral");
      break;
    case ParamKind::kDiscrete:
      if (values_.empty()) throw DataError(where + "DISCRETE values empty");
      for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) throw DataError(where + "non-finite DISCRETE value");
        if (i > 0 && !(values_[i - 1] < values_[i]))
          throw DataError(where + "DISCRETE values must be strictly increasing");
      }
      break;
    case ParamKind::kCategorical: {
      if (categories_.empty()) throw DataError(where + "CATEGORICAL categories empty");
      std::set<std::string> seen(categories_.begin(), categories_.end());
      if (seen.size() != categories_.size())
        throw DataError(where + "CATEGORICAL categories must be unique");
      break;
    }
  }
}

std::size_t ParameterConfig::set_size() const {
  if (kind_ == ParamKind::kDiscrete) return values_.size();
  if (kind_ == ParamKind::kCategorical) return categories_.size();
  return 0;
}

bool ParameterConfig::contains(double value) const {
  if (!std::isfinite(value)) return false;
  switch (kind_) {
    case ParamKind::kDouble:
      return value >= min_value_ && value <= max_value_;
    case ParamKind::kInteger:
      return value >= min_value_ && value <= max_value_ && value == std::round(value);
    case ParamKind::kDiscrete:
      return std::binary_search(values_.begin(), values_.end(), value);
    case ParamKind::kCategorical:
      return value >= 0.0 && value == std::round(value) &&
             value < static_cast<double>(categories_.size());
  }
  return false;
}

std::size_t ParameterConfig::index_of(double value) const {
  if (kind_ == ParamKind::kDiscrete) {
    auto it = std::lower_bound(values_.begin(), values_.end(), value);
    if (it == values_.end() || *it != value)
      throw DataError("parameter '" + name_ + "': value not in DISCRETE set");
    return static_cast<std::size_t>(it - values_.begin());
  }
  if (kind_ == ParamKind::kCategorical) {
    if (!contains(value)) throw DataError("parameter '" + name_ + "': bad category index");
    return static_cast<std::size_t>(value);
  }
  throw DataError("parameter '" + name_ + "': index_of on a continuous parameter");
}

double ParameterConfig::value_at(std::size_t index) const {
  if (index >= set_size())
    throw DataError("parameter '" + name_ + "': set index out of range");
  return kind_ == ParamKind::kDiscrete ? values_[index] : static_cast<double>(index);
}

SearchSpace::SearchSpace(std::vector<ParameterConfig> parameters)
    : parameters_(std::move(parameters)) {
  if (parameters_.empty()) throw DataError("search space needs at least one parameter");
  std::set<std::string> names;
  for (const auto& p : parameters_) {
    if (!names.insert(p.name()).second)
      throw DataError("duplicate parameter name '" + p.name() + "'");
  }
}

bool SearchSpace::contains(std::span<const double> x) const {
  if (x.size() != parameters_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!parameters_[i].contains(x[i])) return false;
  }
  return true;
}

void Study::validate() const {
  const auto& space = metadata.space;
  for (std::size_t t = 0; t < history.size(); ++t) {
    if (!space.contains(history[t].x))
      throw DataError("trial " + std::to_string(t) + " outside the search space");
    if (!std::isfinite(history[t].y))
      throw DataError("trial " + std::to_string(t) + " has a non-finite value");
  }
  if (!metadata.algorithm.empty() && !is_registered_algorithm(metadata.algorithm))
    throw DataError("unregistered algorithm '" + metadata.algorithm + "'");
}

namespace {

double warp(double v, ScaleType scale) { return scale == ScaleType::kLog ? std::log(v) : v; }
double unwarp(double v, ScaleType scale) { return scale == ScaleType::kLog ? std::exp(v) : v; }

}  // namespace

double normalize_param(double value, const ParameterConfig& cfg, bool index_to_unit) {
  if (!cfg.contains(value))
    throw DataError("value " + std::to_string(value) + " outside domain of '" + cfg.name() + "'");
  if (!cfg.is_continuous()) {
    const double index = static_cast<double>(cfg.index_of(value));
    if (!index_to_unit) return index;
    const std::size_t n = cfg.set_size();
    return n > 1 ? index / static_cast<double>(n - 1) : 0.0;
  }
  const double lo = warp(cfg.min_value(), cfg.scale());
  const double hi = warp(cfg.max_value(), cfg.scale());
  if (hi == lo) return 0.0;
  const double u = (warp(value, cfg.scale()) - lo) / (hi - lo);
  return std::clamp(u, 0.0, 1.0);
}

double denormalize_param(double u, const ParameterConfig& cfg) {
  if (!(u >= 0.0 && u <= 1.0))
    throw DataError("normalized value outside [0, 1] for '" + cfg.name() + "'");
  if (!cfg.is_continuous()) {
    const std::size_t n = cfg.set_size();
    const auto index = static_cast<std::size_t>(std::lround(u * static_cast<double>(n - 1)));
    return cfg.value_at(std::min(index, n - 1));
  }
  const double lo = warp(cfg.min_value(), cfg.scale());
  const double hi = warp(cfg.max_value(), cfg.scale());
  double x = unwarp(lo + u * (hi - lo), cfg.scale());
  if (u == 0.0) x = cfg.min_value();
  if (u == 1.0) x = cfg.max_value();
  x = std::clamp(x, cfg.min_value(), cfg.max_value());
  if (cfg.kind() == ParamKind::kInteger) {
    x = std::clamp(std::round(x), cfg.min_value(), cfg.max_value());
  }
  return x;
}

Study to_maximization(Study study) {
  if (study.metadata.goal == Goal::kMinimize) {
    for (auto& trial : study.history) trial.y = -trial.y;
    study.metadata.goal = Goal::kMaximize;
  }
  return study;
}

const std::vector<std::string>& registered_algorithms() {
  static const std::vector<std::string> kNames = {
      "grid_search",   "shuffled_grid_search", "random_search", "regularized_evolution",
      "hill_climbing", "eagle_strategy",       "gp_ucb",
  };
  return kNames;
}

bool is_registered_algorithm(std::string_view name) {
  const auto& names = registered_algorithms();
  return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace seqhpo
