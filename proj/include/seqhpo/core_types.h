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

#ifndef SEQHPO_CORE_TYPES_H_
#define SEQHPO_CORE_TYPES_H_

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace seqhpo {

// Error categories. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class UsageError : public Error {
 public:
  using Error::Error;
};
class DataError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};

enum class ParamKind { kDouble, kInteger, kDiscrete, kCategorical };
enum class ScaleType { kLinear, kLog };
enum class Goal { kMaximize, kMinimize };

std::string_view to_string(ParamKind kind);
std::string_view to_string(ScaleType scale);
std::string_view to_string(Goal goal);
ParamKind parse_param_kind(std::string_view s);
ScaleType parse_scale_type(std::string_view s);
Goal parse_goal(std::string_view s);

// One hyperparameter domain. Values are always carried as doubles: DOUBLE and
// INTEGER in native units, DISCRETE as the feasible real itself, CATEGORICAL
// as the index into `categories`.
class ParameterConfig {
 public:
  static ParameterConfig Double(std::string name, double min_value, double max_value,
                                ScaleType scale = ScaleType::kLinear);
  static ParameterConfig Integer(std::string name, double min_value, double max_value,
                                 ScaleType scale = ScaleType::kLinear);
  static ParameterConfig Discrete(std::string name, std::vector<double> values);
  static ParameterConfig Categorical(std::string name, std::vector<std::string> categories);

  const std::string& name() const { return name_; }
  ParamKind kind() const { return kind_; }
  ScaleType scale() const { return scale_; }
  double min_value() const { return min_value_; }
  double max_value() const { return max_value_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& categories() const { return categories_; }

  bool is_continuous() const { return kind_ == ParamKind::kDouble || kind_ == ParamKind::kInteger; }
  // Number of feasible values for DISCRETE/CATEGORICAL; 0 otherwise.
  std::size_t set_size() const;
  bool contains(double value) const;
  // Index of `value` in the feasible set (DISCRETE/CATEGORICAL only).
  std::size_t index_of(double value) const;
  // Native value of the feasible-set entry `index`.
  double value_at(std::size_t index) const;

  bool operator==(const ParameterConfig&) const = default;

 private:
  ParameterConfig() = default;
  void validate() const;

  std::string name_;
  ParamKind kind_ = ParamKind::kDouble;
  ScaleType scale_ = ScaleType::kLinear;
  double min_value_ = 0.0;
  double max_value_ = 0.0;
  std::vector<double> values_;
  std::vector<std::string> categories_;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParameterConfig> parameters);

  std::size_t dimension() const { return parameters_.size(); }
  const std::vector<ParameterConfig>& parameters() const { return parameters_; }
  const ParameterConfig& operator[](std::size_t i) const { return parameters_[i]; }
  bool contains(std::span<const double> x) const;

  bool operator==(const SearchSpace&) const = default;

 private:
  std::vector<ParameterConfig> parameters_;
};

struct Metadata {
  std::string name;
  std::string metric_name;
  Goal goal = Goal::kMaximize;
  std::string algorithm;
  SearchSpace space;
  std::optional<std::string> free_text;

  bool operator==(const Metadata&) const = default;
};

struct Trial {
  std::vector<double> x;
  double y = 0.0;

  bool operator==(const Trial&) const = default;
};

struct Study {
  Metadata metadata;
  std::vector<Trial> history;

  bool operator==(const Study&) const = default;
  // Throws DataError if a trial does not conform to the search space.
  void validate() const;
};

// Maps `value` to [0, 1]: (g(x) - g(min)) / (g(max) - g(min)) with g the
// identity or log. DISCRETE/CATEGORICAL return the raw set index unless
// `index_to_unit` asks for index / (size - 1).
double normalize_param(double value, const ParameterConfig& cfg, bool index_to_unit = false);

// Inverse of the unit normalization. INTEGER results are rounded to the
// nearest in-range integer; DISCRETE/CATEGORICAL pick the nearest index.
double denormalize_param(double u, const ParameterConfig& cfg);

// Negates y and flips the goal for MINIMIZE studies; identity otherwise.
Study to_maximization(Study study);

// Canonical names of the behavior policies that may appear in
// Metadata::algorithm.
const std::vector<std::string>& registered_algorithms();
bool is_registered_algorithm(std::string_view name);

}  // namespace seqhpo

#endif  // SEQHPO_CORE_TYPES_H_
