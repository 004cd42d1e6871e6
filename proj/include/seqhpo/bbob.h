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

// Randomized synthetic objectives: standard black-box benchmark families
// composed with a shift, a random rotation, per-axis discretization and noise.
// Values follow the maximization convention (negated cost).

#ifndef SEQHPO_BBOB_H_
#define SEQHPO_BBOB_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seqhpo/core_types.h"
#include "seqhpo/random.h"

namespace seqhpo {

enum class BbobFamily {
  kSphere,
  kEllipsoidSeparable,
  kRastriginSeparable,
  kAttractiveSector,
  kSchaffersF7,
  kSchwefel,
  kDiscus,
  kBentCigar,
  kSharpRidge,
  kBuecheRastrigin,
  kLinearSlope,
  kRosenbrockRotated,
  kSumOfPowers,
  kGriewankRosenbrock,
  kLunacek,
};

// Upper snake case, e.g. "LINEAR_SLOPE".
std::string_view to_string(BbobFamily family);
BbobFamily parse_bbob_family(std::string_view name);
const std::vector<BbobFamily>& all_families();
const std::vector<BbobFamily>& train_families();
// Held out from training data.
const std::vector<BbobFamily>& test_families();
// Comma-separated family names, or one of "train", "test", "all".
std::vector<BbobFamily> parse_family_list(std::string_view spec);

enum class AxisKind { kContinuous, kDiscrete, kCategorical };
std::string_view to_string(AxisKind kind);

// How one coordinate is exposed. DISCRETE and CATEGORICAL axes use `levels`
// equally spaced points of [-5, 5]; a CATEGORICAL axis lists them in
// `label_order` (label i is grid point label_order[i]).
struct AxisSpec {
  AxisKind kind = AxisKind::kContinuous;
  int levels = 0;
  std::vector<std::size_t> label_order;

  double grid_point(std::size_t i) const;
};

// Categorical label of a grid value: "%.12g", with ".0" appended to integers.
std::string grid_label(double value);

enum class NoiseKind { kNone, kGaussianMultiplicative, kUniformMultiplicative, kCauchyAdditive };
std::string_view to_string(NoiseKind kind);

struct NoiseConfig {
  NoiseKind kind = NoiseKind::kNone;
  double scale = 0.0;
  double frequency = 0.2;  // Cauchy only

  void validate() const;
  // Applies noise to a noiseless value.
  double apply(double value, Rng& rng) const;
};

// The randomization choices made by task sampling.
struct TaskOptions {
  int min_dim = 1;
  int max_dim = 20;
  bool discretize = true;
  bool noisy = true;
  std::vector<double> noise_scales = {0.01, 0.1, 1.0};
  double cauchy_frequency = 0.2;

  void validate() const;
};

// Enough to rebuild a task exactly.
struct TaskDescriptor {
  BbobFamily family = BbobFamily::kSphere;
  int dimension = 1;
  std::uint64_t seed = 0;
  bool discretize = true;
  bool noisy = true;

  bool operator==(const TaskDescriptor&) const = default;
};

// Domain is [-5, 5] per coordinate; the objective is f(R (x - shift)).
class BbobTask {
 public:
  static constexpr double kDomain = 5.0;
  static constexpr double kShiftBound = 4.0;

  BbobTask(BbobFamily family, Eigen::MatrixXd rotation, Eigen::VectorXd shift,
           std::vector<AxisSpec> axes, NoiseConfig noise);

  BbobFamily family() const { return family_; }
  int dimension() const { return static_cast<int>(shift_.size()); }
  const Eigen::MatrixXd& rotation() const { return rotation_; }
  const Eigen::VectorXd& shift() const { return shift_; }
  const std::vector<AxisSpec>& axes() const { return axes_; }
  const NoiseConfig& noise() const { return noise_; }
  const std::optional<TaskDescriptor>& descriptor() const { return descriptor_; }
  void set_descriptor(const TaskDescriptor& d) { descriptor_ = d; }

  // Parameters are named x0, x1, ... in coordinate order.
  SearchSpace search_space() const;
  Metadata metadata(std::string_view algorithm = "") const;

  // Continuous coordinates of a point given in search-space values.
  Eigen::VectorXd to_continuous(std::span<const double> x) const;
  double noiseless(std::span<const double> x) const;
  double evaluate(std::span<const double> x, Rng& rng) const;
  // Value at the shift when every axis is continuous, the family's optimum
  // is at its origin, and the shift is reachable; empty otherwise.
  std::optional<double> known_max() const;

 private:
  BbobFamily family_;
  Eigen::MatrixXd rotation_;
  Eigen::VectorXd shift_;
  std::vector<AxisSpec> axes_;
  NoiseConfig noise_;
  std::optional<TaskDescriptor> descriptor_;
};

// Cost of `family` at transformed coordinates z (minimum 0 at z = 0 except for
// the linear slope).
double family_cost(BbobFamily family, const Eigen::VectorXd& z);

// Haar-distributed orthonormal matrix.
Eigen::MatrixXd random_rotation(int dimension, Rng& rng);
AxisSpec discretize_axis(AxisKind kind, int levels, Rng& rng);

BbobTask make_task(const TaskDescriptor& descriptor, const TaskOptions& options = {});
// Draws the family and dimension from `seed`, then builds the task.
BbobTask sample_task(std::uint64_t seed, std::span<const BbobFamily> families,
                     const TaskOptions& options = {});

}  // namespace seqhpo

#endif  // SEQHPO_BBOB_H_
