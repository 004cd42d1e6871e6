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

// Behavior policies used to generate offline trajectories. Every policy
// maximizes y and sees the full history on each call.

#ifndef SEQHPO_POLICY_ZOO_H_
#define SEQHPO_POLICY_ZOO_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqhpo/core_types.h"
#include "seqhpo/gp.h"
#include "seqhpo/random.h"

namespace seqhpo {

enum class PolicyKind {
  kGrid,
  kShuffledGrid,
  kRandom,
  kRegularizedEvolution,
  kHillClimbing,
  kEagle,
  kGpUcb,
};

// The registered algorithm name, e.g. "regularized_evolution".
std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::kRandom;
  int grid_resolution = 100;
  int population_size = 25;
  int tournament_size = 5;
  int eagle_pool_size = 25;
  double eagle_alpha = 0.2;  // divided by the dimension
  double ucb_coefficient = 1.8;
  int ucb_candidates = 1000;
  int gp_max_points = 200;
  GpFitConfig gp;

  void validate() const;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<double> suggest(std::span<const Trial> history, Rng& rng) = 0;
  virtual PolicyKind kind() const = 0;
};

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const SearchSpace& space);
std::unique_ptr<Policy> make_policy(std::string_view name, const SearchSpace& space);

std::vector<double> random_point(const SearchSpace& space, Rng& rng);
// Resamples one uniformly chosen coordinate over its whole domain.
std::vector<double> mutate(std::span<const double> x, const SearchSpace& space, Rng& rng);
// Continuous coordinates: c x + (1 - c) x_better in the scaled domain. Other
// coordinates keep x with probability (1 - alpha) c, take x_better with
// (1 - alpha)(1 - c), and are resampled with probability alpha.
std::vector<double> eagle_move(std::span<const double> x, std::span<const double> x_better,
                               double c, double alpha, const SearchSpace& space, Rng& rng);

// Cartesian product of per-parameter grids. Index 0 is the all-lowest point;
// the alphabetically first parameter name varies fastest.
class GridCursor {
 public:
  GridCursor(const SearchSpace& space, int resolution);

  // Number of points, saturating at 2^62.
  std::uint64_t size() const { return size_; }
  std::vector<double> at(std::uint64_t index) const;
  const std::vector<std::vector<double>>& axis_values() const { return axes_; }

 private:
  std::vector<std::vector<double>> axes_;  // in search-space order
  std::vector<std::size_t> order_;         // least significant digit first
  std::uint64_t size_ = 1;
};

// Point counter for drawing grid points without replacement: a lazily
// materialized Fisher-Yates shuffle, restarted when exhausted.
class ShuffledIndex {
 public:
  explicit ShuffledIndex(std::uint64_t size) : size_(size) {}
  std::uint64_t next(Rng& rng);

 private:
  std::uint64_t size_;
  std::uint64_t drawn_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> swapped_;
};

// Counters kept by the GP-UCB policy. A fallback is a random suggestion made
// because the GP could not be fit.
struct UcbStats {
  std::size_t fits = 0;
  std::size_t fallbacks = 0;
};
// Null for every other policy.
const UcbStats* ucb_stats(const Policy& policy);

}  // namespace seqhpo

#endif  // SEQHPO_POLICY_ZOO_H_
