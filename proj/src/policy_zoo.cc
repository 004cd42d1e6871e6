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

#include "seqhpo/policy_zoo.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace seqhpo {
namespace {

constexpr std::uint64_t kSizeCap = std::uint64_t{1} << 62;

struct PolicyName {
  PolicyKind kind;
  std::string_view name;
};

constexpr PolicyName kPolicyNames[] = {
    {PolicyKind::kGrid, "grid_search"},
    {PolicyKind::kShuffledGrid, "shuffled_grid_search"},
    {PolicyKind::kRandom, "random_search"},
    {PolicyKind::kRegularizedEvolution, "regularized_evolution"},
    {PolicyKind::kHillClimbing, "hill_climbing"},
    {PolicyKind::kEagle, "eagle_strategy"},
    {PolicyKind::kGpUcb, "gp_ucb"},
};

double random_value(const ParameterConfig& p, Rng& rng) {
  if (!p.is_continuous()) return p.value_at(uniform_index(rng, p.set_size()));
  if (p.kind() == ParamKind::kInteger && p.scale() == ScaleType::kLinear) {
    const auto span = static_cast<std::size_t>(p.max_value() - p.min_value());
    return p.min_value() + static_cast<double>(uniform_index(rng, span + 1));
  }
  return denormalize_param(uniform01(rng), p);
}

std::size_t best_index(std::span<const Trial> trials) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < trials.size(); ++i)
    if (trials[i].y > trials[best].y) best = i;
  return best;
}

class GridPolicy : public Policy {
 public:
  GridPolicy(const SearchSpace& space, int resolution) : cursor_(space, resolution) {}
  std::vector<double> suggest(std::span<const Trial> history, Rng&) override {
    return cursor_.at(static_cast<std::uint64_t>(history.size()) % cursor_.size());
  }
  PolicyKind kind() const override { return PolicyKind::kGrid; }

 private:
  GridCursor cursor_;
};

class ShuffledGridPolicy : public Policy {
 public:
  ShuffledGridPolicy(const SearchSpace& space, int resolution)
      : cursor_(space, resolution), order_(cursor_.size()) {}
  std::vector<double> suggest(std::span<const Trial>, Rng& rng) override {
    return cursor_.at(order_.next(rng));
  }
  PolicyKind kind() const override { return PolicyKind::kShuffledGrid; }

 private:
  GridCursor cursor_;
  ShuffledIndex order_;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(const SearchSpace& space) : space_(space) {}
  std::vector<double> suggest(std::span<const Trial>, Rng& rng) override {
    return random_point(space_, rng);
  }
  PolicyKind kind() const override { return PolicyKind::kRandom; }

 private:
  SearchSpace space_;
};

// Population: the most recent population_size trials. Until it fills up the
// policy samples uniformly.
class RegularizedEvolutionPolicy : public Policy {
 public:
  RegularizedEvolutionPolicy(const SearchSpace& space, int population, int tournament)
      : space_(space), population_(population), tournament_(tournament) {}
  std::vector<double> suggest(std::span<const Trial> history, Rng& rng) override {
    const auto pop = static_cast<std::size_t>(population_);
    if (history.size() < pop) return random_point(space_, rng);
    const auto members = history.last(pop);
    std::vector<std::size_t> idx(pop);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::size_t winner = pop;
    for (int k = 0; k < tournament_; ++k) {
      const std::size_t j = static_cast<std::size_t>(k) + uniform_index(rng, pop - static_cast<std::size_t>(k));
      std::swap(idx[static_cast<std::size_t>(k)], idx[j]);
      const std::size_t cand = idx[static_cast<std::size_t>(k)];
      if (winner == pop || members[cand].y > members[winner].y) winner = cand;
    }
    return mutate(members[winner].x, space_, rng);
  }
  PolicyKind kind() const override { return PolicyKind::kRegularizedEvolution; }

 private:
  SearchSpace space_;
  int population_;
  int tournament_;
};

// The pivot is replayed from the history: the first trial, replaced by every
// later trial that strictly improves on it.
class HillClimbingPolicy : public Policy {
 public:
  explicit HillClimbingPolicy(const SearchSpace& space) : space_(space) {}
  std::vector<double> suggest(std::span<const Trial> history, Rng& rng) override {
    if (history.empty()) return random_point(space_, rng);
    return mutate(history[best_index(history)].x, space_, rng);
  }
  PolicyKind kind() const override { return PolicyKind::kHillClimbing; }

 private:
  SearchSpace space_;
};

class EaglePolicy : public Policy {
 public:
  EaglePolicy(const SearchSpace& space, int pool, double alpha)
      : space_(space), pool_(pool), alpha_(alpha / static_cast<double>(space.dimension())) {}
  std::vector<double> suggest(std::span<const Trial> history, Rng& rng) override {
    // Global exploration until the swarm is populated.
    if (history.size() < static_cast<std::size_t>(pool_)) return random_point(space_, rng);
    // The swarm is the pool_ best trials so far; earlier trials win ties.
    std::vector<std::size_t> order(history.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return history[a].y > history[b].y; });
    const auto& better = history[order.front()];
    const auto& member = history[order[uniform_index(rng, static_cast<std::size_t>(pool_))]];
    const double c = uniform01(rng);
    auto x = eagle_move(member.x, better.x, c, alpha_, space_, rng);
    // Exploration around the moved point on continuous coordinates.
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto& p = space_[i];
      if (!p.is_continuous()) continue;
      const double u = normalize_param(x[i], p) + alpha_ * (uniform01(rng) - 0.5);
      x[i] = denormalize_param(std::clamp(u, 0.0, 1.0), p);
    }
    return x;
  }
  PolicyKind kind() const override { return PolicyKind::kEagle; }

 private:
  SearchSpace space_;
  int pool_;
  double alpha_;
};

class GpUcbPolicy : public Policy {
 public:
  GpUcbPolicy(const SearchSpace& space, const PolicySpec& spec) : space_(space), spec_(spec) {}

  std::vector<double> suggest(std::span<const Trial> history, Rng& rng) override {
    const std::size_t d = space_.dimension();
    if (history.empty()) {
      std::vector<double> center(d);
      for (std::size_t i = 0; i < d; ++i) center[i] = denormalize_param(0.5, space_[i]);
      return center;
    }
    const auto used = history.last(std::min(history.size(), static_cast<std::size_t>(spec_.gp_max_points)));
    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(used.size()), static_cast<Eigen::Index>(d));
    Eigen::VectorXd targets(inputs.rows());
    for (std::size_t t = 0; t < used.size(); ++t) {
      for (std::size_t i = 0; i < d; ++i)
        inputs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) =
            normalize_param(used[t].x[i], space_[i], true);
      targets[static_cast<Eigen::Index>(t)] = used[t].y;
    }
    try {
      const auto gp = GpPosterior<double>::fit(std::move(inputs), targets, spec_.gp, rng);
      ++stats_.fits;
      return decode(maximize_ucb(gp, rng));
    } catch (const NumericError&) {
      ++stats_.fallbacks;
      return random_point(space_, rng);
    }
  }
  PolicyKind kind() const override { return PolicyKind::kGpUcb; }
  const UcbStats& stats() const { return stats_; }

 private:
  double ucb(const GpPosterior<double>& gp, const Eigen::VectorXd& u) const {
    const auto p = gp.predict(u);
    return p.mean + spec_.ucb_coefficient * std::sqrt(p.variance);
  }

  Eigen::VectorXd maximize_ucb(const GpPosterior<double>& gp, Rng& rng) const {
    const auto d = static_cast<Eigen::Index>(space_.dimension());
    Eigen::VectorXd best(d);
    double best_value = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < spec_.ucb_candidates; ++k) {
      const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(d, [&] { return uniform01(rng); });
      const double v = ucb(gp, u);
      if (v > best_value) {
        best_value = v;
        best = u;
      }
    }
    for (double step : {0.1, 0.03, 0.01}) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (Eigen::Index i = 0; i < d; ++i) {
          for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd trial = best;
            trial[i] = std::clamp(trial[i] + sign * step, 0.0, 1.0);
            const double v = ucb(gp, trial);
            if (v > best_value) {
              best_value = v;
              best = trial;
              improved = true;
            }
          }
        }
      }
    }
    return best;
  }

  std::vector<double> decode(const Eigen::VectorXd& u) const {
    std::vector<double> x(space_.dimension());
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = denormalize_param(u[static_cast<Eigen::Index>(i)], space_[i]);
    return x;
  }

  SearchSpace space_;
  PolicySpec spec_;
  UcbStats stats_;
};

}  // namespace

std::string_view to_string(PolicyKind kind) {
  for (const auto& [k, name] : kPolicyNames)
    if (k == kind) return name;
  return "?";
}

PolicyKind parse_policy(std::string_view name) {
  for (const auto& [k, n] : kPolicyNames)
    if (n == name) return k;
  throw UsageError("unknown policy '" + std::string(name) + "'");
}

void PolicySpec::validate() const {
  if (grid_resolution < 2) throw UsageError("grid resolution must be >= 2");
  if (population_size < 1 || tournament_size < 1 || tournament_size > population_size)
    throw UsageError("tournament size must be in [1, population size]");
  if (eagle_pool_size < 1) throw UsageError("eagle pool size must be >= 1");
  if (!(eagle_alpha >= 0.0 && eagle_alpha <= 1.0)) throw UsageError("eagle alpha must be in [0, 1]");
  if (ucb_candidates < 1 || gp_max_points < 1) throw UsageError("GP-UCB needs candidates and points");
  gp.validate();
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const SearchSpace& space) {
  spec.validate();
  switch (spec.kind) {
    case PolicyKind::kGrid: return std::make_unique<GridPolicy>(space, spec.grid_resolution);
    case PolicyKind::kShuffledGrid: return std::make_unique<ShuffledGridPolicy>(space, spec.grid_resolution);
    case PolicyKind::kRandom: return std::make_unique<RandomPolicy>(space);
    case PolicyKind::kRegularizedEvolution:
      return std::make_unique<RegularizedEvolutionPolicy>(space, spec.population_size, spec.tournament_size);
    case PolicyKind::kHillClimbing: return std::make_unique<HillClimbingPolicy>(space);
    case PolicyKind::kEagle: return std::make_unique<EaglePolicy>(space, spec.eagle_pool_size, spec.eagle_alpha);
    case PolicyKind::kGpUcb: return std::make_unique<GpUcbPolicy>(space, spec);
  }
  throw UsageError("unknown policy kind");
}

std::unique_ptr<Policy> make_policy(std::string_view name, const SearchSpace& space) {
  PolicySpec spec;
  spec.kind = parse_policy(name);
  return make_policy(spec, space);
}

const UcbStats* ucb_stats(const Policy& policy) {
  const auto* gp = dynamic_cast<const GpUcbPolicy*>(&policy);
  return gp ? &gp->stats() : nullptr;
}

std::vector<double> random_point(const SearchSpace& space, Rng& rng) {
  std::vector<double> x;
  x.reserve(space.dimension());
  for (const auto& p : space.parameters()) x.push_back(random_value(p, rng));
  return x;
}

std::vector<double> mutate(std::span<const double> x, const SearchSpace& space, Rng& rng) {
  std::vector<double> out(x.begin(), x.end());
  const std::size_t r = uniform_index(rng, space.dimension());
  out[r] = random_value(space[r], rng);
  return out;
}

std::vector<double> eagle_move(std::span<const double> x, std::span<const double> x_better,
                               double c, double alpha, const SearchSpace& space, Rng& rng) {
  if (!(c >= 0.0 && c <= 1.0) || !(alpha >= 0.0 && alpha <= 1.0))
    throw UsageError("eagle move coefficients must lie in [0, 1]");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& p = space[i];
    if (p.is_continuous()) {
      const double u = c * normalize_param(x[i], p) + (1.0 - c) * normalize_param(x_better[i], p);
      out[i] = (c == 1.0 || x[i] == x_better[i]) ? x[i] : denormalize_param(std::clamp(u, 0.0, 1.0), p);
      continue;
    }
    const double r = uniform01(rng);
    if (r < (1.0 - alpha) * c) out[i] = x[i];
    else if (r < 1.0 - alpha) out[i] = x_better[i];
    else out[i] = random_value(p, rng);
  }
  return out;
}

GridCursor::GridCursor(const SearchSpace& space, int resolution) {
  if (resolution < 2) throw UsageError("grid resolution must be >= 2");
  for (const auto& p : space.parameters()) {
    std::vector<double> axis;
    if (p.is_continuous()) {
      for (int i = 0; i < resolution; ++i) {
        const double v = denormalize_param(static_cast<double>(i) / (resolution - 1), p);
        if (axis.empty() || v != axis.back()) axis.push_back(v);
      }
    } else {
      for (std::size_t i = 0; i < p.set_size(); ++i) axis.push_back(p.value_at(i));
    }
    axes_.push_back(std::move(axis));
  }
  order_.resize(axes_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return space[a].name() < space[b].name(); });
  for (const auto& axis : axes_) {
    const std::uint64_t n = axis.size();
    size_ = size_ > kSizeCap / n ? kSizeCap : size_ * n;
  }
}

std::vector<double> GridCursor::at(std::uint64_t index) const {
  if (index >= size_) throw UsageError("grid index out of range");
  std::vector<double> x(axes_.size());
  for (std::size_t k : order_) {
    const std::uint64_t n = axes_[k].size();
    x[k] = axes_[k][index % n];
    index /= n;
  }
  return x;
}

std::uint64_t ShuffledIndex::next(Rng& rng) {
  if (drawn_ == size_) {
    drawn_ = 0;
    swapped_.clear();
  }
  auto value_at = [&](std::uint64_t i) {
    const auto it = swapped_.find(i);
    return it == swapped_.end() ? i : it->second;
  };
  const std::uint64_t j = drawn_ + std::uniform_int_distribution<std::uint64_t>(0, size_ - drawn_ - 1)(rng);
  const std::uint64_t chosen = value_at(j);
  swapped_[j] = value_at(drawn_);
  ++drawn_;
  return chosen;
}

}  // namespace seqhpo
