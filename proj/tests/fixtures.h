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

#ifndef SEQHPO_TESTS_FIXTURES_H_
#define SEQHPO_TESTS_FIXTURES_H_

#include <cmath>
#include <string>
#include <vector>

#include "seqhpo/core_types.h"
#include "seqhpo/evaluation.h"
#include "seqhpo/random.h"

namespace seqhpo::testing {

// The two-parameter, two-trial convnet study used throughout the docs.
inline Study convnet_study() {
  Study s;
  s.metadata.name = "convnet on cifar10";
  s.metadata.metric_name = "accuracy";
  s.metadata.goal = Goal::kMaximize;
  s.metadata.algorithm = "random_search";
  s.metadata.space = SearchSpace({
      ParameterConfig::Double("opt_kw.lr", 1e-6, 1e-2, ScaleType::kLog),
      ParameterConfig::Categorical("opt_type", {"SGD", "Adam"}),
  });
  s.history = {
      Trial{{0.0021237573, 0.0}, 0.69482429},
      Trial{{0.00038292234, 1.0}, 0.71642583},
  };
  return s;
}

// Random parameter config of any kind.
inline ParameterConfig random_param(Rng& rng, const std::string& name) {
  const auto kind = uniform_index(rng, 4);
  switch (kind) {
    case 0: {
      if (uniform01(rng) < 0.4) {
        const double lo = std::pow(10.0, -8.0 + 6.0 * uniform01(rng));
        return ParameterConfig::Double(name, lo, lo * std::pow(10.0, 0.5 + 6.0 * uniform01(rng)),
                                       ScaleType::kLog);
      }
      const double lo = -100.0 + 200.0 * uniform01(rng);
      return ParameterConfig::Double(name, lo, lo + 1e-3 + 50.0 * uniform01(rng));
    }
    case 1: {
      const double lo = std::floor(-50.0 + 100.0 * uniform01(rng));
      const double width = std::floor(std::pow(10.0, 4.0 * uniform01(rng)));
      if (uniform01(rng) < 0.3 && lo > 0)
        return ParameterConfig::Integer(name, lo, lo + width, ScaleType::kLog);
      return ParameterConfig::Integer(name, lo, lo + width);
    }
    case 2: {
      std::vector<double> values;
      double v = -10.0 * uniform01(rng);
      const auto n = 1 + uniform_index(rng, 8);
      for (std::size_t i = 0; i < n; ++i) {
        values.push_back(v);
        v += 0.1 + uniform01(rng);
      }
      return ParameterConfig::Discrete(name, values);
    }
    default: {
      std::vector<std::string> cats;
      const auto n = 1 + uniform_index(rng, 6);
      for (std::size_t i = 0; i < n; ++i) cats.push_back("c" + std::to_string(i));
      return ParameterConfig::Categorical(name, cats);
    }
  }
}

inline double random_value(const ParameterConfig& p, Rng& rng) {
  switch (p.kind()) {
    case ParamKind::kDouble:
      return p.min_value() + (p.max_value() - p.min_value()) * uniform01(rng);
    case ParamKind::kInteger:
      return std::round(p.min_value() + (p.max_value() - p.min_value()) * uniform01(rng));
    default:
      return p.value_at(uniform_index(rng, p.set_size()));
  }
}

inline Study random_study(Rng& rng, std::size_t max_dim = 5, std::size_t max_trials = 12) {
  Study s;
  s.metadata.name = "fuzz";
  s.metadata.metric_name = "objective";
  s.metadata.algorithm = registered_algorithms()[uniform_index(rng, 7)];
  std::vector<ParameterConfig> params;
  const auto d = 1 + uniform_index(rng, max_dim);
  for (std::size_t i = 0; i < d; ++i) params.push_back(random_param(rng, "p" + std::to_string(i)));
  s.metadata.space = SearchSpace(params);
  const auto t = uniform_index(rng, max_trials + 1);
  for (std::size_t k = 0; k < t; ++k) {
    Trial trial;
    for (const auto& p : s.metadata.space.parameters()) trial.x.push_back(random_value(p, rng));
    trial.y = std::normal_distribution<double>(0.0, 3.0)(rng);
    s.history.push_back(trial);
  }
  return s;
}

// Gaussian-bump predictive distributions on [0, 1] together with outcomes
// drawn from each prediction itself, so the predictor is calibrated by
// construction.
struct CalibratedSample {
  std::vector<PiecewiseConstDist> predictions;
  std::vector<double> outcomes;
};

inline CalibratedSample calibrated_sample(std::size_t n, Rng& rng, double min_sd = 0.02,
                                          double max_sd = 0.04) {
  CalibratedSample s;
  s.predictions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = 0.2 + 0.6 * uniform01(rng);
    const double sd = min_sd + (max_sd - min_sd) * uniform01(rng);
    s.predictions.push_back(gaussian_to_piecewise(mean, sd * sd, 0.0, 1.0, 1000));
    s.outcomes.push_back(s.predictions.back().sample(rng));
  }
  return s;
}

}  // namespace seqhpo::testing

#endif  // SEQHPO_TESTS_FIXTURES_H_
