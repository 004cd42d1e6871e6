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

#include <cmath>

#include "doctest.h"
#include "seqhpo/acquisition.h"
#include "seqhpo/oracle_model.h"

namespace seqhpo {
namespace {

const Vocab kVocab;

Eigen::VectorXd two_point() {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(kVocab.q());
  p[0] = 0.5;
  p[10] = 0.5;
  return p;
}

Eigen::VectorXd random_dist(Rng& rng) {
  Eigen::VectorXd p(kVocab.q());
  const double sparsity = uniform01(rng);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double u = uniform01(rng);
    p[i] = u < sparsity ? 0.0 : -std::log(u);
  }
  if (p.sum() == 0.0) p[uniform_index(rng, kVocab.q())] = 1.0;
  return p / p.sum();
}

AcquisitionSpec spec_of(AcquisitionKind kind, double alpha = 0.9, int m = 100) {
  AcquisitionSpec s;
  s.kind = kind;
  s.alpha = alpha;
  s.num_candidates = m;
  return s;
}

TEST_CASE("acquisition examples") {
  Rng rng(0);
  CHECK(score(two_point(), spec_of(AcquisitionKind::kExpectedImprovement), 4, rng) == 3.0);
  CHECK(score(two_point(), spec_of(AcquisitionKind::kProbabilityOfImprovement), 4, rng) == 0.5);
  Eigen::VectorXd ten = Eigen::VectorXd::Zero(kVocab.q());
  ten.head(10).setConstant(0.1);
  CHECK(score(ten, spec_of(AcquisitionKind::kUpperQuantile, 0.5), 0, rng) == 4.0);
}

TEST_CASE("acquisition input checks") {
  Rng rng(0);
  CHECK_THROWS_AS(score(Eigen::VectorXd::Constant(kVocab.q(), 1.0), spec_of(AcquisitionKind::kExpectedImprovement), 0, rng),
                  NumericError);
  CHECK_THROWS_AS(parse_acquisition("lcb"), UsageError);
  CHECK(parse_acquisition("ts") == AcquisitionKind::kThompson);
  CHECK_THROWS_AS(spec_of(AcquisitionKind::kUpperQuantile, 1.0).validate(), UsageError);
  CHECK_THROWS_AS(spec_of(AcquisitionKind::kUpperQuantile, 0.5, 0).validate(), UsageError);
  const std::vector<double> tied = {1.0, 3.0, 3.0, 2.0};
  CHECK(argmax_first(tied) == 1);
}

TEST_CASE("acquisition properties on random distributions") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_dist(rng);
    const int top = [&] {
      int t = 0;
      for (int i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) t = i;
      return t;
    }();
    double last_pi = 2.0;
    for (int star : {0, 100, 400, 700, 999}) {
      const double ei = score(p, spec_of(AcquisitionKind::kExpectedImprovement), star, rng);
      const double pi = score(p, spec_of(AcquisitionKind::kProbabilityOfImprovement), star, rng);
      CHECK(ei >= 0.0);
      CHECK((ei == 0.0) == (star >= top));
      CHECK(pi >= 0.0);
      CHECK(pi <= 1.0 + 1e-12);
      CHECK(pi <= last_pi);
      last_pi = pi;
    }
    double last_ucb = -1.0;
    for (double alpha : {0.01, 0.1, 0.5, 0.9, 0.99, 1.0 - 1e-15}) {
      AcquisitionSpec s = spec_of(AcquisitionKind::kUpperQuantile, alpha);
      const double u = score(p, s, 0, rng);
      CHECK(u >= last_ucb);
      last_ucb = u;
    }
    CHECK(last_ucb == top);
  }
}

TEST_CASE("bin scores match brute-force summation") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_dist(rng);
    const int star = static_cast<int>(uniform_index(rng, kVocab.q()));
    const double alpha = 0.01 + 0.98 * uniform01(rng);
    long double ei = 0.0L;
    long double pi = 0.0L;
    long double cdf = 0.0L;
    int ucb = -1;
    for (int b = 0; b < kVocab.q(); ++b) {
      ei += static_cast<long double>(p[b]) * std::max(b - star, 0);
      if (b > star) pi += p[b];
      cdf += p[b];
      if (ucb < 0 && cdf >= static_cast<long double>(alpha) - 1e-15L) ucb = b;
    }
    CHECK(std::abs(score(p, spec_of(AcquisitionKind::kExpectedImprovement), star, rng) -
                   static_cast<double>(ei)) <= 1e-12 * std::max(1.0L, ei));
    CHECK(std::abs(score(p, spec_of(AcquisitionKind::kProbabilityOfImprovement), star, rng) -
                   static_cast<double>(pi)) <= 1e-12);
    const double got = score(p, spec_of(AcquisitionKind::kUpperQuantile, alpha), star, rng);
    // Accept a one-bin disagreement only when the cumulative sum sits at alpha.
    if (got != ucb) {
      long double c = 0.0L;
      for (int b = 0; b <= std::min<int>(ucb, static_cast<int>(got)); ++b) c += p[b];
      CHECK(std::abs(static_cast<double>(c) - alpha) < 1e-12);
    }
  }
}

TEST_CASE("increasing affine maps of bin values keep the argmax") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::VectorXd> dists;
    for (int m = 0; m < 20; ++m) dists.push_back(random_dist(rng));
    const double scale = 0.1 + 10.0 * uniform01(rng);
    const double shift = -5.0 + 10.0 * uniform01(rng);
    const double star = static_cast<double>(uniform_index(rng, kVocab.q()));
    std::vector<double> raw(kVocab.q());
    std::vector<double> mapped(kVocab.q());
    for (int b = 0; b < kVocab.q(); ++b) {
      raw[b] = b;
      mapped[b] = scale * b + shift;
    }
    std::vector<double> ei_raw, ei_mapped, ucb_raw, ucb_mapped;
    for (const auto& d : dists) {
      const std::span<const double> probs(d.data(), d.size());
      ei_raw.push_back(expected_improvement(probs, raw, star));
      ei_mapped.push_back(expected_improvement(probs, mapped, scale * star + shift));
      ucb_raw.push_back(upper_quantile(probs, raw, 0.9));
      ucb_mapped.push_back(upper_quantile(probs, mapped, 0.9));
    }
    CHECK(argmax_first(ei_raw) == argmax_first(ei_mapped));
    CHECK(argmax_first(ucb_raw) == argmax_first(ucb_mapped));
  }
}

Metadata line_metadata(Goal goal = Goal::kMaximize) {
  Metadata m;
  m.name = "line";
  m.metric_name = "f";
  m.goal = goal;
  m.space = SearchSpace({ParameterConfig::Double("x", 0.0, 1.0)});
  return m;
}

TEST_CASE("one candidate is returned without scoring") {
  const auto meta = line_metadata();
  const OracleModel model(meta.space, [](std::span<const double> x) { return x[0]; }, kVocab);
  SuggestionSession a(model, meta, kVocab);
  SuggestionSession b(model, meta, kVocab);
  Rng ra(9), rb(9);
  for (int k = 0; k < 10; ++k) {
    const auto via_acq = augmented_suggest(a, spec_of(AcquisitionKind::kThompson, 0.9, 1), ra);
    CHECK(via_acq == b.sample(rb).x);
  }
}

TEST_CASE("equal scores pick the first candidate") {
  const auto meta = line_metadata();
  const std::vector<Trial> history = {{{0.2}, 1.0}, {{0.8}, 1.0}};
  OracleModel model(meta.space, [](std::span<const double>) { return 1.0; }, kVocab);
  model.set_y_range(observed_y_range(history));
  SuggestionSession a(model, meta, kVocab);
  SuggestionSession b(model, meta, kVocab);
  a.sync(history);
  b.sync(history);
  Rng ra(4), rb(4);
  const auto chosen = augmented_suggest(a, spec_of(AcquisitionKind::kUpperQuantile, 0.9, 30), ra);
  CHECK(chosen == b.sample(rb).x);
}

TEST_CASE("augmented suggestion maximizes the oracle's predicted value") {
  const auto meta = line_metadata();
  const auto f = [](std::span<const double> x) { return -std::pow(x[0] - 0.37, 2.0); };
  // The optimum is in the history so no candidate clamps into the top bin.
  const std::vector<Trial> history = {{{0.0}, f(std::vector{0.0})},
                                      {{1.0}, f(std::vector{1.0})},
                                      {{0.37}, 0.0}};
  OracleModel model(meta.space, f, kVocab);
  model.set_y_range(observed_y_range(history));
  SuggestionSession session(model, meta, kVocab);
  session.sync(history);
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    Rng replay = rng;
    SuggestionSession shadow(model, meta, kVocab);
    shadow.sync(history);
    double best = -1e300;
    for (int m = 0; m < 50; ++m) best = std::max(best, f(shadow.sample(replay).x));
    const auto x = augmented_suggest(session, spec_of(AcquisitionKind::kUpperQuantile, 0.5, 50), rng);
    // Within a couple of y bins of the best draw; the range spans 0.63^2 over 600 bins.
    CHECK(f(x) >= best - 0.4 / 600.0 * 3.0);
  }
}

TEST_CASE("model policy handles minimization goals") {
  const auto meta = line_metadata(Goal::kMinimize);
  const auto cost = [](double x) { return (x - 0.3) * (x - 0.3); };
  std::vector<Trial> history = {{{0.0}, cost(0.0)}, {{1.0}, cost(1.0)}};
  OracleModel model(meta.space, [&](std::span<const double> x) { return -cost(x[0]); }, kVocab);
  model.set_y_range({-cost(1.0), -cost(0.0)});
  ModelPolicy policy(model, meta, kVocab, spec_of(AcquisitionKind::kExpectedImprovement));
  Rng rng(2);
  const auto x = policy.suggest(history, rng);
  CHECK(std::abs(x[0] - 0.3) < 0.05);
}

}  // namespace
}  // namespace seqhpo
