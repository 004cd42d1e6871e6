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
#include "fixtures.h"
#include "seqhpo/decoder.h"
#include "seqhpo/oracle_model.h"

namespace seqhpo {
namespace {

const Vocab kVocab;

Metadata unit_metadata(std::size_t dims) {
  Metadata m;
  m.name = "unit";
  m.metric_name = "f";
  m.algorithm = "random_search";
  std::vector<ParameterConfig> params;
  for (std::size_t i = 0; i < dims; ++i)
    params.push_back(ParameterConfig::Double("x" + std::to_string(i), 0.0, 1.0));
  m.space = SearchSpace(params);
  return m;
}

// Wraps another model and counts the tokens pushed through its contexts.
class CountingModel : public TokenModel {
 public:
  explicit CountingModel(const TokenModel& inner) : inner_(inner) {}
  std::unique_ptr<TokenContext> start(std::span<const Token> meta) const override {
    return std::make_unique<Context>(inner_.start(meta), appended);
  }
  int vocab_size() const override { return inner_.vocab_size(); }
  std::size_t max_history_len() const override { return inner_.max_history_len(); }
  mutable std::size_t appended = 0;

 private:
  class Context : public TokenContext {
   public:
    Context(std::unique_ptr<TokenContext> inner, std::size_t& counter)
        : inner_(std::move(inner)), counter_(counter) {}
    void append(std::span<const Token> t) override {
      counter_ += t.size();
      inner_->append(t);
    }
    void truncate(std::size_t n) override { inner_->truncate(n); }
    std::size_t size() const override { return inner_->size(); }
    Eigen::VectorXd next_logits() const override { return inner_->next_logits(); }

   private:
    std::unique_ptr<TokenContext> inner_;
    std::size_t& counter_;
  };
  const TokenModel& inner_;
};

// Every position puts all of its mass on one value token.
class FixedBinModel : public TokenModel {
 public:
  explicit FixedBinModel(Token bin) : bin_(bin) {}
  std::unique_ptr<TokenContext> start(std::span<const Token>) const override {
    return std::make_unique<Context>(bin_);
  }
  int vocab_size() const override { return kVocab.size(); }
  std::size_t max_history_len() const override { return 4096; }

 private:
  class Context : public TokenContext {
   public:
    explicit Context(Token bin) : bin_(bin) {}
    void append(std::span<const Token> t) override { n_ += t.size(); }
    void truncate(std::size_t n) override { n_ = n; }
    std::size_t size() const override { return n_; }
    Eigen::VectorXd next_logits() const override {
      Eigen::VectorXd l = Eigen::VectorXd::Constant(kVocab.size(), -50.0);
      l[bin_] = 10.0;
      return l;
    }

   private:
    Token bin_;
    std::size_t n_ = 0;
  };
  Token bin_;
};

TEST_CASE("truncate_and_renormalize") {
  const Eigen::Index v = kVocab.size();
  SUBCASE("uniform vocabulary becomes uniform over the value block") {
    const Eigen::VectorXd out =
        truncate_and_renormalize(Eigen::VectorXd::Constant(v, 1.0 / v), 0, kVocab.q());
    CHECK(out.head(kVocab.q()).maxCoeff() == doctest::Approx(1e-3));
    CHECK(out.tail(v - kVocab.q()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("no valid mass falls back to uniform") {
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(v);
    dist[kVocab.keyword(Keyword::kName)] = 1.0;
    const auto out = truncate_and_renormalize(dist, 0, kVocab.q());
    CHECK(out[0] == doctest::Approx(1e-3));
    CHECK(out.sum() == doctest::Approx(1.0));
  }
  SUBCASE("mass outside the block is removed and the rest rescaled") {
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(v);
    dist[3] = 0.2;
    dist[7] = 0.2;
    dist[kVocab.star()] = 0.6;
    const auto out = truncate_and_renormalize(dist, 0, kVocab.q());
    CHECK(out[3] == doctest::Approx(0.5));
    CHECK(out[7] == doctest::Approx(0.5));
    CHECK(out[kVocab.star()] == 0.0);
  }
}

TEST_CASE("decode_param_dist examples") {
  const Eigen::Index v = kVocab.size();
  const auto range = ParameterConfig::Double("a", 0.0, 10.0);
  {
    const auto d = std::get<PiecewiseConstDist>(
        decode_param_dist(Eigen::VectorXd::Constant(v, 1.0 / v), range, kVocab));
    for (double x : {0.0, 0.005, 3.3, 9.999, 10.0}) CHECK(d.density(x) == doctest::Approx(0.1));
  }
  {
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(v);
    dist[0] = 1.0;
    const auto d = std::get<PiecewiseConstDist>(decode_param_dist(dist, range, kVocab));
    CHECK(d.density(0.0) == doctest::Approx(100.0));
    CHECK(d.density(0.0099) == doctest::Approx(100.0));
    CHECK(d.density(0.5) == 0.0);
  }
  {
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(v);
    dist[0] = 0.3;
    dist[1] = 0.7;
    const auto c = std::get<CategoricalDist>(decode_param_dist(
        dist, ParameterConfig::Categorical("opt_type", {"SGD", "Adam"}), kVocab));
    REQUIRE(c.probs.size() == 2);
    CHECK(c.probs[0] == doctest::Approx(0.3));
    CHECK(c.probs[1] == doctest::Approx(0.7));
  }
}

TEST_CASE("log-scale decode is piecewise constant in log space and its cdf reaches 1") {
  Rng rng(3);
  Eigen::VectorXd probs = Eigen::VectorXd::NullaryExpr(kVocab.q(), [&] { return uniform01(rng); });
  probs /= probs.sum();
  const PiecewiseConstDist d(1e-6, 1e-2, probs, true);
  CHECK(d.cdf(1e-2) == 1.0);
  CHECK(d.cdf(1e-6) == 0.0);
  // x * density(x) is constant within a bin.
  const double a = d.bin_lower(500);
  const double b = d.bin_upper(500);
  CHECK(a * 1.0001 * d.density(a * 1.0001) == doctest::Approx(b * 0.9999 * d.density(b * 0.9999)));
  CHECK(d.cdf(b) - d.cdf(a) == doctest::Approx(probs[500]).epsilon(1e-9));
}

TEST_CASE("decoded densities integrate to one on fuzzed cases") {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto bins = static_cast<Eigen::Index>(1 + uniform_index(rng, 1000));
    Eigen::VectorXd probs = Eigen::VectorXd::NullaryExpr(bins, [&] {
      const double u = uniform01(rng);
      return u < 0.3 ? 0.0 : u;
    });
    if (probs.sum() == 0.0) probs[0] = 1.0;
    probs /= probs.sum();
    const bool log_scale = uniform01(rng) < 0.5;
    const double lo = log_scale ? std::pow(10.0, -6.0 + 4.0 * uniform01(rng)) : -50.0 + 100.0 * uniform01(rng);
    const double hi = log_scale ? lo * std::pow(10.0, 0.1 + 5.0 * uniform01(rng)) : lo + 1e-3 + 20.0 * uniform01(rng);
    const PiecewiseConstDist d(lo, hi, probs, log_scale);
    // Midpoint rule in the coordinate where the density is flat; for LOG
    // substitute x = e^t so the integrand becomes p(e^t) e^t.
    const double tlo = log_scale ? std::log(lo) : lo;
    const double thi = log_scale ? std::log(hi) : hi;
    const double width = (thi - tlo) / static_cast<double>(bins);
    double integral = 0.0;
    for (Eigen::Index b = 0; b < bins; ++b) {
      const double t = tlo + (static_cast<double>(b) + 0.5) * width;
      const double x = log_scale ? std::exp(t) : t;
      integral += d.density(x) * (log_scale ? x : 1.0) * width;
    }
    CHECK(std::abs(integral - 1.0) <= 1e-9);
  }
}

TEST_CASE("prior suggestion from a one-bin model lands in that bin") {
  const FixedBinModel model(431);
  const auto meta = unit_metadata(2);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto x = prior_suggest(model, meta, {}, kVocab, rng);
    REQUIRE(x.size() == 2);
    for (double xi : x) {
      CHECK(xi >= 0.431);
      CHECK(xi < 0.432);
      CHECK(quantize(xi, kVocab.q()) == 431);
    }
  }
}

TEST_CASE("uniform model gives uniform suggestions per decile") {
  const auto meta = unit_metadata(1);
  const OracleModel model(meta.space, [](std::span<const double>) { return 0.0; }, kVocab);
  SuggestionSession session(model, meta, kVocab);
  session.sync({});
  Rng rng(5);
  const int n = 10000;
  std::vector<int> counts(10, 0);
  for (int k = 0; k < n; ++k) {
    const auto c = session.sample(rng);
    CHECK(c.tokens.size() == 1);
    ++counts[std::min(9, static_cast<int>(c.x[0] * 10))];
  }
  const double sigma = std::sqrt(n * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - n * 0.1) <= 3.0 * sigma);
  CHECK(session.context_size() == 0);
}

TEST_CASE("each suggestion consumes exactly D parameter tokens") {
  const auto meta = unit_metadata(2);
  const OracleModel inner(meta.space, [](std::span<const double> x) { return x[0]; }, kVocab);
  const CountingModel model(inner);
  SuggestionSession session(model, meta, kVocab);
  session.sync({});
  Rng rng(2);
  const std::size_t before = model.appended;
  const auto c = session.sample(rng);
  CHECK(c.tokens.size() == 2);
  CHECK(model.appended - before == 2);
}

TEST_CASE("sync reuses the cached prefix when the range is unchanged") {
  const auto meta = unit_metadata(2);
  const OracleModel inner(meta.space, [](std::span<const double> x) { return x[0]; }, kVocab);
  const CountingModel model(inner);
  SuggestionSession session(model, meta, kVocab);
  std::vector<Trial> history = {{{0.1, 0.2}, 0.0}, {{0.3, 0.4}, 1.0}};
  session.sync(history);
  CHECK(model.appended == 10);  // two trials of D+3 tokens (the last '|' included)
  history.push_back({{0.5, 0.5}, 0.5});
  session.sync(history);
  CHECK(model.appended == 15);
  // New maximum: the minimum still maps to 200, so only the first trial and
  // the second trial's x tokens and '*' survive.
  history.push_back({{0.5, 0.6}, 2.0});
  session.sync(history);
  CHECK(model.appended == 15 + (20 - 8));
}

TEST_CASE("observed extremes map to tokens 200 and 800") {
  const auto meta = unit_metadata(1);
  const OracleModel model(meta.space, [](std::span<const double> x) { return x[0]; }, kVocab);
  SuggestionSession session(model, meta, kVocab);
  const std::vector<Trial> history = {{{0.25}, 0.0}, {{0.75}, 1.0}};
  session.sync(history);
  CHECK(session.best_y_bin() == 800);
  const auto tokens = serialize_history(history, meta.space, observed_y_range(history),
                                        YAffine::inference(), {}, kVocab);
  CHECK(tokens[2] == 200);
  CHECK(tokens[6] == 800);
  const auto [lo, hi] = prediction_support(session.y_range(), YAffine::inference());
  CHECK(lo == doctest::Approx(-1.0 / 3.0));
  CHECK(hi == doctest::Approx(4.0 / 3.0));
}

double entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

TEST_CASE("function prediction temperature") {
  const auto meta = unit_metadata(1);
  OracleModel model(meta.space, [](std::span<const double> x) { return x[0]; }, kVocab, 20.0);
  const std::vector<Trial> history = {{{0.0}, 0.0}, {{1.0}, 1.0}};
  model.set_y_range(observed_y_range(history));
  const std::vector<double> x = {0.5};
  InferenceConfig cold;
  cold.temperature = 1e-6;
  const auto peaked = predict_function_dist(model, meta, history, x, kVocab, cold);
  CHECK(peaked.probs().maxCoeff() == doctest::Approx(1.0));
  InferenceConfig warm;
  warm.temperature = 1.5;
  const auto p1 = predict_function_dist(model, meta, history, x, kVocab);
  const auto p15 = predict_function_dist(model, meta, history, x, kVocab, warm);
  CHECK(entropy(p15.probs()) >= entropy(p1.probs()));
  CHECK(std::abs(p1.probs().sum() - 1.0) < 1e-12);
  // Mass is centered on the true value.
  CHECK(p1.cdf(0.5) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(InferenceConfig::temperature_preset("hpob") == 1.5);
  CHECK_THROWS_AS(InferenceConfig::temperature_preset("nope"), UsageError);
}

TEST_CASE("context overflow is reported or windowed") {
  const auto meta = unit_metadata(1);
  const OracleModel model(meta.space, [](std::span<const double> x) { return x[0]; }, kVocab, 0.0, 20);
  std::vector<Trial> history;
  for (int t = 0; t < 10; ++t) history.push_back({{0.1 * t}, 0.1 * t});
  SuggestionSession strict(model, meta, kVocab);
  CHECK_THROWS_AS(strict.sync(history), DataError);
  InferenceConfig windowed;
  windowed.window_history = true;
  SuggestionSession lenient(model, meta, kVocab, windowed);
  lenient.sync(history);
  CHECK(lenient.context_size() + 2 <= 20);
  Rng rng(1);
  CHECK(lenient.sample(rng).x.size() == 1);
}

}  // namespace
}  // namespace seqhpo
