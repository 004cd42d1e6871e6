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

#include "seqhpo/decoder.h"

#include <algorithm>
#include <cmath>

namespace seqhpo {

PiecewiseConstDist::PiecewiseConstDist(double lo, double hi, Eigen::VectorXd probs, bool log_scale)
    : lo_(lo), hi_(hi), probs_(std::move(probs)), log_scale_(log_scale) {
  if (probs_.size() == 0) throw UsageError("piecewise distribution needs at least one bin");
  if (!(lo_ < hi_)) throw UsageError("piecewise distribution needs lo < hi");
  if (log_scale_ && !(lo_ > 0.0)) throw UsageError("log-scale distribution needs lo > 0");
}

double PiecewiseConstDist::warp(double x) const { return log_scale_ ? std::log(x) : x; }
double PiecewiseConstDist::unwarp(double t) const { return log_scale_ ? std::exp(t) : t; }

Eigen::Index PiecewiseConstDist::bin_of(double x) const {
  const double u = (warp(std::clamp(x, lo_, hi_)) - warp(lo_)) / (warp(hi_) - warp(lo_));
  const auto bin = static_cast<Eigen::Index>(std::floor(u * static_cast<double>(bins())));
  return std::clamp<Eigen::Index>(bin, 0, bins() - 1);
}

double PiecewiseConstDist::bin_lower(Eigen::Index bin) const {
  if (bin == 0) return lo_;
  const double width = (warp(hi_) - warp(lo_)) / static_cast<double>(bins());
  return unwarp(warp(lo_) + width * static_cast<double>(bin));
}

double PiecewiseConstDist::bin_upper(Eigen::Index bin) const {
  if (bin == bins() - 1) return hi_;
  return bin_lower(bin + 1);
}

double PiecewiseConstDist::density(double x) const {
  if (!(x >= lo_ && x <= hi_)) return 0.0;
  const double width = (warp(hi_) - warp(lo_)) / static_cast<double>(bins());
  const double d = probs_[bin_of(x)] / width;
  return log_scale_ ? d / x : d;
}

double PiecewiseConstDist::cdf(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const Eigen::Index bin = bin_of(x);
  const double lower = warp(bin_lower(bin));
  const double upper = warp(bin_upper(bin));
  const double frac = std::clamp((warp(x) - lower) / (upper - lower), 0.0, 1.0);
  return std::min(1.0, probs_.head(bin).sum() + frac * probs_[bin]);
}

double PiecewiseConstDist::sample(Rng& rng) const {
  const auto bin = static_cast<Eigen::Index>(sample_categorical(probs_, rng));
  const double lower = warp(bin_lower(bin));
  const double upper = warp(bin_upper(bin));
  return std::clamp(unwarp(lower + uniform01(rng) * (upper - lower)), lo_, hi_);
}

Eigen::VectorXd truncate_and_renormalize(const Eigen::VectorXd& dist, Eigen::Index begin,
                                         Eigen::Index end) {
  if (begin < 0 || end > dist.size() || begin >= end)
    throw UsageError("truncation range must be a nonempty subrange of the distribution");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dist.size());
  const double mass = dist.segment(begin, end - begin).sum();
  if (mass > 0.0 && std::isfinite(mass)) {
    out.segment(begin, end - begin) = dist.segment(begin, end - begin) / mass;
  } else {
    out.segment(begin, end - begin).setConstant(1.0 / static_cast<double>(end - begin));
  }
  return out;
}

ParamDist decode_param_dist(const Eigen::VectorXd& vocab_dist, const ParameterConfig& cfg,
                            const Vocab& vocab) {
  if (cfg.is_continuous()) {
    const Eigen::VectorXd probs = truncate_and_renormalize(vocab_dist, 0, vocab.q()).head(vocab.q());
    double lo = cfg.min_value();
    double hi = cfg.max_value();
    if (!(lo < hi)) hi = lo + 1.0;  // single-point range: any width integrates to 1
    return PiecewiseConstDist(lo, hi, probs, cfg.scale() == ScaleType::kLog);
  }
  const auto n = static_cast<Eigen::Index>(cfg.set_size());
  return CategoricalDist{truncate_and_renormalize(vocab_dist, 0, n).head(n)};
}

void InferenceConfig::validate() const {
  affine.validate();
  if (!(temperature > 0.0)) throw UsageError("temperature must be positive");
}

double InferenceConfig::temperature_preset(std::string_view name) {
  if (name == "default") return 1.0;
  if (name == "realworld") return 1.1;
  if (name == "hpob") return 1.5;
  throw UsageError("unknown temperature preset '" + std::string(name) + "'");
}

std::pair<double, double> prediction_support(const YRange& range, const YAffine& affine) {
  const double width = range.degenerate() ? 1.0 : range.max - range.min;
  return {range.min - affine.shift / affine.scale * width,
          range.min + (1.0 - affine.shift) / affine.scale * width};
}

SuggestionSession::SuggestionSession(const TokenModel& model, const Metadata& metadata,
                                     const Vocab& vocab, InferenceConfig config)
    : model_(model), metadata_(metadata), vocab_(vocab), config_(config) {
  config_.validate();
  metadata_.goal = Goal::kMaximize;
  context_ = model_.start(serialize_metadata(metadata_, vocab_));
}

void SuggestionSession::require_room(std::size_t extra) const {
  if (context_tokens_.size() + extra > model_.max_history_len())
    throw DataError("context overflow: history too long for the model");
}

void SuggestionSession::sync(std::span<const Trial> history) {
  const std::size_t d = metadata_.space.dimension();
  const std::size_t limit = model_.max_history_len();
  // Room for the next suggestion, its '*' and the trial separator.
  std::size_t first = 0;
  auto needed = [&](std::size_t trials) { return trials == 0 ? d + 1 : trials * (d + 3) + d + 1; };
  if (needed(history.size()) > limit) {
    if (!config_.window_history) throw DataError("context overflow: history too long for the model");
    while (first < history.size() && needed(history.size() - first) > limit) ++first;
    if (needed(history.size() - first) > limit)
      throw DataError("context overflow: model cannot hold a single trial");
  }
  const auto window = history.subspan(first);
  range_ = observed_y_range(window);
  TokenSeq tokens = serialize_history(window, metadata_.space, range_, config_.affine, {}, vocab_);
  best_y_bin_ = 0;
  for (std::size_t t = 0; t < window.size(); ++t)
    best_y_bin_ = std::max(best_y_bin_, tokens[t * (d + 3) + d + 1]);
  if (!tokens.empty()) tokens.push_back(vocab_.bar());

  std::size_t common = 0;
  while (common < tokens.size() && common < context_tokens_.size() &&
         tokens[common] == context_tokens_[common])
    ++common;
  context_->truncate(common);
  context_->append(std::span<const Token>(tokens).subspan(common));
  context_tokens_ = std::move(tokens);
}

Candidate SuggestionSession::sample(Rng& rng) {
  const auto& space = metadata_.space;
  require_room(space.dimension());
  Candidate c;
  c.x.resize(space.dimension());
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& cfg = space[i];
    const Eigen::VectorXd dist = softmax(context_->next_logits());
    const auto decoded = decode_param_dist(dist, cfg, vocab_);
    Token token = 0;
    if (const auto* pc = std::get_if<PiecewiseConstDist>(&decoded)) {
      token = static_cast<Token>(sample_categorical(pc->probs(), rng));
      const double u = (static_cast<double>(token) + uniform01(rng)) / vocab_.q();
      c.x[i] = denormalize_param(std::clamp(u, 0.0, 1.0), cfg);
    } else {
      const auto& cat = std::get<CategoricalDist>(decoded);
      token = static_cast<Token>(sample_categorical(cat.probs, rng));
      c.x[i] = cfg.value_at(static_cast<std::size_t>(token));
    }
    c.tokens.push_back(token);
    context_->append(std::span<const Token>(&token, 1));
  }
  context_->truncate(context_tokens_.size());
  return c;
}

TokenSeq SuggestionSession::candidate_tokens(std::span<const double> x) const {
  const auto& space = metadata_.space;
  if (!space.contains(x)) throw DataError("candidate outside the search space");
  TokenSeq out;
  for (std::size_t i = 0; i < space.dimension(); ++i) out.push_back(param_token(x[i], space[i], vocab_));
  return out;
}

Eigen::VectorXd SuggestionSession::predict_bins(std::span<const Token> candidate_tokens) {
  if (candidate_tokens.size() != metadata_.space.dimension())
    throw UsageError("candidate token count does not match the dimension");
  require_room(candidate_tokens.size() + 1);
  context_->append(candidate_tokens);
  const Token star = vocab_.star();
  context_->append(std::span<const Token>(&star, 1));
  const Eigen::VectorXd logits = context_->next_logits();
  context_->truncate(context_tokens_.size());
  // Temperature acts on the value block only.
  Eigen::VectorXd probs = softmax(logits.head(vocab_.q()), config_.temperature);
  return probs;
}

PiecewiseConstDist SuggestionSession::predict(std::span<const Token> candidate_tokens) {
  const auto [lo, hi] = prediction_support(range_, config_.affine);
  return PiecewiseConstDist(lo, hi, predict_bins(candidate_tokens));
}

std::vector<double> prior_suggest(const TokenModel& model, const Metadata& metadata,
                                  std::span<const Trial> history, const Vocab& vocab, Rng& rng,
                                  const InferenceConfig& config) {
  const Study study = to_maximization(Study{metadata, {history.begin(), history.end()}});
  SuggestionSession session(model, metadata, vocab, config);
  session.sync(study.history);
  return session.sample(rng).x;
}

PiecewiseConstDist predict_function_dist(const TokenModel& model, const Metadata& metadata,
                                         std::span<const Trial> history,
                                         std::span<const double> x, const Vocab& vocab,
                                         const InferenceConfig& config) {
  const Study study = to_maximization(Study{metadata, {history.begin(), history.end()}});
  SuggestionSession session(model, metadata, vocab, config);
  session.sync(study.history);
  return session.predict(session.candidate_tokens(x));
}

}  // namespace seqhpo
