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

// From token distributions to parameter-space and function-value
// distributions, plus the sampling loop of the prior policy.

#ifndef SEQHPO_DECODER_H_
#define SEQHPO_DECODER_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "seqhpo/core_types.h"
#include "seqhpo/random.h"
#include "seqhpo/token_model.h"
#include "seqhpo/tokenizer.h"

namespace seqhpo {

// Density spread uniformly within each of `probs.size()` equal-width bins of
// [lo, hi]; with `log_scale` the bins are equal-width in log space.
class PiecewiseConstDist {
 public:
  PiecewiseConstDist(double lo, double hi, Eigen::VectorXd probs, bool log_scale = false);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool log_scale() const { return log_scale_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  Eigen::Index bins() const { return probs_.size(); }

  // Bin containing x, clamped to the support.
  Eigen::Index bin_of(double x) const;
  double bin_lower(Eigen::Index bin) const;
  double bin_upper(Eigen::Index bin) const;
  // Density with respect to x in native units; 0 outside the support.
  double density(double x) const;
  double cdf(double x) const;
  // Bin drawn from probs, then a uniform point inside it.
  double sample(Rng& rng) const;

 private:
  double warp(double x) const;
  double unwarp(double t) const;

  double lo_;
  double hi_;
  Eigen::VectorXd probs_;
  bool log_scale_;
};

struct CategoricalDist {
  Eigen::VectorXd probs;  // over feasible-set indices
};

using ParamDist = std::variant<PiecewiseConstDist, CategoricalDist>;

// Zero outside [begin, end), renormalized inside; uniform over the range
// when it carries no mass.
Eigen::VectorXd truncate_and_renormalize(const Eigen::VectorXd& dist, Eigen::Index begin,
                                         Eigen::Index end);

// Parameter distribution implied by a next-token distribution at a
// parameter position.
ParamDist decode_param_dist(const Eigen::VectorXd& vocab_dist, const ParameterConfig& cfg,
                            const Vocab& vocab);

struct InferenceConfig {
  YAffine affine = YAffine::inference();
  double temperature = 1.0;  // function prediction only; parameters always sample at 1
  // Drop the oldest trials instead of failing when the history exceeds the model limit.
  bool window_history = false;

  void validate() const;
  // "default" (1.0), "realworld" (1.1), "hpob" (1.5).
  static double temperature_preset(std::string_view name);
};

// A sampled suggestion together with the value tokens that produced it.
struct Candidate {
  std::vector<double> x;
  TokenSeq tokens;
};

// Keeps one model context per optimization run. `sync` re-tokenizes the
// history against the current observed range and only recomputes the part of
// the context that changed.
class SuggestionSession {
 public:
  SuggestionSession(const TokenModel& model, const Metadata& metadata, const Vocab& vocab,
                    InferenceConfig config = {});

  // `history` must already follow the maximization convention.
  void sync(std::span<const Trial> history);

  Candidate sample(Rng& rng);
  // Function-value distribution for a candidate given as value tokens.
  Eigen::VectorXd predict_bins(std::span<const Token> candidate_tokens);
  PiecewiseConstDist predict(std::span<const Token> candidate_tokens);
  TokenSeq candidate_tokens(std::span<const double> x) const;

  const YRange& y_range() const { return range_; }
  // Largest y token of the synced history; 0 when empty.
  int best_y_bin() const { return best_y_bin_; }
  const Metadata& metadata() const { return metadata_; }
  const InferenceConfig& config() const { return config_; }
  std::size_t context_size() const { return context_tokens_.size(); }

 private:
  void require_room(std::size_t extra) const;

  const TokenModel& model_;
  Metadata metadata_;
  Vocab vocab_;
  InferenceConfig config_;
  std::unique_ptr<TokenContext> context_;
  TokenSeq context_tokens_;
  YRange range_;
  int best_y_bin_ = 0;
};

// Support of the predicted function value for the given observed range.
std::pair<double, double> prediction_support(const YRange& range, const YAffine& affine);

// One sample from the prior policy.
std::vector<double> prior_suggest(const TokenModel& model, const Metadata& metadata,
                                  std::span<const Trial> history, const Vocab& vocab, Rng& rng,
                                  const InferenceConfig& config = {});

PiecewiseConstDist predict_function_dist(const TokenModel& model, const Metadata& metadata,
                                         std::span<const Trial> history,
                                         std::span<const double> x, const Vocab& vocab,
                                         const InferenceConfig& config = {});

}  // namespace seqhpo

#endif  // SEQHPO_DECODER_H_
