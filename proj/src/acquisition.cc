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

#include "seqhpo/acquisition.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace seqhpo {

AcquisitionKind parse_acquisition(std::string_view name) {
  if (name == "ei") return AcquisitionKind::kExpectedImprovement;
  if (name == "pi") return AcquisitionKind::kProbabilityOfImprovement;
  if (name == "ucb") return AcquisitionKind::kUpperQuantile;
  if (name == "ts") return AcquisitionKind::kThompson;
  throw UsageError("unknown acquisition '" + std::string(name) + "'");
}

std::string_view to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::kExpectedImprovement: return "ei";
    case AcquisitionKind::kProbabilityOfImprovement: return "pi";
    case AcquisitionKind::kUpperQuantile: return "ucb";
    case AcquisitionKind::kThompson: return "ts";
  }
  return "?";
}

void AcquisitionSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("acquisition alpha must be in (0, 1)");
  if (num_candidates < 1) throw UsageError("number of candidates must be >= 1");
}

double expected_improvement(std::span<const double> probs, std::span<const double> values,
                            double threshold) {
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (values[i] > threshold) total += probs[i] * (values[i] - threshold);
  return total;
}

double probability_of_improvement(std::span<const double> probs, std::span<const double> values,
                                  double threshold) {
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (values[i] > threshold) total += probs[i];
  return total;
}

double upper_quantile(std::span<const double> probs, std::span<const double> values, double alpha) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (cumulative >= alpha) return values[i];
  }
  // Rounding left the total just below alpha: the last occupied value.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return values[i];
  return values.back();
}

double score(const Eigen::VectorXd& bin_probs, const AcquisitionSpec& spec, int y_star_bin,
             Rng& rng) {
  if (std::abs(bin_probs.sum() - 1.0) > 1e-6 || bin_probs.minCoeff() < 0.0)
    throw NumericError("acquisition needs a normalized distribution");
  const std::span<const double> probs(bin_probs.data(), static_cast<std::size_t>(bin_probs.size()));
  std::vector<double> values(probs.size());
  std::iota(values.begin(), values.end(), 0.0);
  const double threshold = static_cast<double>(y_star_bin);
  switch (spec.kind) {
    case AcquisitionKind::kExpectedImprovement: return expected_improvement(probs, values, threshold);
    case AcquisitionKind::kProbabilityOfImprovement:
      return probability_of_improvement(probs, values, threshold);
    case AcquisitionKind::kUpperQuantile: return upper_quantile(probs, values, spec.alpha);
    case AcquisitionKind::kThompson: return static_cast<double>(sample_categorical(bin_probs, rng));
  }
  return 0.0;
}

std::size_t argmax_first(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::vector<double> augmented_suggest(SuggestionSession& session, const AcquisitionSpec& spec,
                                      Rng& rng) {
  spec.validate();
  std::vector<Candidate> candidates;
  candidates.reserve(spec.num_candidates);
  for (int m = 0; m < spec.num_candidates; ++m) candidates.push_back(session.sample(rng));
  if (candidates.size() == 1) return candidates.front().x;
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates)
    scores.push_back(score(session.predict_bins(c.tokens), spec, session.best_y_bin(), rng));
  return candidates[argmax_first(scores)].x;
}

std::vector<double> augmented_suggest(const TokenModel& model, const Metadata& metadata,
                                      std::span<const Trial> history, const Vocab& vocab,
                                      const AcquisitionSpec& spec, Rng& rng,
                                      const InferenceConfig& config) {
  const Study study = to_maximization(Study{metadata, {history.begin(), history.end()}});
  SuggestionSession session(model, metadata, vocab, config);
  session.sync(study.history);
  return augmented_suggest(session, spec, rng);
}

ModelPolicy::ModelPolicy(const TokenModel& model, const Metadata& metadata, const Vocab& vocab,
                         std::optional<AcquisitionSpec> acquisition, InferenceConfig config)
    : goal_(metadata.goal),
      acquisition_(acquisition),
      session_(model, metadata, vocab, config) {
  if (acquisition_) acquisition_->validate();
}

std::vector<double> ModelPolicy::suggest(std::span<const Trial> history, Rng& rng) {
  if (goal_ == Goal::kMinimize) {
    std::vector<Trial> flipped(history.begin(), history.end());
    for (auto& t : flipped) t.y = -t.y;
    session_.sync(flipped);
  } else {
    session_.sync(history);
  }
  if (!acquisition_) return session_.sample(rng).x;
  return augmented_suggest(session_, *acquisition_, rng);
}

}  // namespace seqhpo
