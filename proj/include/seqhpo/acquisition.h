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

#ifndef SEQHPO_ACQUISITION_H_
#define SEQHPO_ACQUISITION_H_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seqhpo/decoder.h"

namespace seqhpo {

enum class AcquisitionKind { kExpectedImprovement, kProbabilityOfImprovement, kUpperQuantile, kThompson };

AcquisitionKind parse_acquisition(std::string_view name);  // "ei", "pi", "ucb", "ts"
std::string_view to_string(AcquisitionKind kind);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::kExpectedImprovement;
  double alpha = 0.9;
  int num_candidates = 100;

  void validate() const;
};

// Scores over an arbitrary discrete value grid: probs[i] is the mass at values[i].
double expected_improvement(std::span<const double> probs, std::span<const double> values,
                            double threshold);
double probability_of_improvement(std::span<const double> probs, std::span<const double> values,
                                  double threshold);
// values[i] for the smallest i with cumulative mass >= alpha.
double upper_quantile(std::span<const double> probs, std::span<const double> values, double alpha);

// Score of a bin distribution where bin b has value b. `y_star_bin` is the best
// observed bin; TS draws one bin.
double score(const Eigen::VectorXd& bin_probs, const AcquisitionSpec& spec, int y_star_bin,
             Rng& rng);

// Index of the largest score, lowest index on ties.
std::size_t argmax_first(std::span<const double> scores);

// Draws spec.num_candidates prior samples and returns the best-scoring one.
std::vector<double> augmented_suggest(SuggestionSession& session, const AcquisitionSpec& spec,
                                      Rng& rng);
std::vector<double> augmented_suggest(const TokenModel& model, const Metadata& metadata,
                                      std::span<const Trial> history, const Vocab& vocab,
                                      const AcquisitionSpec& spec, Rng& rng,
                                      const InferenceConfig& config = {});

// Sequence-model optimizer for a whole run: prior policy when `acquisition`
// is empty, augmented policy otherwise. Keeps its decoding cache between calls.
class ModelPolicy {
 public:
  ModelPolicy(const TokenModel& model, const Metadata& metadata, const Vocab& vocab,
              std::optional<AcquisitionSpec> acquisition = std::nullopt,
              InferenceConfig config = {});

  std::vector<double> suggest(std::span<const Trial> history, Rng& rng);
  SuggestionSession& session() { return session_; }

 private:
  Goal goal_;
  std::optional<AcquisitionSpec> acquisition_;
  SuggestionSession session_;
};

}  // namespace seqhpo

#endif  // SEQHPO_ACQUISITION_H_
