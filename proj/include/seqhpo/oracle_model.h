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

// A TokenModel that knows the objective. Parameter positions get uniform
// logits; the function position gets a bump centered on the token the true
// value would receive under the current range and affine. Used to exercise
// the decoder and acquisition code without a trained network.

#ifndef SEQHPO_ORACLE_MODEL_H_
#define SEQHPO_ORACLE_MODEL_H_

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "seqhpo/token_model.h"

namespace seqhpo {

class OracleModel : public TokenModel {
 public:
  using Objective = std::function<double(std::span<const double>)>;

  // `width_bins` is the standard deviation of the bump in bins; 0 gives a
  // point mass.
  OracleModel(SearchSpace space, Objective objective, const Vocab& vocab, double width_bins = 0.0,
              std::size_t max_history_len = 1 << 20);

  // The decoder tokenizes against the observed range; the oracle must be told
  // the same range to place its mass consistently.
  void set_y_range(const YRange& range) { range_ = range; }
  void set_affine(const YAffine& affine) { affine_ = affine; }

  std::unique_ptr<TokenContext> start(std::span<const Token> meta_tokens) const override;
  int vocab_size() const override { return vocab_.size(); }
  std::size_t max_history_len() const override { return max_history_len_; }

  // Logits after `history` (used by the context).
  Eigen::VectorXd logits_after(std::span<const Token> history) const;
  std::vector<double> decode_x(std::span<const Token> value_tokens) const;

 private:
  SearchSpace space_;
  Objective objective_;
  Vocab vocab_;
  double width_bins_;
  std::size_t max_history_len_;
  YRange range_;
  YAffine affine_ = YAffine::inference();
};

}  // namespace seqhpo

#endif  // SEQHPO_ORACLE_MODEL_H_
