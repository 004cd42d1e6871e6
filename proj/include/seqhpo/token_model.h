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

// Minimal interface the decoder needs from an autoregressive model: open a
// context conditioned on metadata tokens, push history tokens, read the
// next-token logits, and roll back.

#ifndef SEQHPO_TOKEN_MODEL_H_
#define SEQHPO_TOKEN_MODEL_H_

#include <cstddef>
#include <memory>
#include <span>

#include <Eigen/Core>

#include "seqhpo/tokenizer.h"

namespace seqhpo {

class TokenContext {
 public:
  virtual ~TokenContext() = default;

  virtual void append(std::span<const Token> tokens) = 0;
  // Keeps only the first `history_len` history tokens.
  virtual void truncate(std::size_t history_len) = 0;
  virtual std::size_t size() const = 0;
  // Unnormalized log-probabilities of the next history token.
  virtual Eigen::VectorXd next_logits() const = 0;
};

class TokenModel {
 public:
  virtual ~TokenModel() = default;

  virtual std::unique_ptr<TokenContext> start(std::span<const Token> meta_tokens) const = 0;
  virtual int vocab_size() const = 0;
  virtual std::size_t max_history_len() const = 0;
};

// Softmax of the next-token logits after `history_prefix`.
Eigen::VectorXd next_token_dist(const TokenModel& model, std::span<const Token> meta_tokens,
                                std::span<const Token> history_prefix);

// Numerically stable softmax with temperature.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits, double temperature = 1.0);

}  // namespace seqhpo

#endif  // SEQHPO_TOKEN_MODEL_H_
