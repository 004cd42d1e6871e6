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

#include "seqhpo/token_model.h"

#include <cmath>

namespace seqhpo {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits, double temperature) {
  if (!(temperature > 0.0)) throw UsageError("softmax temperature must be positive");
  const double peak = logits.maxCoeff();
  Eigen::VectorXd p = ((logits.array() - peak) / temperature).exp();
  return p / p.sum();
}

Eigen::VectorXd next_token_dist(const TokenModel& model, std::span<const Token> meta_tokens,
                                std::span<const Token> history_prefix) {
  auto context = model.start(meta_tokens);
  context->append(history_prefix);
  return softmax(context->next_logits());
}

}  // namespace seqhpo
