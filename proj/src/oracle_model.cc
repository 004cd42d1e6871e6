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

#include "seqhpo/oracle_model.h"

#include <cmath>
#include <limits>

namespace seqhpo {

namespace {

class OracleContext : public TokenContext {
 public:
  explicit OracleContext(const OracleModel& model) : model_(model) {}

  void append(std::span<const Token> tokens) override {
    if (tokens_.size() + tokens.size() > model_.max_history_len())
      throw DataError("context overflow: history exceeds the model limit");
    tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
  }
  void truncate(std::size_t history_len) override {
    if (history_len > tokens_.size()) throw UsageError("cannot truncate beyond the current length");
    tokens_.resize(history_len);
  }
  std::size_t size() const override { return tokens_.size(); }
  Eigen::VectorXd next_logits() const override { return model_.logits_after(tokens_); }

 private:
  const OracleModel& model_;
  TokenSeq tokens_;
};

}  // namespace

OracleModel::OracleModel(SearchSpace space, Objective objective, const Vocab& vocab,
                         double width_bins, std::size_t max_history_len)
    : space_(std::move(space)),
      objective_(std::move(objective)),
      vocab_(vocab),
      width_bins_(width_bins),
      max_history_len_(max_history_len) {}

std::unique_ptr<TokenContext> OracleModel::start(std::span<const Token>) const {
  return std::make_unique<OracleContext>(*this);
}

std::vector<double> OracleModel::decode_x(std::span<const Token> value_tokens) const {
  std::vector<double> x(space_.dimension());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& cfg = space_[i];
    x[i] = cfg.is_continuous() ? denormalize_param(dequantize(value_tokens[i], vocab_.q()), cfg)
                               : cfg.value_at(static_cast<std::size_t>(value_tokens[i]));
  }
  return x;
}

Eigen::VectorXd OracleModel::logits_after(std::span<const Token> history) const {
  constexpr double kOff = -std::numeric_limits<double>::infinity();
  const std::size_t d = space_.dimension();
  const std::size_t pos = history.size() % (d + 3);
  Eigen::VectorXd logits = Eigen::VectorXd::Constant(vocab_.size(), kOff);
  if (pos < d) {
    logits.head(vocab_.q()).setZero();
  } else if (pos == d) {
    logits[vocab_.star()] = 0.0;
  } else if (pos == d + 2) {
    logits[vocab_.bar()] = 0.0;
  } else {
    const auto x = decode_x(history.subspan(history.size() - d - 1, d));
    const double y = objective_(x);
    const double width = range_.degenerate() ? 1.0 : range_.max - range_.min;
    const double v = std::clamp(affine_.shift + affine_.scale * (y - range_.min) / width, 0.0, 1.0);
    const double center = v * vocab_.q();
    if (width_bins_ <= 0.0) {
      logits[quantize(v, vocab_.q())] = 0.0;
    } else {
      for (int b = 0; b < vocab_.q(); ++b) {
        const double z = (b + 0.5 - center) / width_bins_;
        logits[b] = -0.5 * z * z;
      }
    }
  }
  return logits;
}

}  // namespace seqhpo
