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

// Decoder-only transformer over [metadata, <bos>, history] sequences.
//
// The metadata prefix plays the role of the encoder input: every history
// position attends to it, and only history positions carry loss. Scalar is
// float for training and inference, double for gradient checking.

#ifndef SEQHPO_SEQMODEL_H_
#define SEQHPO_SEQMODEL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "seqhpo/random.h"
#include "seqhpo/token_model.h"
#include "seqhpo/tokenizer.h"

namespace seqhpo {

struct ModelConfig {
  int vocab_size = Vocab().size();
  int bos_token = Vocab().bos();
  int embed_dim = 128;
  int num_layers = 4;
  int num_heads = 4;
  int feedforward_dim = 512;
  int max_meta_len = 256;
  int max_history_len = 512;
  double dropout = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::ordered_json& j);
};

// One training sequence. `weights` is aligned with `history` and is zero
// exactly at separator tokens.
struct SequenceExample {
  TokenSeq meta;
  TokenSeq history;
  std::vector<double> weights;
};

// 1 for value tokens, 0 for '*' and '|'.
std::vector<double> loss_weights(std::span<const Token> history, const Vocab& vocab);

template <typename Scalar>
class DecodeSession;

template <typename Scalar>
class Transformer : public TokenModel {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Parameters drawn from config.seed.
  explicit Transformer(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }
  Eigen::Index num_parameters() const { return params_.size(); }

  // Sum over the batch of -sum_n w_n log P(history_n | meta, history_<n).
  // When `grad` is non-null it is resized and overwritten with d loss / d params.
  // `dropout_rng` enables dropout (training only).
  Scalar loss(std::span<const SequenceExample> batch, Vector* grad = nullptr,
              Rng* dropout_rng = nullptr) const;

  // Next-token logits at every history position, one row per history token.
  Matrix history_logits(std::span<const Token> meta, std::span<const Token> history) const;

  std::unique_ptr<DecodeSession<Scalar>> open(std::span<const Token> meta) const;

  // TokenModel
  std::unique_ptr<TokenContext> start(std::span<const Token> meta_tokens) const override;
  int vocab_size() const override { return config_.vocab_size; }
  std::size_t max_history_len() const override {
    return static_cast<std::size_t>(config_.max_history_len);
  }

  struct Slot {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
  };
  struct LayerSlots {
    Slot ln1_gain, ln1_bias, qkv_weight, qkv_bias, out_weight, out_bias;
    Slot ln2_gain, ln2_bias, ff1_weight, ff1_bias, ff2_weight, ff2_bias;
  };
  struct Layout {
    Slot embedding;
    std::vector<LayerSlots> layers;
    Slot final_gain, final_bias, head_weight, head_bias;
    Eigen::Index total = 0;
  };
  const Layout& layout() const { return layout_; }

 private:
  friend class DecodeSession<Scalar>;
  struct Packed;
  struct Cache;

  void initialize();
  Packed pack(std::span<const SequenceExample> batch, bool all_rows) const;
  void forward(const Packed& packed, Cache& cache, Rng* dropout_rng) const;
  Matrix output_logits(const Packed& packed, Cache& cache) const;
  void backward(const Packed& packed, const Cache& cache, const Matrix& dlogits,
                Vector& grad) const;

  ModelConfig config_;
  Layout layout_;
  Vector params_;
  Matrix positional_;
};

// Incremental decoding with a per-layer key/value cache. Appending n tokens to
// a context of length t costs O(n * t) attention work.
template <typename Scalar>
class DecodeSession : public TokenContext {
 public:
  using Matrix = typename Transformer<Scalar>::Matrix;

  DecodeSession(const Transformer<Scalar>& model, std::span<const Token> meta);

  void append(std::span<const Token> tokens) override;
  void truncate(std::size_t history_len) override;
  std::size_t size() const override { return history_len_; }
  Eigen::VectorXd next_logits() const override;

 private:
  void push(std::span<const Token> tokens);
  void reserve(Eigen::Index rows);

  const Transformer<Scalar>& model_;
  std::size_t prefix_len_ = 0;  // metadata + <bos>
  std::size_t history_len_ = 0;
  Eigen::Index rows_ = 0;
  std::vector<Matrix> keys_;
  std::vector<Matrix> values_;
  Matrix final_hidden_;  // post-norm hidden state of every cached row
};

extern template class Transformer<float>;
extern template class Transformer<double>;
extern template class DecodeSession<float>;
extern template class DecodeSession<double>;

// Analytic vs central-difference gradient of the mean masked loss on a
// random sample of parameters.
struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};
GradientCheckReport gradient_check(const Transformer<double>& model,
                                   std::span<const SequenceExample> batch, std::size_t samples,
                                   double step, Rng& rng);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int batch_size = 32;
  int steps = 1000;
  double learning_rate = 1e-3;  // peak of the rsqrt schedule
  int warmup_steps = 1000;
  double grad_clip = 1.0;
  int eval_every = 100;
  int patience = 0;  // evaluations without improvement before stopping; 0 = never
  int max_val_examples = 256;
  bool augment = true;
  AugmentationConfig augmentation;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

double rsqrt_learning_rate(const TrainConfig& config, int step);

struct LossRecord {
  int step = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

// Everything needed to continue a run bit-exactly.
struct TrainState {
  int step = 0;
  Eigen::VectorXf adam_m;
  Eigen::VectorXf adam_v;
  Eigen::VectorXf best_params;
  double best_val_loss = 0.0;
  int best_step = 0;
  int evals_since_best = 0;
  bool stopped = false;
  std::vector<LossRecord> log;
};

// Largest whole-trial prefix of `study` whose history fits `max_history_len`,
// tokenized with `options` (meta truncated to `max_meta_len`).
SequenceExample make_example(const Study& study, const Vocab& vocab, const ModelConfig& config,
                             const TokenizeOptions& options = {});

class Trainer {
 public:
  Trainer(const ModelConfig& model_config, const TrainConfig& train_config,
          std::vector<Study> train, std::vector<Study> validation, const Vocab& vocab);

  // Restores a run saved by `state()`; the parameters are the current ones.
  void resume(const Eigen::VectorXf& params, TrainState state);

  // Runs until `train_config.steps` or early stop. `on_record` sees each log row.
  void run(const std::function<void(const LossRecord&)>& on_record = {});
  // Runs at most `n` more steps.
  void run_steps(int n, const std::function<void(const LossRecord&)>& on_record = {});

  bool finished() const;
  const TrainState& state() const { return state_; }
  const Transformer<float>& model() const { return model_; }
  // Model carrying the best validation parameters seen so far.
  Transformer<float> best_model() const;
  double validation_loss(const Transformer<float>& model) const;

 private:
  void evaluate(LossRecord& record);
  std::vector<SequenceExample> batch_for_step(int step) const;
  SequenceExample example_at(std::uint64_t sample_index) const;

  ModelConfig model_config_;
  TrainConfig config_;
  std::vector<Study> train_;
  std::vector<SequenceExample> validation_;
  Vocab vocab_;
  Transformer<float> model_;
  TrainState state_;
  mutable std::uint64_t cached_epoch_ = ~std::uint64_t{0};
  mutable std::vector<std::size_t> epoch_order_;
};

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  ModelConfig model_config;
  Eigen::VectorXf params;
  std::optional<TrainConfig> train_config;
  std::optional<TrainState> train_state;
};

std::uint64_t config_digest(const ModelConfig& config);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Transformer<float> model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace seqhpo

#endif  // SEQHPO_SEQMODEL_H_
