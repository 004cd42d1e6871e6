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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "seqhpo/seqmodel.h"

namespace seqhpo {

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (steps < 0) throw UsageError("steps must be >= 0");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (warmup_steps < 1) throw UsageError("warmup_steps must be >= 1");
  if (eval_every < 1) throw UsageError("eval_every must be >= 1");
  if (patience < 0) throw UsageError("patience must be >= 0");
  if (!(grad_clip > 0.0)) throw UsageError("grad_clip must be positive");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"batch_size", batch_size},
          {"steps", steps},
          {"learning_rate", learning_rate},
          {"warmup_steps", warmup_steps},
          {"grad_clip", grad_clip},
          {"eval_every", eval_every},
          {"patience", patience},
          {"max_val_examples", max_val_examples},
          {"augment", augment},
          {"augment_permute", augmentation.permute},
          {"augment_y_affine", augmentation.y_affine},
          {"augment_metadata_drop", augmentation.metadata_drop},
          {"drop_probability", augmentation.drop_probability},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.patience = j.value("patience", c.patience);
  c.max_val_examples = j.value("max_val_examples", c.max_val_examples);
  c.augment = j.value("augment", c.augment);
  c.augmentation.permute = j.value("augment_permute", c.augmentation.permute);
  c.augmentation.y_affine = j.value("augment_y_affine", c.augmentation.y_affine);
  c.augmentation.metadata_drop = j.value("augment_metadata_drop", c.augmentation.metadata_drop);
  c.augmentation.drop_probability = j.value("drop_probability", c.augmentation.drop_probability);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

double rsqrt_learning_rate(const TrainConfig& config, int step) {
  const double t = static_cast<double>(step) + 1.0;
  const double warmup = static_cast<double>(config.warmup_steps);
  return config.learning_rate * std::min(t / warmup, std::sqrt(warmup / t));
}

SequenceExample make_example(const Study& study, const Vocab& vocab, const ModelConfig& config,
                             const TokenizeOptions& options) {
  const std::size_t per_trial = study.metadata.space.dimension() + 3;
  const std::size_t fit = (static_cast<std::size_t>(config.max_history_len) + 1) / per_trial;
  Study clipped{study.metadata, {}};
  const std::size_t keep = std::min(fit, study.history.size());
  clipped.history.assign(study.history.begin(), study.history.begin() + keep);
  auto tok = tokenize_study(clipped, vocab, options);
  if (tok.meta_tokens.size() > static_cast<std::size_t>(config.max_meta_len))
    tok.meta_tokens.resize(config.max_meta_len);
  SequenceExample ex;
  ex.weights = loss_weights(tok.history_tokens, vocab);
  ex.meta = std::move(tok.meta_tokens);
  ex.history = std::move(tok.history_tokens);
  return ex;
}

namespace {

double weight_sum(std::span<const SequenceExample> batch) {
  double total = 0.0;
  for (const auto& ex : batch)
    for (double w : ex.weights) total += w;
  return total;
}

TokenizeOptions inference_options() {
  TokenizeOptions opts;
  opts.affine = YAffine::inference();
  return opts;
}

}  // namespace

Trainer::Trainer(const ModelConfig& model_config, const TrainConfig& train_config,
                 std::vector<Study> train, std::vector<Study> validation, const Vocab& vocab)
    : model_config_(model_config),
      config_(train_config),
      vocab_(vocab),
      model_(model_config) {
  config_.validate();
  if (train.empty()) throw DataError("training set is empty");
  bool any_weight = false;
  for (auto& s : train) {
    s = to_maximization(std::move(s));
    any_weight = any_weight || !s.history.empty();
  }
  if (!any_weight) throw DataError("training set has no weighted tokens");
  train_ = std::move(train);
  const std::size_t keep =
      std::min(validation.size(), static_cast<std::size_t>(std::max(config_.max_val_examples, 0)));
  for (std::size_t i = 0; i < keep; ++i)
    validation_.push_back(
        make_example(to_maximization(validation[i]), vocab_, model_config_, inference_options()));

  const auto n = model_.num_parameters();
  state_.adam_m = Eigen::VectorXf::Zero(n);
  state_.adam_v = Eigen::VectorXf::Zero(n);
  state_.best_params = model_.parameters();
  state_.best_val_loss = std::numeric_limits<double>::infinity();

  LossRecord initial;
  initial.step = 0;
  const auto batch = batch_for_step(0);
  const double w = weight_sum(batch);
  initial.train_loss = w > 0 ? model_.loss(batch) / w : 0.0;
  evaluate(initial);
  state_.log.push_back(initial);
}

void Trainer::resume(const Eigen::VectorXf& params, TrainState state) {
  if (params.size() != model_.num_parameters() || state.adam_m.size() != params.size() ||
      state.adam_v.size() != params.size() || state.best_params.size() != params.size())
    throw DataError("training state does not match the model");
  model_.parameters() = params;
  state_ = std::move(state);
}

bool Trainer::finished() const { return state_.stopped || state_.step >= config_.steps; }

double Trainer::validation_loss(const Transformer<float>& model) const {
  double total = 0.0;
  double weight = 0.0;
  for (const auto& ex : validation_) {
    total += model.loss(std::span<const SequenceExample>(&ex, 1));
    weight += weight_sum(std::span<const SequenceExample>(&ex, 1));
  }
  return weight > 0.0 ? total / weight : 0.0;
}

void Trainer::evaluate(LossRecord& record) {
  if (validation_.empty()) {
    state_.best_params = model_.parameters();
    state_.best_step = state_.step;
    return;
  }
  const double val = validation_loss(model_);
  record.val_loss = val;
  if (val < state_.best_val_loss) {
    state_.best_val_loss = val;
    state_.best_params = model_.parameters();
    state_.best_step = state_.step;
    state_.evals_since_best = 0;
  } else {
    ++state_.evals_since_best;
    if (config_.patience > 0 && state_.evals_since_best >= config_.patience) state_.stopped = true;
  }
}

SequenceExample Trainer::example_at(std::uint64_t sample_index) const {
  const std::uint64_t n = train_.size();
  const std::uint64_t epoch = sample_index / n;
  if (epoch != cached_epoch_) {
    epoch_order_.resize(n);
    std::iota(epoch_order_.begin(), epoch_order_.end(), std::size_t{0});
    Rng rng(derive_seed({config_.seed, 0x0de5, epoch}));
    std::shuffle(epoch_order_.begin(), epoch_order_.end(), rng);
    cached_epoch_ = epoch;
  }
  const std::size_t index = epoch_order_[sample_index % n];
  const Study& study = train_[index];
  TokenizeOptions opts = inference_options();
  if (config_.augment) {
    Rng rng(derive_seed({config_.seed, epoch, index}));
    opts = sample_augmentation(study, config_.augmentation, rng);
    if (!opts.affine) opts.affine = YAffine::inference();
  }
  return make_example(study, vocab_, model_config_, opts);
}

std::vector<SequenceExample> Trainer::batch_for_step(int step) const {
  std::vector<SequenceExample> batch;
  const auto b = static_cast<std::uint64_t>(config_.batch_size);
  for (std::uint64_t i = 0; i < b; ++i) batch.push_back(example_at(static_cast<std::uint64_t>(step) * b + i));
  return batch;
}

void Trainer::run(const std::function<void(const LossRecord&)>& on_record) {
  run_steps(std::numeric_limits<int>::max(), on_record);
}

void Trainer::run_steps(int n, const std::function<void(const LossRecord&)>& on_record) {
  constexpr float kBeta1 = 0.9f;
  constexpr float kBeta2 = 0.98f;
  constexpr float kEps = 1e-9f;
  Eigen::VectorXf grad;
  for (int i = 0; i < n && !finished(); ++i) {
    const int step = state_.step;
    const auto batch = batch_for_step(step);
    const double weight = weight_sum(batch);
    Rng dropout_rng(derive_seed({config_.seed, 0xd409, static_cast<std::uint64_t>(step)}));
    const double total = model_.loss(batch, &grad, &dropout_rng);
    LossRecord record;
    record.step = step + 1;
    record.train_loss = weight > 0.0 ? total / weight : 0.0;
    if (weight > 0.0) {
      grad /= static_cast<float>(weight);
      const float norm = grad.norm();
      if (norm > config_.grad_clip) grad *= static_cast<float>(config_.grad_clip) / norm;
      const auto lr = static_cast<float>(rsqrt_learning_rate(config_, step));
      const float t = static_cast<float>(step + 1);
      const float c1 = 1.0f - std::pow(kBeta1, t);
      const float c2 = 1.0f - std::pow(kBeta2, t);
      state_.adam_m = kBeta1 * state_.adam_m + (1.0f - kBeta1) * grad;
      state_.adam_v = kBeta2 * state_.adam_v + (1.0f - kBeta2) * grad.cwiseProduct(grad);
      model_.parameters().array() -=
          lr * (state_.adam_m.array() / c1) / ((state_.adam_v.array() / c2).sqrt() + kEps);
    }
    state_.step = step + 1;
    if (state_.step % config_.eval_every == 0 || state_.step == config_.steps) evaluate(record);
    state_.log.push_back(record);
    if (on_record) on_record(record);
  }
}

Transformer<float> Trainer::best_model() const {
  Transformer<float> best = model_;
  best.parameters() = state_.best_params;
  return best;
}

}  // namespace seqhpo
