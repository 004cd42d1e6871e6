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

#include "seqhpo/seqmodel.h"

namespace seqhpo {

namespace {

constexpr double kNormEpsilon = 1e-5;

template <typename Scalar>
Scalar gelu(Scalar x) {
  const Scalar k = Scalar(0.7978845608028654);
  const Scalar t = std::tanh(k * (x + Scalar(0.044715) * x * x * x));
  return Scalar(0.5) * x * (Scalar(1) + t);
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar k = Scalar(0.7978845608028654);
  const Scalar t = std::tanh(k * (x + Scalar(0.044715) * x * x * x));
  return Scalar(0.5) * (Scalar(1) + t) +
         Scalar(0.5) * x * (Scalar(1) - t * t) * k * (Scalar(1) + Scalar(3 * 0.044715) * x * x);
}

template <typename Matrix, typename Vector, typename Row>
void layer_norm(const Matrix& x, const Row& gain, const Row& bias, Matrix& xhat, Vector& rstd,
                Matrix& out) {
  using Scalar = typename Matrix::Scalar;
  const auto mean = x.rowwise().mean().eval();
  xhat = x.colwise() - mean;
  rstd = (xhat.array().square().rowwise().mean() + Scalar(kNormEpsilon)).rsqrt().matrix();
  xhat.array().colwise() *= rstd.array();
  out = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
}

// Returns d loss / d x and accumulates the gain/bias gradients.
template <typename Matrix, typename Vector, typename Row, typename GradRow>
Matrix layer_norm_backward(const Matrix& dout, const Matrix& xhat, const Vector& rstd,
                           const Row& gain, GradRow dgain, GradRow dbias) {
  dgain += (dout.array() * xhat.array()).colwise().sum().matrix();
  dbias += dout.colwise().sum();
  Matrix dxhat = dout.array().rowwise() * gain.row(0).array();
  const auto mean_d = dxhat.rowwise().mean().eval();
  const auto mean_dx = (dxhat.array() * xhat.array()).rowwise().mean().matrix().eval();
  Matrix dx = dxhat.colwise() - mean_d;
  dx -= (xhat.array().colwise() * mean_dx.array()).matrix();
  dx.array().colwise() *= rstd.array();
  return dx;
}

// Row-wise softmax over the first `visible + i` columns of row i; the rest is zeroed.
template <typename Matrix>
void causal_softmax(Matrix& s, Eigen::Index visible) {
  using Scalar = typename Matrix::Scalar;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const Eigen::Index n = visible + i + 1;
    auto row = s.row(i).head(n);
    const Scalar peak = row.maxCoeff();
    row = (row.array() - peak).exp();
    row /= row.sum();
    s.row(i).tail(s.cols() - n).setZero();
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 2) throw UsageError("vocab_size must be >= 2");
  if (bos_token < 0 || bos_token >= vocab_size) throw UsageError("bos_token outside the vocabulary");
  if (embed_dim < 1 || num_layers < 1 || num_heads < 1 || feedforward_dim < 1)
    throw UsageError("model dimensions must be positive");
  if (embed_dim % num_heads != 0) throw UsageError("embed_dim must be divisible by num_heads");
  if (max_meta_len < 1 || max_history_len < 1) throw UsageError("sequence limits must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size},       {"bos_token", bos_token},
          {"embed_dim", embed_dim},
          {"num_layers", num_layers},       {"num_heads", num_heads},
          {"feedforward_dim", feedforward_dim}, {"max_meta_len", max_meta_len},
          {"max_history_len", max_history_len}, {"dropout", dropout},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.bos_token = j.value("bos_token", c.bos_token);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.num_layers = j.value("num_layers", c.num_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.feedforward_dim = j.value("feedforward_dim", c.feedforward_dim);
  c.max_meta_len = j.value("max_meta_len", c.max_meta_len);
  c.max_history_len = j.value("max_history_len", c.max_history_len);
  c.dropout = j.value("dropout", c.dropout);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<double> loss_weights(std::span<const Token> history, const Vocab& vocab) {
  std::vector<double> w(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) w[i] = vocab.is_separator(history[i]) ? 0.0 : 1.0;
  return w;
}

template <typename Scalar>
struct Transformer<Scalar>::Packed {
  struct Segment {
    Eigen::Index begin = 0;
    Eigen::Index len = 0;
  };
  std::vector<int> tokens;
  std::vector<int> positions;
  std::vector<Segment> segments;
  std::vector<Eigen::Index> out_rows;
  std::vector<int> targets;
  std::vector<Scalar> weights;
};

template <typename Scalar>
struct Transformer<Scalar>::Cache {
  struct Layer {
    Matrix input, norm1, qkv, context, norm2, hidden, activated;
    Vector rstd1, rstd2;
    std::vector<Matrix> probs;  // [segment * heads + head]
    Matrix attn_mask, ff_mask;
  };
  std::vector<Layer> layers;
  Matrix final_input;
  Matrix out_norm;
  Vector out_rstd;
};

template <typename Scalar>
Transformer<Scalar>::Transformer(const ModelConfig& config) : config_(config) {
  config_.validate();
  const Eigen::Index v = config_.vocab_size;
  const Eigen::Index d = config_.embed_dim;
  const Eigen::Index f = config_.feedforward_dim;
  Eigen::Index offset = 0;
  auto slot = [&offset](Eigen::Index rows, Eigen::Index cols) {
    Slot s{offset, rows, cols};
    offset += rows * cols;
    return s;
  };
  layout_.embedding = slot(v, d);
  for (int l = 0; l < config_.num_layers; ++l) {
    LayerSlots ls;
    ls.ln1_gain = slot(1, d);
    ls.ln1_bias = slot(1, d);
    ls.qkv_weight = slot(d, 3 * d);
    ls.qkv_bias = slot(1, 3 * d);
    ls.out_weight = slot(d, d);
    ls.out_bias = slot(1, d);
    ls.ln2_gain = slot(1, d);
    ls.ln2_bias = slot(1, d);
    ls.ff1_weight = slot(d, f);
    ls.ff1_bias = slot(1, f);
    ls.ff2_weight = slot(f, d);
    ls.ff2_bias = slot(1, d);
    layout_.layers.push_back(ls);
  }
  layout_.final_gain = slot(1, d);
  layout_.final_bias = slot(1, d);
  layout_.head_weight = slot(d, v);
  layout_.head_bias = slot(1, v);
  layout_.total = offset;

  const Eigen::Index positions = config_.max_meta_len + 1 + config_.max_history_len;
  positional_.resize(positions, d);
  for (Eigen::Index p = 0; p < positions; ++p) {
    for (Eigen::Index i = 0; i < d; i += 2) {
      const double angle = static_cast<double>(p) / std::pow(10000.0, static_cast<double>(i) / d);
      positional_(p, i) = static_cast<Scalar>(std::sin(angle));
      if (i + 1 < d) positional_(p, i + 1) = static_cast<Scalar>(std::cos(angle));
    }
  }
  initialize();
}

template <typename Scalar>
void Transformer<Scalar>::initialize() {
  params_ = Vector::Zero(layout_.total);
  Rng rng(derive_seed({config_.seed, 0x1a17}));
  auto fill_normal = [&](const Slot& s, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (Eigen::Index i = 0; i < s.rows * s.cols; ++i)
      params_[s.offset + i] = static_cast<Scalar>(normal(rng));
  };
  auto fill_const = [&](const Slot& s, double value) {
    params_.segment(s.offset, s.rows * s.cols).setConstant(static_cast<Scalar>(value));
  };
  const double residual_scale = 0.02 / std::sqrt(2.0 * config_.num_layers);
  fill_normal(layout_.embedding, 0.5);
  for (const auto& ls : layout_.layers) {
    fill_const(ls.ln1_gain, 1.0);
    fill_normal(ls.qkv_weight, 0.02);
    fill_normal(ls.out_weight, residual_scale);
    fill_const(ls.ln2_gain, 1.0);
    fill_normal(ls.ff1_weight, 0.02);
    fill_normal(ls.ff2_weight, residual_scale);
  }
  fill_const(layout_.final_gain, 1.0);
  fill_normal(layout_.head_weight, 0.02);
}

namespace {

template <typename Matrix, typename Vector, typename Slot>
Eigen::Map<const Matrix> view(const Vector& v, const Slot& s) {
  return Eigen::Map<const Matrix>(v.data() + s.offset, s.rows, s.cols);
}

template <typename Matrix, typename Vector, typename Slot>
Eigen::Map<Matrix> view_mut(Vector& v, const Slot& s) {
  return Eigen::Map<Matrix>(v.data() + s.offset, s.rows, s.cols);
}

}  // namespace

template <typename Scalar>
typename Transformer<Scalar>::Packed Transformer<Scalar>::pack(
    std::span<const SequenceExample> batch, bool all_rows) const {
  Packed packed;
  for (const auto& ex : batch) {
    if (ex.weights.size() != ex.history.size())
      throw UsageError("loss weights are not aligned with the history tokens");
    if (ex.meta.size() > static_cast<std::size_t>(config_.max_meta_len) ||
        ex.history.size() > static_cast<std::size_t>(config_.max_history_len))
      throw DataError("sequence too long for the model");
    if (ex.history.empty()) continue;
    const auto begin = static_cast<Eigen::Index>(packed.tokens.size());
    auto push = [&](Token t) {
      if (t < 0 || t >= config_.vocab_size) throw DataError("token id out of vocabulary");
      packed.positions.push_back(static_cast<int>(packed.tokens.size() - begin));
      packed.tokens.push_back(t);
    };
    for (Token t : ex.meta) push(t);
    push(config_.bos_token);
    for (std::size_t n = 0; n + 1 < ex.history.size(); ++n) push(ex.history[n]);
    const auto len = static_cast<Eigen::Index>(packed.tokens.size()) - begin;
    packed.segments.push_back({begin, len});
    const auto first = begin + static_cast<Eigen::Index>(ex.meta.size());
    for (std::size_t n = 0; n < ex.history.size(); ++n) {
      if (ex.history[n] < 0 || ex.history[n] >= config_.vocab_size)
        throw DataError("token id out of vocabulary");
      if (!all_rows && ex.weights[n] == 0.0) continue;
      packed.out_rows.push_back(first + static_cast<Eigen::Index>(n));
      packed.targets.push_back(ex.history[n]);
      packed.weights.push_back(static_cast<Scalar>(ex.weights[n]));
    }
  }
  return packed;
}

template <typename Scalar>
void Transformer<Scalar>::forward(const Packed& packed, Cache& cache, Rng* dropout_rng) const {
  using Row = Eigen::Map<const Matrix>;
  const Eigen::Index n = static_cast<Eigen::Index>(packed.tokens.size());
  const Eigen::Index d = config_.embed_dim;
  const Eigen::Index heads = config_.num_heads;
  const Eigen::Index dh = d / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const bool use_dropout = dropout_rng != nullptr && config_.dropout > 0.0;
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - config_.dropout));

  auto make_mask = [&](Matrix& mask, Eigen::Index rows, Eigen::Index cols) {
    std::bernoulli_distribution keep(1.0 - config_.dropout);
    mask.resize(rows, cols);
    for (Eigen::Index i = 0; i < mask.size(); ++i)
      mask.data()[i] = keep(*dropout_rng) ? keep_scale : Scalar(0);
  };

  const auto embedding = view<Matrix>(params_, layout_.embedding);
  Matrix x(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    x.row(r) = embedding.row(packed.tokens[r]) + positional_.row(packed.positions[r]);

  cache.layers.resize(layout_.layers.size());
  for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
    const auto& ls = layout_.layers[l];
    auto& lc = cache.layers[l];
    lc.input = x;
    Matrix a;
    layer_norm(x, Row(view<Matrix>(params_, ls.ln1_gain)), Row(view<Matrix>(params_, ls.ln1_bias)),
               lc.norm1, lc.rstd1, a);
    lc.qkv.noalias() = a * view<Matrix>(params_, ls.qkv_weight);
    lc.qkv.rowwise() += view<Matrix>(params_, ls.qkv_bias).row(0);

    lc.context.resize(n, d);
    lc.probs.resize(packed.segments.size() * heads);
    for (std::size_t s = 0; s < packed.segments.size(); ++s) {
      const auto [begin, len] = packed.segments[s];
      for (Eigen::Index h = 0; h < heads; ++h) {
        auto q = lc.qkv.block(begin, h * dh, len, dh);
        auto k = lc.qkv.block(begin, d + h * dh, len, dh);
        auto v = lc.qkv.block(begin, 2 * d + h * dh, len, dh);
        Matrix& p = lc.probs[s * heads + h];
        p.noalias() = (q * k.transpose()) * scale;
        causal_softmax(p, 0);
        lc.context.block(begin, h * dh, len, dh).noalias() = p * v;
      }
    }
    Matrix o = lc.context * view<Matrix>(params_, ls.out_weight);
    o.rowwise() += view<Matrix>(params_, ls.out_bias).row(0);
    if (use_dropout) {
      make_mask(lc.attn_mask, n, d);
      o.array() *= lc.attn_mask.array();
    }
    x += o;

    Matrix b;
    layer_norm(x, Row(view<Matrix>(params_, ls.ln2_gain)), Row(view<Matrix>(params_, ls.ln2_bias)),
               lc.norm2, lc.rstd2, b);
    lc.hidden.noalias() = b * view<Matrix>(params_, ls.ff1_weight);
    lc.hidden.rowwise() += view<Matrix>(params_, ls.ff1_bias).row(0);
    lc.activated = lc.hidden.unaryExpr([](Scalar z) { return gelu(z); });
    Matrix f = lc.activated * view<Matrix>(params_, ls.ff2_weight);
    f.rowwise() += view<Matrix>(params_, ls.ff2_bias).row(0);
    if (use_dropout) {
      make_mask(lc.ff_mask, n, d);
      f.array() *= lc.ff_mask.array();
    }
    x += f;
  }
  cache.final_input = std::move(x);
}

template <typename Scalar>
typename Transformer<Scalar>::Matrix Transformer<Scalar>::output_logits(const Packed& packed,
                                                                         Cache& cache) const {
  using Row = Eigen::Map<const Matrix>;
  const auto rows = static_cast<Eigen::Index>(packed.out_rows.size());
  Matrix gathered(rows, config_.embed_dim);
  for (Eigen::Index r = 0; r < rows; ++r) gathered.row(r) = cache.final_input.row(packed.out_rows[r]);
  Matrix y;
  layer_norm(gathered, Row(view<Matrix>(params_, layout_.final_gain)),
             Row(view<Matrix>(params_, layout_.final_bias)), cache.out_norm, cache.out_rstd, y);
  Matrix logits = y * view<Matrix>(params_, layout_.head_weight);
  logits.rowwise() += view<Matrix>(params_, layout_.head_bias).row(0);
  return logits;
}

template <typename Scalar>
void Transformer<Scalar>::backward(const Packed& packed, const Cache& cache, const Matrix& dlogits,
                                   Vector& grad) const {
  using Row = Eigen::Map<const Matrix>;
  const Eigen::Index n = static_cast<Eigen::Index>(packed.tokens.size());
  const Eigen::Index d = config_.embed_dim;
  const Eigen::Index heads = config_.num_heads;
  const Eigen::Index dh = d / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  grad = Vector::Zero(layout_.total);
  auto g = [&](const Slot& s) { return view_mut<Matrix>(grad, s); };

  // Output head and final norm.
  const Row final_gain(view<Matrix>(params_, layout_.final_gain));
  const Row final_bias(view<Matrix>(params_, layout_.final_bias));
  const Matrix y = (cache.out_norm.array().rowwise() * final_gain.row(0).array()).rowwise() +
                   final_bias.row(0).array();
  g(layout_.head_weight).noalias() += y.transpose() * dlogits;
  g(layout_.head_bias).row(0) += dlogits.colwise().sum();
  const Matrix dy = dlogits * view<Matrix>(params_, layout_.head_weight).transpose();
  const Matrix dgathered = layer_norm_backward(dy, cache.out_norm, cache.out_rstd, final_gain,
                                               g(layout_.final_gain), g(layout_.final_bias));
  Matrix dx = Matrix::Zero(n, d);
  for (std::size_t r = 0; r < packed.out_rows.size(); ++r)
    dx.row(packed.out_rows[r]) += dgathered.row(static_cast<Eigen::Index>(r));

  for (std::size_t li = layout_.layers.size(); li-- > 0;) {
    const auto& ls = layout_.layers[li];
    const auto& lc = cache.layers[li];

    // Feed-forward block.
    Matrix df = dx;
    if (lc.ff_mask.size() != 0) df.array() *= lc.ff_mask.array();
    g(ls.ff2_weight).noalias() += lc.activated.transpose() * df;
    g(ls.ff2_bias).row(0) += df.colwise().sum();
    Matrix dh1 = df * view<Matrix>(params_, ls.ff2_weight).transpose();
    dh1.array() *= lc.hidden.unaryExpr([](Scalar z) { return gelu_grad(z); }).array();
    const Row ln2_gain(view<Matrix>(params_, ls.ln2_gain));
    const Row ln2_bias(view<Matrix>(params_, ls.ln2_bias));
    const Matrix b = (lc.norm2.array().rowwise() * ln2_gain.row(0).array()).rowwise() +
                     ln2_bias.row(0).array();
    g(ls.ff1_weight).noalias() += b.transpose() * dh1;
    g(ls.ff1_bias).row(0) += dh1.colwise().sum();
    const Matrix db = dh1 * view<Matrix>(params_, ls.ff1_weight).transpose();
    dx += layer_norm_backward(db, lc.norm2, lc.rstd2, ln2_gain, g(ls.ln2_gain), g(ls.ln2_bias));

    // Attention block.
    Matrix dout = dx;
    if (lc.attn_mask.size() != 0) dout.array() *= lc.attn_mask.array();
    g(ls.out_weight).noalias() += lc.context.transpose() * dout;
    g(ls.out_bias).row(0) += dout.colwise().sum();
    const Matrix dcontext = dout * view<Matrix>(params_, ls.out_weight).transpose();
    Matrix dqkv = Matrix::Zero(n, 3 * d);
    for (std::size_t s = 0; s < packed.segments.size(); ++s) {
      const auto [begin, len] = packed.segments[s];
      for (Eigen::Index h = 0; h < heads; ++h) {
        const Matrix& p = lc.probs[s * heads + h];
        auto q = lc.qkv.block(begin, h * dh, len, dh);
        auto k = lc.qkv.block(begin, d + h * dh, len, dh);
        auto v = lc.qkv.block(begin, 2 * d + h * dh, len, dh);
        auto dc = dcontext.block(begin, h * dh, len, dh);
        dqkv.block(begin, 2 * d + h * dh, len, dh).noalias() = p.transpose() * dc;
        Matrix ds = dc * v.transpose();
        for (Eigen::Index i = 0; i < len; ++i) {
          auto prow = p.row(i).head(i + 1);
          auto drow = ds.row(i).head(i + 1);
          const Scalar dot = prow.dot(drow);
          drow = (prow.array() * (drow.array() - dot)).matrix();
          ds.row(i).tail(len - i - 1).setZero();
        }
        dqkv.block(begin, h * dh, len, dh).noalias() = (ds * k) * scale;
        dqkv.block(begin, d + h * dh, len, dh).noalias() = (ds.transpose() * q) * scale;
      }
    }
    const Row ln1_gain(view<Matrix>(params_, ls.ln1_gain));
    const Row ln1_bias(view<Matrix>(params_, ls.ln1_bias));
    const Matrix a = (lc.norm1.array().rowwise() * ln1_gain.row(0).array()).rowwise() +
                     ln1_bias.row(0).array();
    g(ls.qkv_weight).noalias() += a.transpose() * dqkv;
    g(ls.qkv_bias).row(0) += dqkv.colwise().sum();
    const Matrix da = dqkv * view<Matrix>(params_, ls.qkv_weight).transpose();
    dx += layer_norm_backward(da, lc.norm1, lc.rstd1, ln1_gain, g(ls.ln1_gain), g(ls.ln1_bias));
  }

  auto dembedding = g(layout_.embedding);
  for (Eigen::Index r = 0; r < n; ++r) dembedding.row(packed.tokens[r]) += dx.row(r);
}

template <typename Scalar>
Scalar Transformer<Scalar>::loss(std::span<const SequenceExample> batch, Vector* grad,
                                 Rng* dropout_rng) const {
  const Packed packed = pack(batch, false);
  if (packed.out_rows.empty()) {
    if (grad) *grad = Vector::Zero(layout_.total);
    return Scalar(0);
  }
  Cache cache;
  forward(packed, cache, dropout_rng);
  Matrix logits = output_logits(packed, cache);
  Scalar total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const Scalar peak = row.maxCoeff();
    row.array() = (row.array() - peak).exp();
    const Scalar sum = row.sum();
    const Scalar w = packed.weights[r];
    const int target = packed.targets[r];
    total += w * (std::log(sum) - std::log(row(target)));
    // logits now hold exp(l - peak); turn them into w * (softmax - onehot).
    row *= w / sum;
    row(target) -= w;
  }
  if (grad) backward(packed, cache, logits, *grad);
  return total;
}

template <typename Scalar>
typename Transformer<Scalar>::Matrix Transformer<Scalar>::history_logits(
    std::span<const Token> meta, std::span<const Token> history) const {
  SequenceExample ex{TokenSeq(meta.begin(), meta.end()), TokenSeq(history.begin(), history.end()),
                     std::vector<double>(history.size(), 1.0)};
  const Packed packed = pack(std::span<const SequenceExample>(&ex, 1), true);
  if (packed.out_rows.empty()) return Matrix(0, config_.vocab_size);
  Cache cache;
  forward(packed, cache, nullptr);
  return output_logits(packed, cache);
}

template <typename Scalar>
std::unique_ptr<DecodeSession<Scalar>> Transformer<Scalar>::open(std::span<const Token> meta) const {
  return std::make_unique<DecodeSession<Scalar>>(*this, meta);
}

template <typename Scalar>
std::unique_ptr<TokenContext> Transformer<Scalar>::start(std::span<const Token> meta_tokens) const {
  const auto keep = std::min(meta_tokens.size(), static_cast<std::size_t>(config_.max_meta_len));
  return open(meta_tokens.first(keep));
}

// ---------------------------------------------------------------------------

template <typename Scalar>
DecodeSession<Scalar>::DecodeSession(const Transformer<Scalar>& model, std::span<const Token> meta)
    : model_(model) {
  const auto& cfg = model_.config();
  if (meta.size() > static_cast<std::size_t>(cfg.max_meta_len))
    throw DataError("metadata longer than the model limit");
  keys_.resize(cfg.num_layers);
  values_.resize(cfg.num_layers);
  TokenSeq prefix(meta.begin(), meta.end());
  prefix.push_back(cfg.bos_token);
  push(prefix);
  prefix_len_ = prefix.size();
}

template <typename Scalar>
void DecodeSession<Scalar>::reserve(Eigen::Index rows) {
  const Eigen::Index capacity = final_hidden_.rows();
  if (rows <= capacity) return;
  const Eigen::Index grown = std::max<Eigen::Index>({rows, 2 * capacity, 64});
  const Eigen::Index d = model_.config().embed_dim;
  for (auto& k : keys_) k.conservativeResize(grown, d);
  for (auto& v : values_) v.conservativeResize(grown, d);
  final_hidden_.conservativeResize(grown, d);
}

template <typename Scalar>
void DecodeSession<Scalar>::append(std::span<const Token> tokens) {
  if (history_len_ + tokens.size() > model_.max_history_len())
    throw DataError("context overflow: history exceeds the model limit");
  push(tokens);
  history_len_ += tokens.size();
}

template <typename Scalar>
void DecodeSession<Scalar>::truncate(std::size_t history_len) {
  if (history_len > history_len_) throw UsageError("cannot truncate beyond the current length");
  history_len_ = history_len;
  rows_ = static_cast<Eigen::Index>(prefix_len_ + history_len_);
}

template <typename Scalar>
void DecodeSession<Scalar>::push(std::span<const Token> tokens) {
  using Vector = typename Transformer<Scalar>::Vector;
  using Row = Eigen::Map<const Matrix>;
  if (tokens.empty()) return;
  const auto& cfg = model_.config();
  const auto& params = model_.params_;
  const auto& layout = model_.layout_;
  const Eigen::Index n = static_cast<Eigen::Index>(tokens.size());
  const Eigen::Index d = cfg.embed_dim;
  const Eigen::Index heads = cfg.num_heads;
  const Eigen::Index dh = d / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const Eigen::Index past = rows_;
  reserve(past + n);

  const auto embedding = view<Matrix>(params, layout.embedding);
  Matrix x(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Token t = tokens[r];
    if (t < 0 || t >= cfg.vocab_size) throw DataError("token id out of vocabulary");
    x.row(r) = embedding.row(t) + model_.positional_.row(past + r);
  }
  Matrix xhat, a, qkv, context(n, d);
  Vector rstd;
  for (std::size_t l = 0; l < layout.layers.size(); ++l) {
    const auto& ls = layout.layers[l];
    layer_norm(x, Row(view<Matrix>(params, ls.ln1_gain)), Row(view<Matrix>(params, ls.ln1_bias)),
               xhat, rstd, a);
    qkv.noalias() = a * view<Matrix>(params, ls.qkv_weight);
    qkv.rowwise() += view<Matrix>(params, ls.qkv_bias).row(0);
    keys_[l].block(past, 0, n, d) = qkv.middleCols(d, d);
    values_[l].block(past, 0, n, d) = qkv.middleCols(2 * d, d);
    for (Eigen::Index h = 0; h < heads; ++h) {
      Matrix s = (qkv.block(0, h * dh, n, dh) *
                  keys_[l].block(0, h * dh, past + n, dh).transpose()) *
                 scale;
      causal_softmax(s, past);
      context.middleCols(h * dh, dh).noalias() = s * values_[l].block(0, h * dh, past + n, dh);
    }
    x.noalias() += context * view<Matrix>(params, ls.out_weight);
    x.rowwise() += view<Matrix>(params, ls.out_bias).row(0);
    layer_norm(x, Row(view<Matrix>(params, ls.ln2_gain)), Row(view<Matrix>(params, ls.ln2_bias)),
               xhat, rstd, a);
    Matrix hidden = a * view<Matrix>(params, ls.ff1_weight);
    hidden.rowwise() += view<Matrix>(params, ls.ff1_bias).row(0);
    hidden = hidden.unaryExpr([](Scalar z) { return gelu(z); });
    x.noalias() += hidden * view<Matrix>(params, ls.ff2_weight);
    x.rowwise() += view<Matrix>(params, ls.ff2_bias).row(0);
  }
  Matrix y;
  layer_norm(x, Row(view<Matrix>(params, layout.final_gain)),
             Row(view<Matrix>(params, layout.final_bias)), xhat, rstd, y);
  final_hidden_.block(past, 0, n, d) = y;
  rows_ = past + n;
}

template <typename Scalar>
Eigen::VectorXd DecodeSession<Scalar>::next_logits() const {
  const auto& params = model_.params_;
  const auto& layout = model_.layout_;
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> logits =
      final_hidden_.row(rows_ - 1) * view<Matrix>(params, layout.head_weight) +
      view<Matrix>(params, layout.head_bias).row(0);
  return logits.transpose().template cast<double>();
}

// ---------------------------------------------------------------------------

GradientCheckReport gradient_check(const Transformer<double>& model,
                                   std::span<const SequenceExample> batch, std::size_t samples,
                                   double step, Rng& rng) {
  double total_weight = 0.0;
  for (const auto& ex : batch)
    for (double w : ex.weights) total_weight += w;
  const double norm = total_weight > 0.0 ? 1.0 / total_weight : 0.0;

  Transformer<double> probe = model;
  Eigen::VectorXd analytic;
  probe.loss(batch, &analytic);
  analytic *= norm;

  GradientCheckReport report;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto i = static_cast<Eigen::Index>(uniform_index(rng, probe.num_parameters()));
    const double original = probe.parameters()[i];
    probe.parameters()[i] = original + step;
    const double plus = probe.loss(batch) * norm;
    probe.parameters()[i] = original - step;
    const double minus = probe.loss(batch) * norm;
    probe.parameters()[i] = original;
    const double numeric = (plus - minus) / (2.0 * step);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    report.max_relative_error =
        std::max(report.max_relative_error, std::abs(numeric - analytic[i]) / scale);
    ++report.checked;
  }
  return report;
}

template class Transformer<float>;
template class Transformer<double>;
template class DecodeSession<float>;
template class DecodeSession<double>;

}  // namespace seqhpo
