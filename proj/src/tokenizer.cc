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

#include "seqhpo/tokenizer.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace seqhpo {

namespace {

constexpr const char* kKeywordNames[kNumKeywords] = {
    "name",      "metric",    "goal",       "type",       "algorithm",
    "min_value", "max_value", "scale_type", "categories", "values",
};

constexpr const char* kEnumNames[kNumEnumTokens] = {
    "DOUBLE", "INTEGER", "DISCRETE", "CATEGORICAL", "LINEAR", "LOG", "MAXIMIZE", "MINIMIZE",
};

EnumToken kind_enum(ParamKind kind) {
  switch (kind) {
    case ParamKind::kDouble: return EnumToken::kDouble;
    case ParamKind::kInteger: return EnumToken::kInteger;
    case ParamKind::kDiscrete: return EnumToken::kDiscrete;
    case ParamKind::kCategorical: return EnumToken::kCategorical;
  }
  return EnumToken::kDouble;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::size_t> resolve_perm(std::span<const std::size_t> perm, std::size_t d) {
  std::vector<std::size_t> order(d);
  if (perm.empty()) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  }
  if (perm.size() != d) throw DataError("permutation size does not match dimension");
  std::vector<bool> seen(d, false);
  for (std::size_t i = 0; i < d; ++i) {
    if (perm[i] >= d || seen[perm[i]]) throw DataError("invalid parameter permutation");
    seen[perm[i]] = true;
    order[i] = perm[i];
  }
  return order;
}

class TokenWriter {
 public:
  TokenWriter(const Vocab& vocab, TokenSeq& out) : vocab_(vocab), out_(out) {}
  void keyword(Keyword k) { out_.push_back(vocab_.keyword(k)); }
  void enumeration(EnumToken e) { out_.push_back(vocab_.enum_token(e)); }
  void text(const std::string& s) {
    for (unsigned char c : s) out_.push_back(vocab_.byte(c));
  }
  void amp() { out_.push_back(vocab_.amp()); }

 private:
  const Vocab& vocab_;
  TokenSeq& out_;
};

// Cursor over the byte tokens of one metadata value.
class ByteReader {
 public:
  ByteReader(std::span<const Token> tokens, const Vocab& vocab, std::size_t& pos)
      : tokens_(tokens), vocab_(vocab), pos_(pos) {}

  bool at_byte() const { return pos_ < tokens_.size() && vocab_.is_byte(tokens_[pos_]); }
  char peek() const { return static_cast<char>(vocab_.as_byte(tokens_[pos_])); }
  char next() { return static_cast<char>(vocab_.as_byte(tokens_[pos_++])); }

  std::string quoted() {
    if (!at_byte() || peek() != '"') throw DataError("metadata: expected quoted string");
    next();
    std::string out;
    while (true) {
      if (!at_byte()) throw DataError("metadata: unterminated string");
      char c = next();
      if (c == '\\') {
        if (!at_byte()) throw DataError("metadata: dangling escape");
        out.push_back(next());
      } else if (c == '"') {
        return out;
      } else {
        out.push_back(c);
      }
    }
  }

  // Unquoted bytes up to the next non-byte token or opening quote.
  std::string bare() {
    std::string out;
    while (at_byte() && peek() != '"') out.push_back(next());
    return out;
  }

  // `[a, b, ...]` where items are quoted strings or bare numbers.
  std::vector<std::string> list(bool quoted_items) {
    if (!at_byte() || next() != '[') throw DataError("metadata: expected '['");
    std::vector<std::string> items;
    while (true) {
      while (at_byte() && peek() == ' ') next();
      if (!at_byte()) throw DataError("metadata: unterminated list");
      if (peek() == ']') {
        next();
        return items;
      }
      if (quoted_items) {
        items.push_back(quoted());
      } else {
        std::string item;
        while (at_byte() && peek() != ',' && peek() != ']') item.push_back(next());
        items.push_back(item);
      }
      while (at_byte() && peek() == ' ') next();
      if (at_byte() && peek() == ',') next();
    }
  }

 private:
  std::span<const Token> tokens_;
  const Vocab& vocab_;
  std::size_t& pos_;
};

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw DataError("metadata: bad number '" + s + "'");
  return v;
}

}  // namespace

Vocab::Vocab(int q) : q_(q) {
  if (q < 2) throw UsageError("quantization level must be >= 2");
  keyword_base_ = q_ + 4;
  enum_base_ = keyword_base_ + kNumKeywords;
  byte_base_ = enum_base_ + kNumEnumTokens;
}

std::string Vocab::mnemonic(Token t) const {
  if (is_value(t)) return "<" + std::to_string(t) + ">";
  if (t == star()) return "*";
  if (t == bar()) return "|";
  if (t == amp()) return "&";
  if (t == bos()) return "<bos>";
  if (is_keyword(t)) return std::string("<") + kKeywordNames[t - keyword_base_] + ">";
  if (is_enum(t)) return std::string("<") + kEnumNames[t - enum_base_] + ">";
  if (is_byte(t)) return std::string(1, static_cast<char>(as_byte(t)));
  return "<?" + std::to_string(t) + ">";
}

int quantize(double u, int q) {
  if (!(u >= 0.0 && u <= 1.0)) throw DataError("quantize: value outside [0, 1]");
  const int bin = static_cast<int>(std::floor(u * q));
  return std::min(bin, q - 1);
}

double dequantize(int bin, int q) {
  if (bin < 0 || bin >= q) throw DataError("dequantize: bin out of range");
  return (bin + 0.5) / q;
}

YAffine YAffine::sample(Rng& rng) {
  YAffine a;
  a.scale = 0.3 + 0.7 * uniform01(rng);
  a.shift = (1.0 - a.scale) * uniform01(rng);
  return a;
}

void YAffine::validate() const {
  if (!(scale > 0.0 && scale <= 1.0 && shift >= 0.0 && shift + scale <= 1.0 + 1e-12))
    throw DataError("invalid y affine");
}

double apply_y_affine(double u, const YAffine& affine) {
  return std::clamp(u * affine.scale + affine.shift, 0.0, 1.0);
}

double invert_y_affine(double v, const YAffine& affine) {
  return (v - affine.shift) / affine.scale;
}

YRange observed_y_range(std::span<const Trial> history) {
  if (history.empty()) return {};
  YRange r{history.front().y, history.front().y};
  for (const auto& t : history) {
    r.min = std::min(r.min, t.y);
    r.max = std::max(r.max, t.y);
  }
  return r;
}

std::string format_number(double v) {
  char buf[64];
  auto [fixed_end, ec1] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  std::string fixed(buf, fixed_end);
  auto [sci_end, ec2] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific);
  std::string sci(buf, sci_end);
  const auto e = sci.find('e');
  std::string mantissa = sci.substr(0, e);
  std::string exponent = sci.substr(e + 1);
  const bool negative = !exponent.empty() && exponent[0] == '-';
  if (!exponent.empty() && (exponent[0] == '-' || exponent[0] == '+')) exponent.erase(0, 1);
  exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
  sci = mantissa + "e" + (negative ? "-" : "") + exponent;
  return sci.size() <= fixed.size() ? sci : fixed;
}

TokenSeq serialize_metadata(const Metadata& metadata, const Vocab& vocab, MetadataDrop drop,
                            std::span<const std::size_t> perm) {
  TokenSeq out;
  TokenWriter w(vocab, out);
  if (!drop.text) {
    if (metadata.free_text && !metadata.free_text->empty()) w.text(quote(*metadata.free_text));
    w.keyword(Keyword::kName);
    w.text(quote(metadata.name));
    w.keyword(Keyword::kMetric);
    w.text(quote(metadata.metric_name));
  }
  w.keyword(Keyword::kGoal);
  w.enumeration(metadata.goal == Goal::kMaximize ? EnumToken::kMaximize : EnumToken::kMinimize);
  w.keyword(Keyword::kAlgorithm);
  w.text(quote(metadata.algorithm));

  const auto& space = metadata.space;
  for (std::size_t i : resolve_perm(perm, space.dimension())) {
    const auto& p = space[i];
    w.amp();
    if (!drop.text) {
      w.keyword(Keyword::kName);
      w.text(quote(p.name()));
    }
    w.keyword(Keyword::kType);
    w.enumeration(kind_enum(p.kind()));
    if (drop.ranges) continue;
    switch (p.kind()) {
      case ParamKind::kDouble:
      case ParamKind::kInteger:
        w.keyword(Keyword::kMinValue);
        w.text(format_number(p.min_value()));
        w.keyword(Keyword::kMaxValue);
        w.text(format_number(p.max_value()));
        w.keyword(Keyword::kScaleType);
        w.enumeration(p.scale() == ScaleType::kLog ? EnumToken::kLog : EnumToken::kLinear);
        break;
      case ParamKind::kDiscrete: {
        std::string list = "[";
        for (std::size_t k = 0; k < p.values().size(); ++k) {
          if (k) list += ", ";
          list += format_number(p.values()[k]);
        }
        w.keyword(Keyword::kValues);
        w.text(list + "]");
        break;
      }
      case ParamKind::kCategorical: {
        std::string list = "[";
        for (std::size_t k = 0; k < p.categories().size(); ++k) {
          if (k) list += ", ";
          list += quote(p.categories()[k]);
        }
        w.keyword(Keyword::kCategories);
        w.text(list + "]");
        break;
      }
    }
  }
  return out;
}

ParsedMetadata parse_metadata(std::span<const Token> tokens, const Vocab& vocab) {
  ParsedMetadata meta;
  std::size_t pos = 0;
  ByteReader bytes(tokens, vocab, pos);
  ParsedParameter* param = nullptr;

  auto read_enum = [&]() -> EnumToken {
    if (pos >= tokens.size() || !vocab.is_enum(tokens[pos]))
      throw DataError("metadata: expected enum token at " + std::to_string(pos));
    return vocab.as_enum(tokens[pos++]);
  };

  while (pos < tokens.size()) {
    const Token t = tokens[pos];
    if (t == vocab.amp()) {
      meta.parameters.emplace_back();
      param = &meta.parameters.back();
      ++pos;
      continue;
    }
    if (vocab.is_byte(t)) {
      if (param != nullptr) throw DataError("metadata: stray text in parameter block");
      meta.free_text = bytes.quoted();
      continue;
    }
    if (!vocab.is_keyword(t))
      throw DataError("metadata: unexpected token " + std::to_string(t) + " at " +
                      std::to_string(pos));
    ++pos;
    switch (vocab.as_keyword(t)) {
      case Keyword::kName:
        (param ? param->name : meta.name) = bytes.quoted();
        break;
      case Keyword::kMetric:
        meta.metric_name = bytes.quoted();
        break;
      case Keyword::kGoal:
        meta.goal = read_enum() == EnumToken::kMinimize ? Goal::kMinimize : Goal::kMaximize;
        break;
      case Keyword::kAlgorithm:
        meta.algorithm = bytes.quoted();
        break;
      case Keyword::kType: {
        if (!param) throw DataError("metadata: type outside parameter block");
        switch (read_enum()) {
          case EnumToken::kDouble: param->kind = ParamKind::kDouble; break;
          case EnumToken::kInteger: param->kind = ParamKind::kInteger; break;
          case EnumToken::kDiscrete: param->kind = ParamKind::kDiscrete; break;
          case EnumToken::kCategorical: param->kind = ParamKind::kCategorical; break;
          default: throw DataError("metadata: bad parameter type");
        }
        break;
      }
      case Keyword::kMinValue:
        if (!param) throw DataError("metadata: min_value outside parameter block");
        param->min_value = parse_double(bytes.bare());
        break;
      case Keyword::kMaxValue:
        if (!param) throw DataError("metadata: max_value outside parameter block");
        param->max_value = parse_double(bytes.bare());
        break;
      case Keyword::kScaleType:
        if (!param) throw DataError("metadata: scale_type outside parameter block");
        param->scale = read_enum() == EnumToken::kLog ? ScaleType::kLog : ScaleType::kLinear;
        break;
      case Keyword::kCategories:
        if (!param) throw DataError("metadata: categories outside parameter block");
        param->categories = bytes.list(true);
        break;
      case Keyword::kValues:
        if (!param) throw DataError("metadata: values outside parameter block");
        for (const auto& s : bytes.list(false)) param->values.push_back(parse_double(s));
        break;
    }
  }
  return meta;
}

Token param_token(double value, const ParameterConfig& cfg, const Vocab& vocab) {
  if (cfg.is_continuous()) return quantize(normalize_param(value, cfg), vocab.q());
  const auto index = static_cast<int>(cfg.index_of(value));
  if (index >= vocab.q()) throw DataError("feasible set larger than the quantization level");
  return index;
}

Token y_token(double y, const YRange& range, const std::optional<YAffine>& affine,
              const Vocab& vocab) {
  if (range.degenerate()) return 0;
  double u = std::clamp((y - range.min) / (range.max - range.min), 0.0, 1.0);
  if (affine) u = apply_y_affine(u, *affine);
  return quantize(u, vocab.q());
}

double y_from_unit(double v, const YRange& range, const std::optional<YAffine>& affine) {
  const double u = affine ? invert_y_affine(v, *affine) : v;
  const double width = range.degenerate() ? 1.0 : range.max - range.min;
  return range.min + u * width;
}

TokenSeq serialize_history(std::span<const Trial> history, const SearchSpace& space,
                           const YRange& range, const std::optional<YAffine>& affine,
                           std::span<const std::size_t> perm, const Vocab& vocab) {
  const std::size_t d = space.dimension();
  const auto order = resolve_perm(perm, d);
  if (affine) affine->validate();
  TokenSeq out;
  out.reserve(history.size() * (d + 3));
  for (std::size_t t = 0; t < history.size(); ++t) {
    const auto& trial = history[t];
    if (!space.contains(trial.x))
      throw DataError("trial " + std::to_string(t) + " incompatible with the search space");
    if (t > 0) out.push_back(vocab.bar());
    for (std::size_t i : order) out.push_back(param_token(trial.x[i], space[i], vocab));
    out.push_back(vocab.star());
    out.push_back(y_token(trial.y, range, affine, vocab));
  }
  return out;
}

Trial detokenize_trial(std::span<const Token> tokens, const SearchSpace& space,
                       const YRange& range, const Vocab& vocab,
                       const std::optional<YAffine>& affine, std::span<const std::size_t> perm) {
  const std::size_t d = space.dimension();
  const auto order = resolve_perm(perm, d);
  if (tokens.size() == d + 3 && tokens.back() == vocab.bar()) tokens = tokens.first(d + 2);
  if (tokens.size() != d + 2 || tokens[d] != vocab.star())
    throw DataError("detokenize: malformed trial layout");
  Trial trial;
  trial.x.assign(d, 0.0);
  for (std::size_t pos = 0; pos < d; ++pos) {
    const Token t = tokens[pos];
    if (!vocab.is_value(t)) throw DataError("detokenize: expected a value token");
    const auto& cfg = space[order[pos]];
    if (cfg.is_continuous()) {
      trial.x[order[pos]] = denormalize_param(dequantize(t, vocab.q()), cfg);
    } else {
      if (static_cast<std::size_t>(t) >= cfg.set_size())
        throw DataError("detokenize: bin " + std::to_string(t) + " outside the feasible set of '" +
                        cfg.name() + "'");
      trial.x[order[pos]] = cfg.value_at(static_cast<std::size_t>(t));
    }
  }
  const Token yt = tokens[d + 1];
  if (!vocab.is_value(yt)) throw DataError("detokenize: expected a function value token");
  trial.y = y_from_unit(dequantize(yt, vocab.q()), range, affine);
  return trial;
}

TokenizedStudy tokenize_study(const Study& study, const Vocab& vocab,
                              const TokenizeOptions& options) {
  TokenizedStudy out;
  const std::size_t d = study.metadata.space.dimension();
  out.param_order = resolve_perm(options.perm, d);
  out.y_range = observed_y_range(study.history);
  out.meta_tokens = serialize_metadata(study.metadata, vocab, options.drop, out.param_order);
  out.history_tokens = serialize_history(study.history, study.metadata.space, out.y_range,
                                         options.affine, out.param_order, vocab);
  return out;
}

TokenizeOptions sample_augmentation(const Study& study, const AugmentationConfig& config,
                                    Rng& rng) {
  TokenizeOptions opts;
  const std::size_t d = study.metadata.space.dimension();
  opts.perm.resize(d);
  std::iota(opts.perm.begin(), opts.perm.end(), std::size_t{0});
  if (config.permute) std::shuffle(opts.perm.begin(), opts.perm.end(), rng);
  if (config.y_affine) opts.affine = YAffine::sample(rng);
  if (config.metadata_drop) {
    opts.drop.text = uniform01(rng) < config.drop_probability;
    opts.drop.ranges = uniform01(rng) < config.drop_probability;
  }
  return opts;
}

std::string dump_tokens(std::span<const Token> tokens) {
  std::ostringstream os;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) os << ' ';
    os << tokens[i];
  }
  return os.str();
}

std::string render_tokens(std::span<const Token> tokens, const Vocab& vocab) {
  std::string out;
  bool block_has_content = false;
  for (Token t : tokens) {
    if (t == vocab.amp()) {
      out += "&";
      block_has_content = false;
    } else if (vocab.is_keyword(t)) {
      if (block_has_content) out += ",";
      out += vocab.mnemonic(t) + ":";
      block_has_content = true;
    } else {
      out += vocab.mnemonic(t);
      block_has_content = true;
    }
  }
  return out;
}

}  // namespace seqhpo
