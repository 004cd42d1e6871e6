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

// Study <-> token sequence conversion.
//
// A history of t trials over D parameters becomes
//
//   x_1^1 .. x_1^D * y_1 | ... | x_t^1 .. x_t^D * y_t
//
// where every x and y is a single value token in [0, Q). Metadata becomes a
// stream of keyword/enum tokens and byte tokens, with '&' opening each
// parameter block.

#ifndef SEQHPO_TOKENIZER_H_
#define SEQHPO_TOKENIZER_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqhpo/core_types.h"
#include "seqhpo/random.h"

namespace seqhpo {

using Token = int;
using TokenSeq = std::vector<Token>;

enum class Keyword {
  kName,
  kMetric,
  kGoal,
  kType,
  kAlgorithm,
  kMinValue,
  kMaxValue,
  kScaleType,
  kCategories,
  kValues,
};
inline constexpr int kNumKeywords = 10;

enum class EnumToken {
  kDouble,
  kInteger,
  kDiscrete,
  kCategorical,
  kLinear,
  kLog,
  kMaximize,
  kMinimize,
};
inline constexpr int kNumEnumTokens = 8;

// Token id layout:
//   [0, Q)            value bins
//   Q .. Q+3          '*', '|', '&', start-of-history
//   then              keywords, enum values, 256 raw bytes
class Vocab {
 public:
  explicit Vocab(int q = 1000);

  int q() const { return q_; }
  int size() const { return byte_base_ + 256; }

  Token star() const { return q_; }
  Token bar() const { return q_ + 1; }
  Token amp() const { return q_ + 2; }
  Token bos() const { return q_ + 3; }
  Token keyword(Keyword k) const { return keyword_base_ + static_cast<int>(k); }
  Token enum_token(EnumToken e) const { return enum_base_ + static_cast<int>(e); }
  Token byte(unsigned char c) const { return byte_base_ + c; }

  bool is_value(Token t) const { return t >= 0 && t < q_; }
  bool is_separator(Token t) const { return t == star() || t == bar(); }
  bool is_keyword(Token t) const { return t >= keyword_base_ && t < enum_base_; }
  bool is_enum(Token t) const { return t >= enum_base_ && t < byte_base_; }
  bool is_byte(Token t) const { return t >= byte_base_ && t < size(); }
  Keyword as_keyword(Token t) const { return static_cast<Keyword>(t - keyword_base_); }
  EnumToken as_enum(Token t) const { return static_cast<EnumToken>(t - enum_base_); }
  unsigned char as_byte(Token t) const { return static_cast<unsigned char>(t - byte_base_); }

  // Angle-bracket mnemonic used by the debug renderer.
  std::string mnemonic(Token t) const;

 private:
  int q_;
  int keyword_base_;
  int enum_base_;
  int byte_base_;
};

// floor(u * q), with u == 1 mapped to q - 1.
int quantize(double u, int q);
// Bin midpoint (bin + 0.5) / q.
double dequantize(int bin, int q);

// Random rescaling of normalized function values: u -> u * scale + shift.
struct YAffine {
  double scale = 1.0;
  double shift = 0.0;

  static YAffine sample(Rng& rng);
  // Fixed inference-time mapping: observed range onto [0.2, 0.8].
  static YAffine inference() { return {0.6, 0.2}; }
  void validate() const;
};

double apply_y_affine(double u, const YAffine& affine);
double invert_y_affine(double v, const YAffine& affine);

struct YRange {
  double min = 0.0;
  double max = 0.0;
  bool degenerate() const { return !(min < max); }
};

YRange observed_y_range(std::span<const Trial> history);

// Which metadata fields to omit. `text` drops study name, metric, free text
// and parameter names; `ranges` drops bounds, scale, DISCRETE values and
// CATEGORICAL categories. Types, goal and algorithm always stay.
struct MetadataDrop {
  bool text = false;
  bool ranges = false;

  static MetadataDrop minimal() { return {true, true}; }
};

// `perm[i]` is the original index of the parameter placed at position i; an
// empty span means identity.
TokenSeq serialize_metadata(const Metadata& metadata, const Vocab& vocab, MetadataDrop drop = {},
                            std::span<const std::size_t> perm = {});

// Metadata recovered from tokens; fields the serializer dropped stay empty.
struct ParsedParameter {
  std::optional<std::string> name;
  std::optional<ParamKind> kind;
  std::optional<double> min_value;
  std::optional<double> max_value;
  std::optional<ScaleType> scale;
  std::vector<double> values;
  std::vector<std::string> categories;
};

struct ParsedMetadata {
  std::optional<std::string> name;
  std::optional<std::string> metric_name;
  std::optional<Goal> goal;
  std::optional<std::string> algorithm;
  std::optional<std::string> free_text;
  std::vector<ParsedParameter> parameters;
};

ParsedMetadata parse_metadata(std::span<const Token> tokens, const Vocab& vocab);

// Value token of one parameter value (bin for DOUBLE/INTEGER, set index otherwise).
Token param_token(double value, const ParameterConfig& cfg, const Vocab& vocab);
// Value token of a function value under `range` and optional affine.
Token y_token(double y, const YRange& range, const std::optional<YAffine>& affine,
              const Vocab& vocab);

TokenSeq serialize_history(std::span<const Trial> history, const SearchSpace& space,
                           const YRange& range, const std::optional<YAffine>& affine,
                           std::span<const std::size_t> perm, const Vocab& vocab);

// Maps the D+2 tokens [x^1 .. x^D, *, y] (an optional trailing '|' is
// accepted) back to a trial in original parameter order. DOUBLE/INTEGER come
// back at bin midpoints.
Trial detokenize_trial(std::span<const Token> tokens, const SearchSpace& space,
                       const YRange& range, const Vocab& vocab,
                       const std::optional<YAffine>& affine = std::nullopt,
                       std::span<const std::size_t> perm = {});

// Inverse of the y tokenization at bin `bin`'s midpoint.
double y_from_unit(double v, const YRange& range, const std::optional<YAffine>& affine);

struct TokenizeOptions {
  MetadataDrop drop;
  std::optional<YAffine> affine;
  std::vector<std::size_t> perm;
};

struct TokenizedStudy {
  TokenSeq meta_tokens;
  TokenSeq history_tokens;
  YRange y_range;
  std::vector<std::size_t> param_order;
};

TokenizedStudy tokenize_study(const Study& study, const Vocab& vocab,
                              const TokenizeOptions& options = {});

struct AugmentationConfig {
  bool permute = true;
  bool y_affine = true;
  bool metadata_drop = true;
  double drop_probability = 0.25;
};

// Draws per-example augmentation choices.
TokenizeOptions sample_augmentation(const Study& study, const AugmentationConfig& config,
                                    Rng& rng);

// Whitespace-separated integer ids.
std::string dump_tokens(std::span<const Token> tokens);
// Human-readable rendering, e.g. `<name>:"x",<type>:<DOUBLE>` and `<831><0>*<0>|`.
std::string render_tokens(std::span<const Token> tokens, const Vocab& vocab);

// Shortest round-trip decimal with a compact exponent ("1e-6").
std::string format_number(double v);

}  // namespace seqhpo

#endif  // SEQHPO_TOKENIZER_H_
