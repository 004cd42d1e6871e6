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
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.h"

namespace seqhpo {
namespace {

const Vocab kVocab(1000);

TEST_CASE("quantize and dequantize") {
  CHECK(quantize(0.12345, 1000) == 123);
  CHECK(quantize(1.0, 1000) == 999);
  CHECK(quantize(0.0, 1000) == 0);
  CHECK_THROWS_AS(quantize(1.0001, 1000), DataError);
  CHECK_THROWS_AS(quantize(-0.1, 1000), DataError);
  CHECK(dequantize(0, 1000) == doctest::Approx(0.0005));
  CHECK(dequantize(999, 1000) == doctest::Approx(0.9995));
  CHECK(dequantize(123, 1000) == doctest::Approx(0.1235));
  CHECK_THROWS_AS(dequantize(1000, 1000), DataError);
  CHECK_THROWS_AS(dequantize(-1, 1000), DataError);
  for (int b = 0; b < 1000; ++b) CHECK(quantize(dequantize(b, 1000), 1000) == b);
}

TEST_CASE("vocab ranges are disjoint") {
  CHECK(kVocab.size() == 1000 + 4 + kNumKeywords + kNumEnumTokens + 256);
  int classified = 0;
  for (Token t = 0; t < kVocab.size(); ++t) {
    const int kinds = kVocab.is_value(t) + kVocab.is_keyword(t) + kVocab.is_enum(t) +
                      kVocab.is_byte(t) + (t == kVocab.star() || t == kVocab.bar() ||
                                           t == kVocab.amp() || t == kVocab.bos());
    CHECK(kinds == 1);
    classified += kinds;
  }
  CHECK(classified == kVocab.size());
  CHECK_THROWS_AS(Vocab(1), UsageError);
}

TEST_CASE("metadata renders like the preprocessed convnet study") {
  const auto study = testing::convnet_study();
  const auto tokens = serialize_metadata(study.metadata, kVocab);
  const std::string expected =
      "<name>:\"convnet on cifar10\",<metric>:\"accuracy\",<goal>:<MAXIMIZE>,"
      "<algorithm>:\"random_search\""
      "&<name>:\"opt_kw.lr\",<type>:<DOUBLE>,<min_value>:1e-6,<max_value>:1e-2,"
      "<scale_type>:<LOG>"
      "&<name>:\"opt_type\",<type>:<CATEGORICAL>,<categories>:[\"SGD\", \"Adam\"]";
  CHECK(render_tokens(tokens, kVocab) == expected);
}

TEST_CASE("metadata structure and parse-back") {
  Metadata m;
  m.name = "one";
  m.algorithm = "random_search";
  m.space = SearchSpace({ParameterConfig::Double("x", -1.0, 2.5)});
  const auto tokens = serialize_metadata(m, kVocab);
  CHECK(std::count(tokens.begin(), tokens.end(), kVocab.amp()) == 1);

  auto study = testing::convnet_study();
  study.metadata.free_text = "tuned with \"quotes\" and \\ slashes";
  const auto full = parse_metadata(serialize_metadata(study.metadata, kVocab), kVocab);
  CHECK(full.name == study.metadata.name);
  CHECK(full.metric_name == study.metadata.metric_name);
  CHECK(full.free_text == study.metadata.free_text);
  REQUIRE(full.parameters.size() == 2);
  CHECK(full.parameters[0].min_value == 1e-6);
  CHECK(full.parameters[0].max_value == 1e-2);
  CHECK(full.parameters[0].scale == ScaleType::kLog);
  CHECK(full.parameters[1].categories == std::vector<std::string>{"SGD", "Adam"});

  // Two different drop draws agree on everything that is never dropped.
  AugmentationConfig cfg;
  cfg.permute = false;
  cfg.drop_probability = 0.5;
  Rng rng_a(1), rng_b(99);
  for (int k = 0; k < 20; ++k) {
    const auto a = sample_augmentation(study, cfg, rng_a);
    const auto b = sample_augmentation(study, cfg, rng_b);
    const auto pa = parse_metadata(serialize_metadata(study.metadata, kVocab, a.drop), kVocab);
    const auto pb = parse_metadata(serialize_metadata(study.metadata, kVocab, b.drop), kVocab);
    CHECK(pa.algorithm == pb.algorithm);
    CHECK(pa.algorithm == std::string("random_search"));
    REQUIRE(pa.parameters.size() == pb.parameters.size());
    for (std::size_t i = 0; i < pa.parameters.size(); ++i)
      CHECK(pa.parameters[i].kind == pb.parameters[i].kind);
  }
  const auto minimal =
      parse_metadata(serialize_metadata(study.metadata, kVocab, MetadataDrop::minimal()), kVocab);
  CHECK_FALSE(minimal.name.has_value());
  CHECK_FALSE(minimal.free_text.has_value());
  CHECK_FALSE(minimal.parameters[0].min_value.has_value());
  CHECK(minimal.parameters[0].kind == ParamKind::kDouble);
  CHECK(minimal.parameters[1].kind == ParamKind::kCategorical);
}

TEST_CASE("discrete and integer metadata parse back") {
  Metadata m;
  m.algorithm = "grid_search";
  m.goal = Goal::kMinimize;
  m.space = SearchSpace({ParameterConfig::Discrete("d", {-5.0, 0.25, 5.0}),
                         ParameterConfig::Integer("i", 1, 4096, ScaleType::kLog)});
  const auto p = parse_metadata(serialize_metadata(m, kVocab), kVocab);
  CHECK(p.goal == Goal::kMinimize);
  CHECK(p.parameters[0].values == std::vector<double>{-5.0, 0.25, 5.0});
  CHECK(p.parameters[1].kind == ParamKind::kInteger);
  CHECK(p.parameters[1].max_value == 4096.0);
}

TEST_CASE("history tokens reproduce the convnet example") {
  const auto study = testing::convnet_study();
  const auto range = observed_y_range(study.history);
  const auto tokens =
      serialize_history(study.history, study.metadata.space, range, std::nullopt, {}, kVocab);
  const TokenSeq expected = {831, 0, kVocab.star(), 0, kVocab.bar(), 645, 1, kVocab.star(), 999};
  CHECK(tokens == expected);
  CHECK(render_tokens(tokens, kVocab) == "<831><0>*<0>|<645><1>*<999>");
  CHECK(dump_tokens(tokens).substr(0, 6) == "831 0 ");

  CHECK(serialize_history({}, study.metadata.space, range, std::nullopt, {}, kVocab).empty());
  const std::vector<Trial> single = {study.history[0]};
  const auto one = serialize_history(single, study.metadata.space, observed_y_range(single),
                                     std::nullopt, {}, kVocab);
  CHECK(one.back() == 0);

  // Incompatible trial.
  std::vector<Trial> bad = {Trial{{0.5, 0.0}, 1.0}};
  CHECK_THROWS_AS(serialize_history(bad, study.metadata.space, {0, 1}, std::nullopt, {}, kVocab),
                  DataError);
}

TEST_CASE("detokenize_trial") {
  const auto study = testing::convnet_study();
  const auto& space = study.metadata.space;
  const auto range = observed_y_range(study.history);
  const TokenSeq first = {831, 0, kVocab.star(), 0};
  const auto t = detokenize_trial(first, space, range, kVocab);
  CHECK(std::abs(normalize_param(t.x[0], space[0]) - normalize_param(0.0021237573, space[0])) <=
        1.0 / 1000);
  CHECK(t.x[0] == doctest::Approx(2.13e-3).epsilon(0.01));
  CHECK(t.x[1] == 0.0);
  CHECK(space[1].categories()[static_cast<std::size_t>(t.x[1])] == "SGD");

  const TokenSeq lowest = {0, 1, kVocab.star(), 5};
  const auto lo = detokenize_trial(lowest, space, range, kVocab);
  CHECK(lo.x[0] == doctest::Approx(std::pow(10.0, -6.0 + 4.0 * 0.0005)));
  CHECK(lo.x[0] > 1e-6);

  const TokenSeq bad_cat = {10, 2, kVocab.star(), 5};
  CHECK_THROWS_AS(detokenize_trial(bad_cat, space, range, kVocab), DataError);
  const TokenSeq bad_layout = {10, 1, 5};
  CHECK_THROWS_AS(detokenize_trial(bad_layout, space, range, kVocab), DataError);
}

TEST_CASE("y affine") {
  const YAffine a{0.6, 0.2};
  CHECK(apply_y_affine(0.5, a) == doctest::Approx(0.5));
  CHECK(apply_y_affine(1.0, a) == doctest::Approx(0.8));
  CHECK(quantize(apply_y_affine(1.0, a), 1000) == 800);
  CHECK(apply_y_affine(0.0, YAffine{0.35, 0.4}) == doctest::Approx(0.4));
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const auto s = YAffine::sample(rng);
    CHECK(s.scale >= 0.3);
    CHECK(s.scale <= 1.0);
    CHECK(s.shift >= 0.0);
    CHECK(s.shift + s.scale <= 1.0 + 1e-12);
  }
  // Observed {0, 1} under the inference mapping.
  std::vector<Trial> h = {Trial{{0.5}, 0.0}, Trial{{0.5}, 1.0}};
  const SearchSpace space({ParameterConfig::Double("x", 0, 1)});
  const auto tokens = serialize_history(h, space, observed_y_range(h), YAffine::inference(), {}, kVocab);
  CHECK(tokens[2] == 200);
  CHECK(tokens[6] == 800);
}

TEST_CASE("round trip, layout and permutation properties") {
  Rng rng(11);
  for (int k = 0; k < 500; ++k) {
    const auto study = testing::random_study(rng);
    const auto& space = study.metadata.space;
    const std::size_t d = space.dimension();
    const auto range = observed_y_range(study.history);
    const auto tokens = serialize_history(study.history, space, range, std::nullopt, {}, kVocab);
    const std::size_t t = study.history.size();
    CHECK(tokens.size() == (t == 0 ? 0 : (d + 3) * t - 1));
    for (std::size_t i = 0; i < t; ++i) {
      const auto window = std::span<const Token>(tokens).subspan(i * (d + 3), d + 2);
      CHECK(window[d] == kVocab.star());
      if (i + 1 < t) CHECK(tokens[i * (d + 3) + d + 2] == kVocab.bar());
      const auto back = detokenize_trial(window, space, range, kVocab);
      for (std::size_t j = 0; j < d; ++j) {
        if (space[j].is_continuous()) {
          const double err = std::abs(normalize_param(back.x[j], space[j]) -
                                      normalize_param(study.history[i].x[j], space[j]));
          CHECK(err <= 1.0 / kVocab.q() + 1e-12);
          const bool small_integer = space[j].kind() == ParamKind::kInteger &&
                                     space[j].scale() == ScaleType::kLinear &&
                                     space[j].max_value() - space[j].min_value() < kVocab.q();
          if (small_integer) CHECK(back.x[j] == study.history[i].x[j]);
        } else {
          CHECK(back.x[j] == study.history[i].x[j]);
        }
      }
    }

    // Permuted serialization, un-permuted, equals the identity serialization.
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto permuted = serialize_history(study.history, space, range, std::nullopt, perm, kVocab);
    TokenSeq unpermuted = permuted;
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t pos = 0; pos < d; ++pos)
        unpermuted[i * (d + 3) + perm[pos]] = permuted[i * (d + 3) + pos];
    }
    CHECK(unpermuted == tokens);
    for (std::size_t i = 0; i < t; ++i) {
      const auto window = std::span<const Token>(permuted).subspan(i * (d + 3), d + 2);
      const auto back = detokenize_trial(window, space, range, kVocab, std::nullopt, perm);
      for (std::size_t j = 0; j < d; ++j) {
        if (!space[j].is_continuous()) CHECK(back.x[j] == study.history[i].x[j]);
      }
    }
  }
}

TEST_CASE("token count at t trials for the convnet study") {
  auto study = testing::convnet_study();
  study.history.resize(1);
  for (std::size_t t = 1; t <= 6; ++t) {
    if (t > 1) study.history.push_back(Trial{{1e-4, 1.0}, 0.1 * static_cast<double>(t)});
    const auto tok = tokenize_study(study, kVocab);
    CHECK(tok.history_tokens.size() == (2 + 3) * t - 1);
  }
}

TEST_CASE("format_number") {
  CHECK(format_number(1e-6) == "1e-6");
  CHECK(format_number(1e-2) == "1e-2");
  CHECK(format_number(0.015) == "0.015");
  CHECK(format_number(100.0) == "1e2");
  CHECK(format_number(-5.0) == "-5");
  CHECK(format_number(1e20) == "1e20");
  CHECK(format_number(0.25) == "0.25");
}

}  // namespace
}  // namespace seqhpo
