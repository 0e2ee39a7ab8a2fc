// Copyright (c) 2026 The goaec Authors
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

#include <gtest/gtest.h>

#include <string>
#include <utility>
#include <vector>

#include "goaec/error.hpp"
#include "goaec/metrics.hpp"
#include "goaec/random.hpp"
#include "goaec/utf8.hpp"
#include "oracle/oracle.hpp"

namespace {

using namespace goaec;
using metrics::normalize;
using metrics::OpKind;

std::u32string random_string(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  std::u32string s(rng.below(max_len + 1), U'\0');
  for (auto& c : s) c = static_cast<char32_t>(U'a' + rng.below(alphabet));
  return s;
}

TEST(Normalize, RemovesWhitespaceOnly) {
  EXPECT_EQ(normalize("给我 一个绷带", false).utf8(), "给我一个绷带");
}

TEST(Normalize, EmptyInput) {
  EXPECT_TRUE(normalize("").empty());
}

TEST(Normalize, StripsPunctuationWhenAsked) {
  EXPECT_EQ(normalize("retreat!!", true).utf8(), "retreat");
  EXPECT_EQ(normalize("retreat!!", false).utf8(), "retreat!!");
  EXPECT_EQ(normalize("快跑，敌人来了！", true).utf8(), "快跑敌人来了");
}

TEST(Normalize, IdeographicSpaceAndTabs) {
  EXPECT_EQ(normalize("敌人　在\t哪\n", false).utf8(), "敌人在哪");
}

TEST(Normalize, ComposesCanonically) {
  const auto n = normalize("é", false);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n.chars[0], U'é');
  EXPECT_EQ(normalize("é"), normalize("é"));
}

TEST(Normalize, Idempotent) {
  for (const char* s : {"给我 一个绷带", "retreat!!", "  a b　c ", "é。"}) {
    const auto once = normalize(s);
    EXPECT_EQ(normalize(once.utf8()), once) << s;
  }
}

TEST(Align, TwoAdjacentSubstitutions) {
  const auto script = metrics::align(normalize("哪里预习了"), normalize("哪里遇袭了"));
  EXPECT_EQ(script.s_count, 2u);
  EXPECT_EQ(script.d_count, 0u);
  EXPECT_EQ(script.i_count, 0u);
  std::vector<std::size_t> sub_positions;
  for (const auto& op : script.ops) {
    if (op.kind == OpKind::Substitute) sub_positions.push_back(*op.ref_index);
  }
  EXPECT_EQ(sub_positions, (std::vector<std::size_t>{2, 3}));
}

TEST(Align, IdentityIsAllMatches) {
  const auto script = metrics::align(normalize("敌人在哪"), normalize("敌人在哪"));
  EXPECT_EQ(script.errors(), 0u);
  ASSERT_EQ(script.ops.size(), 4u);
  for (const auto& op : script.ops) EXPECT_EQ(op.kind, OpKind::Match);
}

TEST(Align, EmptyHypothesisNeedsInsertions) {
  const auto script = metrics::align(normalize(""), normalize("abc"));
  EXPECT_EQ(script.i_count, 3u);
  EXPECT_EQ(script.s_count + script.d_count, 0u);
}

TEST(Align, LongerHypothesisNeedsDeletions) {
  const auto script = metrics::align(normalize("abcdef"), normalize("abc"));
  EXPECT_EQ(script.d_count, 3u);
  EXPECT_EQ(script.s_count + script.i_count, 0u);
}

TEST(Align, TiesPreferSubstitution) {
  // "ab" -> "ba" costs 2 either as two substitutions or a delete/insert pair.
  const auto script = metrics::align(U"ab", U"ba");
  EXPECT_EQ(script.s_count, 2u);
  EXPECT_EQ(script.d_count + script.i_count, 0u);
}

TEST(Align, DeterministicAcrossCalls) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_string(rng, 10, 4);
    const auto b = random_string(rng, 10, 4);
    const auto x = metrics::align(a, b);
    const auto y = metrics::align(a, b);
    ASSERT_EQ(x.ops.size(), y.ops.size());
    for (std::size_t k = 0; k < x.ops.size(); ++k) {
      EXPECT_EQ(x.ops[k].kind, y.ops[k].kind);
      EXPECT_EQ(x.ops[k].hyp_index, y.ops[k].hyp_index);
      EXPECT_EQ(x.ops[k].ref_index, y.ops[k].ref_index);
    }
  }
}

TEST(Cer, Examples) {
  EXPECT_DOUBLE_EQ(metrics::cer(normalize("哪里遇袭了"), normalize("哪里遇袭了")), 0.0);
  EXPECT_DOUBLE_EQ(metrics::cer(normalize("哪里预习了"), normalize("哪里遇袭了")), 40.0);
  EXPECT_DOUBLE_EQ(metrics::cer(normalize("abcdef"), normalize("abc")), 100.0);
  EXPECT_DOUBLE_EQ(metrics::cer(normalize(""), normalize("abc")), 100.0);
}

TEST(Cer, MayExceedOneHundred) {
  EXPECT_DOUBLE_EQ(metrics::cer(normalize("abcdefg"), normalize("a")), 600.0);
}

TEST(Cer, EmptyReferenceThrows) {
  EXPECT_THROW(metrics::cer(normalize("abc"), normalize("")), InvalidArgument);
  EXPECT_THROW(metrics::cer(normalize(""), normalize(" !")), InvalidArgument);
}

TEST(ScoreCorpus, OneOfThreeWrong) {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"敌人在哪", "敌人在哪"}, {"DNA在哪", "敌人在哪"}, {"给我绷带", "给我绷带"}};
  const auto score = metrics::score_corpus(pairs);
  EXPECT_NEAR(score.ser, 100.0 / 3.0, 1e-9);
  EXPECT_EQ(score.sentence_errors, 1u);
  EXPECT_EQ(score.sentence_total, 3u);
}

TEST(ScoreCorpus, AllCorrect) {
  const std::vector<std::pair<std::string, std::string>> pairs = {{"a", "a"}, {"bc", "bc"}};
  const auto score = metrics::score_corpus(pairs);
  EXPECT_EQ(score.cer, 0.0);
  EXPECT_EQ(score.ser, 0.0);
}

TEST(ScoreCorpus, HandCounted) {
  const std::vector<std::pair<std::string, std::string>> pairs = {{"ab", "ab"}, {"ax", "ab"}};
  const auto score = metrics::score_corpus(pairs);
  EXPECT_DOUBLE_EQ(score.cer, 25.0);
  EXPECT_DOUBLE_EQ(score.ser, 50.0);
  EXPECT_EQ(score.total_ref_chars, 4u);
  EXPECT_EQ(score.total_s, 1u);
}

TEST(ScoreCorpus, PooledNotMean) {
  // Per-sentence CERs are 100 and 0 (mean 50); pooled is 1/11.
  const std::vector<std::pair<std::string, std::string>> pairs = {{"x", "a"}, {"abcdefghij", "abcdefghij"}};
  const auto score = metrics::score_corpus(pairs);
  EXPECT_NEAR(score.cer, 100.0 / 11.0, 1e-9);
}

TEST(ScoreCorpus, Errors) {
  const std::vector<std::pair<std::string, std::string>> none;
  EXPECT_THROW(metrics::score_corpus(none), InvalidArgument);
  const std::vector<std::pair<std::string, std::string>> empty_ref = {{"a", "a"}, {"a", ""}};
  EXPECT_THROW(metrics::score_corpus(empty_ref), InvalidArgument);
}

TEST(MetricsProperty, AlignMatchesOracle) {
  Rng rng(20260101);
  for (int i = 0; i < 1000; ++i) {
    const auto hyp = random_string(rng, 12, 20);
    const auto ref = random_string(rng, 12, 20);
    const auto script = metrics::align(hyp, ref);
    ASSERT_EQ(script.errors(), oracle::levenshtein(hyp, ref)) << i;
    ASSERT_EQ(metrics::edit_distance(hyp, ref), script.errors());
  }
}

TEST(MetricsProperty, ReplayReproducesReference) {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const auto hyp = random_string(rng, 12, 5);
    const auto ref = random_string(rng, 12, 5);
    ASSERT_EQ(metrics::apply(metrics::align(hyp, ref), hyp), ref) << i;
  }
}

TEST(MetricsProperty, OpCountsAndIndicesConsistent) {
  Rng rng(91);
  for (int i = 0; i < 500; ++i) {
    const auto hyp = random_string(rng, 12, 4);
    const auto ref = random_string(rng, 12, 4);
    const auto script = metrics::align(hyp, ref);
    std::size_t s = 0, d = 0, ins = 0, next_h = 0, next_r = 0;
    for (const auto& op : script.ops) {
      switch (op.kind) {
        case OpKind::Match:
        case OpKind::Substitute:
          ASSERT_EQ(*op.hyp_index, next_h++);
          ASSERT_EQ(*op.ref_index, next_r++);
          ASSERT_EQ(op.kind == OpKind::Match, *op.hyp_char == *op.ref_char);
          if (op.kind == OpKind::Substitute) ++s;
          break;
        case OpKind::Delete:
          ASSERT_EQ(*op.hyp_index, next_h++);
          ASSERT_FALSE(op.ref_index.has_value());
          ++d;
          break;
        case OpKind::Insert:
          ASSERT_EQ(*op.ref_index, next_r++);
          ASSERT_FALSE(op.hyp_index.has_value());
          ++ins;
          break;
      }
    }
    EXPECT_EQ(next_h, hyp.size());
    EXPECT_EQ(next_r, ref.size());
    EXPECT_EQ(s, script.s_count);
    EXPECT_EQ(d, script.d_count);
    EXPECT_EQ(ins, script.i_count);
  }
}

TEST(MetricsProperty, ZeroCerIffEqual) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    auto ref = random_string(rng, 6, 3);
    if (ref.empty()) ref = U"a";
    const auto hyp = random_string(rng, 6, 3);
    const auto h = normalize(utf8::encode(hyp));
    const auto r = normalize(utf8::encode(ref));
    EXPECT_EQ(metrics::cer(h, r) == 0.0, h == r);
  }
}

TEST(MetricsProperty, CorpusCerMatchesOracle) {
  Rng rng(11);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::pair<std::u32string, std::u32string>> raw;
  for (int i = 0; i < 200; ++i) {
    const auto hyp = random_string(rng, 10, 6);
    auto ref = random_string(rng, 10, 6);
    if (ref.empty()) ref = U"q";
    pairs.emplace_back(utf8::encode(hyp), utf8::encode(ref));
    raw.emplace_back(hyp, ref);
  }
  EXPECT_NEAR(metrics::score_corpus(pairs).cer, oracle::cer(raw), 1e-9);
}

}  // namespace
