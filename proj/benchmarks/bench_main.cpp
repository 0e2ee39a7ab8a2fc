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

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "goaec/kb.hpp"
#include "goaec/metrics.hpp"
#include "goaec/promptgen.hpp"
#include "goaec/random.hpp"
#include "goaec/utf8.hpp"

namespace {

using namespace goaec;

const std::u32string kAlphabet = U"敌人在哪里遇袭预习了给我一个绷带撤离点快去小心狙击手";

std::u32string random_text(Rng& rng, std::size_t len) {
  std::u32string s(len, U'\0');
  for (auto& c : s) c = kAlphabet[rng.below(kAlphabet.size())];
  return s;
}

void BM_Align(benchmark::State& state) {
  Rng rng(1);
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto ref = random_text(rng, len);
  auto hyp = ref;
  for (auto& c : hyp) {
    if (rng.below(8) == 0) c = kAlphabet[rng.below(kAlphabet.size())];
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::align(hyp, ref));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Align)->Arg(12)->Arg(32)->Arg(128);

void BM_Retrieve(benchmark::State& state) {
  Rng rng(2);
  kb::KnowledgeBase k;
  while (k.pair_count() < static_cast<std::size_t>(state.range(0))) {
    const auto correct = utf8::encode(random_text(rng, 2));
    const auto wrong = utf8::encode(random_text(rng, 2 + rng.below(2)));
    if (correct != wrong) k.add(correct, wrong);
  }
  const std::vector<std::string> hyps = {utf8::encode(random_text(rng, 20)), utf8::encode(random_text(rng, 20)),
                                         utf8::encode(random_text(rng, 20))};
  for (auto _ : state) benchmark::DoNotOptimize(k.retrieve(hyps));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Retrieve)->Arg(100)->Arg(1000)->Arg(10000);

void BM_BuildPrompt(benchmark::State& state) {
  prompt::NBestSet set;
  set.hypotheses = {{"ASR-B", "DNA在哪"}, {"ASR-A", "滴哪在哪"}, {"ASR-T", "敌人在哪"}};
  set.context = "四人小队，农场地图";
  std::vector<kb::TermPair> pairs(static_cast<std::size_t>(state.range(0)), {"敌人", "DNA"});
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(prompt::build_prompt(set, pairs, ++seed));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BuildPrompt)->Arg(0)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
