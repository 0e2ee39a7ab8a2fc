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

#pragma once

// Reference implementations used only to check the library. They are kept
// deliberately naive and share no code with it.

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Full-matrix DP straight from the recurrence.
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  return d[n][m];
}

// Every (correct, erroneous) pair whose erroneous string is a substring of
// any hypothesis.
inline std::set<std::pair<std::string, std::string>> retrieve(
    const std::vector<std::pair<std::string, std::string>>& kb, const std::vector<std::string>& hypotheses) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& entry : kb) {
    for (const auto& h : hypotheses) {
      if (h.find(entry.second) != std::string::npos) {
        out.insert(entry);
        break;
      }
    }
  }
  return out;
}

// Percent CER from per-sentence distances and reference lengths.
inline double cer(const std::vector<std::pair<std::u32string, std::u32string>>& hyp_ref) {
  std::size_t errors = 0;
  std::size_t chars = 0;
  for (const auto& [h, r] : hyp_ref) {
    errors += levenshtein(h, r);
    chars += r.size();
  }
  return 100.0 * static_cast<double>(errors) / static_cast<double>(chars);
}

}  // namespace oracle
