// Copyright 2026 The cake Authors
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

// Brute-force metric oracle, independent of src/metrics.cpp: n-grams by
// exhaustive position matching instead of count tables, LCS by the memoized
// recursive definition instead of the iterative table. The fixture file
// under data/fixtures was produced from this oracle (tests/gen_fixtures).

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace cake::testing::oracle {

using Tokens = std::vector<std::string>;

inline bool ngram_at_equals(const Tokens& a, std::size_t i, const Tokens& b, std::size_t j,
                            int n) {
  for (int k = 0; k < n; ++k)
    if (a[i + k] != b[j + k]) return false;
  return true;
}

// Occurrences of the n-gram a[i..i+n) inside b, scanning every position.
inline int count_occurrences(const Tokens& a, std::size_t i, const Tokens& b, int n) {
  if (static_cast<int>(b.size()) < n) return 0;
  int cnt = 0;
  for (std::size_t j = 0; j + n <= b.size(); ++j)
    if (ngram_at_equals(a, i, b, j, n)) ++cnt;
  return cnt;
}

struct ClipStats {
  long long matched = 0;
  long long total = 0;
};

inline ClipStats clipped_matches(const Tokens& hyp, const std::vector<Tokens>& refs, int n) {
  ClipStats s;
  if (static_cast<int>(hyp.size()) < n) return s;
  for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
    // Each distinct n-gram is processed at its first position only.
    bool seen_before = false;
    for (std::size_t j = 0; j < i && !seen_before; ++j)
      seen_before = ngram_at_equals(hyp, i, hyp, j, n);
    if (seen_before) continue;
    const int hyp_cnt = count_occurrences(hyp, i, hyp, n);
    int ref_cnt = 0;
    for (const auto& r : refs) ref_cnt = std::max(ref_cnt, count_occurrences(hyp, i, r, n));
    s.matched += std::min(hyp_cnt, ref_cnt);
    s.total += hyp_cnt;
  }
  return s;
}

inline double bleu_corpus(const std::vector<Tokens>& hyps,
                          const std::vector<std::vector<Tokens>>& refs) {
  long long matched[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  long long hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    hyp_len += static_cast<long long>(hyps[i].size());
    int best = static_cast<int>(refs[i][0].size());
    for (const auto& r : refs[i]) {
      const int len = static_cast<int>(r.size());
      const int hl = static_cast<int>(hyps[i].size());
      if (std::abs(len - hl) < std::abs(best - hl) ||
          (std::abs(len - hl) == std::abs(best - hl) && len < best))
        best = len;
    }
    ref_len += best;
    for (int n = 1; n <= 4; ++n) {
      const ClipStats s = clipped_matches(hyps[i], refs[i], n);
      matched[n - 1] += s.matched;
      total[n - 1] += s.total;
    }
  }
  if (hyp_len == 0) return 0.0;
  double log_sum = 0;
  for (int n = 0; n < 4; ++n) {
    const double p = matched[n] > 0
                         ? static_cast<double>(matched[n]) / static_cast<double>(total[n])
                         : 1e-9 / static_cast<double>(std::max<long long>(1, total[n]));
    log_sum += std::log(p);
  }
  const double bp = hyp_len >= ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

inline double rouge_n(const Tokens& hyp, const Tokens& ref, int n) {
  const long long hyp_total =
      static_cast<int>(hyp.size()) >= n ? static_cast<long long>(hyp.size()) - n + 1 : 0;
  const long long ref_total =
      static_cast<int>(ref.size()) >= n ? static_cast<long long>(ref.size()) - n + 1 : 0;
  if (hyp_total == 0 || ref_total == 0) return 0.0;
  const ClipStats s = clipped_matches(hyp, {ref}, n);
  const double recall = static_cast<double>(s.matched) / static_cast<double>(ref_total);
  const double precision = static_cast<double>(s.matched) / static_cast<double>(hyp_total);
  if (recall + precision == 0.0) return 0.0;
  return 100.0 * 2.0 * recall * precision / (recall + precision);
}

// LCS straight from the recursive definition, memoized.
inline int lcs_recursive(const Tokens& a, const Tokens& b, std::size_t i, std::size_t j,
                         std::map<std::pair<std::size_t, std::size_t>, int>& memo) {
  if (i == 0 || j == 0) return 0;
  const auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  int v;
  if (a[i - 1] == b[j - 1])
    v = lcs_recursive(a, b, i - 1, j - 1, memo) + 1;
  else
    v = std::max(lcs_recursive(a, b, i - 1, j, memo), lcs_recursive(a, b, i, j - 1, memo));
  memo[key] = v;
  return v;
}

inline int lcs_len(const Tokens& a, const Tokens& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  return lcs_recursive(a, b, a.size(), b.size(), memo);
}

inline double rouge_l(const Tokens& hyp, const Tokens& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const double lcs = lcs_len(hyp, ref);
  if (lcs == 0) return 0.0;
  const double recall = lcs / static_cast<double>(ref.size());
  const double precision = lcs / static_cast<double>(hyp.size());
  return 100.0 * 2.0 * recall * precision / (recall + precision);
}

}  // namespace cake::testing::oracle
