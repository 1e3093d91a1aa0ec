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

#include "cake/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "cake/common.hpp"

namespace cake {

namespace {

constexpr double kBleuEpsilon = 1e-9;

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts count_ngrams(const Tokens& toks, int n) {
  NgramCounts counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)]++;
  return counts;
}

// Closest reference length; ties resolve to the shorter reference.
int closest_ref_len(int hyp_len, const std::vector<Tokens>& refs) {
  int best = static_cast<int>(refs[0].size());
  for (const auto& r : refs) {
    const int len = static_cast<int>(r.size());
    const int d = std::abs(len - hyp_len), bd = std::abs(best - hyp_len);
    if (d < bd || (d == bd && len < best)) best = len;
  }
  return best;
}

}  // namespace

BleuStats bleu_corpus_stats(const std::vector<Tokens>& hypotheses,
                            const std::vector<std::vector<Tokens>>& reference_sets) {
  check(!hypotheses.empty(), "bleu: empty hypothesis set");
  check(hypotheses.size() == reference_sets.size(), "bleu: ", hypotheses.size(),
        " hypotheses vs ", reference_sets.size(), " reference sets");
  long long matched[4] = {0, 0, 0, 0};
  long long total[4] = {0, 0, 0, 0};
  long long hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const Tokens& hyp = hypotheses[i];
    const auto& refs = reference_sets[i];
    check(!refs.empty(), "bleu: example ", i, " has no references");
    hyp_len += static_cast<long long>(hyp.size());
    ref_len += closest_ref_len(static_cast<int>(hyp.size()), refs);
    for (int n = 1; n <= 4; ++n) {
      const NgramCounts hyp_counts = count_ngrams(hyp, n);
      for (const auto& [gram, cnt] : hyp_counts) {
        int max_ref = 0;
        for (const auto& r : refs) {
          const NgramCounts rc = count_ngrams(r, n);
          auto it = rc.find(gram);
          if (it != rc.end()) max_ref = std::max(max_ref, it->second);
        }
        matched[n - 1] += std::min(cnt, max_ref);
        total[n - 1] += cnt;
      }
    }
  }
  BleuStats stats;
  if (hyp_len == 0) return stats;
  // Orders where no hypothesis n-gram exists at all (every hypothesis is
  // shorter than n) drop out of the geometric mean, so short identical
  // pairs still score 100.
  double log_sum = 0;
  int orders = 0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) {
      stats.precision[n] = 0;
      continue;
    }
    const double p = matched[n] > 0
                         ? static_cast<double>(matched[n]) / static_cast<double>(total[n])
                         : kBleuEpsilon / static_cast<double>(total[n]);
    stats.precision[n] = p;
    log_sum += std::log(p);
    ++orders;
  }
  if (orders == 0) return stats;
  stats.brevity_penalty =
      hyp_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  stats.bleu = 100.0 * stats.brevity_penalty * std::exp(log_sum / orders);
  return stats;
}

double bleu_corpus(const std::vector<Tokens>& hypotheses,
                   const std::vector<std::vector<Tokens>>& reference_sets) {
  return bleu_corpus_stats(hypotheses, reference_sets).bleu;
}

double rouge_n(const Tokens& hypothesis, const Tokens& reference, int n) {
  check(n == 1 || n == 2, "rouge_n: n must be 1 or 2, got ", n);
  const NgramCounts hc = count_ngrams(hypothesis, n);
  const NgramCounts rc = count_ngrams(reference, n);
  long long hyp_total = 0, ref_total = 0, match = 0;
  for (const auto& [g, c] : hc) hyp_total += c;
  for (const auto& [g, c] : rc) ref_total += c;
  if (hyp_total == 0 || ref_total == 0) return 0.0;
  for (const auto& [g, c] : hc) {
    auto it = rc.find(g);
    if (it != rc.end()) match += std::min(c, it->second);
  }
  const double recall = static_cast<double>(match) / static_cast<double>(ref_total);
  const double precision = static_cast<double>(match) / static_cast<double>(hyp_total);
  if (recall + precision == 0.0) return 0.0;
  return 100.0 * 2.0 * recall * precision / (recall + precision);
}

double rouge_l(const Tokens& hypothesis, const Tokens& reference) {
  const std::size_t h = hypothesis.size(), r = reference.size();
  if (h == 0 || r == 0) return 0.0;
  // Two-row LCS table.
  std::vector<int> prev(r + 1, 0), cur(r + 1, 0);
  for (std::size_t i = 1; i <= h; ++i) {
    for (std::size_t j = 1; j <= r; ++j) {
      if (hypothesis[i - 1] == reference[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = prev[r];
  if (lcs == 0) return 0.0;
  const double recall = lcs / static_cast<double>(r);
  const double precision = lcs / static_cast<double>(h);
  return 100.0 * 2.0 * recall * precision / (recall + precision);
}

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "sr") return EvalMode::kSR;
  if (s == "mr") return EvalMode::kMR;
  fail("unknown eval mode '", s, "' (expected sr|mr)");
}

const char* to_string(EvalMode m) { return m == EvalMode::kSR ? "sr" : "mr"; }

MetricRow evaluate_corpus(const std::vector<Tokens>& outputs,
                          const std::vector<std::vector<Tokens>>& references, EvalMode mode) {
  check(!outputs.empty(), "evaluate_corpus: no outputs");
  check(outputs.size() == references.size(), "evaluate_corpus: ", outputs.size(),
        " outputs vs ", references.size(), " reference sets");
  std::vector<std::vector<Tokens>> ref_sets(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    check(!references[i].empty(), "evaluate_corpus: example ", i, " has no references");
    if (mode == EvalMode::kSR)
      ref_sets[i] = {references[i][0]};
    else
      ref_sets[i] = references[i];
  }
  MetricRow row;
  row.bleu = bleu_corpus(outputs, ref_sets);
  double r1 = 0, r2 = 0, rl = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    double b1 = 0, b2 = 0, bl = 0;
    for (const auto& ref : ref_sets[i]) {
      b1 = std::max(b1, rouge_n(outputs[i], ref, 1));
      b2 = std::max(b2, rouge_n(outputs[i], ref, 2));
      bl = std::max(bl, rouge_l(outputs[i], ref));
    }
    r1 += b1;
    r2 += b2;
    rl += bl;
  }
  const double n = static_cast<double>(outputs.size());
  row.rouge1 = r1 / n;
  row.rouge2 = r2 / n;
  row.rougeL = rl / n;
  return row;
}

std::string render_report_text(const std::vector<SystemScores>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %-4s %8s %8s %8s %8s\n", "system", "mode", "BLEU",
                "ROUGE-1", "ROUGE-2", "ROUGE-L");
  out += line;
  out += std::string(48, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-8s %-4s %8.2f %8.2f %8.2f %8.2f\n", r.name.c_str(), "SR",
                  r.sr.bleu, r.sr.rouge1, r.sr.rouge2, r.sr.rougeL);
    out += line;
    std::snprintf(line, sizeof(line), "%-8s %-4s %8.2f %8.2f %8.2f %8.2f\n", r.name.c_str(), "MR",
                  r.mr.bleu, r.mr.rouge1, r.mr.rouge2, r.mr.rougeL);
    out += line;
  }
  return out;
}

}  // namespace cake
