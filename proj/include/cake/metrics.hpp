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

#pragma once

#include <string>
#include <vector>

#include "cake/common.hpp"

namespace cake {

using Tokens = std::vector<std::string>;

// Corpus-level BLEU-4 on a 0..100 scale: clipped modified n-gram precision
// for n = 1..4 aggregated over the corpus, geometric mean, brevity penalty
// against the closest reference length (ties to the shorter). An order with
// zero matches contributes an epsilon (1e-9) numerator instead of log 0.
// hypotheses and reference_sets must be aligned and non-empty.
struct BleuStats {
  double precision[4] = {0, 0, 0, 0};
  double brevity_penalty = 0;
  double bleu = 0;  // 0..100
};

BleuStats bleu_corpus_stats(const std::vector<Tokens>& hypotheses,
                            const std::vector<std::vector<Tokens>>& reference_sets);

double bleu_corpus(const std::vector<Tokens>& hypotheses,
                   const std::vector<std::vector<Tokens>>& reference_sets);

// Sentence-level ROUGE-N F1 (n = 1 or 2) on 0..100; clipped n-gram counts,
// 0 when either side has no n-grams.
double rouge_n(const Tokens& hypothesis, const Tokens& reference, int n);

// Sentence-level ROUGE-L F1 on 0..100 from the longest common subsequence.
double rouge_l(const Tokens& hypothesis, const Tokens& reference);

struct MetricRow {
  double bleu = 0;
  double rouge1 = 0;
  double rouge2 = 0;
  double rougeL = 0;
};

enum class EvalMode { kSR, kMR };

EvalMode eval_mode_from_string(const std::string& s);
const char* to_string(EvalMode m);

// SR scores against references[0] only. MR takes the per-example max over
// references for the ROUGE cells and all references jointly for BLEU.
// ROUGE cells are corpus means of per-example F1.
MetricRow evaluate_corpus(const std::vector<Tokens>& outputs,
                          const std::vector<std::vector<Tokens>>& references, EvalMode mode);

// Table-shaped report over systems x {SR, MR}.
struct SystemScores {
  std::string name;
  MetricRow sr;
  MetricRow mr;
};

std::string render_report_text(const std::vector<SystemScores>& rows);

}  // namespace cake
