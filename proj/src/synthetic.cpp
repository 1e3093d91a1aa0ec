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

#include "cake/synthetic.hpp"

#include <algorithm>
#include <string>

#include "cake/common.hpp"
#include "cake/rng.hpp"

namespace cake {

namespace {

std::vector<int> sample_distinct(Rng& rng, int pool, int n) {
  check(n <= pool, "synthetic: cannot draw ", n, " distinct items from a pool of ", pool);
  std::vector<int> picked;
  picked.reserve(n);
  while (static_cast<int>(picked.size()) < n) {
    const int c = static_cast<int>(rng.below(pool));
    if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
  }
  return picked;
}

}  // namespace

Corpus generate_synthetic(const SyntheticSpec& spec) {
  check(spec.facts_per_background >= 1, "synthetic: facts_per_background must be >= 1, got ",
        spec.facts_per_background);
  check(spec.num_examples >= 1, "synthetic: num_examples must be >= 1");
  check(spec.span_length >= 1, "synthetic: span_length must be >= 1");
  const int k = spec.facts_per_background;
  // All-seen examples draw K disjoint spans from the value pool.
  check(spec.value_token_pool_size >= k * spec.span_length,
        "synthetic: value pool of ", spec.value_token_pool_size, " too small for ", k,
        " spans of length ", spec.span_length);

  const int entity_pool = std::max(k, 2 * spec.vocab_seen_size / 3);
  const int relation_pool = std::max(2, spec.vocab_seen_size - entity_pool);

  Rng rng(spec.seed);
  Corpus corpus;
  corpus.reserve(spec.num_examples);
  for (int n = 0; n < spec.num_examples; ++n) {
    const std::vector<int> entities = sample_distinct(rng, entity_pool, k);
    std::vector<std::vector<std::string>> spans(k);
    std::vector<int> used_vals;

    std::string background;
    std::vector<std::string> facts(k);
    for (int f = 0; f < k; ++f) {
      const int rel = static_cast<int>(rng.below(relation_pool));
      std::string fact = "ent" + std::to_string(entities[f]) + " rel" + std::to_string(rel);
      const bool oov_span = rng.bernoulli(0.5);
      for (int j = 0; j < spec.span_length; ++j) {
        std::string tok;
        if (oov_span) {
          // Index-suffixed so the token is unique across the corpus.
          tok = "zq" + std::to_string(n) + "f" + std::to_string(f) + "w" + std::to_string(j);
        } else {
          int v;
          do {
            v = static_cast<int>(rng.below(spec.value_token_pool_size));
          } while (std::find(used_vals.begin(), used_vals.end(), v) != used_vals.end());
          used_vals.push_back(v);
          tok = "val" + std::to_string(v);
        }
        spans[f].push_back(tok);
        fact += " " + tok;
      }
      facts[f] = fact;
      background += fact + " .";
      if (f + 1 < k) background += " ";
    }

    const int asked = static_cast<int>(rng.below(k));
    RawDialogue d;
    d.background = background;
    if (rng.bernoulli(0.5)) d.turns.push_back({2, "hello there ."});
    d.turns.push_back({1, "tell me about ent" + std::to_string(entities[asked])});

    // Response restates the asked fact minus the trailing period.
    std::string resp = "i think " + facts[asked];
    d.response = resp;
    d.references = {resp};
    corpus.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace cake
