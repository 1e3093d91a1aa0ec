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

#include <cstdint>

#include "cake/corpus.hpp"

namespace cake {

// Desk-scale copy-task corpus: each background lists K facts
// "entity relation value-span .", the final context turn asks about one
// entity, and the gold response restates that fact. Half the value spans
// (per-fact coin flip) use tokens that occur exactly once in the whole
// corpus, so they can only be produced through the copy path. Deterministic
// under seed.
struct SyntheticSpec {
  int num_examples = 0;
  int facts_per_background = 4;  // K
  int value_token_pool_size = 50;
  int vocab_seen_size = 36;  // spread of entity/relation tokens
  std::uint64_t seed = 7;
  int span_length = 2;
};

Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace cake
