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
#include <unordered_map>
#include <vector>

#include "cake/common.hpp"
#include "cake/vocab.hpp"

namespace cake {

// One dialogue record: a free-text knowledge document, the utterance
// history, the gold response, and one or more reference responses.
struct RawDialogue {
  struct Turn {
    int speaker = 0;
    std::string text;
  };
  std::string background;
  std::vector<Turn> turns;
  std::string response;
  std::vector<std::string> references;  // non-empty; [0] is the primary
};

using Corpus = std::vector<RawDialogue>;

// Lowercase, split on whitespace, and split the punctuation marks
// . , ! ? ' " : ; ( ) $ into their own tokens -- except that '.' and ','
// between digits stay inside the number ("110,000,082" survives intact).
std::vector<std::string> tokenize(const std::string& text);

// Most frequent tokens up to cap-4, plus the 4 reserved ids. Frequency ties
// break by first occurrence so builds are deterministic. Counts run over
// background, turns, and response. cap < 5 is an error.
Vocabulary build_vocab(const Corpus& corpus, int cap);

// Number of distinct tokens occurring at least min_freq times; useful for
// choosing a cap that excludes all singleton tokens.
int count_tokens_with_min_freq(const Corpus& corpus, int min_freq);

enum class BackgroundMode { kOracle, kTruncate256 };

BackgroundMode background_mode_from_string(const std::string& s);
const char* to_string(BackgroundMode m);

// One encoded instance. Ids in background/response may exceed |vocab|:
// those are the per-example extended ids [|vocab|, |vocab| + ext_size),
// reachable only through the copy path. Context ids never extend.
struct Example {
  std::vector<int> background_ids;
  std::vector<int> context_ids;
  std::vector<int> response_ids;  // BOS ... EOS framing
  std::unordered_map<int, int> ext_map;  // background position -> extended id
  std::vector<std::string> ext_tokens;   // surface form per extended id - |vocab|
  int ext_size = 0;

  // Kept for evaluation and tracing.
  std::vector<std::string> background_tokens;
  std::vector<std::string> context_tokens;
  std::vector<std::vector<std::string>> references;

  // Surface form for any id < |vocab| + ext_size.
  const std::string& token_for(int id, const Vocabulary& vocab) const;
};

inline constexpr int kDefaultContextCap = 120;
inline constexpr int kBackgroundTruncation = 256;

Example encode_example(const RawDialogue& raw, const Vocabulary& vocab, BackgroundMode mode,
                       int context_cap = kDefaultContextCap);

std::vector<Example> encode_corpus(const Corpus& corpus, const Vocabulary& vocab,
                                   BackgroundMode mode, int context_cap = kDefaultContextCap);

// JSONL: one object per line with fields background, turns (speaker, text),
// response, references. Round-trips exactly.
Corpus load_jsonl(const std::string& path);
void save_jsonl(const Corpus& corpus, const std::string& path);

bool operator==(const RawDialogue::Turn& a, const RawDialogue::Turn& b);
bool operator==(const RawDialogue& a, const RawDialogue& b);

}  // namespace cake
