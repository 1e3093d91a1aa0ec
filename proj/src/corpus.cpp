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

#include "cake/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "cake/common.hpp"
#include "json.hpp"

namespace cake {

namespace {

bool is_split_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case '\'':
    case '"':
    case ':':
    case ';':
    case '(':
    case ')':
    case '$':
      return true;
    default:
      return false;
  }
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char raw = text[i];
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (std::isspace(static_cast<unsigned char>(raw))) {
      flush();
      continue;
    }
    if (is_split_punct(c)) {
      // '.' and ',' stay inside digit runs so numbers survive intact.
      const bool numeric_context = (c == '.' || c == ',') && i > 0 && i + 1 < text.size() &&
                                   is_digit(text[i - 1]) && is_digit(text[i + 1]);
      if (!numeric_context) {
        flush();
        out.push_back(std::string(1, c));
        continue;
      }
    }
    cur.push_back(c);
  }
  flush();
  return out;
}

Vocabulary build_vocab(const Corpus& corpus, int cap) {
  check(cap >= Vocabulary::kReserved + 1, "build_vocab: cap must be at least 5, got ", cap);
  check(!corpus.empty(), "build_vocab: empty corpus");
  struct Entry {
    long long count = 0;
    long long first = 0;
  };
  std::unordered_map<std::string, Entry> freq;
  long long pos = 0;
  auto feed = [&](const std::string& text) {
    for (auto& tok : tokenize(text)) {
      auto [it, inserted] = freq.try_emplace(std::move(tok));
      if (inserted) it->second.first = pos;
      it->second.count++;
      ++pos;
    }
  };
  for (const auto& d : corpus) {
    feed(d.background);
    for (const auto& t : d.turns) feed(t.text);
    feed(d.response);
  }
  std::vector<std::pair<std::string, Entry>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first < b.second.first;
  });
  Vocabulary v;
  for (const auto& [tok, e] : items) {
    if (v.size() >= cap) break;
    v.add(tok);
  }
  return v;
}

int count_tokens_with_min_freq(const Corpus& corpus, int min_freq) {
  std::unordered_map<std::string, int> freq;
  auto feed = [&](const std::string& text) {
    for (auto& tok : tokenize(text)) freq[std::move(tok)]++;
  };
  for (const auto& d : corpus) {
    feed(d.background);
    for (const auto& t : d.turns) feed(t.text);
    feed(d.response);
  }
  int n = 0;
  for (const auto& [tok, c] : freq)
    if (c >= min_freq) ++n;
  return n;
}

BackgroundMode background_mode_from_string(const std::string& s) {
  if (s == "oracle") return BackgroundMode::kOracle;
  if (s == "truncate256") return BackgroundMode::kTruncate256;
  fail("unknown background mode '", s, "' (expected oracle|truncate256)");
}

const char* to_string(BackgroundMode m) {
  return m == BackgroundMode::kOracle ? "oracle" : "truncate256";
}

const std::string& Example::token_for(int id, const Vocabulary& vocab) const {
  if (id < vocab.size()) return vocab.token(id);
  const int ext = id - vocab.size();
  check(ext < ext_size, "token_for: id ", id, " beyond extended vocabulary of ",
        vocab.size() + ext_size);
  return ext_tokens[ext];
}

Example encode_example(const RawDialogue& raw, const Vocabulary& vocab, BackgroundMode mode,
                       int context_cap) {
  Example ex;
  ex.background_tokens = tokenize(raw.background);
  if (mode == BackgroundMode::kTruncate256 &&
      ex.background_tokens.size() > static_cast<std::size_t>(kBackgroundTruncation))
    ex.background_tokens.resize(kBackgroundTruncation);
  check(!ex.background_tokens.empty(), "encode_example: empty background after truncation");

  // Extended ids for out-of-vocabulary background tokens; equal surface
  // forms share one id.
  std::unordered_map<std::string, int> ext_by_token;
  ex.background_ids.reserve(ex.background_tokens.size());
  for (std::size_t i = 0; i < ex.background_tokens.size(); ++i) {
    const std::string& tok = ex.background_tokens[i];
    if (vocab.contains(tok)) {
      ex.background_ids.push_back(vocab.id(tok));
    } else {
      auto [it, inserted] = ext_by_token.emplace(tok, vocab.size() + ex.ext_size);
      if (inserted) {
        ex.ext_tokens.push_back(tok);
        ex.ext_size++;
      }
      ex.background_ids.push_back(it->second);
      ex.ext_map[static_cast<int>(i)] = it->second;
    }
  }

  // Context: all turns oldest to newest, keeping the most recent tokens
  // when over the cap.
  for (const auto& turn : raw.turns) {
    for (auto& tok : tokenize(turn.text)) ex.context_tokens.push_back(std::move(tok));
  }
  if (context_cap > 0 && ex.context_tokens.size() > static_cast<std::size_t>(context_cap))
    ex.context_tokens.erase(ex.context_tokens.begin(),
                            ex.context_tokens.end() - context_cap);
  ex.context_ids.reserve(ex.context_tokens.size());
  for (const auto& tok : ex.context_tokens) ex.context_ids.push_back(vocab.id(tok));

  // Response targets: extended id where the gold token lives only in the
  // background, UNK where it is nowhere at all.
  ex.response_ids.push_back(Vocabulary::kBos);
  for (const auto& tok : tokenize(raw.response)) {
    if (vocab.contains(tok)) {
      ex.response_ids.push_back(vocab.id(tok));
    } else if (auto it = ext_by_token.find(tok); it != ext_by_token.end()) {
      ex.response_ids.push_back(it->second);
    } else {
      ex.response_ids.push_back(Vocabulary::kUnk);
    }
  }
  ex.response_ids.push_back(Vocabulary::kEos);

  ex.references.reserve(raw.references.size());
  for (const auto& r : raw.references) ex.references.push_back(tokenize(r));
  return ex;
}

std::vector<Example> encode_corpus(const Corpus& corpus, const Vocabulary& vocab,
                                   BackgroundMode mode, int context_cap) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) out.push_back(encode_example(d, vocab, mode, context_cap));
  return out;
}

namespace {

using nlohmann::json;

template <typename T>
T field(const json& obj, const char* name, int lineno) {
  check(obj.contains(name), "jsonl line ", lineno, ": missing field '", name, "'");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception& e) {
    fail("jsonl line ", lineno, ": field '", name, "': ", e.what());
  }
}

}  // namespace

Corpus load_jsonl(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "load_jsonl: cannot open ", path);
  Corpus corpus;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail("jsonl line ", lineno, ": malformed JSON: ", e.what());
    }
    RawDialogue d;
    d.background = field<std::string>(obj, "background", lineno);
    check(!d.background.empty(), "jsonl line ", lineno, ": background must be non-empty");
    const json turns = field<json>(obj, "turns", lineno);
    check(turns.is_array(), "jsonl line ", lineno, ": field 'turns' must be an array");
    for (const auto& t : turns) {
      RawDialogue::Turn turn;
      turn.speaker = field<int>(t, "speaker", lineno);
      turn.text = field<std::string>(t, "text", lineno);
      d.turns.push_back(std::move(turn));
    }
    d.response = field<std::string>(obj, "response", lineno);
    d.references = field<std::vector<std::string>>(obj, "references", lineno);
    check(!d.references.empty(), "jsonl line ", lineno, ": references must be non-empty");
    corpus.push_back(std::move(d));
  }
  return corpus;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), "save_jsonl: cannot open ", path);
  for (const auto& d : corpus) {
    json turns = json::array();
    for (const auto& t : d.turns) turns.push_back({{"speaker", t.speaker}, {"text", t.text}});
    const json obj = {{"background", d.background},
                      {"turns", turns},
                      {"response", d.response},
                      {"references", d.references}};
    out << obj.dump() << '\n';
  }
  check(out.good(), "save_jsonl: write failed for ", path);
}

bool operator==(const RawDialogue::Turn& a, const RawDialogue::Turn& b) {
  return a.speaker == b.speaker && a.text == b.text;
}

bool operator==(const RawDialogue& a, const RawDialogue& b) {
  return a.background == b.background && a.turns == b.turns && a.response == b.response &&
         a.references == b.references;
}

}  // namespace cake
