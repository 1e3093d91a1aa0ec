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

#include "cake/vocab.hpp"

#include <fstream>

#include "cake/common.hpp"

namespace cake {

namespace {
const char* kReservedTokens[] = {"<pad>", "<unk>", "<bos>", "<eos>"};
}

Vocabulary::Vocabulary() {
  for (const char* t : kReservedTokens) {
    token_to_id_.emplace(t, static_cast<int>(id_to_token_.size()));
    id_to_token_.emplace_back(t);
  }
}

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  if (inserted) id_to_token_.push_back(token);
  return it->second;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

const std::string& Vocabulary::token(int id) const {
  check(id >= 0 && id < size(), "Vocabulary::token: id ", id, " out of range [0,", size(), ")");
  return id_to_token_[id];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& t : id_to_token_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= '\n';
    h *= 1099511628211ull;
  }
  return h;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  check(out.good(), "Vocabulary::save: cannot open ", path);
  for (const auto& t : id_to_token_) out << t << '\n';
  check(out.good(), "Vocabulary::save: write failed for ", path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "Vocabulary::load: cannot open ", path);
  Vocabulary v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= kReserved) {
      check(line == kReservedTokens[lineno - 1], "Vocabulary::load: line ", lineno,
            " must be the reserved token ", kReservedTokens[lineno - 1], ", got '", line, "'");
      continue;
    }
    check(!line.empty(), "Vocabulary::load: empty token at line ", lineno);
    const int before = v.size();
    check(v.add(line) == before, "Vocabulary::load: duplicate token '", line, "' at line ",
          lineno);
  }
  check(lineno >= kReserved, "Vocabulary::load: ", path, " has fewer than the 4 reserved lines");
  return v;
}

}  // namespace cake
