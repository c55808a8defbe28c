// Copyright 2026 The grpolab Authors
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

#include "grpolab/vocab.h"

#include <array>

#include "grpolab/errors.h"

namespace grpolab::vocab {

namespace {

constexpr std::array<std::string_view, kSize> kSurface = {
    "0",     "1",     "2",       "3",        "4",    "5",    "6",
    "7",     "8",     "9",       "+",        "-",    "*",    "/",
    "=",     "?",     "(",       ")",        ",",    ".",    "<think>",
    "</think>", "<eos>", "so ",  "then ",    "we ",  "get ", "add ",
    "sub ",  "mul ",  "carry ",  "ok ",
};

}  // namespace

std::string_view text(TokenId t) {
  if (t >= kSize) throw ConfigError("token id out of range");
  return kSurface[t];
}

std::optional<std::vector<TokenId>> try_tokenize(std::string_view input) {
  std::vector<TokenId> out;
  std::size_t i = 0;
  while (i < input.size()) {
    if (input[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t best_len = 0;
    TokenId best = 0;
    for (TokenId t = 0; t < kSize; ++t) {
      std::string_view s = kSurface[t];
      // Filler words match with or without their trailing space.
      if (s.size() > 1 && s.back() == ' ') s.remove_suffix(1);
      if (s.size() > best_len && input.substr(i, s.size()) == s) {
        best_len = s.size();
        best = t;
      }
    }
    if (best_len == 0) return std::nullopt;
    out.push_back(best);
    i += best_len;
  }
  return out;
}

std::vector<TokenId> tokenize(std::string_view input) {
  auto tokens = try_tokenize(input);
  if (!tokens) {
    throw ConfigError("text not representable in vocabulary: " +
                      std::string(input));
  }
  return *tokens;
}

std::string detokenize(std::span<const TokenId> tokens) {
  std::string out;
  for (TokenId t : tokens) {
    if (t == kEos) continue;
    out += text(t);
  }
  return out;
}

}  // namespace grpolab::vocab
