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

#ifndef GRPOLAB_VOCAB_H_
#define GRPOLAB_VOCAB_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grpolab {

using TokenId = std::uint32_t;

// The fixed 32-token vocabulary of the reference policy: digits, arithmetic
// operators and punctuation, the think/answer template markers, an
// end-of-sequence token and a handful of filler words.
namespace vocab {

inline constexpr TokenId kDigit0 = 0;  // '0'..'9' are ids 0..9
inline constexpr TokenId kPlus = 10;
inline constexpr TokenId kMinus = 11;
inline constexpr TokenId kTimes = 12;
inline constexpr TokenId kSlash = 13;
inline constexpr TokenId kEquals = 14;
inline constexpr TokenId kQuestion = 15;
inline constexpr TokenId kLParen = 16;
inline constexpr TokenId kRParen = 17;
inline constexpr TokenId kComma = 18;
inline constexpr TokenId kPeriod = 19;
inline constexpr TokenId kThinkOpen = 20;
inline constexpr TokenId kThinkClose = 21;
inline constexpr TokenId kEos = 22;
inline constexpr TokenId kFirstWord = 23;
inline constexpr std::size_t kSize = 32;

inline constexpr std::string_view kThinkOpenText = "<think>";
inline constexpr std::string_view kThinkCloseText = "</think>";

constexpr bool is_digit(TokenId t) { return t <= 9; }
constexpr int digit_value(TokenId t) { return static_cast<int>(t); }
constexpr TokenId digit_token(int d) { return static_cast<TokenId>(d); }

// Surface text of a token. kEos renders as "<eos>".
std::string_view text(TokenId t);

// Greedy longest-match tokenization. Spaces between tokens are skipped.
// Throws ConfigError on text the vocabulary cannot represent.
std::vector<TokenId> tokenize(std::string_view text);
std::optional<std::vector<TokenId>> try_tokenize(std::string_view text);

// Concatenates token surfaces, omitting kEos.
std::string detokenize(std::span<const TokenId> tokens);

}  // namespace vocab
}  // namespace grpolab

#endif  // GRPOLAB_VOCAB_H_
