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

#ifndef GRPOLAB_REWARD_H_
#define GRPOLAB_REWARD_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grpolab/vocab.h"

namespace grpolab {

struct StructuredResponse {
  std::string think_text;
  std::string answer_text;
  bool well_formed = false;

  bool operator==(const StructuredResponse&) const = default;
};

enum class FilterReason : std::uint8_t { kNone, kFormat, kRepetition };
enum class VerifierKind : std::uint8_t { kRule, kJudge };

const char* to_string(FilterReason reason);
const char* to_string(VerifierKind kind);
VerifierKind parse_verifier_kind(std::string_view text);

struct RewardRecord {
  double reward = -1.0;
  bool filtered = false;
  FilterReason filter_reason = FilterReason::kNone;
  VerifierKind verifier = VerifierKind::kRule;

  bool operator==(const RewardRecord&) const = default;
};

// Exactly one "<think>" followed later by exactly one "</think>", with only
// whitespace before the opening marker. Everything after the closing marker
// is the answer region.
StructuredResponse parse_response(std::string_view raw);
StructuredResponse parse_response(std::span<const TokenId> tokens);

// Splits text into repetition atoms: whitespace separates chunks, a run of
// ASCII letters is one atom and every other code point is its own atom.
std::vector<std::string> repetition_atoms(std::string_view text);

// True when some n-atom window is followed by copies of itself so that it
// appears more than max_repeats times back to back.
bool has_consecutive_repeat(std::span<const std::string> atoms, std::size_t n,
                            std::size_t max_repeats);

// Checks the think and answer regions independently.
bool repetition_check(const StructuredResponse& resp, std::size_t n,
                      std::size_t max_repeats);

// Exact rational num/den with den > 0 and gcd(num, den) = 1, or a decimal
// approximation when the literal had a fractional part.
struct NumericValue {
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool exact = true;
  double approx = 0.0;
};

// Accepts [sign] digits, [sign] digits "/" digits and [sign] digits "."
// digits after whitespace removal. U+2212 and a leading '+' are accepted.
std::optional<NumericValue> parse_numeric(std::string_view text);

// Content of the last \boxed{...}, else the last numeric literal.
std::optional<std::string> extract_final_answer(std::string_view answer_text);

bool numeric_equal(const NumericValue& a, const NumericValue& b);

// Unparseable answers are simply wrong. Throws ConfigError on an empty gold.
bool verify_answer_rule(std::string_view answer_text, std::string_view gold);

// Model-based verifier. Implementations must be deterministic for a fixed
// input; timeouts and retries are the implementation's business. Any
// exception escaping judge() is reported as VerifierError.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual bool judge(std::string_view question, std::string_view gold,
                     const StructuredResponse& response) const = 0;
};

struct RewardConfig {
  std::size_t ngram_n = 3;
  std::size_t max_repeats = 4;
  VerifierKind verifier = VerifierKind::kRule;
  const Judge* judge = nullptr;  // required when verifier == kJudge

  void validate() const;
};

// Stage one rejects malformed or repetitive responses with -1 before any
// verifier sees them; stage two maps correctness to +1 / -1.
RewardRecord two_stage_reward(std::string_view raw, std::string_view gold,
                              const RewardConfig& config,
                              std::string_view question = {});
RewardRecord two_stage_reward(const StructuredResponse& resp,
                              std::string_view gold,
                              const RewardConfig& config,
                              std::string_view question = {});

// Unterminated rollouts cannot hold an answer region and are format
// failures; otherwise the token string is scored normally.
RewardRecord score_rollout(std::span<const TokenId> tokens, bool truncated,
                           std::string_view gold, const RewardConfig& config,
                           std::string_view question = {});

}  // namespace grpolab

#endif  // GRPOLAB_REWARD_H_
