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

#include "grpolab/reward.h"

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "grpolab/errors.h"
#include "grpolab/text.h"

namespace grpolab {

const char* to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::kNone: return "none";
    case FilterReason::kFormat: return "format";
    case FilterReason::kRepetition: return "repetition";
  }
  return "none";
}

const char* to_string(VerifierKind kind) {
  return kind == VerifierKind::kJudge ? "judge" : "rule";
}

VerifierKind parse_verifier_kind(std::string_view text) {
  if (text == "rule") return VerifierKind::kRule;
  if (text == "judge") return VerifierKind::kJudge;
  throw ConfigError("unknown verifier '" + std::string(text) + "'");
}

namespace {

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

char32_t decode_one(const std::string& cp) {
  const auto b = [&](std::size_t i) {
    return static_cast<char32_t>(static_cast<unsigned char>(cp[i]));
  };
  switch (cp.size()) {
    case 1: return b(0);
    case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
    case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
    default:
      return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) |
             ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
  }
}

bool is_ascii_letter(const std::string& cp) {
  return cp.size() == 1 &&
         ((cp[0] >= 'a' && cp[0] <= 'z') || (cp[0] >= 'A' && cp[0] <= 'Z'));
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b);
}

// Digit run of at most 18 digits.
std::optional<std::int64_t> parse_digits(std::string_view s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

bool is_digit_char(char c) { return c >= '0' && c <= '9'; }

}  // namespace

StructuredResponse parse_response(std::string_view raw) {
  StructuredResponse out;
  constexpr std::string_view open = vocab::kThinkOpenText;
  constexpr std::string_view close = vocab::kThinkCloseText;
  if (count_occurrences(raw, open) != 1 || count_occurrences(raw, close) != 1) {
    return out;
  }
  const std::size_t o = raw.find(open);
  const std::size_t c = raw.find(close);
  if (c < o + open.size()) return out;
  if (!trim_ascii(raw.substr(0, o)).empty()) return out;
  out.think_text = std::string(raw.substr(o + open.size(), c - o - open.size()));
  out.answer_text = std::string(raw.substr(c + close.size()));
  out.well_formed = true;
  return out;
}

StructuredResponse parse_response(std::span<const TokenId> tokens) {
  return parse_response(vocab::detokenize(tokens));
}

std::vector<std::string> repetition_atoms(std::string_view text) {
  std::vector<std::string> atoms;
  std::string word;
  for (const auto& cp : split_code_points(text)) {
    if (is_ascii_letter(cp)) {
      word += cp;
      continue;
    }
    if (!word.empty()) atoms.push_back(std::move(word));
    word.clear();
    if (!is_unicode_whitespace(decode_one(cp))) atoms.push_back(cp);
  }
  if (!word.empty()) atoms.push_back(std::move(word));
  return atoms;
}

bool has_consecutive_repeat(std::span<const std::string> atoms, std::size_t n,
                            std::size_t max_repeats) {
  if (n < 2) throw ConfigError("repetition n-gram size must be >= 2");
  if (atoms.size() < n * (max_repeats + 1)) return false;
  for (std::size_t i = 0; i + n * (max_repeats + 1) <= atoms.size(); ++i) {
    std::size_t copies = 1;
    for (std::size_t j = i + n; j + n <= atoms.size(); j += n) {
      bool same = true;
      for (std::size_t k = 0; k < n && same; ++k) same = atoms[j + k] == atoms[i + k];
      if (!same) break;
      if (++copies > max_repeats) return true;
    }
  }
  return false;
}

bool repetition_check(const StructuredResponse& resp, std::size_t n,
                      std::size_t max_repeats) {
  const auto think = repetition_atoms(resp.think_text);
  if (has_consecutive_repeat(think, n, max_repeats)) return true;
  const auto answer = repetition_atoms(resp.answer_text);
  return has_consecutive_repeat(answer, n, max_repeats);
}

std::optional<NumericValue> parse_numeric(std::string_view text) {
  std::string s;
  for (const auto& cp : split_code_points(text)) {
    if (is_unicode_whitespace(decode_one(cp))) continue;
    s += cp == "−" ? std::string("-") : cp;
  }
  bool negative = false;
  std::string_view v = s;
  if (!v.empty() && (v[0] == '-' || v[0] == '+')) {
    negative = v[0] == '-';
    v.remove_prefix(1);
  }
  NumericValue out;
  if (const auto slash = v.find('/'); slash != std::string_view::npos) {
    const auto num = parse_digits(v.substr(0, slash));
    const auto den = parse_digits(v.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    const std::int64_t g = gcd64(*num, *den);
    out.num = (negative ? -*num : *num) / (g == 0 ? 1 : g);
    out.den = *den / (g == 0 ? 1 : g);
  } else if (const auto dot = v.find('.'); dot != std::string_view::npos) {
    const auto whole = v.substr(0, dot);
    const auto frac = v.substr(dot + 1);
    if (whole.empty() || frac.empty() || !parse_digits(whole) ||
        !parse_digits(frac)) {
      return std::nullopt;
    }
    out.exact = false;
    out.approx = std::strtod(std::string(v).c_str(), nullptr);
    if (negative) out.approx = -out.approx;
    return out;
  } else {
    const auto num = parse_digits(v);
    if (!num) return std::nullopt;
    out.num = negative ? -*num : *num;
  }
  out.approx = static_cast<double>(out.num) / static_cast<double>(out.den);
  return out;
}

std::optional<std::string> extract_final_answer(std::string_view answer_text) {
  constexpr std::string_view boxed = "\\boxed{";
  if (const auto pos = answer_text.rfind(boxed); pos != std::string_view::npos) {
    int depth = 1;
    const std::size_t start = pos + boxed.size();
    for (std::size_t i = start; i < answer_text.size(); ++i) {
      if (answer_text[i] == '{') ++depth;
      if (answer_text[i] == '}' && --depth == 0) {
        return std::string(answer_text.substr(start, i - start));
      }
    }
    return std::nullopt;  // unbalanced box
  }

  // Scan backwards for the last literal: digits [. digits | / digits].
  std::size_t end = answer_text.size();
  while (end > 0 && !is_digit_char(answer_text[end - 1])) --end;
  if (end == 0) return std::nullopt;
  std::size_t begin = end;
  while (begin > 0 && is_digit_char(answer_text[begin - 1])) --begin;
  if (begin >= 2 && (answer_text[begin - 1] == '/' ||
                     answer_text[begin - 1] == '.') &&
      is_digit_char(answer_text[begin - 2])) {
    begin -= 1;
    while (begin > 0 && is_digit_char(answer_text[begin - 1])) --begin;
  }
  // A '-' counts as a sign unless it reads as a binary minus.
  if (begin >= 1 && answer_text[begin - 1] == '-') {
    std::size_t k = begin - 1;
    while (k > 0 && answer_text[k - 1] == ' ') --k;
    if (k == 0 || !(is_digit_char(answer_text[k - 1]) ||
                     answer_text[k - 1] == ')')) {
      begin -= 1;
    }
  }
  return std::string(answer_text.substr(begin, end - begin));
}

bool numeric_equal(const NumericValue& a, const NumericValue& b) {
  if (a.exact && b.exact) {
    // Both are kept in lowest terms with a positive denominator.
    return a.num == b.num && a.den == b.den;
  }
  const double scale = std::max(std::fabs(a.approx), std::fabs(b.approx));
  return std::fabs(a.approx - b.approx) <= 1e-9 * std::max(scale, 1e-300);
}

bool verify_answer_rule(std::string_view answer_text, std::string_view gold) {
  if (trim_ascii(gold).empty()) throw ConfigError("gold answer is empty");
  const auto gold_value = parse_numeric(gold);
  const auto extracted = extract_final_answer(answer_text);
  if (!extracted) return false;
  if (!gold_value) {
    // Non-numeric gold: whitespace-insensitive normalized string match.
    return normalize_text(*extracted) == normalize_text(gold);
  }
  const auto value = parse_numeric(*extracted);
  return value && numeric_equal(*value, *gold_value);
}

void RewardConfig::validate() const {
  if (ngram_n < 2) throw ConfigError("reward.ngram_n must be >= 2");
  if (max_repeats < 1) throw ConfigError("reward.max_repeats must be >= 1");
  if (verifier == VerifierKind::kJudge && judge == nullptr) {
    throw ConfigError("reward.verifier=judge needs a Judge implementation");
  }
}

RewardRecord two_stage_reward(const StructuredResponse& resp,
                              std::string_view gold,
                              const RewardConfig& config,
                              std::string_view question) {
  config.validate();
  RewardRecord rec;
  rec.verifier = config.verifier;
  if (!resp.well_formed) {
    rec.filtered = true;
    rec.filter_reason = FilterReason::kFormat;
    return rec;
  }
  if (repetition_check(resp, config.ngram_n, config.max_repeats)) {
    rec.filtered = true;
    rec.filter_reason = FilterReason::kRepetition;
    return rec;
  }
  bool correct = false;
  if (config.verifier == VerifierKind::kRule) {
    correct = verify_answer_rule(resp.answer_text, gold);
  } else {
    try {
      correct = config.judge->judge(question, gold, resp);
    } catch (const VerifierError&) {
      throw;
    } catch (const std::exception& e) {
      throw VerifierError(std::string("judge failed: ") + e.what());
    }
  }
  rec.reward = correct ? 1.0 : -1.0;
  return rec;
}

RewardRecord two_stage_reward(std::string_view raw, std::string_view gold,
                              const RewardConfig& config,
                              std::string_view question) {
  return two_stage_reward(parse_response(raw), gold, config, question);
}

RewardRecord score_rollout(std::span<const TokenId> tokens, bool truncated,
                           std::string_view gold, const RewardConfig& config,
                           std::string_view question) {
  if (truncated) {
    config.validate();
    RewardRecord rec;
    rec.verifier = config.verifier;
    rec.filtered = true;
    rec.filter_reason = FilterReason::kFormat;
    return rec;
  }
  return two_stage_reward(parse_response(tokens), gold, config, question);
}

}  // namespace grpolab
