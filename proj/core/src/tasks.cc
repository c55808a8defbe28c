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

#include "grpolab/tasks.h"

#include <string>

#include "grpolab/arith.h"
#include "grpolab/errors.h"
#include "grpolab/hash.h"
#include "grpolab/rng.h"
#include "grpolab/text.h"

namespace grpolab {

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kAdd: return "add";
    case TemplateKind::kSub: return "sub";
    case TemplateKind::kMul: return "mul";
    case TemplateKind::kChain: return "chain";
  }
  return "add";
}

TemplateKind parse_template_kind(std::string_view text) {
  if (text == "add") return TemplateKind::kAdd;
  if (text == "sub") return TemplateKind::kSub;
  if (text == "mul") return TemplateKind::kMul;
  if (text == "chain") return TemplateKind::kChain;
  throw ConfigError("unknown task template '" + std::string(text) + "'");
}

void TaskTemplate::validate() const {
  if (min_digits < 1 || max_digits < min_digits || max_digits > 6) {
    throw ConfigError("task template digits must satisfy 1 <= min <= max <= 6");
  }
}

std::vector<TaskTemplate> parse_templates(std::string_view list) {
  std::vector<TaskTemplate> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const auto name = trim_ascii(list.substr(start, comma - start));
    if (!name.empty()) out.push_back({parse_template_kind(name), 1, 2});
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("no task templates given");
  return out;
}

bool is_heldout_question(std::string_view question) {
  return mix64(fnv1a64(question)) % 5 == 0;
}

namespace {

std::int64_t pow10(int k) {
  std::int64_t p = 1;
  while (k-- > 0) p *= 10;
  return p;
}

std::int64_t draw_operand(Rng& rng, const TaskTemplate& t) {
  const int digits =
      t.min_digits +
      static_cast<int>(rng.below(static_cast<std::uint64_t>(
          t.max_digits - t.min_digits + 1)));
  const std::int64_t lo = digits == 1 ? 0 : pow10(digits - 1);
  const std::int64_t hi = pow10(digits) - 1;
  return lo + static_cast<std::int64_t>(
                  rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

std::vector<std::int64_t> draw_operands(Rng& rng, const TaskTemplate& t) {
  switch (t.kind) {
    case TemplateKind::kAdd:
      return {draw_operand(rng, t), draw_operand(rng, t)};
    case TemplateKind::kSub: {
      std::int64_t a = draw_operand(rng, t), b = draw_operand(rng, t);
      if (b > a) std::swap(a, b);
      return {a, b};
    }
    case TemplateKind::kMul:
      return {draw_operand(rng, t),
              static_cast<std::int64_t>(rng.below(10))};
    case TemplateKind::kChain: {
      const std::int64_t a = draw_operand(rng, t), b = draw_operand(rng, t);
      std::int64_t c = draw_operand(rng, t);
      if (c > a + b) c = a + b;
      return {a, b, c};
    }
  }
  return {};
}

}  // namespace

std::string render_question(TemplateKind kind,
                            std::span<const std::int64_t> operands) {
  const auto n = [&](std::size_t i) { return std::to_string(operands[i]); };
  switch (kind) {
    case TemplateKind::kAdd: return n(0) + "+" + n(1) + "=?";
    case TemplateKind::kSub: return n(0) + "-" + n(1) + "=?";
    case TemplateKind::kMul: return n(0) + "*" + n(1) + "=?";
    case TemplateKind::kChain: return n(0) + "+" + n(1) + "-" + n(2) + "=?";
  }
  return {};
}

std::vector<PromptSample> generate_tasks(std::span<const TaskTemplate> templates,
                                         std::size_t count,
                                         std::uint64_t seed) {
  if (count < 1) throw ConfigError("task count must be >= 1");
  if (templates.empty()) throw ConfigError("no task templates given");
  for (const auto& t : templates) t.validate();
  const bool heldout = seed >= kEvalSeedBase;
  Rng rng(seed);
  std::vector<PromptSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const TaskTemplate& t = templates[i % templates.size()];
    std::string question;
    std::vector<std::int64_t> operands;
    // Rejection keeps the partition exact. Every template shape has
    // questions on both sides, so this terminates quickly.
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000) {
        throw ConfigError("template range too small for its partition");
      }
      operands = draw_operands(rng, t);
      question = render_question(t.kind, operands);
      if (is_heldout_question(question) == heldout) break;
    }
    const auto expr = parse_arithmetic(vocab::tokenize(
        std::string_view(question).substr(0, question.find('='))));
    if (!expr) throw InvariantError("generated question does not parse");
    PromptSample s;
    s.id = (heldout ? "e" : "t") + std::to_string(i);
    s.question = std::move(question);
    s.answer = std::to_string(evaluate(*expr));
    s.source = Source::kSynthetic;
    s.qtype = QuestionType::kCalculation;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TokenId> prompt_tokens(std::string_view question) {
  return vocab::tokenize(question);
}

std::vector<TokenId> reference_response(std::span<const TokenId> prompt) {
  const auto expr_tokens = expression_tokens(prompt);
  const auto expr = parse_arithmetic(expr_tokens);
  if (!expr) throw ConfigError("reference_response: not an arithmetic prompt");
  const std::int64_t value = evaluate(*expr);
  if (value < 0) throw ConfigError("reference_response: negative answer");
  std::string digits = std::to_string(value);
  const auto width = static_cast<std::size_t>(answer_width(*expr));
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');

  std::vector<TokenId> out;
  out.push_back(vocab::kThinkOpen);
  out.insert(out.end(), expr_tokens.begin(), expr_tokens.end());
  out.push_back(vocab::kThinkClose);
  for (char c : digits) out.push_back(vocab::digit_token(c - '0'));
  out.push_back(vocab::kEos);
  return out;
}

double DifficultyProfile::admissible_fraction() const {
  if (mu.empty()) return 0.0;
  std::size_t inside = 0;
  for (std::size_t k = 1; k + 1 < counts.size(); ++k) inside += counts[k];
  return static_cast<double>(inside) / static_cast<double>(mu.size());
}

DifficultyProfile difficulty_profile(std::span<const PromptSample> corpus,
                                     const AutoregressivePolicy& policy,
                                     std::size_t group_size,
                                     std::size_t max_len, std::uint64_t seed,
                                     const RewardConfig& reward) {
  if (group_size < 2) throw ConfigError("group size G must be >= 2");
  DifficultyProfile p;
  p.group_size = group_size;
  p.counts.assign(group_size + 1, 0);
  p.mu.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto prompt = prompt_tokens(corpus[i].question);
    Rng rng(derive_seed(seed, i));
    std::size_t correct = 0;
    for (std::size_t g = 0; g < group_size; ++g) {
      const Rollout r = sample_response(policy, prompt, max_len, rng);
      const auto rec = score_rollout(r.tokens, r.truncated, corpus[i].answer,
                                     reward, corpus[i].question);
      correct += rec.reward > 0.0;
    }
    ++p.counts[correct];
    p.mu.push_back(2.0 * static_cast<double>(correct) /
                       static_cast<double>(group_size) -
                   1.0);
  }
  return p;
}

}  // namespace grpolab
