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

#ifndef GRPOLAB_TASKS_H_
#define GRPOLAB_TASKS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grpolab/curation.h"
#include "grpolab/policy.h"
#include "grpolab/reward.h"

namespace grpolab {

enum class TemplateKind { kAdd, kSub, kMul, kChain };

std::string_view to_string(TemplateKind kind);
TemplateKind parse_template_kind(std::string_view text);

// Operand digit counts are drawn uniformly from [min_digits, max_digits],
// then the value uniformly among numbers with that many digits (0-9 for
// one digit). kMul's second factor is always a single digit.
//   add    a+b
//   sub    a-b with b <= a
//   mul    a*d
//   chain  a+b-c with c <= a+b
struct TaskTemplate {
  TemplateKind kind = TemplateKind::kAdd;
  int min_digits = 1;
  int max_digits = 2;

  void validate() const;
};

// Comma-separated kinds with default ranges, e.g. "add,sub,mul,chain".
std::vector<TaskTemplate> parse_templates(std::string_view list);

// Questions split into two fixed partitions by hash; seeds below
// kEvalSeedBase draw from the training partition and seeds at or above it
// from the held-out partition, so the two never share a question.
inline constexpr std::uint64_t kEvalSeedBase = std::uint64_t{1} << 32;
bool is_heldout_question(std::string_view question);

std::string render_question(TemplateKind kind,
                            std::span<const std::int64_t> operands);

// Deterministic in (templates, count, seed); templates are used round
// robin. Ids are "<prefix><index>" with prefix "t" or "e" by partition.
std::vector<PromptSample> generate_tasks(std::span<const TaskTemplate> templates,
                                         std::size_t count, std::uint64_t seed);

// Prompt tokens of a question ("12+7=?").
std::vector<TokenId> prompt_tokens(std::string_view question);

// The canonical correct response: <think>EXPR</think> followed by the
// answer zero-padded to the expression's column width, then <eos>.
std::vector<TokenId> reference_response(std::span<const TokenId> prompt);

// Empirical group pass-rates of a policy on a corpus. counts[k] is the
// number of tasks where k of G samples were correct; mu[i] is task i's
// mean reward.
struct DifficultyProfile {
  std::size_t group_size = 0;
  std::vector<std::size_t> counts;
  std::vector<double> mu;

  // Share of tasks whose sampled group passes 0 < correct < G.
  double admissible_fraction() const;
};

DifficultyProfile difficulty_profile(std::span<const PromptSample> corpus,
                                     const AutoregressivePolicy& policy,
                                     std::size_t group_size,
                                     std::size_t max_len, std::uint64_t seed,
                                     const RewardConfig& reward = {});

}  // namespace grpolab

#endif  // GRPOLAB_TASKS_H_
