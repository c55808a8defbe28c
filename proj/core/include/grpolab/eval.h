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

#ifndef GRPOLAB_EVAL_H_
#define GRPOLAB_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grpolab/config.h"
#include "grpolab/curation.h"
#include "grpolab/policy.h"
#include "grpolab/reward.h"
#include "grpolab/trainer.h"

namespace grpolab {

// Fraction of correct samples. Throws ConfigError when empty.
double pass_at_1(const std::vector<bool>& correct);

struct ProblemResult {
  std::string id;
  std::size_t correct = 0;
  std::size_t k = 0;
  double pass_at_1 = 0.0;
  double mean_response_len = 0.0;

  bool operator==(const ProblemResult&) const = default;
};

struct EvalReport {
  std::vector<ProblemResult> problems;  // benchmark order
  double aggregate = 0.0;               // mean of per-problem pass@1
  std::size_t k = 0;
  double mean_response_len = 0.0;
  std::size_t max_response_len = 0;

  bool operator==(const EvalReport&) const = default;
};

// k samples per problem with temperature and nucleus shaping, scored by
// the two-stage reward. Problem i draws from its own stream derived from
// (seed, i), so reports do not depend on evaluation order.
EvalReport evaluate(const AutoregressivePolicy& policy,
                    std::span<const PromptSample> benchmark,
                    const EvalConfig& config, std::uint64_t seed,
                    const RewardConfig& reward = {});

// problem_id,correct,k,pass_at_1,mean_response_len
// followed by one "aggregate" row.
void write_eval_csv(std::ostream& out, const EvalReport& report);

// Answers arithmetic prompts correctly with probability p, otherwise emits
// a malformed response. The coin is the first sampled token, so it goes
// through the ordinary sampling path.
class BernoulliResponder : public AutoregressivePolicy {
 public:
  explicit BernoulliResponder(double p);

  std::size_t vocab_size() const override { return vocab::kSize; }
  std::unique_ptr<DecodingSession> start(
      std::span<const TokenId> prompt) const override;

 private:
  double p_;
};

enum class AbToggle { kRsr, kEntropy };
const char* to_string(AbToggle toggle);
AbToggle parse_ab_toggle(std::string_view text);

struct AbArm {
  std::string arm;  // "treatment" (feature on) or "control"
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  std::size_t final_buffer = 0;
  double pass_at_1 = -1.0;  // -1 when not evaluated
};

struct AbResult {
  AbToggle toggle = AbToggle::kRsr;
  std::vector<AbArm> arms;  // treatment, control for each seed in order
};

// The two arms of a pair share everything but the toggled feature:
//   rsr      scheduler.rsr true / false
//   entropy  configured entropy penalties / every penalty off
RunConfig ab_arm_config(const RunConfig& base, AbToggle toggle, bool treatment,
                        std::uint64_t seed);

// Needs at least three seeds. When bench is nonempty each arm's final
// policy is evaluated on it. The hooks are passed to every arm's trainer.
AbResult ab_experiment(const RunConfig& base, AbToggle toggle,
                       std::span<const std::uint64_t> seeds,
                       std::span<const PromptSample> train,
                       std::span<const PromptSample> bench = {},
                       const TrainerHooks& hooks = {});

// Per-step curves:
// toggle,seed,arm,step,stage,cum_raw_generated,mean_reward,policy_entropy,
// entropy_gap
void write_ab_curves_csv(std::ostream& out, const AbResult& result,
                         double entropy_target);
// Per-arm summary:
// toggle,seed,arm,steps,cum_raw_generated,tail_entropy,mean_entropy_gap,
// pass_at_1
void write_ab_summary_csv(std::ostream& out, const AbResult& result,
                          double entropy_target);

// Mean policy entropy over the last `fraction` of rows (at least one row).
double tail_mean_entropy(std::span<const MetricsRow> rows, double fraction);
// Time average of |entropy - target|.
double mean_entropy_gap(std::span<const MetricsRow> rows, double target);
// Running sum of raw_generated, one entry per row.
std::vector<std::size_t> cumulative_raw(std::span<const MetricsRow> rows);

}  // namespace grpolab

#endif  // GRPOLAB_EVAL_H_
