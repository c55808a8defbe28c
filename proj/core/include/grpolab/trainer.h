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

#ifndef GRPOLAB_TRAINER_H_
#define GRPOLAB_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "grpolab/config.h"
#include "grpolab/curation.h"
#include "grpolab/features.h"
#include "grpolab/group.h"
#include "grpolab/policy.h"
#include "grpolab/scheduler.h"

namespace grpolab {

struct MetricsRow {
  std::int64_t step = 0;  // global, 1-based
  std::size_t stage = 0;  // 1-based
  double mean_reward = 0.0;
  double policy_entropy = 0.0;
  double mean_response_len = 0.0;
  StepCounters counters;
  std::size_t batch_size = 0;
  double objective_value = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

// Training corpus: data.train when set, otherwise generated from
// data.templates with data.train_seed. The held-out benchmark is read
// from data.eval or generated from data.eval_seed.
std::vector<PromptSample> training_corpus(const RunConfig& config);
std::vector<PromptSample> heldout_corpus(const RunConfig& config);

// Teacher-forced warm start on reference responses. Gives the weak but
// nonzero initial policy that RL starts from.
PolicyParams make_base_policy(const RunConfig& config,
                              std::span<const PromptSample> corpus,
                              const FeatureMap& feature_map);

// Infinite (or epoch-capped) prompt stream: each epoch is a seeded
// permutation of the corpus. Draw d always yields the same prompt and the
// same rollout seed, whatever happened before.
class PromptStream {
 public:
  PromptStream(std::span<const PromptSample> corpus, std::uint64_t seed,
               std::size_t epochs);

  bool exhausted() const;
  // Index into the corpus of the next draw; advances the stream.
  std::size_t next();
  std::uint64_t position() const { return position_; }
  void seek(std::uint64_t position) { position_ = position; }

 private:
  const std::vector<std::size_t>& permutation(std::uint64_t epoch);

  std::size_t corpus_size_;
  std::uint64_t seed_;
  std::size_t epochs_;
  std::uint64_t position_ = 0;
  std::uint64_t cached_epoch_ = ~std::uint64_t{0};
  std::vector<std::size_t> perm_;
};

// Everything needed to continue a run exactly.
struct TrainerState {
  PolicyParams params;
  std::size_t stage_index = 0;    // 0-based; == stages.size() when done
  std::size_t step_in_stage = 0;  // effective batches finished in the stage
  std::int64_t global_step = 0;
  std::uint64_t stream_position = 0;
  bool exhausted = false;
  std::deque<RolloutGroup> buffer;
  std::vector<MetricsRow> rows;
  RunCounters totals;
};

void save_trainer_state(std::ostream& out, const TrainerState& state);
TrainerState load_trainer_state(std::istream& in,
                                const FeatureMap& feature_map);
void save_trainer_state_file(const std::string& path,
                             const TrainerState& state);
TrainerState load_trainer_state_file(const std::string& path,
                                     const FeatureMap& feature_map);

// Observer hooks. on_batch sees each logged row with the effective batch
// it was computed from, after the update.
struct TrainerHooks {
  std::function<void(const MetricsRow&, std::span<const RolloutGroup>)>
      on_batch;
  // Called at stage boundaries and every ckpt_every steps.
  std::function<void(const TrainerState&, const std::string& tag)>
      on_checkpoint;
};

class Trainer {
 public:
  Trainer(RunConfig config, std::vector<PromptSample> corpus,
          PolicyParams initial, const Judge* judge = nullptr);
  Trainer(RunConfig config, std::vector<PromptSample> corpus,
          TrainerState state, const Judge* judge = nullptr);

  // One effective batch. Returns false once every stage is finished or the
  // stream ran out.
  bool step(const TrainerHooks& hooks = {});
  void run(const TrainerHooks& hooks = {});
  // Runs the remaining steps of the current stage only.
  void run_stage(const TrainerHooks& hooks = {});

  bool done() const;
  const TrainerState& state() const { return state_; }
  const PolicyParams& params() const { return state_.params; }
  std::span<const MetricsRow> rows() const { return state_.rows; }
  const FeatureMap& feature_map() const { return feature_map_; }
  const RunConfig& config() const { return config_; }

 private:
  void init();
  void advance_stage(const TrainerHooks& hooks);
  RolloutGroup make_group(std::size_t corpus_index, std::uint64_t draw,
                          const StageConfig& stage);
  std::vector<RolloutGroup> generate(std::size_t count,
                                     const StageConfig& stage);

  RunConfig config_;
  std::vector<PromptSample> corpus_;
  std::vector<std::vector<TokenId>> prompts_;
  FeatureMap feature_map_;
  RewardConfig reward_;
  TrainerState state_;
  std::unique_ptr<PromptStream> stream_;
  std::unique_ptr<RsrScheduler> scheduler_;
  std::unique_ptr<PolicyParams> reference_;  // KL anchor, only if kl_coeff
  // Scratch for the current step's freshly generated rollouts.
  double step_reward_sum_ = 0.0;
  double step_len_sum_ = 0.0;
  std::size_t step_rollouts_ = 0;
};

}  // namespace grpolab

#endif  // GRPOLAB_TRAINER_H_
