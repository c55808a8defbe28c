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

#ifndef GRPOLAB_CONFIG_H_
#define GRPOLAB_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grpolab/optimizer.h"
#include "grpolab/reward.h"
#include "grpolab/scheduler.h"

namespace grpolab {

enum class StageAlgorithm { kGrpoTer, kDapoRsrPshw };

const char* to_string(StageAlgorithm algorithm);
StageAlgorithm parse_stage_algorithm(std::string_view text);

// The algorithm a stage index must run: stage 1 is GRPO with targeted
// entropy regularization, later stages DAPO with sample recovery and PSHW.
StageAlgorithm expected_algorithm(std::size_t stage_index);

struct StageConfig {
  StageAlgorithm algorithm = StageAlgorithm::kGrpoTer;
  std::size_t max_response_len = 64;
  std::size_t steps = 1000;
  std::size_t group_size = 8;
  std::size_t batch_size = 16;
  std::size_t inner_updates = 1;
  double learning_rate = 0.03;
  std::uint64_t seed = 0;  // 0: derived from run.seed and the stage index
  bool entropy_penalty = true;
};

struct DataConfig {
  std::string train_path;  // JSONL; empty means generate from templates
  std::string templates = "add,sub,mul,chain";
  int min_digits = 1;
  int max_digits = 2;
  std::size_t train_count = 5000;
  std::uint64_t train_seed = 7;
  std::string eval_path;
  std::size_t eval_count = 200;
  std::uint64_t eval_seed = (std::uint64_t{1} << 32) + 7;
  std::size_t epochs = 0;  // 0: cycle forever
};

// Supervised warm start that produces the initial policy.
struct BaseConfig {
  std::size_t sft_steps = 150;
  std::size_t sft_batch = 16;
  double sft_learning_rate = 0.3;
};

struct EvalConfig {
  std::size_t k = 16;
  double temperature = 1.0;
  double top_p = 0.7;
  std::size_t max_tokens = 64;

  void validate() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t ckpt_every = 0;  // 0: stage boundaries only
  std::uint32_t num_features = 16384;

  std::size_t reward_ngram_n = 3;
  std::size_t reward_max_repeats = 4;
  VerifierKind reward_verifier = VerifierKind::kRule;

  ClipConfig clip;
  AdvantageKind advantage = AdvantageKind::kPshw;

  std::size_t round_size = 0;
  bool rsr = true;
  bool always_generate = false;
  std::size_t max_buffer = 0;
  std::int64_t max_staleness = -1;
  std::size_t max_rounds = 10000;

  std::vector<StageConfig> stages;
  DataConfig data;
  BaseConfig base;
  EvalConfig eval;

  // Throws ConfigError on any inconsistency, including a stage whose
  // algorithm disagrees with expected_algorithm or a shrinking length cap.
  void validate() const;

  RewardConfig reward_config() const;
  SchedulerConfig scheduler_config(const StageConfig& stage) const;
  std::uint64_t stage_seed(std::size_t stage_index) const;
};

// Three stages with caps 64, 128 and 256.
RunConfig default_run_config();

// Applies one "key = value" assignment. Unknown keys throw ConfigError.
void set_config_value(RunConfig& config, std::string_view key,
                      std::string_view value);

// Flat "key = value" text; '#' starts a comment. Starts from the defaults.
RunConfig parse_config(std::istream& in);
RunConfig load_config_file(const std::string& path);

// Every key with its resolved value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(
    const RunConfig& config);
void write_config_text(std::ostream& out, const RunConfig& config);
void write_config_json(std::ostream& out, const RunConfig& config);

}  // namespace grpolab

#endif  // GRPOLAB_CONFIG_H_
