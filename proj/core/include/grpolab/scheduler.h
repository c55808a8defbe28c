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

#ifndef GRPOLAB_SCHEDULER_H_
#define GRPOLAB_SCHEDULER_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "grpolab/group.h"

namespace grpolab {

// Keep iff 0 < num_correct < G.
bool admit_group(const RolloutGroup& group, std::size_t group_size);

struct SchedulerConfig {
  std::size_t batch_size = 8;   // N
  std::size_t group_size = 8;   // G
  std::size_t round_size = 0;   // prompts per generation round; 0 means N
  bool recovery = true;         // RSR on/off
  // Generate at least one round per step even when the buffer alone
  // already fills the batch.
  bool always_generate = false;
  std::size_t max_buffer = 0;       // 0: unbounded. Otherwise drop-oldest.
  std::int64_t max_staleness = -1;  // < 0: off. Else drop older groups.
  std::size_t max_rounds = 10000;   // guard against a filter that never admits

  std::size_t effective_round_size() const {
    return round_size == 0 ? batch_size : round_size;
  }
  void validate() const;
};

// Per-step group counts. Every step satisfies
//   raw_generated + recovered
//     == filtered_out + consumed + buffer_size + dropped
// where recovered is the buffer carried in and buffer_size the buffer
// carried out. buffered counts the groups generated in this step that were
// parked rather than consumed. Without recovery, overflow is dropped.
struct StepCounters {
  std::int64_t step = 0;
  std::size_t rounds = 0;
  std::size_t raw_generated = 0;
  std::size_t recovered = 0;
  std::size_t filtered_out = 0;
  std::size_t consumed = 0;
  std::size_t buffered = 0;
  std::size_t buffer_size = 0;
  std::size_t dropped = 0;

  double oversample_ratio(std::size_t batch_size) const {
    return batch_size == 0 ? 0.0
                           : static_cast<double>(raw_generated) /
                                 static_cast<double>(batch_size);
  }
  // Throws InvariantError when the identity above fails.
  void check_conservation() const;

  bool operator==(const StepCounters&) const = default;
};

// Produces up to `count` freshly generated, scored groups for `step`. An
// empty result means the prompt stream is exhausted.
using GroupGenerator =
    std::function<std::vector<RolloutGroup>(std::size_t count,
                                            std::int64_t step)>;

enum class AssemblyStatus { kReady, kExhausted };

struct StepResult {
  AssemblyStatus status = AssemblyStatus::kReady;
  std::vector<RolloutGroup> effective;  // exactly N groups when kReady
  StepCounters counters;
};

class RsrScheduler {
 public:
  explicit RsrScheduler(SchedulerConfig config);

  // One pass of the dynamic sampling loop: recovered groups first, then
  // generation rounds until the candidate pool holds N admitted groups.
  // The first N form the effective batch, the rest become the new buffer
  // (or are dropped without recovery). On exhaustion no batch is emitted
  // and every admitted candidate stays buffered.
  StepResult step(std::int64_t step, const GroupGenerator& generate);

  const std::deque<RolloutGroup>& buffer() const { return buffer_; }
  void restore_buffer(std::deque<RolloutGroup> buffer) {
    buffer_ = std::move(buffer);
  }
  void clear_buffer() { buffer_.clear(); }
  std::deque<RolloutGroup> take_buffer() { return std::exchange(buffer_, {}); }
  const SchedulerConfig& config() const { return config_; }

 private:
  SchedulerConfig config_;
  std::deque<RolloutGroup> buffer_;
};

// Whole-run totals; conservation holds as
//   raw_generated == filtered_out + consumed + final_buffer + dropped.
struct RunCounters {
  std::size_t raw_generated = 0;
  std::size_t filtered_out = 0;
  std::size_t consumed = 0;
  std::size_t dropped = 0;

  void add(const StepCounters& c);
  bool conserved(std::size_t final_buffer) const {
    return raw_generated == filtered_out + consumed + final_buffer + dropped;
  }
};

}  // namespace grpolab

#endif  // GRPOLAB_SCHEDULER_H_
