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

#include "grpolab/scheduler.h"

#include <algorithm>
#include <utility>

#include "grpolab/errors.h"

namespace grpolab {

bool admit_group(const RolloutGroup& group, std::size_t group_size) {
  if (group.records.size() != group_size) {
    throw InvariantError("admit_group: group is not fully scored");
  }
  const std::size_t correct = group.num_correct();
  return correct > 0 && correct < group_size;
}

void SchedulerConfig::validate() const {
  if (batch_size < 1) throw ConfigError("scheduler batch size N must be >= 1");
  if (group_size < 2) throw ConfigError("group size G must be >= 2");
  if (max_rounds < 1) throw ConfigError("scheduler.max_rounds must be >= 1");
}

void StepCounters::check_conservation() const {
  if (raw_generated + recovered !=
      filtered_out + consumed + buffer_size + dropped) {
    throw InvariantError("scheduler sample conservation violated");
  }
}

void RunCounters::add(const StepCounters& c) {
  raw_generated += c.raw_generated;
  filtered_out += c.filtered_out;
  consumed += c.consumed;
  dropped += c.dropped;
}

RsrScheduler::RsrScheduler(SchedulerConfig config)
    : config_(std::move(config)) {
  config_.validate();
}

StepResult RsrScheduler::step(std::int64_t step,
                              const GroupGenerator& generate) {
  StepResult result;
  StepCounters& c = result.counters;
  c.step = step;
  const std::size_t n = config_.batch_size;

  // B_c starts from B_r; B_r is emptied.
  std::vector<RolloutGroup> candidates;
  c.recovered = buffer_.size();
  for (auto& g : buffer_) {
    if (config_.max_staleness >= 0 &&
        step - g.origin_step > config_.max_staleness) {
      ++c.dropped;
      continue;
    }
    candidates.push_back(std::move(g));
  }
  buffer_.clear();

  const std::size_t kept_recovered = candidates.size();
  bool exhausted = false;
  bool generated_once = false;
  while (candidates.size() < n ||
         (config_.always_generate && !generated_once)) {
    if (c.rounds >= config_.max_rounds) {
      throw InvariantError("scheduler: round limit reached without filling N");
    }
    auto fresh = generate(config_.effective_round_size(), step);
    ++c.rounds;
    generated_once = true;
    if (fresh.empty()) {
      exhausted = true;
      break;
    }
    for (auto& g : fresh) {
      ++c.raw_generated;
      g.origin_step = step;
      if (admit_group(g, config_.group_size)) {
        candidates.push_back(std::move(g));
      } else {
        ++c.filtered_out;
      }
    }
  }

  std::size_t take = 0;
  if (exhausted && candidates.size() < n) {
    result.status = AssemblyStatus::kExhausted;
  } else {
    take = n;
  }
  result.effective.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    result.effective.push_back(std::move(candidates[i]));
  }
  c.consumed = take;

  // B_r = B_c[N:]. An exhausted step keeps everything it admitted.
  for (std::size_t i = take; i < candidates.size(); ++i) {
    if (config_.recovery || result.status == AssemblyStatus::kExhausted) {
      buffer_.push_back(std::move(candidates[i]));
    } else {
      ++c.dropped;
    }
  }
  if (config_.max_buffer > 0) {
    while (buffer_.size() > config_.max_buffer) {
      buffer_.pop_front();
      ++c.dropped;
    }
  }
  // Fresh groups sit behind the recovered ones, so trimming from the front
  // removes recovered groups first.
  const std::size_t fresh_overflow =
      candidates.size() - std::max(take, kept_recovered);
  c.buffer_size = buffer_.size();
  c.buffered = std::min(fresh_overflow, c.buffer_size);
  c.check_conservation();
  return result;
}

}  // namespace grpolab
