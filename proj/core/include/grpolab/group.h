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

#ifndef GRPOLAB_GROUP_H_
#define GRPOLAB_GROUP_H_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "grpolab/policy.h"
#include "grpolab/reward.h"

namespace grpolab {

// One prompt with its G scored outputs. The rollouts keep the log-probs
// recorded at sampling time, which is what recovered groups are trained on.
struct RolloutGroup {
  std::string prompt_id;
  std::string question;
  std::string gold;
  std::vector<TokenId> prompt;
  std::vector<Rollout> outputs;
  std::vector<RewardRecord> records;
  std::int64_t origin_step = 0;

  std::size_t size() const { return outputs.size(); }

  std::vector<double> rewards() const {
    std::vector<double> r;
    r.reserve(records.size());
    for (const auto& rec : records) r.push_back(rec.reward);
    return r;
  }

  std::size_t num_correct() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(),
                      [](const RewardRecord& r) { return r.reward > 0.0; }));
  }
};

}  // namespace grpolab

#endif  // GRPOLAB_GROUP_H_
