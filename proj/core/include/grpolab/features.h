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

#ifndef GRPOLAB_FEATURES_H_
#define GRPOLAB_FEATURES_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "grpolab/vocab.h"

namespace grpolab {

// Active binary feature indices; duplicates count twice.
using SparseFeatures = std::vector<std::uint32_t>;

enum class Phase : std::uint8_t { kPreamble = 0, kThink = 1, kAnswer = 2 };

// Where generation stands: the template region, the number of tokens since
// that region opened and the last three tokens.
class ContextState {
 public:
  static constexpr TokenId kPad = vocab::kSize;

  void push(TokenId token);

  Phase phase() const { return phase_; }
  int position() const { return position_; }
  TokenId last(int back) const { return last_[back]; }

 private:
  Phase phase_ = Phase::kPreamble;
  int position_ = 0;
  std::array<TokenId, 3> last_ = {kPad, kPad, kPad};
};

// Prompt-level quantities computed once per rollout.
struct PromptAnalysis {
  std::vector<TokenId> prompt;
  std::vector<TokenId> expression;
  std::uint64_t shape_key = 0;
  int answer_width = 0;  // 0 when the prompt is not an arithmetic task
  // Hashed (operator signature, column digits, carry), least significant
  // column first.
  std::vector<std::uint64_t> column_keys;
};

// Hashed context features for the linear-softmax policy:
//   bias; (region, position); the last one, two and three tokens;
//   the prompt-shape bucket ("DD+DD=?") by (region, position);
//   inside the think region, the expression token at the same position;
//   inside the answer region, the column state aligned right to the
//   expression's answer width and the number of columns still to write.
class FeatureMap {
 public:
  explicit FeatureMap(std::uint32_t num_features = 16384);

  std::uint32_t num_features() const { return num_features_; }

  PromptAnalysis analyze(std::span<const TokenId> prompt) const;
  SparseFeatures extract(const PromptAnalysis& prompt,
                         const ContextState& state) const;
  SparseFeatures extract(const PromptAnalysis& prompt,
                         std::span<const TokenId> prefix) const;

 private:
  std::uint32_t index(std::uint64_t key) const;

  std::uint32_t num_features_;
};

}  // namespace grpolab

#endif  // GRPOLAB_FEATURES_H_
