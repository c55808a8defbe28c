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

#include "grpolab/features.h"

#include <algorithm>
#include <string>

#include "grpolab/arith.h"
#include "grpolab/errors.h"
#include "grpolab/hash.h"
#include "grpolab/rng.h"

namespace grpolab {

namespace {

constexpr int kMaxPosition = 31;
constexpr std::uint64_t kEndOfExpression = 99;

enum Template : std::uint64_t {
  kBias = 1,
  kRegionPosition,
  kLast1,
  kLast2,
  kLast3,
  kShape,
  kCopy,
  kColumn,
  kRemaining,
};

std::uint64_t shape_of(std::span<const TokenId> prompt) {
  std::string shape;
  for (TokenId t : prompt) {
    shape += vocab::is_digit(t) ? std::string("D")
                                : std::string(vocab::text(t));
  }
  return fnv1a64(shape);
}

}  // namespace

void ContextState::push(TokenId token) {
  if (token == vocab::kThinkOpen) {
    phase_ = Phase::kThink;
    position_ = 0;
  } else if (token == vocab::kThinkClose) {
    phase_ = Phase::kAnswer;
    position_ = 0;
  } else {
    ++position_;
  }
  last_[2] = last_[1];
  last_[1] = last_[0];
  last_[0] = token;
}

FeatureMap::FeatureMap(std::uint32_t num_features)
    : num_features_(num_features) {
  if (num_features_ == 0) throw ConfigError("num_features must be positive");
}

std::uint32_t FeatureMap::index(std::uint64_t key) const {
  return static_cast<std::uint32_t>(mix64(key) % num_features_);
}

PromptAnalysis FeatureMap::analyze(std::span<const TokenId> prompt) const {
  PromptAnalysis a;
  a.prompt.assign(prompt.begin(), prompt.end());
  const auto expr_tokens = expression_tokens(prompt);
  a.expression.assign(expr_tokens.begin(), expr_tokens.end());
  a.shape_key = shape_of(prompt);
  const auto expr = parse_arithmetic(expr_tokens);
  if (!expr) return a;
  a.answer_width = answer_width(*expr);

  std::uint64_t signature = 0;
  for (TokenId op : expr->operators) signature = signature * 37 + op + 1;
  for (const auto& col : answer_columns(*expr)) {
    std::uint64_t key = hash_keys({kColumn, signature,
                                   static_cast<std::uint64_t>(col.carry + 64)});
    for (int d : col.digits) {
      key = hash_keys({key, static_cast<std::uint64_t>(d)});
    }
    a.column_keys.push_back(key);
  }
  return a;
}

SparseFeatures FeatureMap::extract(const PromptAnalysis& prompt,
                                   const ContextState& state) const {
  const auto phase = static_cast<std::uint64_t>(state.phase());
  const auto pos =
      static_cast<std::uint64_t>(std::min(state.position(), kMaxPosition));
  const std::uint64_t l1 = state.last(0), l2 = state.last(1),
                      l3 = state.last(2);

  SparseFeatures f;
  f.reserve(10);
  f.push_back(index(hash_keys({kBias})));
  f.push_back(index(hash_keys({kRegionPosition, phase, pos})));
  f.push_back(index(hash_keys({kLast1, phase, l1})));
  f.push_back(index(hash_keys({kLast2, phase, l1, l2})));
  f.push_back(index(hash_keys({kLast3, phase, l1, l2, l3})));
  f.push_back(index(hash_keys({kShape, phase, pos, prompt.shape_key})));

  if (state.phase() == Phase::kThink) {
    const auto p = static_cast<std::size_t>(state.position());
    const std::uint64_t expected =
        p < prompt.expression.size() ? prompt.expression[p] : kEndOfExpression;
    f.push_back(index(hash_keys({kCopy, pos, expected})));
  } else if (state.phase() == Phase::kAnswer && prompt.answer_width > 0) {
    const int remaining =
        std::max(0, prompt.answer_width - state.position());
    f.push_back(index(hash_keys(
        {kRemaining, static_cast<std::uint64_t>(remaining)})));
    if (remaining > 0 &&
        static_cast<std::size_t>(remaining) <= prompt.column_keys.size()) {
      f.push_back(index(prompt.column_keys[static_cast<std::size_t>(
          remaining - 1)]));
    }
  }
  return f;
}

SparseFeatures FeatureMap::extract(const PromptAnalysis& prompt,
                                   std::span<const TokenId> prefix) const {
  ContextState state;
  for (TokenId t : prefix) state.push(t);
  return extract(prompt, state);
}

}  // namespace grpolab
