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

#ifndef GRPOLAB_OPTIMIZER_H_
#define GRPOLAB_OPTIMIZER_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "grpolab/group.h"
#include "grpolab/policy.h"

namespace grpolab {

inline constexpr double kPshwAlpha = -0.256;
inline constexpr double kPshwOffset = 1.256;

struct GroupStats {
  std::vector<double> rewards;
  double mu = 0.0;
  std::size_t num_correct = 0;
};

// Throws ConfigError on fewer than two rewards or values outside {-1, +1}.
GroupStats group_stats(std::span<const double> rewards);

// D(q) = alpha * mu + 1.256. Throws ConfigError for mu outside [-1, 1].
double hardness_weight(double mu, double alpha = kPshwAlpha);

// Per-output advantage; every token of output i uses per_output[i].
struct AdvantageAssignment {
  std::vector<double> per_output;
};

enum class AdvantageKind { kPshw, kGrpo };
const char* to_string(AdvantageKind kind);
AdvantageKind parse_advantage_kind(std::string_view text);

struct ClipConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double entropy_target = 0.55;
  double entropy_coeff = 0.001;
  double alpha = kPshwAlpha;
  bool use_pshw = true;
  bool length_normalize = false;
  // Optional k3 KL penalty against a frozen reference policy; 0 disables it.
  double kl_coeff = 0.0;

  void validate() const;
};

// True iff 0 < num_correct < G.
bool satisfies_constraint(const GroupStats& stats);

// (R_i - mu) * D(q). Throws InvariantError for groups that are all correct
// or all wrong; those must be filtered before reaching here.
AdvantageAssignment pshw_advantage(const GroupStats& stats,
                                   const ClipConfig& cfg);

// (R_i - mu) / sigma with the population standard deviation. Throws
// InvariantError when sigma is zero.
AdvantageAssignment grpo_advantage(const GroupStats& stats);

// min(r * A, clip(r, 1 - eps_low, 1 + eps_high) * A)
double clipped_term(double ratio, double adv, const ClipConfig& cfg);

// d clipped_term / d ratio; zero once the clipped branch is the minimum.
double clipped_term_slope(double ratio, double adv, const ClipConfig& cfg);

// |entropy - target| * coeff, and its subgradient in entropy (0 at target).
double targeted_entropy_penalty(double entropy, const ClipConfig& cfg);
double targeted_entropy_subgradient(double entropy, const ClipConfig& cfg);

// Token-level surrogate over precomputed ratios.
struct SurrogateGroup {
  std::vector<std::vector<double>> ratios;  // [output][token]
  std::vector<double> advantages;           // [output]
};

struct SurrogateResult {
  double value = 0.0;
  // d value / d log pi(token), same shape as the ratios.
  std::vector<std::vector<std::vector<double>>> coefficients;
};

// Sum of clipped terms over every token of every output. With
// length_normalize each output's sum is divided by its length instead.
SurrogateResult batch_objective(std::span<const SurrogateGroup> groups,
                                const ClipConfig& cfg);

struct ObjectiveOptions {
  AdvantageKind advantage = AdvantageKind::kPshw;
  bool entropy_penalty = false;
  const PolicyParams* reference = nullptr;  // for kl_coeff > 0
  bool compute_gradient = true;
};

struct ObjectiveResult {
  double value = 0.0;
  double surrogate = 0.0;
  double entropy = 0.0;   // mean token entropy over the batch contexts
  double penalty = 0.0;   // token count * targeted_entropy_penalty(entropy)
  double kl = 0.0;        // summed k3 estimate, before kl_coeff
  std::size_t tokens = 0;
  PolicyGradient gradient;  // d value / d weights
};

// The full maximized objective of one update:
//   surrogate - T * |H - target| * coeff - kl_coeff * KL
// where T is the number of tokens in the batch and H their mean entropy,
// so the penalty aggregates over tokens like the surrogate does.
ObjectiveResult stage_objective(const PolicyParams& params,
                                std::span<const RolloutGroup> groups,
                                const ClipConfig& cfg,
                                const ObjectiveOptions& options);

}  // namespace grpolab

#endif  // GRPOLAB_OPTIMIZER_H_
