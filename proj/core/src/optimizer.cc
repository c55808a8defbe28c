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

#include "grpolab/optimizer.h"

#include <cmath>
#include <string>

#include "grpolab/errors.h"

namespace grpolab {

GroupStats group_stats(std::span<const double> rewards) {
  if (rewards.empty()) throw ConfigError("group_stats: empty group");
  if (rewards.size() < 2) throw ConfigError("group_stats: G must be >= 2");
  GroupStats s;
  s.rewards.assign(rewards.begin(), rewards.end());
  double sum = 0.0;
  for (double r : rewards) {
    if (r != 1.0 && r != -1.0) {
      throw ConfigError("group_stats: rewards must be +1 or -1");
    }
    sum += r;  // exact: small integers
    s.num_correct += r > 0.0;
  }
  s.mu = sum / static_cast<double>(rewards.size());
  return s;
}

double hardness_weight(double mu, double alpha) {
  if (!(mu >= -1.0 && mu <= 1.0)) {
    throw ConfigError("hardness_weight: mu must lie in [-1, 1]");
  }
  return alpha * mu + kPshwOffset;
}

const char* to_string(AdvantageKind kind) {
  return kind == AdvantageKind::kGrpo ? "grpo" : "pshw";
}

AdvantageKind parse_advantage_kind(std::string_view text) {
  if (text == "pshw") return AdvantageKind::kPshw;
  if (text == "grpo") return AdvantageKind::kGrpo;
  throw ConfigError("unknown advantage estimator '" + std::string(text) + "'");
}

void ClipConfig::validate() const {
  if (!(eps_low > 0.0) || !(eps_high > 0.0)) {
    throw ConfigError("eps_low and eps_high must be positive");
  }
  if (eps_low >= 1.0) throw ConfigError("eps_low must be below 1");
  if (!(entropy_coeff >= 0.0)) throw ConfigError("entropy_coeff must be >= 0");
  if (!(kl_coeff >= 0.0)) throw ConfigError("kl_coeff must be >= 0");
  if (!std::isfinite(alpha) || !std::isfinite(entropy_target)) {
    throw ConfigError("alpha and entropy_target must be finite");
  }
}

bool satisfies_constraint(const GroupStats& stats) {
  return stats.num_correct > 0 && stats.num_correct < stats.rewards.size();
}

AdvantageAssignment pshw_advantage(const GroupStats& stats,
                                   const ClipConfig& cfg) {
  if (!satisfies_constraint(stats)) {
    throw InvariantError("pshw_advantage: group violates 0 < correct < G");
  }
  const double d = hardness_weight(stats.mu, cfg.alpha);
  AdvantageAssignment a;
  a.per_output.reserve(stats.rewards.size());
  for (double r : stats.rewards) a.per_output.push_back((r - stats.mu) * d);
  return a;
}

AdvantageAssignment grpo_advantage(const GroupStats& stats) {
  double var = 0.0;
  for (double r : stats.rewards) var += (r - stats.mu) * (r - stats.mu);
  var /= static_cast<double>(stats.rewards.size());
  if (!(var > 0.0)) throw InvariantError("grpo_advantage: zero reward spread");
  const double sigma = std::sqrt(var);
  AdvantageAssignment a;
  a.per_output.reserve(stats.rewards.size());
  for (double r : stats.rewards) a.per_output.push_back((r - stats.mu) / sigma);
  return a;
}

double clipped_term(double ratio, double adv, const ClipConfig& cfg) {
  const double clipped =
      std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  return std::min(ratio * adv, clipped * adv);
}

double clipped_term_slope(double ratio, double adv, const ClipConfig& cfg) {
  const double clipped =
      std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  return ratio * adv <= clipped * adv ? adv : 0.0;
}

double targeted_entropy_penalty(double entropy, const ClipConfig& cfg) {
  return std::fabs(entropy - cfg.entropy_target) * cfg.entropy_coeff;
}

double targeted_entropy_subgradient(double entropy, const ClipConfig& cfg) {
  if (entropy > cfg.entropy_target) return cfg.entropy_coeff;
  if (entropy < cfg.entropy_target) return -cfg.entropy_coeff;
  return 0.0;
}

SurrogateResult batch_objective(std::span<const SurrogateGroup> groups,
                                const ClipConfig& cfg) {
  SurrogateResult out;
  out.coefficients.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (group.ratios.size() != group.advantages.size()) {
      throw InvariantError("batch_objective: ratios/advantages mismatch");
    }
    auto& coef = out.coefficients[g];
    coef.resize(group.ratios.size());
    for (std::size_t i = 0; i < group.ratios.size(); ++i) {
      const auto& ratios = group.ratios[i];
      const double adv = group.advantages[i];
      const double norm =
          cfg.length_normalize && !ratios.empty()
              ? 1.0 / static_cast<double>(ratios.size())
              : 1.0;
      double sum = 0.0;
      coef[i].resize(ratios.size());
      for (std::size_t t = 0; t < ratios.size(); ++t) {
        if (!(ratios[t] > 0.0)) {
          throw InvariantError("batch_objective: ratio must be positive");
        }
        sum += clipped_term(ratios[t], adv, cfg);
        // d ratio / d log pi = ratio
        coef[i][t] = norm * clipped_term_slope(ratios[t], adv, cfg) * ratios[t];
      }
      out.value += norm * sum;
    }
  }
  return out;
}

namespace {

void add_row(PolicyGradient& grad, std::size_t vocab,
             std::span<const std::uint32_t> features,
             std::span<const double> dz) {
  for (std::uint32_t f : features) {
    double* g = grad.data() + static_cast<std::size_t>(f) * vocab;
    for (std::size_t v = 0; v < vocab; ++v) g[v] += dz[v];
  }
}

}  // namespace

ObjectiveResult stage_objective(const PolicyParams& params,
                                std::span<const RolloutGroup> groups,
                                const ClipConfig& cfg,
                                const ObjectiveOptions& options) {
  cfg.validate();
  if (cfg.kl_coeff > 0.0 && options.reference == nullptr) {
    throw ConfigError("kl_coeff > 0 needs a reference policy");
  }
  const std::size_t vocab = params.vocab_size;

  // Pass 1: per-token log-probs under the current params, the surrogate
  // groups and the batch entropy.
  std::vector<SurrogateGroup> surrogate(groups.size());
  std::vector<std::vector<double>> logps;  // [token] -> log pi(. | ctx)
  ObjectiveResult out;
  double entropy_sum = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    const auto stats = group_stats(group.rewards());
    surrogate[g].advantages = options.advantage == AdvantageKind::kPshw
                                  ? pshw_advantage(stats, cfg).per_output
                                  : grpo_advantage(stats).per_output;
    surrogate[g].ratios.resize(group.outputs.size());
    for (std::size_t i = 0; i < group.outputs.size(); ++i) {
      const Rollout& r = group.outputs[i];
      if (r.contexts.size() != r.tokens.size() ||
          r.logprobs_old.size() != r.tokens.size()) {
        throw InvariantError("stage_objective: rollout lacks contexts");
      }
      auto& ratios = surrogate[g].ratios[i];
      ratios.resize(r.tokens.size());
      for (std::size_t t = 0; t < r.tokens.size(); ++t) {
        auto logp = log_softmax(compute_logits(params, r.contexts[t]));
        ratios[t] = std::exp(logp[r.tokens[t]] - r.logprobs_old[t]);
        double h = 0.0;
        for (double lp : logp) h -= std::exp(lp) * lp;
        entropy_sum += h;
        logps.push_back(std::move(logp));
      }
    }
  }
  out.tokens = logps.size();
  const auto sur = batch_objective(surrogate, cfg);
  out.surrogate = sur.value;
  out.entropy = out.tokens > 0 ? entropy_sum / static_cast<double>(out.tokens)
                               : 0.0;
  const bool penalize = options.entropy_penalty && out.tokens > 0;
  if (penalize) {
    out.penalty = static_cast<double>(out.tokens) *
                  targeted_entropy_penalty(out.entropy, cfg);
  }
  // Value = surrogate - penalty - kl_coeff * kl. d penalty / d H_t is the
  // subgradient itself because T cancels against the 1/T of the mean.
  const double entropy_scale =
      penalize ? -targeted_entropy_subgradient(out.entropy, cfg) : 0.0;

  if (options.compute_gradient) out.gradient.assign(params.weights.size(), 0.0);
  std::vector<double> dz(vocab);
  std::size_t k = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i = 0; i < groups[g].outputs.size(); ++i) {
      const Rollout& r = groups[g].outputs[i];
      for (std::size_t t = 0; t < r.tokens.size(); ++t, ++k) {
        const auto& logp = logps[k];
        double coef = sur.coefficients[g][i][t];
        if (cfg.kl_coeff > 0.0) {
          const double lp_ref =
              log_softmax(compute_logits(*options.reference, r.contexts[t]))
                  [r.tokens[t]];
          const double ratio_ref = std::exp(lp_ref - logp[r.tokens[t]]);
          out.kl += ratio_ref - (lp_ref - logp[r.tokens[t]]) - 1.0;
          coef -= cfg.kl_coeff * (1.0 - ratio_ref);
        }
        if (!options.compute_gradient) continue;
        double h = 0.0;
        for (double lp : logp) h -= std::exp(lp) * lp;
        for (std::size_t v = 0; v < vocab; ++v) {
          const double p = std::exp(logp[v]);
          dz[v] = -coef * p - entropy_scale * p * (logp[v] + h);
        }
        dz[r.tokens[t]] += coef;
        add_row(out.gradient, vocab, r.contexts[t], dz);
      }
    }
  }
  out.value = out.surrogate - out.penalty - cfg.kl_coeff * out.kl;
  return out;
}

}  // namespace grpolab
