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

#include "grpolab/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "grpolab/errors.h"
#include "grpolab/rng.h"
#include "grpolab/tasks.h"

namespace grpolab {

double pass_at_1(const std::vector<bool>& correct) {
  if (correct.empty()) throw ConfigError("pass_at_1: no samples");
  const auto hits = std::count(correct.begin(), correct.end(), true);
  return static_cast<double>(hits) / static_cast<double>(correct.size());
}

EvalReport evaluate(const AutoregressivePolicy& policy,
                    std::span<const PromptSample> benchmark,
                    const EvalConfig& config, std::uint64_t seed,
                    const RewardConfig& reward) {
  config.validate();
  const SamplingOptions sampling{config.temperature, config.top_p};
  EvalReport report;
  report.k = config.k;
  double len_sum = 0.0;
  for (std::size_t i = 0; i < benchmark.size(); ++i) {
    const PromptSample& problem = benchmark[i];
    const auto prompt = prompt_tokens(problem.question);
    Rng rng(derive_seed(seed, i));
    std::vector<bool> correct;
    correct.reserve(config.k);
    double problem_len = 0.0;
    for (std::size_t s = 0; s < config.k; ++s) {
      const Rollout r =
          sample_response(policy, prompt, config.max_tokens, rng, sampling);
      const auto rec = score_rollout(r.tokens, r.truncated, problem.answer,
                                     reward, problem.question);
      correct.push_back(rec.reward > 0.0);
      problem_len += static_cast<double>(r.tokens.size());
      report.max_response_len =
          std::max(report.max_response_len, r.tokens.size());
    }
    ProblemResult pr;
    pr.id = problem.id;
    pr.k = config.k;
    pr.correct = static_cast<std::size_t>(
        std::count(correct.begin(), correct.end(), true));
    pr.pass_at_1 = pass_at_1(correct);
    pr.mean_response_len = problem_len / static_cast<double>(config.k);
    len_sum += problem_len;
    report.problems.push_back(std::move(pr));
  }
  if (!report.problems.empty()) {
    double sum = 0.0;
    for (const auto& p : report.problems) sum += p.pass_at_1;
    report.aggregate = sum / static_cast<double>(report.problems.size());
    report.mean_response_len =
        len_sum / static_cast<double>(report.problems.size() * config.k);
  }
  return report;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  char buf[64];
  out << "problem_id,correct,k,pass_at_1,mean_response_len\n";
  std::size_t correct = 0;
  for (const auto& p : report.problems) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g", p.pass_at_1,
                  p.mean_response_len);
    out << p.id << ',' << p.correct << ',' << p.k << ',' << buf << '\n';
    correct += p.correct;
  }
  std::snprintf(buf, sizeof(buf), "%.10g,%.10g", report.aggregate,
                report.mean_response_len);
  out << "aggregate," << correct << ',' << report.k * report.problems.size()
      << ',' << buf << '\n';
}

namespace {

class BernoulliSession : public DecodingSession {
 public:
  BernoulliSession(double p, std::vector<TokenId> script)
      : p_(p), script_(std::move(script)) {}

  std::vector<double> next_distribution() override {
    std::vector<double> d(vocab::kSize, 0.0);
    if (pos_ == 0) {
      d[vocab::kThinkOpen] = p_;
      d[vocab::kRParen] = 1.0 - p_;
    } else if (!on_script_) {
      d[vocab::kEos] = 1.0;
    } else {
      d[script_[pos_]] = 1.0;
    }
    return d;
  }

  void push(TokenId token) override {
    if (pos_ == 0) on_script_ = token == vocab::kThinkOpen;
    ++pos_;
  }

 private:
  double p_;
  std::vector<TokenId> script_;
  std::size_t pos_ = 0;
  bool on_script_ = false;
};

}  // namespace

BernoulliResponder::BernoulliResponder(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("BernoulliResponder: p must lie in [0, 1]");
  }
}

std::unique_ptr<DecodingSession> BernoulliResponder::start(
    std::span<const TokenId> prompt) const {
  return std::make_unique<BernoulliSession>(p_, reference_response(prompt));
}

const char* to_string(AbToggle toggle) {
  return toggle == AbToggle::kRsr ? "rsr" : "entropy";
}

AbToggle parse_ab_toggle(std::string_view text) {
  if (text == "rsr") return AbToggle::kRsr;
  if (text == "entropy") return AbToggle::kEntropy;
  throw ConfigError("unknown A/B toggle '" + std::string(text) + "'");
}

RunConfig ab_arm_config(const RunConfig& base, AbToggle toggle, bool treatment,
                        std::uint64_t seed) {
  RunConfig c = base;
  c.seed = seed;
  if (toggle == AbToggle::kRsr) {
    c.rsr = treatment;
  } else if (!treatment) {
    for (auto& s : c.stages) s.entropy_penalty = false;
  }
  c.validate();
  return c;
}

AbResult ab_experiment(const RunConfig& base, AbToggle toggle,
                       std::span<const std::uint64_t> seeds,
                       std::span<const PromptSample> train,
                       std::span<const PromptSample> bench,
                       const TrainerHooks& hooks) {
  if (seeds.size() < 3) throw ConfigError("A/B experiments need >= 3 seeds");
  AbResult result;
  result.toggle = toggle;
  const std::vector<PromptSample> corpus(train.begin(), train.end());
  for (std::uint64_t seed : seeds) {
    for (bool treatment : {true, false}) {
      const RunConfig cfg = ab_arm_config(base, toggle, treatment, seed);
      const FeatureMap fmap(cfg.num_features);
      Trainer trainer(cfg, corpus, make_base_policy(cfg, corpus, fmap));
      trainer.run(hooks);
      AbArm arm;
      arm.arm = treatment ? "treatment" : "control";
      arm.seed = seed;
      arm.rows.assign(trainer.rows().begin(), trainer.rows().end());
      arm.final_buffer = trainer.state().buffer.size();
      if (!bench.empty()) {
        const LinearSoftmaxPolicy policy(trainer.params(),
                                         trainer.feature_map());
        arm.pass_at_1 = evaluate(policy, bench, cfg.eval,
                                 derive_seed(seed, 0xE7A1), cfg.reward_config())
                            .aggregate;
      }
      result.arms.push_back(std::move(arm));
    }
  }
  return result;
}

double tail_mean_entropy(std::span<const MetricsRow> rows, double fraction) {
  if (rows.empty()) return 0.0;
  const auto n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * rows.size())));
  double sum = 0.0;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
    sum += rows[i].policy_entropy;
  }
  return sum / static_cast<double>(n);
}

double mean_entropy_gap(std::span<const MetricsRow> rows, double target) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : rows) sum += std::fabs(r.policy_entropy - target);
  return sum / static_cast<double>(rows.size());
}

std::vector<std::size_t> cumulative_raw(std::span<const MetricsRow> rows) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  std::size_t sum = 0;
  for (const auto& r : rows) out.push_back(sum += r.counters.raw_generated);
  return out;
}

void write_ab_curves_csv(std::ostream& out, const AbResult& result,
                         double entropy_target) {
  out << "toggle,seed,arm,step,stage,cum_raw_generated,mean_reward,"
         "policy_entropy,entropy_gap\n";
  char buf[96];
  for (const auto& arm : result.arms) {
    const auto cum = cumulative_raw(arm.rows);
    for (std::size_t i = 0; i < arm.rows.size(); ++i) {
      const MetricsRow& r = arm.rows[i];
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g", r.mean_reward,
                    r.policy_entropy,
                    std::fabs(r.policy_entropy - entropy_target));
      out << to_string(result.toggle) << ',' << arm.seed << ',' << arm.arm
          << ',' << r.step << ',' << r.stage << ',' << cum[i] << ',' << buf
          << '\n';
    }
  }
}

void write_ab_summary_csv(std::ostream& out, const AbResult& result,
                          double entropy_target) {
  out << "toggle,seed,arm,steps,cum_raw_generated,tail_entropy,"
         "mean_entropy_gap,pass_at_1\n";
  char buf[96];
  for (const auto& arm : result.arms) {
    const auto cum = cumulative_raw(arm.rows);
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g",
                  tail_mean_entropy(arm.rows, 0.2),
                  mean_entropy_gap(arm.rows, entropy_target), arm.pass_at_1);
    out << to_string(result.toggle) << ',' << arm.seed << ',' << arm.arm
        << ',' << arm.rows.size() << ',' << (cum.empty() ? 0 : cum.back())
        << ',' << buf << '\n';
  }
}

}  // namespace grpolab
