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


#include "grpolab/trainer.h"

#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grpolab/errors.h"
#include "grpolab/tasks.h"

namespace grpolab {
namespace {

// A short three-stage run small enough for unit tests.
RunConfig small_config() {
  RunConfig c = default_run_config();
  c.num_features = 4096;
  c.base.sft_steps = 60;
  c.data.train_count = 400;
  c.data.eval_count = 40;
  for (auto& s : c.stages) {
    s.steps = 6;
    s.batch_size = 4;
    s.group_size = 4;
  }
  c.stages[0].max_response_len = 16;
  c.stages[1].max_response_len = 24;
  c.stages[2].max_response_len = 32;
  return c;
}

struct RunOutput {
  std::string csv;
  PolicyParams params;
  std::vector<std::string> checkpoints;
};

RunOutput run(const RunConfig& cfg) {
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  Trainer t(cfg, corpus, make_base_policy(cfg, corpus, fmap));
  RunOutput out;
  TrainerHooks hooks;
  hooks.on_checkpoint = [&](const TrainerState&, const std::string& tag) {
    out.checkpoints.push_back(tag);
  };
  t.run(hooks);
  std::ostringstream csv;
  write_metrics_csv(csv, t.rows());
  out.csv = csv.str();
  out.params = t.params();
  return out;
}

TEST(Metrics, Header) {
  EXPECT_EQ(metrics_header(),
            "step,stage,mean_reward,policy_entropy,mean_response_len,"
            "raw_generated,recovered,filtered_out,consumed,buffered,dropped,"
            "oversample_ratio,buffer_size,objective_value");
}

TEST(PromptStream, SeededPermutations) {
  const auto corpus = generate_tasks(parse_templates("add"), 10, 1);
  PromptStream a(corpus, 5, 0), b(corpus, 5, 0);
  std::set<std::size_t> epoch;
  std::vector<std::size_t> first;
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    epoch.insert(x);
    first.push_back(x);
  }
  EXPECT_EQ(epoch.size(), 10u);
  PromptStream c(corpus, 5, 0);
  c.seek(3);
  EXPECT_EQ(c.next(), first[3]);

  PromptStream capped(corpus, 5, 1);
  for (int i = 0; i < 10; ++i) capped.next();
  EXPECT_TRUE(capped.exhausted());
}

TEST(Corpora, TrainAndHeldOutAreDisjoint) {
  const auto cfg = small_config();
  const auto train = training_corpus(cfg);
  const auto eval = heldout_corpus(cfg);
  std::set<std::string> questions;
  for (const auto& s : train) questions.insert(s.question);
  for (const auto& s : eval) EXPECT_EQ(questions.count(s.question), 0u);
}

TEST(Trainer, ZeroStepStageLeavesPolicyUnchanged) {
  auto cfg = small_config();
  cfg.stages.resize(1);
  cfg.stages[0].steps = 0;
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  const auto base = make_base_policy(cfg, corpus, fmap);
  Trainer t(cfg, corpus, base);
  t.run();
  EXPECT_TRUE(t.rows().empty());
  EXPECT_EQ(t.params(), base);
  EXPECT_TRUE(t.done());
}

TEST(Trainer, RowsStagesAndInvariants) {
  const auto cfg = small_config();
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  Trainer t(cfg, corpus, make_base_policy(cfg, corpus, fmap));
  std::size_t batches = 0;
  TrainerHooks hooks;
  hooks.on_batch = [&](const MetricsRow& row,
                       std::span<const RolloutGroup> batch) {
    ++batches;
    for (const auto& g : batch) {
      const auto correct = g.num_correct();
      EXPECT_GT(correct, 0u);
      EXPECT_LT(correct, g.size());
      for (const auto& o : g.outputs) {
        EXPECT_LE(o.tokens.size(), cfg.stages[row.stage - 1].max_response_len);
      }
    }
    if (row.stage == 1) {
      EXPECT_LE(batch.size(), cfg.stages[0].batch_size);
      EXPECT_EQ(row.counters.recovered, 0u);
      EXPECT_EQ(row.counters.buffer_size, 0u);
    } else {
      EXPECT_EQ(batch.size(), cfg.stages[row.stage - 1].batch_size);
    }
  };
  t.run(hooks);
  const auto rows = t.rows();
  ASSERT_EQ(rows.size(), 18u);
  EXPECT_EQ(batches, 18u);
  RunCounters totals;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].step, static_cast<std::int64_t>(i + 1));
    EXPECT_EQ(rows[i].stage, 1 + i / 6);
    EXPECT_LE(rows[i].mean_response_len,
              static_cast<double>(cfg.stages[rows[i].stage - 1].max_response_len));
    EXPECT_GE(rows[i].mean_reward, -1.0);
    EXPECT_LE(rows[i].mean_reward, 1.0);
    rows[i].counters.check_conservation();
    totals.add(rows[i].counters);
  }
  EXPECT_TRUE(totals.conserved(t.state().buffer.size()));
  EXPECT_EQ(totals.dropped, 0u);
  // Stage 2 starts from an empty buffer.
  EXPECT_EQ(rows[6].counters.recovered, 0u);
}

TEST(Trainer, CheckpointsAtStageBoundaries) {
  auto cfg = small_config();
  cfg.ckpt_every = 4;
  const auto out = run(cfg);
  EXPECT_EQ(out.checkpoints,
            (std::vector<std::string>{"step4", "stage1", "step8", "step12",
                                      "stage2", "step16", "stage3"}));
}

TEST(Trainer, Deterministic) {
  const auto cfg = small_config();
  const auto a = run(cfg);
  const auto b = run(cfg);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.params, b.params);
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(run(other).csv, a.csv);
}

TEST(Trainer, ResumeMidStageReproducesTheRun) {
  const auto cfg = small_config();
  const auto whole = run(cfg);
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);

  for (int cut : {3, 6, 9, 14}) {
    Trainer first(cfg, corpus, make_base_policy(cfg, corpus, fmap));
    for (int i = 0; i < cut; ++i) first.step();
    std::stringstream saved;
    save_trainer_state(saved, first.state());
    Trainer resumed(cfg, corpus, load_trainer_state(saved, fmap));
    resumed.run();
    std::ostringstream csv;
    write_metrics_csv(csv, resumed.rows());
    EXPECT_EQ(csv.str(), whole.csv) << "cut at " << cut;
    EXPECT_EQ(resumed.params(), whole.params);
  }
}

TEST(Trainer, ExhaustionStopsCleanly) {
  auto cfg = small_config();
  cfg.data.epochs = 1;
  cfg.data.train_count = 30;
  cfg.stages[0].steps = 2;
  cfg.stages[1].steps = 1000;
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  Trainer t(cfg, corpus, make_base_policy(cfg, corpus, fmap));
  t.run();
  EXPECT_TRUE(t.done());
  EXPECT_TRUE(t.state().exhausted);
  const auto rows = t.rows();
  ASSERT_FALSE(rows.empty());
  RunCounters totals;
  for (const auto& r : rows) totals.add(r.counters);
  EXPECT_EQ(totals.raw_generated, 30u);
  EXPECT_TRUE(totals.conserved(t.state().buffer.size()));
  EXPECT_EQ(rows.back().counters.consumed, 0u);
}

TEST(Trainer, RaisingTheCapKeepsWellFormedResponses) {
  const auto cfg = small_config();
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  const auto params = make_base_policy(cfg, corpus, fmap);
  const RewardConfig reward;
  std::size_t short_ok = 0, long_ok = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto prompt = prompt_tokens(corpus[i].question);
    Rng a(i), b(i);
    const auto r1 = sample_rollout(params, fmap, prompt, 8, a);
    const auto r2 = sample_rollout(params, fmap, prompt, 32, b);
    const bool ok1 = score_rollout(r1.tokens, r1.truncated, corpus[i].answer,
                                   reward).filter_reason == FilterReason::kNone;
    const bool ok2 = score_rollout(r2.tokens, r2.truncated, corpus[i].answer,
                                   reward).filter_reason == FilterReason::kNone;
    if (ok1) {
      EXPECT_TRUE(ok2);
    }
    short_ok += ok1;
    long_ok += ok2;
  }
  EXPECT_GE(long_ok, short_ok);
}

TEST(Trainer, RewardImprovesOverAStage) {
  auto cfg = default_run_config();
  cfg.stages.resize(1);
  cfg.stages[0].steps = 200;
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  Trainer t(cfg, corpus, make_base_policy(cfg, corpus, fmap));
  t.run();
  const auto rows = t.rows();
  ASSERT_EQ(rows.size(), 200u);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    head += rows[i].mean_reward;
    tail += rows[180 + i].mean_reward;
  }
  EXPECT_GT(tail, head);
}

TEST(TrainerState, JsonRoundTrip) {
  const auto cfg = small_config();
  const auto corpus = training_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  Trainer t(cfg, corpus, make_base_policy(cfg, corpus, fmap));
  for (int i = 0; i < 9; ++i) t.step();
  std::stringstream a;
  save_trainer_state(a, t.state());
  const auto loaded = load_trainer_state(a, fmap);
  std::stringstream b;
  save_trainer_state(b, loaded);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(loaded.params, t.params());
  EXPECT_EQ(loaded.rows, t.state().rows);
  EXPECT_EQ(loaded.buffer.size(), t.state().buffer.size());
  std::stringstream bad("{}");
  EXPECT_ANY_THROW(load_trainer_state(bad, fmap));
}

}  // namespace
}  // namespace grpolab
