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


// Runs every acceptance criterion once and prints one PASS or FAIL line for
// each. Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grpolab/config.h"
#include "grpolab/curation.h"
#include "grpolab/eval.h"
#include "grpolab/optimizer.h"
#include "grpolab/policy.h"
#include "grpolab/scheduler.h"
#include "grpolab/tasks.h"
#include "grpolab/text.h"
#include "grpolab/trainer.h"
#include "oracles.h"

namespace grpolab {
namespace {

using testing::FdInstance;
using testing::NaiveOptions;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunConfig load(const std::string& name) {
  return load_config_file(std::string(GRPOLAB_CONFIG_DIR) + "/" + name);
}

// Every run made by the acceptance binary, for the run-wide criteria.
struct RecordedRun {
  std::string label;
  std::vector<MetricsRow> rows;
  std::size_t final_buffer = 0;
  bool recovery = true;
};

std::vector<RecordedRun> g_runs;
std::size_t g_batches = 0;
std::size_t g_groups = 0;
std::size_t g_violations = 0;

TrainerHooks constraint_hooks() {
  TrainerHooks hooks;
  hooks.on_batch = [](const MetricsRow&, std::span<const RolloutGroup> batch) {
    ++g_batches;
    for (const auto& g : batch) {
      ++g_groups;
      const auto c = g.num_correct();
      if (!(g.size() >= 2 && c > 0 && c < g.size())) ++g_violations;
    }
  };
  return hooks;
}

void record(const std::string& label, const AbResult& result, bool rsr_toggle) {
  for (const auto& arm : result.arms) {
    const bool recovery = !rsr_toggle || arm.arm == "treatment";
    g_runs.push_back({label + "/" + arm.arm + "/seed" + std::to_string(arm.seed),
                      arm.rows, arm.final_buffer, recovery});
  }
}

std::string metrics_bytes(std::span<const MetricsRow> rows) {
  std::ostringstream out;
  write_metrics_csv(out, rows);
  return out.str();
}

Outcome pshw_constants() {
  bool ok = hardness_weight(0.0) == 1.256 &&
            std::fabs(hardness_weight(1.0) - 1.0) <= 1e-12 &&
            std::fabs(hardness_weight(-1.0) - 1.512) <= 1e-12;
  std::size_t breaks = 0;
  double prev = hardness_weight(-1.0);
  for (int i = 1; i <= 10000; ++i) {
    const double d = hardness_weight(-1.0 + 2.0 * i / 10000.0);
    if (!(d < prev)) ++breaks;
    prev = d;
  }
  return {ok && breaks == 0,
          "D(0)=" + fmt("%.17g", hardness_weight(0.0)) + " D(1)=" +
              fmt("%.17g", hardness_weight(1.0)) + " D(-1)=" +
              fmt("%.17g", hardness_weight(-1.0)) + " monotonicity breaks " +
              std::to_string(breaks)};
}

Outcome objective_oracle() {
  ClipConfig cfg;
  Rng rng(2026);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto groups = testing::random_surrogate_batch(rng);
    const double got = batch_objective(groups, cfg).value;
    const double want =
        testing::naive_surrogate(groups, cfg.eps_low, cfg.eps_high, false);
    worst = std::max(worst, std::fabs(got - want));
  }
  return {worst <= 1e-12, "100 batches, max |diff| " + fmt("%.3g", worst)};
}

Outcome gradient_check() {
  Rng rng(2027);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const FdInstance inst = testing::make_fd_instance(rng);
    ObjectiveOptions options;
    options.entropy_penalty = true;
    const auto res =
        stage_objective(inst.params, inst.groups, inst.cfg, options);
    worst = std::max(worst,
                     testing::relative_error(
                         res.gradient, testing::fd_gradient(inst, NaiveOptions{})));
  }
  return {worst <= 1e-4, "100 instances, max relative error " +
                             fmt("%.3g", worst)};
}

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

Outcome entropy_regulation() {
  const RunConfig cfg = load("ab_entropy.cfg");
  const auto corpus = training_corpus(cfg);
  const auto result =
      ab_experiment(cfg, AbToggle::kEntropy, kSeeds, corpus, {},
                    constraint_hooks());
  record("entropy", result, false);
  const double target = cfg.clip.entropy_target;
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i + 1 < result.arms.size(); i += 2) {
    const auto& t = result.arms[i];
    const auto& c = result.arms[i + 1];
    const double tail = tail_mean_entropy(t.rows, 0.2);
    const double gap_t = mean_entropy_gap(t.rows, target);
    const double gap_c = mean_entropy_gap(c.rows, target);
    ok = ok && t.rows.size() >= 300 && std::fabs(tail - target) <= 0.10 &&
         gap_t < gap_c;
    detail += "seed " + std::to_string(t.seed) + ": steps " +
              std::to_string(t.rows.size()) + " tail " + fmt("%.3f", tail) +
              " gap " + fmt("%.3f", gap_t) + " vs " + fmt("%.3f", gap_c) +
              "; ";
  }
  return {ok, detail};
}

Outcome rsr_efficiency() {
  const RunConfig cfg = load("ab_rsr.cfg");
  const auto corpus = training_corpus(cfg);

  // How hard the corpus is for the starting policy.
  const RunConfig arm = ab_arm_config(cfg, AbToggle::kRsr, false, kSeeds[0]);
  const FeatureMap fmap(arm.num_features);
  const auto base = make_base_policy(arm, corpus, fmap);
  const StageConfig& stage = arm.stages.back();
  const auto profile =
      difficulty_profile(corpus, LinearSoftmaxPolicy(base, fmap),
                         stage.group_size, stage.max_response_len, 99,
                         arm.reward_config());
  std::string detail = "initial admissible fraction " +
                       fmt("%.3f", profile.admissible_fraction()) + "; ";

  const auto result =
      ab_experiment(cfg, AbToggle::kRsr, kSeeds, corpus, {}, constraint_hooks());
  record("rsr", result, true);
  bool ok = true;
  for (std::size_t i = 0; i + 1 < result.arms.size(); i += 2) {
    const auto& t = result.arms[i];
    const auto& c = result.arms[i + 1];
    double ratio = 0.0;
    for (const auto& r : c.rows) ratio += r.counters.oversample_ratio(r.batch_size);
    ratio /= std::max<std::size_t>(1, c.rows.size());
    const auto ct = cumulative_raw(t.rows);
    const auto cc = cumulative_raw(c.rows);
    // Step 1 cannot differ: both arms start with an empty buffer and draw
    // the same prompts with the same seeds. It is still counted.
    std::size_t violations = 0;
    std::string ties;
    for (std::size_t s = 0; s < std::min(ct.size(), cc.size()); ++s) {
      if (!(ct[s] < cc[s])) {
        ++violations;
        ties += (ties.empty() ? "" : ",") + std::to_string(s + 1);
      }
    }
    const bool same_length = !ct.empty() && ct.size() == cc.size();
    const double saving =
        same_length ? 1.0 - static_cast<double>(ct.back()) /
                                static_cast<double>(cc.back())
                    : 0.0;
    ok = ok && same_length && ratio >= 3.0 && ratio <= 9.0 &&
         violations == 0 && saving >= 0.10;
    detail += "seed " + std::to_string(t.seed) + ": control ratio " +
              fmt("%.2f", ratio) + " steps " + std::to_string(ct.size()) +
              " not lower at steps [" + ties + "] saving " +
              fmt("%.3f", saving) + "; ";
  }
  return {ok, detail};
}

struct PipelineRun {
  std::string csv;
  double before = 0.0;
  double after = 0.0;
};

PipelineRun run_pipeline(bool record_run) {
  const RunConfig cfg = load("default.cfg");
  const auto corpus = training_corpus(cfg);
  const auto bench = heldout_corpus(cfg);
  const FeatureMap fmap(cfg.num_features);
  const auto base = make_base_policy(cfg, corpus, fmap);
  Trainer trainer(cfg, corpus, base);
  trainer.run(record_run ? constraint_hooks() : TrainerHooks{});
  PipelineRun out;
  out.csv = metrics_bytes(trainer.rows());
  if (record_run) {
    g_runs.push_back({"pipeline", {trainer.rows().begin(), trainer.rows().end()},
                      trainer.state().buffer.size(), cfg.rsr});
    const std::uint64_t eval_seed = cfg.seed ^ 0xE7A1;
    out.before = evaluate(LinearSoftmaxPolicy(base, fmap), bench, cfg.eval,
                          eval_seed, cfg.reward_config())
                     .aggregate;
    out.after = evaluate(LinearSoftmaxPolicy(trainer.params(), fmap), bench,
                         cfg.eval, eval_seed, cfg.reward_config())
                    .aggregate;
  }
  return out;
}

PipelineRun g_pipeline;

Outcome learning_progress() {
  g_pipeline = run_pipeline(true);
  const double gain = g_pipeline.after - g_pipeline.before;
  return {gain >= 0.30, "held-out pass@1 " + fmt("%.4f", g_pipeline.before) +
                            " -> " + fmt("%.4f", g_pipeline.after) + " (gain " +
                            fmt("%.4f", gain) + ")"};
}

Outcome conservation() {
  bool ok = !g_runs.empty();
  std::size_t strict = 0;
  std::string bad;
  for (const auto& run : g_runs) {
    RunCounters totals;
    bool steps_ok = true;
    for (const auto& r : run.rows) {
      const auto& c = r.counters;
      steps_ok = steps_ok && c.raw_generated + c.recovered ==
                                 c.filtered_out + c.consumed + c.buffer_size +
                                     c.dropped;
      totals.add(c);
    }
    bool run_ok = steps_ok && totals.conserved(run.final_buffer);
    if (run.recovery) {
      // With recovery and an unbounded buffer nothing may be dropped.
      run_ok = run_ok && totals.dropped == 0 &&
               totals.raw_generated ==
                   totals.filtered_out + totals.consumed + run.final_buffer;
      ++strict;
    }
    if (!run_ok) bad += run.label + " ";
    ok = ok && run_ok;
  }
  return {ok, std::to_string(g_runs.size()) + " runs (" +
                  std::to_string(strict) + " with recovery, exact form)" +
                  (bad.empty() ? "" : "; failing: " + bad)};
}

Outcome constraint_enforcement() {
  return {g_batches > 0 && g_violations == 0,
          std::to_string(g_groups) + " groups in " + std::to_string(g_batches) +
              " effective batches, " + std::to_string(g_violations) +
              " violations"};
}

Outcome pass_at_1_estimator() {
  RunConfig cfg = default_run_config();
  cfg.data.eval_count = 200;
  const auto bench = heldout_corpus(cfg);
  EvalConfig ec;
  ec.k = 64;
  ec.top_p = 1.0;
  ec.temperature = 1.0;
  bool ok = bench.size() == 200;
  std::string detail;
  for (double p : {0.1, 0.5, 0.9}) {
    const auto report = evaluate(BernoulliResponder(p), bench, ec, 17);
    const double sigma = std::sqrt(p * (1 - p) / (64.0 * 200.0));
    const double z = (report.aggregate - p) / sigma;
    ok = ok && std::fabs(z) <= 3.0;
    detail += "p=" + fmt("%.1f", p) + " est " + fmt("%.4f", report.aggregate) +
              " (" + fmt("%+.2f", z) + " sigma); ";
  }
  return {ok, detail};
}

std::string pseudo_word(Rng& rng) {
  std::string w;
  const std::size_t n = 4 + rng.below(5);
  for (std::size_t i = 0; i < n; ++i) {
    w += static_cast<char>('a' + rng.below(26));
  }
  return w;
}

std::vector<std::string> pseudo_words(Rng& rng, std::size_t n) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back(pseudo_word(rng));
  return w;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

PromptSample make_sample(std::string id, std::string question) {
  PromptSample s;
  s.id = std::move(id);
  s.question = std::move(question);
  s.answer = "1";
  return s;
}

Outcome dedup_pipeline() {
  Rng rng(1200);
  std::vector<PromptSample> originals;
  std::vector<PromptSample> planted;
  // Distinct controls.
  for (int i = 0; i < 940; ++i) {
    originals.push_back(
        make_sample("c" + std::to_string(i), join(pseudo_words(rng, 8 + rng.below(13)))));
  }
  // Exact duplicates differ only in case and whitespace.
  for (int i = 0; i < 100; ++i) {
    auto dup = originals[rng.below(940)];
    dup.id = "x" + std::to_string(i);
    std::string q = "  ";
    for (char ch : dup.question) {
      q += ch == ' ' ? std::string("\t ") : std::string(1, static_cast<char>(
                                                ch - 'a' + 'A'));
    }
    dup.question = q;
    planted.push_back(dup);
  }
  // Fuzzy pairs: one of twenty words replaced.
  double min_jaccard = 1.0;
  for (int i = 0; i < 50;) {
    auto words = pseudo_words(rng, 20);
    const auto original = join(words);
    words[rng.below(20)] = pseudo_word(rng);
    const auto edited = join(words);
    const double j = jaccard(make_shingles("a", original),
                             make_shingles("b", edited));
    if (j < 0.85) continue;
    min_jaccard = std::min(min_jaccard, j);
    originals.push_back(make_sample("f" + std::to_string(i), original));
    planted.push_back(make_sample("fp" + std::to_string(i), edited));
    ++i;
  }
  // Semantic pairs: the same words in reverse order.
  double min_cos = 1.0;
  for (int i = 0; i < 30; ++i) {
    auto words = pseudo_words(rng, 12 + rng.below(9));
    const auto original = join(words);
    std::reverse(words.begin(), words.end());
    const auto paraphrase = join(words);
    min_cos = std::min(min_cos, cosine(default_embedder().embed(original),
                                       default_embedder().embed(paraphrase)));
    originals.push_back(make_sample("s" + std::to_string(i), original));
    planted.push_back(make_sample("sp" + std::to_string(i), paraphrase));
  }
  // Highest cosine between two distinct originals.
  std::vector<std::vector<double>> emb;
  for (const auto& s : originals) {
    emb.push_back(default_embedder().embed(normalize_text(s.question)));
  }
  double max_cross = 0.0;
  for (std::size_t a = 0; a < emb.size(); ++a) {
    for (std::size_t b = a + 1; b < emb.size(); ++b) {
      max_cross = std::max(max_cross, cosine(emb[a], emb[b]));
    }
  }

  // Originals first, planted copies after them in shuffled order.
  for (std::size_t i = planted.size(); i > 1; --i) {
    std::swap(planted[i - 1], planted[rng.below(i)]);
  }
  std::vector<PromptSample> corpus = originals;
  corpus.insert(corpus.end(), planted.begin(), planted.end());

  CurationConfig cc;
  cc.stages = {CurationStage::kExact, CurationStage::kFuzzy,
               CurationStage::kSemantic};
  cc.fuzzy_threshold = 0.8;
  cc.cosine_threshold = 0.7;
  const auto result = curate(corpus, cc);
  std::set<std::string> kept;
  for (const auto& s : result.corpus) kept.insert(s.id);
  std::size_t planted_left = 0, controls_removed = 0;
  for (const auto& s : planted) planted_left += kept.count(s.id);
  for (const auto& s : originals) controls_removed += 1 - kept.count(s.id);
  const bool ok = corpus.size() == 1200 && planted_left == 0 &&
                  controls_removed == 0 && min_cos >= cc.cosine_threshold &&
                  max_cross < cc.cosine_threshold;
  std::string detail = "1200 samples, planted left " +
                       std::to_string(planted_left) + ", distinct removed " +
                       std::to_string(controls_removed) +
                       ", fuzzy min Jaccard " + fmt("%.3f", min_jaccard) +
                       ", paraphrase min cosine " + fmt("%.3f", min_cos) +
                       ", distinct max cosine " + fmt("%.3f", max_cross) +
                       ", stages";
  for (const auto& r : result.report) {
    detail += " " + std::string(to_string(r.stage)) + "-" +
              std::to_string(r.removed);
  }
  return {ok, detail};
}

Outcome determinism() {
  bool ok = true;
  std::string detail;
  const PipelineRun again = run_pipeline(false);
  const bool pipeline_same = again.csv == g_pipeline.csv;
  ok = ok && pipeline_same && !again.csv.empty();
  detail += std::string("pipeline metrics ") +
            (pipeline_same ? "identical" : "differ");
  for (const auto& [file, toggle] :
       {std::pair{"ab_rsr.cfg", AbToggle::kRsr},
        std::pair{"ab_entropy.cfg", AbToggle::kEntropy}}) {
    const RunConfig cfg = load(file);
    const auto corpus = training_corpus(cfg);
    const auto result = ab_experiment(cfg, toggle, kSeeds, corpus);
    std::size_t same = 0, total = 0;
    for (const auto& arm : result.arms) {
      for (const auto& prev : g_runs) {
        if (prev.label == std::string(toggle == AbToggle::kRsr ? "rsr" : "entropy") +
                              "/" + arm.arm + "/seed" +
                              std::to_string(arm.seed)) {
          ++total;
          same += metrics_bytes(arm.rows) == metrics_bytes(prev.rows);
        }
      }
    }
    ok = ok && total == 6 && same == total;
    detail += std::string("; ") + to_string(toggle) + " arms identical " +
              std::to_string(same) + "/" + std::to_string(total);
  }
  return {ok, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

int run_all() {
  // Runs that feed 5, 7 and 11 come first; output stays in criterion order.
  const std::vector<Criterion> order = {
      {1, "pshw-constants", pshw_constants},
      {2, "objective-oracle", objective_oracle},
      {3, "gradient-check", gradient_check},
      {4, "entropy-regulation", entropy_regulation},
      {6, "rsr-efficiency", rsr_efficiency},
      {8, "learning-progress", learning_progress},
      {5, "rsr-conservation", conservation},
      {7, "constraint-enforcement", constraint_enforcement},
      {9, "pass-at-1-estimator", pass_at_1_estimator},
      {10, "dedup-pipeline", dedup_pipeline},
      {11, "determinism", determinism},
  };
  std::vector<std::string> lines(order.size() + 1);
  int failures = 0;
  for (const auto& c : order) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (!o.pass) ++failures;
    char head[96];
    std::snprintf(head, sizeof head, "%s %2d %-24s [%7.1fs] ",
                  o.pass ? "PASS" : "FAIL", c.id, c.name, secs);
    lines[static_cast<std::size_t>(c.id)] = head + o.detail;
    std::fprintf(stderr, "finished criterion %d\n", c.id);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::printf("%s\n", lines[i].c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, order.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace grpolab

int main() { return grpolab::run_all(); }
