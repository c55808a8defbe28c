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

// grpolab command-line front end.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grpolab/config.h"
#include "grpolab/curation.h"
#include "grpolab/errors.h"
#include "grpolab/eval.h"
#include "grpolab/policy.h"
#include "grpolab/tasks.h"
#include "grpolab/trainer.h"

namespace fs = std::filesystem;
using namespace grpolab;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
}

RunConfig resolve_config(const std::string& path,
                         const std::vector<std::string>& sets) {
  RunConfig config = path.empty() ? default_run_config()
                                  : load_config_file(path);
  apply_overrides(config, sets);
  return config;
}

struct CurateArgs {
  std::string in, out, report, stages = "exact,fuzzy,semantic,type";
  double fuzzy = 0.8, cosine = 0.92;
  std::uint64_t seed = 0;
  std::size_t clusters = 0;
};

int run_curate(const CurateArgs& a) {
  CurationConfig cfg;
  cfg.stages = parse_stages(a.stages);
  cfg.fuzzy_threshold = a.fuzzy;
  cfg.cosine_threshold = a.cosine;
  cfg.seed = a.seed;
  cfg.clusters = a.clusters;
  const auto corpus = read_jsonl_file(a.in);
  const auto result = curate(corpus, cfg);
  write_jsonl_file(a.out, result.corpus);
  if (!a.report.empty()) {
    auto out = open_out(a.report);
    write_report_csv(out, result.report);
  } else {
    write_report_csv(std::cout, result.report);
  }
  return 0;
}

struct GenArgs {
  std::string templates = "add,sub,mul,chain", out;
  std::size_t count = 5000;
  std::uint64_t seed = 7;
  int min_digits = 1, max_digits = 2;
};

int run_gen_tasks(const GenArgs& a) {
  auto templates = parse_templates(a.templates);
  for (auto& t : templates) {
    t.min_digits = a.min_digits;
    t.max_digits = a.max_digits;
  }
  write_jsonl_file(a.out, generate_tasks(templates, a.count, a.seed));
  return 0;
}

struct TrainArgs {
  std::string config, out_dir, resume;
  std::vector<std::string> sets;
  bool evaluate = false;
};

int run_train(const TrainArgs& a) {
  const RunConfig config = resolve_config(a.config, a.sets);
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "run.json");
    write_config_json(out, config);
  }
  const auto corpus = training_corpus(config);
  const FeatureMap fmap(config.num_features);

  std::unique_ptr<Trainer> trainer;
  PolicyParams base;
  if (!a.resume.empty()) {
    trainer = std::make_unique<Trainer>(
        config, corpus, load_trainer_state_file(a.resume, fmap));
  } else {
    base = make_base_policy(config, corpus, fmap);
    save_policy_file((dir / "base_policy.txt").string(), base);
    trainer = std::make_unique<Trainer>(config, corpus, base);
  }

  TrainerHooks hooks;
  hooks.on_checkpoint = [&](const TrainerState& state, const std::string& tag) {
    save_trainer_state_file((dir / ("ckpt_" + tag + ".json")).string(), state);
  };
  auto flush_metrics = [&] {
    auto out = open_out(dir / "metrics.csv");
    write_metrics_csv(out, trainer->rows());
  };
  try {
    trainer->run(hooks);
  } catch (...) {
    flush_metrics();
    throw;
  }
  flush_metrics();
  save_policy_file((dir / "final_policy.txt").string(), trainer->params());
  std::cout << "steps " << trainer->state().global_step << ", final stage "
            << std::min(trainer->state().stage_index, config.stages.size())
            << (trainer->state().exhausted ? " (prompt stream exhausted)" : "")
            << '\n';

  if (a.evaluate) {
    const auto bench = heldout_corpus(config);
    const std::uint64_t eval_seed = config.seed ^ 0xE7A1;
    const LinearSoftmaxPolicy trained(trainer->params(), fmap);
    const auto after = evaluate(trained, bench, config.eval, eval_seed,
                                config.reward_config());
    std::cout << "held-out pass@1 " << after.aggregate;
    if (a.resume.empty()) {
      const LinearSoftmaxPolicy initial(base, fmap);
      const auto before = evaluate(initial, bench, config.eval, eval_seed,
                                   config.reward_config());
      std::cout << " (initial " << before.aggregate << ")";
    }
    std::cout << '\n';
    auto out = open_out(dir / "eval.csv");
    write_eval_csv(out, after);
  }
  return 0;
}

struct EvalArgs {
  std::string policy, bench, out;
  std::size_t k = 16, max_tokens = 64;
  double temperature = 1.0, top_p = 0.7;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
  const auto ckpt = load_policy_file(a.policy);
  const FeatureMap fmap(static_cast<std::uint32_t>(ckpt.params.num_features));
  const LinearSoftmaxPolicy policy(ckpt.params, fmap);
  EvalConfig cfg;
  cfg.k = a.k;
  cfg.temperature = a.temperature;
  cfg.top_p = a.top_p;
  cfg.max_tokens = a.max_tokens;
  const auto bench = read_jsonl_file(a.bench);
  const auto report = evaluate(policy, bench, cfg, a.seed);
  if (a.out.empty()) {
    write_eval_csv(std::cout, report);
  } else {
    auto out = open_out(a.out);
    write_eval_csv(out, report);
  }
  std::cerr << "pass@1 " << report.aggregate << " over " << bench.size()
            << " problems, k=" << report.k << '\n';
  return 0;
}

struct AbArgs {
  std::string toggle = "rsr", out, config;
  std::vector<std::string> sets;
  std::size_t seeds = 3;
  bool evaluate = false;
};

int run_abtest(const AbArgs& a) {
  const RunConfig base = resolve_config(a.config, a.sets);
  const AbToggle toggle = parse_ab_toggle(a.toggle);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(base.seed + i);
  const auto train = training_corpus(base);
  std::vector<PromptSample> bench;
  if (a.evaluate) bench = heldout_corpus(base);
  const AbResult result = ab_experiment(base, toggle, seeds, train, bench);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  for (const auto& arm : result.arms) {
    auto out = open_out(dir / ("seed" + std::to_string(arm.seed)) / arm.arm /
                        "metrics.csv");
    write_metrics_csv(out, arm.rows);
  }
  {
    auto out = open_out(dir / "curves.csv");
    write_ab_curves_csv(out, result, base.clip.entropy_target);
  }
  auto out = open_out(dir / "summary.csv");
  write_ab_summary_csv(out, result, base.clip.entropy_target);
  write_ab_summary_csv(std::cout, result, base.clip.entropy_target);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grpolab: group-relative RL post-training on toy tasks"};
  app.require_subcommand(1);

  CurateArgs curate_args;
  auto* curate_cmd = app.add_subcommand("curate", "Deduplicate and filter a JSONL corpus");
  curate_cmd->add_option("--in", curate_args.in, "Input JSONL")->required();
  curate_cmd->add_option("--out", curate_args.out, "Output JSONL")->required();
  curate_cmd->add_option("--stages", curate_args.stages, "Comma-separated stages");
  curate_cmd->add_option("--fuzzy-threshold", curate_args.fuzzy);
  curate_cmd->add_option("--cosine-threshold", curate_args.cosine);
  curate_cmd->add_option("--clusters", curate_args.clusters, "k-means k (0 = auto)");
  curate_cmd->add_option("--seed", curate_args.seed);
  curate_cmd->add_option("--report", curate_args.report, "Per-stage CSV (default stdout)");

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-tasks", "Generate synthetic arithmetic tasks");
  gen_cmd->add_option("--templates", gen_args.templates);
  gen_cmd->add_option("--count", gen_args.count);
  gen_cmd->add_option("--seed", gen_args.seed,
                      "Seeds >= 2^32 draw from the held-out partition");
  gen_cmd->add_option("--min-digits", gen_args.min_digits);
  gen_cmd->add_option("--max-digits", gen_args.max_digits);
  gen_cmd->add_option("--out", gen_args.out)->required();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Run the staged training pipeline");
  train_cmd->add_option("--config", train_args.config, "key = value run config");
  train_cmd->add_option("--out-dir", train_args.out_dir)->required();
  train_cmd->add_option("--resume", train_args.resume, "Trainer checkpoint JSON");
  train_cmd->add_option("--set", train_args.sets, "Override key=value");
  train_cmd->add_flag("--eval", train_args.evaluate,
                      "Report held-out pass@1 after training");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "pass@1 of a policy checkpoint");
  eval_cmd->add_option("--policy", eval_args.policy)->required();
  eval_cmd->add_option("--bench", eval_args.bench)->required();
  eval_cmd->add_option("--k", eval_args.k);
  eval_cmd->add_option("--temperature", eval_args.temperature);
  eval_cmd->add_option("--top-p", eval_args.top_p);
  eval_cmd->add_option("--max-tokens", eval_args.max_tokens);
  eval_cmd->add_option("--seed", eval_args.seed);
  eval_cmd->add_option("--out", eval_args.out, "Report CSV (default stdout)");

  AbArgs ab_args;
  auto* ab_cmd = app.add_subcommand("abtest", "Matched-seed A/B runs");
  ab_cmd->add_option("--toggle", ab_args.toggle, "rsr or entropy");
  ab_cmd->add_option("--seeds", ab_args.seeds, "Number of seeds (>= 3)");
  ab_cmd->add_option("--config", ab_args.config);
  ab_cmd->add_option("--set", ab_args.sets, "Override key=value");
  ab_cmd->add_flag("--eval", ab_args.evaluate, "Evaluate each arm's final policy");
  ab_cmd->add_option("--out", ab_args.out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*curate_cmd) return run_curate(curate_args);
    if (*gen_cmd) return run_gen_tasks(gen_args);
    if (*train_cmd) return run_train(train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*ab_cmd) return run_abtest(ab_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
