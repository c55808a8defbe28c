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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "grpolab/errors.h"
#include "grpolab/optimizer.h"
#include "grpolab/rng.h"
#include "grpolab/tasks.h"

namespace grpolab {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string metrics_header() {
  return "step,stage,mean_reward,policy_entropy,mean_response_len,"
         "raw_generated,recovered,filtered_out,consumed,buffered,dropped,"
         "oversample_ratio,buffer_size,objective_value";
}

std::string format_metrics_row(const MetricsRow& r) {
  const StepCounters& c = r.counters;
  std::ostringstream s;
  s << r.step << ',' << r.stage << ',' << fmt(r.mean_reward) << ','
    << fmt(r.policy_entropy) << ',' << fmt(r.mean_response_len) << ','
    << c.raw_generated << ',' << c.recovered << ',' << c.filtered_out << ','
    << c.consumed << ',' << c.buffered << ',' << c.dropped << ','
    << fmt(c.oversample_ratio(r.batch_size)) << ',' << c.buffer_size << ','
    << fmt(r.objective_value);
  return s.str();
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << metrics_header() << '\n';
  for (const auto& r : rows) out << format_metrics_row(r) << '\n';
}

namespace {

std::vector<TaskTemplate> data_templates(const DataConfig& data) {
  auto templates = parse_templates(data.templates);
  for (auto& t : templates) {
    t.min_digits = data.min_digits;
    t.max_digits = data.max_digits;
  }
  return templates;
}

}  // namespace

std::vector<PromptSample> training_corpus(const RunConfig& config) {
  if (!config.data.train_path.empty()) {
    return read_jsonl_file(config.data.train_path);
  }
  if (config.data.train_seed >= kEvalSeedBase) {
    throw ConfigError("data.train_seed lies in the held-out seed range");
  }
  return generate_tasks(data_templates(config.data), config.data.train_count,
                        config.data.train_seed);
}

std::vector<PromptSample> heldout_corpus(const RunConfig& config) {
  if (!config.data.eval_path.empty()) {
    return read_jsonl_file(config.data.eval_path);
  }
  if (config.data.eval_seed < kEvalSeedBase) {
    throw ConfigError("data.eval_seed lies in the training seed range");
  }
  return generate_tasks(data_templates(config.data), config.data.eval_count,
                        config.data.eval_seed);
}

PolicyParams make_base_policy(const RunConfig& config,
                              std::span<const PromptSample> corpus,
                              const FeatureMap& feature_map) {
  PolicyParams params = make_params(feature_map);
  std::vector<std::size_t> usable;
  std::vector<std::vector<TokenId>> responses(corpus.size());
  std::vector<std::vector<TokenId>> prompts(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto tokens = vocab::try_tokenize(corpus[i].question);
    if (!tokens) continue;
    try {
      responses[i] = reference_response(*tokens);
    } catch (const ConfigError&) {
      continue;
    }
    prompts[i] = *tokens;
    usable.push_back(i);
  }
  if (usable.empty() || config.base.sft_steps == 0) return params;

  Rng rng(derive_seed(config.seed, 0xBA5E));
  const double scale = 1.0 / static_cast<double>(config.base.sft_batch);
  PolicyGradient grad;
  for (std::size_t step = 0; step < config.base.sft_steps; ++step) {
    grad.assign(params.weights.size(), 0.0);
    for (std::size_t b = 0; b < config.base.sft_batch; ++b) {
      const std::size_t i = usable[rng.below(usable.size())];
      const PromptAnalysis analysis = feature_map.analyze(prompts[i]);
      ContextState state;
      for (TokenId t : responses[i]) {
        const auto f = feature_map.extract(analysis, state);
        accumulate_logprob_gradient(params, f, t, scale, grad);
        state.push(t);
      }
    }
    apply_update(params, grad, config.base.sft_learning_rate);
  }
  params.version = 0;
  return params;
}

PromptStream::PromptStream(std::span<const PromptSample> corpus,
                           std::uint64_t seed, std::size_t epochs)
    : corpus_size_(corpus.size()), seed_(seed), epochs_(epochs) {
  if (corpus_size_ == 0) throw ConfigError("training corpus is empty");
}

bool PromptStream::exhausted() const {
  return epochs_ > 0 && position_ >= epochs_ * corpus_size_;
}

const std::vector<std::size_t>& PromptStream::permutation(
    std::uint64_t epoch) {
  if (epoch != cached_epoch_) {
    perm_.resize(corpus_size_);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    Rng rng(derive_seed(seed_, 0x5EED, epoch));
    for (std::size_t i = corpus_size_; i > 1; --i) {
      std::swap(perm_[i - 1], perm_[rng.below(i)]);
    }
    cached_epoch_ = epoch;
  }
  return perm_;
}

std::size_t PromptStream::next() {
  if (exhausted()) throw InvariantError("prompt stream exhausted");
  const std::uint64_t epoch = position_ / corpus_size_;
  const std::size_t index = permutation(epoch)[position_ % corpus_size_];
  ++position_;
  return index;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization.

namespace {

json rollout_to_json(const Rollout& r) {
  return json{{"tokens", r.tokens},
              {"logprobs_old", r.logprobs_old},
              {"truncated", r.truncated},
              {"policy_version", r.policy_version}};
}

json record_to_json(const RewardRecord& r) {
  return json{{"reward", r.reward},
              {"filtered", r.filtered},
              {"filter_reason", static_cast<int>(r.filter_reason)},
              {"verifier", static_cast<int>(r.verifier)}};
}

json group_to_json(const RolloutGroup& g) {
  json outputs = json::array();
  for (const auto& r : g.outputs) outputs.push_back(rollout_to_json(r));
  json records = json::array();
  for (const auto& r : g.records) records.push_back(record_to_json(r));
  return json{{"prompt_id", g.prompt_id}, {"question", g.question},
              {"gold", g.gold},           {"prompt", g.prompt},
              {"origin_step", g.origin_step}, {"outputs", outputs},
              {"records", records}};
}

RolloutGroup group_from_json(const json& j, const FeatureMap& feature_map) {
  RolloutGroup g;
  g.prompt_id = j.at("prompt_id").get<std::string>();
  g.question = j.at("question").get<std::string>();
  g.gold = j.at("gold").get<std::string>();
  g.prompt = j.at("prompt").get<std::vector<TokenId>>();
  g.origin_step = j.at("origin_step").get<std::int64_t>();
  const PromptAnalysis analysis = feature_map.analyze(g.prompt);
  for (const auto& o : j.at("outputs")) {
    Rollout r;
    r.tokens = o.at("tokens").get<std::vector<TokenId>>();
    r.logprobs_old = o.at("logprobs_old").get<std::vector<double>>();
    r.truncated = o.at("truncated").get<bool>();
    r.policy_version = o.at("policy_version").get<std::uint64_t>();
    ContextState state;
    for (TokenId t : r.tokens) {
      r.contexts.push_back(feature_map.extract(analysis, state));
      state.push(t);
    }
    g.outputs.push_back(std::move(r));
  }
  for (const auto& o : j.at("records")) {
    RewardRecord rec;
    rec.reward = o.at("reward").get<double>();
    rec.filtered = o.at("filtered").get<bool>();
    rec.filter_reason = static_cast<FilterReason>(o.at("filter_reason").get<int>());
    rec.verifier = static_cast<VerifierKind>(o.at("verifier").get<int>());
    g.records.push_back(rec);
  }
  return g;
}

json row_to_json(const MetricsRow& r) {
  const StepCounters& c = r.counters;
  return json{{"step", r.step},
              {"stage", r.stage},
              {"mean_reward", r.mean_reward},
              {"policy_entropy", r.policy_entropy},
              {"mean_response_len", r.mean_response_len},
              {"rounds", c.rounds},
              {"raw_generated", c.raw_generated},
              {"recovered", c.recovered},
              {"filtered_out", c.filtered_out},
              {"consumed", c.consumed},
              {"buffered", c.buffered},
              {"buffer_size", c.buffer_size},
              {"dropped", c.dropped},
              {"batch_size", r.batch_size},
              {"objective_value", r.objective_value}};
}

MetricsRow row_from_json(const json& j) {
  MetricsRow r;
  r.step = j.at("step").get<std::int64_t>();
  r.stage = j.at("stage").get<std::size_t>();
  r.mean_reward = j.at("mean_reward").get<double>();
  r.policy_entropy = j.at("policy_entropy").get<double>();
  r.mean_response_len = j.at("mean_response_len").get<double>();
  r.batch_size = j.at("batch_size").get<std::size_t>();
  r.objective_value = j.at("objective_value").get<double>();
  StepCounters& c = r.counters;
  c.step = r.step;
  c.rounds = j.at("rounds").get<std::size_t>();
  c.raw_generated = j.at("raw_generated").get<std::size_t>();
  c.recovered = j.at("recovered").get<std::size_t>();
  c.filtered_out = j.at("filtered_out").get<std::size_t>();
  c.consumed = j.at("consumed").get<std::size_t>();
  c.buffered = j.at("buffered").get<std::size_t>();
  c.buffer_size = j.at("buffer_size").get<std::size_t>();
  c.dropped = j.at("dropped").get<std::size_t>();
  return r;
}

constexpr const char* kStateFormat = "grpolab-trainer-state-1";

}  // namespace

void save_trainer_state(std::ostream& out, const TrainerState& state) {
  json weights = json::array();
  for (std::size_t i = 0; i < state.params.weights.size(); ++i) {
    if (state.params.weights[i] != 0.0) {
      weights.push_back(json::array({i, state.params.weights[i]}));
    }
  }
  json buffer = json::array();
  for (const auto& g : state.buffer) buffer.push_back(group_to_json(g));
  json rows = json::array();
  for (const auto& r : state.rows) rows.push_back(row_to_json(r));
  const json j = {
      {"format", kStateFormat},
      {"params",
       {{"num_features", state.params.num_features},
        {"vocab_size", state.params.vocab_size},
        {"version", state.params.version},
        {"weights", weights}}},
      {"stage_index", state.stage_index},
      {"step_in_stage", state.step_in_stage},
      {"global_step", state.global_step},
      {"stream_position", state.stream_position},
      {"exhausted", state.exhausted},
      {"totals",
       {{"raw_generated", state.totals.raw_generated},
        {"filtered_out", state.totals.filtered_out},
        {"consumed", state.totals.consumed},
        {"dropped", state.totals.dropped}}},
      {"buffer", buffer},
      {"rows", rows}};
  out << j.dump() << '\n';
}

TrainerState load_trainer_state(std::istream& in,
                                const FeatureMap& feature_map) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(std::string("trainer checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kStateFormat) {
      throw IoError("trainer checkpoint: unknown format");
    }
    TrainerState s;
    const json& p = j.at("params");
    s.params = PolicyParams(p.at("num_features").get<std::size_t>(),
                            p.at("vocab_size").get<std::size_t>());
    s.params.version = p.at("version").get<std::uint64_t>();
    for (const auto& w : p.at("weights")) {
      const auto index = w.at(0).get<std::size_t>();
      if (index >= s.params.weights.size()) {
        throw IoError("trainer checkpoint: weight index out of range");
      }
      s.params.weights[index] = w.at(1).get<double>();
    }
    s.params.check_finite();
    s.stage_index = j.at("stage_index").get<std::size_t>();
    s.step_in_stage = j.at("step_in_stage").get<std::size_t>();
    s.global_step = j.at("global_step").get<std::int64_t>();
    s.stream_position = j.at("stream_position").get<std::uint64_t>();
    s.exhausted = j.at("exhausted").get<bool>();
    const json& t = j.at("totals");
    s.totals.raw_generated = t.at("raw_generated").get<std::size_t>();
    s.totals.filtered_out = t.at("filtered_out").get<std::size_t>();
    s.totals.consumed = t.at("consumed").get<std::size_t>();
    s.totals.dropped = t.at("dropped").get<std::size_t>();
    for (const auto& g : j.at("buffer")) {
      s.buffer.push_back(group_from_json(g, feature_map));
    }
    for (const auto& r : j.at("rows")) s.rows.push_back(row_from_json(r));
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("trainer checkpoint: ") + e.what());
  }
}

void save_trainer_state_file(const std::string& path,
                             const TrainerState& state) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  save_trainer_state(out, state);
  out.flush();
  if (!out) throw IoError("checkpoint write failed: " + path);
}

TrainerState load_trainer_state_file(const std::string& path,
                                     const FeatureMap& feature_map) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);
  return load_trainer_state(in, feature_map);
}

// ---------------------------------------------------------------------------
// Trainer.

Trainer::Trainer(RunConfig config, std::vector<PromptSample> corpus,
                 PolicyParams initial, const Judge* judge)
    : config_(std::move(config)),
      corpus_(std::move(corpus)),
      feature_map_(config_.num_features) {
  state_.params = std::move(initial);
  reward_ = config_.reward_config();
  reward_.judge = judge;
  init();
}

Trainer::Trainer(RunConfig config, std::vector<PromptSample> corpus,
                 TrainerState state, const Judge* judge)
    : config_(std::move(config)),
      corpus_(std::move(corpus)),
      feature_map_(config_.num_features),
      state_(std::move(state)) {
  reward_ = config_.reward_config();
  reward_.judge = judge;
  init();
}

void Trainer::init() {
  config_.validate();
  reward_.validate();
  if (state_.params.num_features != feature_map_.num_features() ||
      state_.params.vocab_size != vocab::kSize) {
    throw ConfigError("initial policy shape does not match policy.num_features");
  }
  validate_corpus(corpus_);
  prompts_.reserve(corpus_.size());
  for (const auto& s : corpus_) {
    auto tokens = vocab::try_tokenize(s.question);
    if (!tokens) {
      throw ConfigError("question '" + s.question +
                        "' is outside the policy vocabulary");
    }
    prompts_.push_back(std::move(*tokens));
  }
  stream_ = std::make_unique<PromptStream>(corpus_, config_.seed,
                                           config_.data.epochs);
  stream_->seek(state_.stream_position);
  if (config_.clip.kl_coeff > 0.0) {
    reference_ = std::make_unique<PolicyParams>(state_.params);
  }
}

bool Trainer::done() const {
  return state_.exhausted || state_.stage_index >= config_.stages.size();
}

void Trainer::advance_stage(const TrainerHooks& hooks) {
  const std::size_t finished = state_.stage_index;
  ++state_.stage_index;
  state_.step_in_stage = 0;
  scheduler_.reset();
  // Stage 1 has no buffer semantics, so the first recovery stage starts
  // empty; later recovery stages inherit the buffer.
  if (finished < config_.stages.size() &&
      config_.stages[finished].algorithm == StageAlgorithm::kGrpoTer) {
    if (!state_.buffer.empty()) {
      throw InvariantError("recovery buffer not empty after a GRPO stage");
    }
  }
  if (hooks.on_checkpoint) {
    hooks.on_checkpoint(state_, "stage" + std::to_string(finished + 1));
  }
}

RolloutGroup Trainer::make_group(std::size_t corpus_index, std::uint64_t draw,
                                 const StageConfig& stage) {
  const PromptSample& sample = corpus_[corpus_index];
  RolloutGroup g;
  g.prompt_id = sample.id;
  g.question = sample.question;
  g.gold = sample.answer;
  g.prompt = prompts_[corpus_index];
  Rng rng(derive_seed(config_.stage_seed(state_.stage_index), draw));
  g.outputs = sample_group(state_.params, feature_map_, g.prompt,
                           stage.group_size, stage.max_response_len, rng);
  g.records.reserve(g.outputs.size());
  for (const auto& r : g.outputs) {
    g.records.push_back(
        score_rollout(r.tokens, r.truncated, g.gold, reward_, g.question));
    step_reward_sum_ += g.records.back().reward;
    step_len_sum_ += static_cast<double>(r.tokens.size());
    ++step_rollouts_;
  }
  return g;
}

std::vector<RolloutGroup> Trainer::generate(std::size_t count,
                                            const StageConfig& stage) {
  std::vector<RolloutGroup> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count && !stream_->exhausted(); ++i) {
    const std::uint64_t draw = stream_->position();
    const std::size_t index = stream_->next();
    out.push_back(make_group(index, draw, stage));
  }
  state_.stream_position = stream_->position();
  return out;
}

bool Trainer::step(const TrainerHooks& hooks) {
  while (!done() &&
         state_.step_in_stage >= config_.stages[state_.stage_index].steps) {
    advance_stage(hooks);
  }
  if (done()) return false;

  const StageConfig& stage = config_.stages[state_.stage_index];
  const std::int64_t step_id = state_.global_step + 1;
  step_reward_sum_ = 0.0;
  step_len_sum_ = 0.0;
  step_rollouts_ = 0;

  std::vector<RolloutGroup> batch;
  std::vector<RolloutGroup> rejected;
  StepCounters counters;
  counters.step = step_id;
  bool exhausted = false;

  if (stage.algorithm == StageAlgorithm::kGrpoTer) {
    // One sampling round of N prompts; degenerate groups are dropped and
    // not replaced.
    auto groups = generate(stage.batch_size, stage);
    counters.rounds = 1;
    if (groups.empty()) exhausted = true;
    for (auto& g : groups) {
      g.origin_step = step_id;
      ++counters.raw_generated;
      if (admit_group(g, stage.group_size)) {
        batch.push_back(std::move(g));
      } else {
        ++counters.filtered_out;
        rejected.push_back(std::move(g));
      }
    }
    counters.consumed = batch.size();
    counters.check_conservation();
  } else {
    if (!scheduler_) {
      scheduler_ = std::make_unique<RsrScheduler>(
          config_.scheduler_config(stage));
    }
    scheduler_->restore_buffer(std::move(state_.buffer));
    StepResult result = scheduler_->step(
        step_id, [&](std::size_t count, std::int64_t) {
          return generate(count, stage);
        });
    state_.buffer = scheduler_->take_buffer();
    counters = result.counters;
    exhausted = result.status == AssemblyStatus::kExhausted;
    batch = std::move(result.effective);
  }

  for (const auto& g : batch) {
    if (!admit_group(g, stage.group_size)) {
      throw InvariantError("effective batch holds a degenerate group");
    }
  }

  MetricsRow row;
  row.step = step_id;
  row.stage = state_.stage_index + 1;
  row.counters = counters;
  row.batch_size = stage.batch_size;

  const AdvantageKind advantage = stage.algorithm == StageAlgorithm::kGrpoTer
                                      ? AdvantageKind::kGrpo
                                      : config_.advantage;
  ObjectiveOptions options;
  options.advantage = advantage;
  options.entropy_penalty = stage.entropy_penalty;
  options.reference = reference_.get();
  if (!batch.empty()) {
    for (std::size_t u = 0; u < stage.inner_updates; ++u) {
      const ObjectiveResult obj =
          stage_objective(state_.params, batch, config_.clip, options);
      if (u == 0) {
        row.objective_value = obj.value;
        row.policy_entropy = obj.entropy;
      }
      apply_update(state_.params, obj.gradient, stage.learning_rate);
    }
  } else if (!rejected.empty()) {
    std::vector<SparseFeatures> contexts;
    for (const auto& g : rejected) {
      for (const auto& r : g.outputs) {
        contexts.insert(contexts.end(), r.contexts.begin(), r.contexts.end());
      }
    }
    row.policy_entropy = policy_entropy(state_.params, contexts);
  }

  if (step_rollouts_ > 0) {
    row.mean_reward = step_reward_sum_ / static_cast<double>(step_rollouts_);
    row.mean_response_len = step_len_sum_ / static_cast<double>(step_rollouts_);
  } else {
    double reward = 0.0, len = 0.0;
    std::size_t n = 0;
    for (const auto& g : batch) {
      for (std::size_t i = 0; i < g.outputs.size(); ++i, ++n) {
        reward += g.records[i].reward;
        len += static_cast<double>(g.outputs[i].tokens.size());
      }
    }
    if (n > 0) {
      row.mean_reward = reward / static_cast<double>(n);
      row.mean_response_len = len / static_cast<double>(n);
    }
  }

  state_.totals.add(counters);
  if (!state_.totals.conserved(state_.buffer.size())) {
    throw InvariantError("run-level sample conservation violated");
  }
  state_.global_step = step_id;
  state_.rows.push_back(row);
  if (hooks.on_batch) hooks.on_batch(row, batch);

  if (exhausted) {
    state_.exhausted = true;
    return false;
  }
  ++state_.step_in_stage;
  if (config_.ckpt_every > 0 &&
      state_.global_step % static_cast<std::int64_t>(config_.ckpt_every) == 0 &&
      hooks.on_checkpoint) {
    hooks.on_checkpoint(state_, "step" + std::to_string(state_.global_step));
  }
  if (state_.step_in_stage >= stage.steps) advance_stage(hooks);
  return !done();
}

void Trainer::run(const TrainerHooks& hooks) {
  while (step(hooks)) {
  }
  // Flush boundaries of trailing zero-step stages.
  while (!state_.exhausted && state_.stage_index < config_.stages.size()) {
    advance_stage(hooks);
  }
}

void Trainer::run_stage(const TrainerHooks& hooks) {
  const std::size_t stage = state_.stage_index;
  while (!done() && state_.stage_index == stage) {
    if (state_.step_in_stage >= config_.stages[stage].steps) {
      advance_stage(hooks);
      break;
    }
    step(hooks);
  }
}

}  // namespace grpolab
