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

#include "grpolab/config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "grpolab/errors.h"
#include "grpolab/rng.h"
#include "grpolab/tasks.h"
#include "grpolab/text.h"

namespace grpolab {

const char* to_string(StageAlgorithm algorithm) {
  return algorithm == StageAlgorithm::kGrpoTer ? "grpo_ter" : "dapo_rsr_pshw";
}

StageAlgorithm parse_stage_algorithm(std::string_view text) {
  if (text == "grpo_ter") return StageAlgorithm::kGrpoTer;
  if (text == "dapo_rsr_pshw") return StageAlgorithm::kDapoRsrPshw;
  throw ConfigError("unknown stage algorithm '" + std::string(text) + "'");
}

StageAlgorithm expected_algorithm(std::size_t stage_index) {
  return stage_index == 0 ? StageAlgorithm::kGrpoTer
                          : StageAlgorithm::kDapoRsrPshw;
}

void EvalConfig::validate() const {
  if (k < 1) throw ConfigError("eval.k must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("eval.temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ConfigError("eval.top_p must lie in (0, 1]");
  }
  if (max_tokens < 1) throw ConfigError("eval.max_tokens must be >= 1");
}

namespace {

StageConfig default_stage(std::size_t index) {
  StageConfig s;
  s.algorithm = expected_algorithm(index);
  s.max_response_len = std::size_t{64} << std::min<std::size_t>(index, 2);
  s.entropy_penalty = index == 0;
  return s;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("bad value '" + std::string(value) + "' for " +
                    std::string(key));
}

template <typename T>
T parse_int(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    bad_value(key, value);
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define GRPOLAB_SIZE_FIELD(name, member)                                   \
  Field {                                                                  \
    name, [](const RunConfig& c) { return std::to_string(c.member); },     \
        [](RunConfig& c, std::string_view v) {                             \
          c.member = parse_int<decltype(c.member)>(name, v);               \
        }                                                                  \
  }
#define GRPOLAB_REAL_FIELD(name, member)                                   \
  Field {                                                                  \
    name, [](const RunConfig& c) { return fmt_double(c.member); },         \
        [](RunConfig& c, std::string_view v) {                             \
          c.member = parse_real(name, v);                                  \
        }                                                                  \
  }
#define GRPOLAB_BOOL_FIELD(name, member)                                   \
  Field {                                                                  \
    name, [](const RunConfig& c) { return fmt_bool(c.member); },           \
        [](RunConfig& c, std::string_view v) {                             \
          c.member = parse_bool(name, v);                                  \
        }                                                                  \
  }
#define GRPOLAB_STRING_FIELD(name, member)                                 \
  Field {                                                                  \
    name, [](const RunConfig& c) { return c.member; },                     \
        [](RunConfig& c, std::string_view v) { c.member = std::string(v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      GRPOLAB_SIZE_FIELD("run.seed", seed),
      {"run.stages",
       [](const RunConfig& c) { return std::to_string(c.stages.size()); },
       [](RunConfig& c, std::string_view v) {
         const auto n = parse_int<std::size_t>("run.stages", v);
         if (n < 1 || n > 9) bad_value("run.stages", v);
         while (c.stages.size() < n) {
           c.stages.push_back(default_stage(c.stages.size()));
         }
         c.stages.resize(n);
       }},
      GRPOLAB_SIZE_FIELD("trainer.ckpt_every", ckpt_every),
      GRPOLAB_SIZE_FIELD("policy.num_features", num_features),
      GRPOLAB_SIZE_FIELD("reward.ngram_n", reward_ngram_n),
      GRPOLAB_SIZE_FIELD("reward.max_repeats", reward_max_repeats),
      {"reward.verifier",
       [](const RunConfig& c) {
         return std::string(to_string(c.reward_verifier));
       },
       [](RunConfig& c, std::string_view v) {
         c.reward_verifier = parse_verifier_kind(v);
       }},
      GRPOLAB_REAL_FIELD("opt.alpha", clip.alpha),
      GRPOLAB_REAL_FIELD("opt.entropy_target", clip.entropy_target),
      GRPOLAB_REAL_FIELD("opt.entropy_coeff", clip.entropy_coeff),
      GRPOLAB_REAL_FIELD("opt.eps_low", clip.eps_low),
      GRPOLAB_REAL_FIELD("opt.eps_high", clip.eps_high),
      GRPOLAB_REAL_FIELD("opt.kl_coeff", clip.kl_coeff),
      GRPOLAB_BOOL_FIELD("opt.length_normalize", clip.length_normalize),
      {"opt.advantage",
       [](const RunConfig& c) { return std::string(to_string(c.advantage)); },
       [](RunConfig& c, std::string_view v) {
         c.advantage = parse_advantage_kind(v);
       }},
      GRPOLAB_SIZE_FIELD("scheduler.round_size", round_size),
      GRPOLAB_BOOL_FIELD("scheduler.rsr", rsr),
      GRPOLAB_BOOL_FIELD("scheduler.always_generate", always_generate),
      GRPOLAB_SIZE_FIELD("scheduler.max_buffer", max_buffer),
      GRPOLAB_SIZE_FIELD("scheduler.max_staleness", max_staleness),
      GRPOLAB_SIZE_FIELD("scheduler.max_rounds", max_rounds),
      GRPOLAB_STRING_FIELD("data.train", data.train_path),
      GRPOLAB_STRING_FIELD("data.templates", data.templates),
      GRPOLAB_SIZE_FIELD("data.min_digits", data.min_digits),
      GRPOLAB_SIZE_FIELD("data.max_digits", data.max_digits),
      GRPOLAB_SIZE_FIELD("data.train_count", data.train_count),
      GRPOLAB_SIZE_FIELD("data.train_seed", data.train_seed),
      GRPOLAB_STRING_FIELD("data.eval", data.eval_path),
      GRPOLAB_SIZE_FIELD("data.eval_count", data.eval_count),
      GRPOLAB_SIZE_FIELD("data.eval_seed", data.eval_seed),
      GRPOLAB_SIZE_FIELD("data.epochs", data.epochs),
      GRPOLAB_SIZE_FIELD("base.sft_steps", base.sft_steps),
      GRPOLAB_SIZE_FIELD("base.sft_batch", base.sft_batch),
      GRPOLAB_REAL_FIELD("base.sft_learning_rate", base.sft_learning_rate),
      GRPOLAB_SIZE_FIELD("eval.k", eval.k),
      GRPOLAB_REAL_FIELD("eval.temperature", eval.temperature),
      GRPOLAB_REAL_FIELD("eval.top_p", eval.top_p),
      GRPOLAB_SIZE_FIELD("eval.max_tokens", eval.max_tokens),
  };
  return table;
}

#undef GRPOLAB_SIZE_FIELD
#undef GRPOLAB_REAL_FIELD
#undef GRPOLAB_BOOL_FIELD
#undef GRPOLAB_STRING_FIELD

struct StageField {
  const char* name;
  std::function<std::string(const StageConfig&)> get;
  std::function<void(StageConfig&, std::string_view, std::string_view)> set;
};

const std::vector<StageField>& stage_fields() {
  static const std::vector<StageField> table = {
      {"algorithm",
       [](const StageConfig& s) { return std::string(to_string(s.algorithm)); },
       [](StageConfig& s, std::string_view, std::string_view v) {
         s.algorithm = parse_stage_algorithm(v);
       }},
      {"max_response_len",
       [](const StageConfig& s) { return std::to_string(s.max_response_len); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.max_response_len = parse_int<std::size_t>(k, v);
       }},
      {"steps", [](const StageConfig& s) { return std::to_string(s.steps); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.steps = parse_int<std::size_t>(k, v);
       }},
      {"group_size",
       [](const StageConfig& s) { return std::to_string(s.group_size); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.group_size = parse_int<std::size_t>(k, v);
       }},
      {"batch_size",
       [](const StageConfig& s) { return std::to_string(s.batch_size); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.batch_size = parse_int<std::size_t>(k, v);
       }},
      {"inner_updates",
       [](const StageConfig& s) { return std::to_string(s.inner_updates); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.inner_updates = parse_int<std::size_t>(k, v);
       }},
      {"learning_rate",
       [](const StageConfig& s) { return fmt_double(s.learning_rate); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.learning_rate = parse_real(k, v);
       }},
      {"seed", [](const StageConfig& s) { return std::to_string(s.seed); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.seed = parse_int<std::uint64_t>(k, v);
       }},
      {"entropy_penalty",
       [](const StageConfig& s) { return fmt_bool(s.entropy_penalty); },
       [](StageConfig& s, std::string_view k, std::string_view v) {
         s.entropy_penalty = parse_bool(k, v);
       }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (stages.empty()) throw ConfigError("run.stages must be >= 1");
  if (num_features == 0) throw ConfigError("policy.num_features must be > 0");
  clip.validate();
  reward_config();  // validates n-gram settings (the judge is bound later)
  eval.validate();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const StageConfig& s = stages[i];
    const std::string where = "stage" + std::to_string(i + 1) + ": ";
    if (s.algorithm != expected_algorithm(i)) {
      throw ConfigError(where + "algorithm must be " +
                        to_string(expected_algorithm(i)));
    }
    if (s.group_size < 2) throw ConfigError(where + "group_size must be >= 2");
    if (s.batch_size < 1) throw ConfigError(where + "batch_size must be >= 1");
    if (s.inner_updates < 1) {
      throw ConfigError(where + "inner_updates must be >= 1");
    }
    if (s.max_response_len < 1) {
      throw ConfigError(where + "max_response_len must be >= 1");
    }
    if (!(s.learning_rate >= 0.0)) {
      throw ConfigError(where + "learning_rate must be >= 0");
    }
    if (i > 0 && s.max_response_len < stages[i - 1].max_response_len) {
      throw ConfigError(where + "max_response_len may not shrink");
    }
    if (s.algorithm == StageAlgorithm::kDapoRsrPshw) {
      if (advantage != AdvantageKind::kPshw) {
        throw ConfigError("opt.advantage must be pshw for dapo_rsr_pshw stages");
      }
      if (clip.length_normalize) {
        throw ConfigError("opt.length_normalize must be false for dapo stages");
      }
      if (i > 1 && s.group_size != stages[i - 1].group_size) {
        throw ConfigError(where + "recovered groups need an unchanged G");
      }
    }
  }
  if (max_rounds < 1) throw ConfigError("scheduler.max_rounds must be >= 1");
  TaskTemplate probe{TemplateKind::kAdd, data.min_digits, data.max_digits};
  probe.validate();
}

RewardConfig RunConfig::reward_config() const {
  RewardConfig r;
  r.ngram_n = reward_ngram_n;
  r.max_repeats = reward_max_repeats;
  r.verifier = VerifierKind::kRule;
  r.validate();
  r.verifier = reward_verifier;
  return r;
}

SchedulerConfig RunConfig::scheduler_config(const StageConfig& stage) const {
  SchedulerConfig s;
  s.batch_size = stage.batch_size;
  s.group_size = stage.group_size;
  s.round_size = round_size;
  s.recovery = rsr;
  s.always_generate = always_generate;
  s.max_buffer = max_buffer;
  s.max_staleness = max_staleness;
  s.max_rounds = max_rounds;
  return s;
}

std::uint64_t RunConfig::stage_seed(std::size_t stage_index) const {
  const auto& s = stages.at(stage_index);
  return s.seed != 0 ? s.seed : derive_seed(seed, 0x57A6E, stage_index);
}

RunConfig default_run_config() {
  RunConfig c;
  for (std::size_t i = 0; i < 3; ++i) c.stages.push_back(default_stage(i));
  return c;
}

void set_config_value(RunConfig& config, std::string_view key,
                      std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  if (key.starts_with("stage")) {
    const auto dot = key.find('.');
    if (dot != std::string_view::npos && dot > 5) {
      const auto index = parse_int<std::size_t>(key, key.substr(5, dot - 5));
      const auto name = key.substr(dot + 1);
      if (index < 1 || index > config.stages.size()) {
        throw ConfigError(std::string(key) +
                          ": no such stage (set run.stages first)");
      }
      for (const auto& f : stage_fields()) {
        if (name == f.name) {
          f.set(config.stages[index - 1], key, value);
          return;
        }
      }
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::istream& in) {
  RunConfig config = default_run_config();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) {
      v = v.substr(0, hash);
    }
    v = trim_ascii(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    set_config_value(config, trim_ascii(v.substr(0, eq)),
                     trim_ascii(v.substr(eq + 1)));
  }
  config.validate();
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> config_entries(
    const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(config));
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    for (const auto& f : stage_fields()) {
      out.emplace_back("stage" + std::to_string(i + 1) + "." + f.name,
                       f.get(config.stages[i]));
    }
  }
  return out;
}

void write_config_text(std::ostream& out, const RunConfig& config) {
  for (const auto& [key, value] : config_entries(config)) {
    out << key << " = " << value << '\n';
  }
}

void write_config_json(std::ostream& out, const RunConfig& config) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_entries(config)) j[key] = value;
  out << j.dump(2) << '\n';
}

}  // namespace grpolab
