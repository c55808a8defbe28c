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

#include "grpolab/policy.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "grpolab/errors.h"

namespace grpolab {

void PolicyParams::check_finite() const {
  for (double w : weights) {
    if (!std::isfinite(w)) throw InvariantError("non-finite policy weight");
  }
}

TokenContext make_context(const FeatureMap& feature_map,
                          std::span<const TokenId> prompt,
                          std::span<const TokenId> prefix) {
  TokenContext ctx;
  ctx.prompt_tokens.assign(prompt.begin(), prompt.end());
  ctx.generated_prefix.assign(prefix.begin(), prefix.end());
  ctx.features = feature_map.extract(feature_map.analyze(prompt), prefix);
  return ctx;
}

std::vector<double> compute_logits(const PolicyParams& params,
                                   std::span<const std::uint32_t> features) {
  std::vector<double> z(params.vocab_size, 0.0);
  for (std::uint32_t f : features) {
    const double* w = params.row(f);
    for (std::size_t v = 0; v < params.vocab_size; ++v) z[v] += w[v];
  }
  return z;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  double max_z = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (!std::isfinite(z)) throw InvariantError("non-finite logit");
    max_z = std::max(max_z, z);
  }
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_z);
  const double log_norm = max_z + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

namespace {

std::vector<double> softmax_from_logits(std::span<const double> logits) {
  double max_z = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (!std::isfinite(z)) throw InvariantError("non-finite logit");
    max_z = std::max(max_z, z);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_z);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

class LinearSession : public DecodingSession {
 public:
  LinearSession(const PolicyParams& params, const FeatureMap& features,
                std::span<const TokenId> prompt)
      : params_(params), features_(features), prompt_(features.analyze(prompt)) {}

  std::vector<double> next_distribution() override {
    return softmax_from_logits(
        compute_logits(params_, features_.extract(prompt_, state_)));
  }
  void push(TokenId token) override { state_.push(token); }

 private:
  const PolicyParams& params_;
  const FeatureMap& features_;
  PromptAnalysis prompt_;
  ContextState state_;
};

}  // namespace

std::vector<double> token_distribution(
    const PolicyParams& params, std::span<const std::uint32_t> features) {
  return softmax_from_logits(compute_logits(params, features));
}

std::vector<double> token_distribution(const PolicyParams& params,
                                       const TokenContext& context) {
  return token_distribution(params, context.features);
}

double token_logprob(const PolicyParams& params,
                     std::span<const std::uint32_t> features, TokenId token) {
  return log_softmax(compute_logits(params, features)).at(token);
}

std::vector<TokenId> nucleus(std::span<const double> probs, double top_p) {
  std::vector<TokenId> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return probs[a] > probs[b];
  });
  std::vector<TokenId> kept;
  double mass = 0.0;
  for (TokenId t : order) {
    kept.push_back(t);
    mass += probs[t];
    if (mass >= top_p) break;
  }
  return kept;
}

std::vector<double> shape_distribution(std::span<const double> probs,
                                       const SamplingOptions& options) {
  if (!(options.temperature > 0.0)) {
    throw ConfigError("temperature must be positive");
  }
  if (!(options.top_p > 0.0 && options.top_p <= 1.0)) {
    throw ConfigError("top_p must lie in (0, 1]");
  }
  std::vector<double> p(probs.begin(), probs.end());
  if (options.temperature != 1.0) {
    std::vector<double> logits(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      logits[i] = p[i] > 0.0 ? std::log(p[i]) / options.temperature
                             : -std::numeric_limits<double>::infinity();
    }
    double max_z = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = std::isinf(logits[i]) ? 0.0 : std::exp(logits[i] - max_z);
      sum += p[i];
    }
    for (double& x : p) x /= sum;
  }
  if (options.top_p < 1.0) {
    const auto kept = nucleus(p, options.top_p);
    std::vector<double> q(p.size(), 0.0);
    double mass = 0.0;
    for (TokenId t : kept) mass += p[t];
    for (TokenId t : kept) q[t] = p[t] / mass;
    p = std::move(q);
  }
  return p;
}

TokenId sample_token(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  TokenId last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = static_cast<TokenId>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

Rollout sample_response(const AutoregressivePolicy& policy,
                        std::span<const TokenId> prompt, std::size_t max_len,
                        Rng& rng, const SamplingOptions& options) {
  if (max_len == 0) throw ConfigError("max_len must be >= 1");
  auto session = policy.start(prompt);
  Rollout r;
  while (r.tokens.size() < max_len) {
    const auto p = shape_distribution(session->next_distribution(), options);
    const TokenId t = sample_token(p, rng);
    r.tokens.push_back(t);
    r.logprobs_old.push_back(std::log(p[t]));
    if (t == vocab::kEos) return r;
    session->push(t);
  }
  r.truncated = true;
  return r;
}

std::unique_ptr<DecodingSession> LinearSoftmaxPolicy::start(
    std::span<const TokenId> prompt) const {
  return std::make_unique<LinearSession>(*params_, *features_, prompt);
}

PolicyParams make_params(const FeatureMap& feature_map,
                         std::size_t vocab_size) {
  return PolicyParams(feature_map.num_features(), vocab_size);
}

Rollout sample_rollout(const PolicyParams& params,
                       const FeatureMap& feature_map,
                       std::span<const TokenId> prompt, std::size_t max_len,
                       Rng& rng, const SamplingOptions& options) {
  if (max_len == 0) throw ConfigError("max_len must be >= 1");
  const bool plain = options.temperature == 1.0 && options.top_p == 1.0;
  const PromptAnalysis analysis = feature_map.analyze(prompt);
  ContextState state;
  Rollout r;
  r.policy_version = params.version;
  while (r.tokens.size() < max_len) {
    SparseFeatures f = feature_map.extract(analysis, state);
    const auto logp = log_softmax(compute_logits(params, f));
    std::vector<double> p(logp.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logp[i]);
    TokenId t;
    if (plain) {
      t = sample_token(p, rng);
      r.logprobs_old.push_back(logp[t]);
    } else {
      const auto shaped = shape_distribution(p, options);
      t = sample_token(shaped, rng);
      r.logprobs_old.push_back(std::log(shaped[t]));
    }
    r.tokens.push_back(t);
    r.contexts.push_back(std::move(f));
    if (t == vocab::kEos) return r;
    state.push(t);
  }
  r.truncated = true;
  return r;
}

std::vector<Rollout> sample_group(const PolicyParams& params,
                                  const FeatureMap& feature_map,
                                  std::span<const TokenId> prompt,
                                  std::size_t group_size, std::size_t max_len,
                                  Rng& rng) {
  if (group_size < 2) throw ConfigError("group size G must be >= 2");
  std::vector<Rollout> group;
  group.reserve(group_size);
  for (std::size_t i = 0; i < group_size; ++i) {
    group.push_back(sample_rollout(params, feature_map, prompt, max_len, rng));
  }
  return group;
}

std::vector<double> importance_ratio(const PolicyParams& params_new,
                                     const Rollout& rollout) {
  if (rollout.contexts.size() != rollout.tokens.size() ||
      rollout.logprobs_old.size() != rollout.tokens.size()) {
    throw InvariantError("rollout is missing per-token contexts or logprobs");
  }
  std::vector<double> ratios(rollout.tokens.size());
  for (std::size_t t = 0; t < rollout.tokens.size(); ++t) {
    const double logp_new =
        token_logprob(params_new, rollout.contexts[t], rollout.tokens[t]);
    ratios[t] = std::exp(logp_new - rollout.logprobs_old[t]);
  }
  return ratios;
}

double context_entropy(const PolicyParams& params,
                       std::span<const std::uint32_t> features) {
  const auto logp = log_softmax(compute_logits(params, features));
  double h = 0.0;
  for (double lp : logp) h -= std::exp(lp) * lp;
  return std::max(h, 0.0);
}

double policy_entropy(const PolicyParams& params,
                      std::span<const SparseFeatures> contexts) {
  if (contexts.empty()) throw ConfigError("policy_entropy: no contexts");
  double total = 0.0;
  for (const auto& f : contexts) total += context_entropy(params, f);
  return total / static_cast<double>(contexts.size());
}

void accumulate_logprob_gradient(const PolicyParams& params,
                                 std::span<const std::uint32_t> features,
                                 TokenId token, double coefficient,
                                 PolicyGradient& grad) {
  if (coefficient == 0.0) return;
  const auto p = token_distribution(params, features);
  std::vector<double> dz(p.size());
  for (std::size_t v = 0; v < p.size(); ++v) dz[v] = -coefficient * p[v];
  dz[token] += coefficient;
  for (std::uint32_t f : features) {
    double* g = grad.data() + static_cast<std::size_t>(f) * params.vocab_size;
    for (std::size_t v = 0; v < dz.size(); ++v) g[v] += dz[v];
  }
}

void accumulate_entropy_gradient(const PolicyParams& params,
                                 std::span<const std::uint32_t> features,
                                 double scale, PolicyGradient& grad) {
  if (scale == 0.0) return;
  const auto logp = log_softmax(compute_logits(params, features));
  double h = 0.0;
  for (double lp : logp) h -= std::exp(lp) * lp;
  // dH/dz_v = -p_v (log p_v + H)
  std::vector<double> dz(logp.size());
  for (std::size_t v = 0; v < logp.size(); ++v) {
    dz[v] = -scale * std::exp(logp[v]) * (logp[v] + h);
  }
  for (std::uint32_t f : features) {
    double* g = grad.data() + static_cast<std::size_t>(f) * params.vocab_size;
    for (std::size_t v = 0; v < dz.size(); ++v) g[v] += dz[v];
  }
}

PolicyGradient analytic_gradients(const PolicyParams& params,
                                  std::span<const GradientTerm> terms) {
  PolicyGradient grad(params.weights.size(), 0.0);
  for (const auto& term : terms) {
    if (!std::isfinite(term.coefficient)) {
      throw ConfigError("gradient coefficient must be finite");
    }
    accumulate_logprob_gradient(params, term.features, term.token,
                                term.coefficient, grad);
  }
  return grad;
}

void apply_update(PolicyParams& params, const PolicyGradient& grad,
                  double step) {
  if (grad.size() != params.weights.size()) {
    throw InvariantError("gradient shape mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    params.weights[i] += step * grad[i];
  }
  params.check_finite();
  ++params.version;
}

namespace {
constexpr std::string_view kMagic = "grpolab-policy";
}  // namespace

void save_policy(std::ostream& out, const PolicyParams& params,
                 const std::string& rng_state) {
  std::size_t nonzero = 0;
  for (double w : params.weights) nonzero += w != 0.0;
  out << kMagic << " 1\n"
      << "num_features " << params.num_features << '\n'
      << "vocab_size " << params.vocab_size << '\n'
      << "version " << params.version << '\n'
      << "rng " << (rng_state.empty() ? "-" : rng_state) << '\n'
      << "nonzero " << nonzero << '\n';
  char buf[64];
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    if (params.weights[i] == 0.0) continue;
    std::snprintf(buf, sizeof(buf), "%a", params.weights[i]);
    out << i << ' ' << buf << '\n';
  }
}

PolicyCheckpoint load_policy(std::istream& in) {
  auto expect = [&](std::string_view key) {
    std::string word;
    if (!(in >> word) || word != key) {
      throw IoError("policy checkpoint: expected '" + std::string(key) + "'");
    }
  };
  expect(kMagic);
  int format = 0;
  in >> format;
  if (format != 1) throw IoError("policy checkpoint: unsupported format");

  PolicyCheckpoint ckpt;
  std::size_t features = 0, vocab_size = 0, nonzero = 0;
  expect("num_features");
  in >> features;
  expect("vocab_size");
  in >> vocab_size;
  ckpt.params = PolicyParams(features, vocab_size);
  expect("version");
  in >> ckpt.params.version;
  expect("rng");
  in >> std::ws;
  std::getline(in, ckpt.rng_state);
  if (ckpt.rng_state == "-") ckpt.rng_state.clear();
  expect("nonzero");
  in >> nonzero;
  if (!in) throw IoError("policy checkpoint: truncated header");
  for (std::size_t k = 0; k < nonzero; ++k) {
    std::size_t index = 0;
    std::string value;
    if (!(in >> index >> value) || index >= ckpt.params.weights.size()) {
      throw IoError("policy checkpoint: bad weight entry");
    }
    char* end = nullptr;
    const double w = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
      throw IoError("policy checkpoint: bad weight value");
    }
    ckpt.params.weights[index] = w;
  }
  ckpt.params.check_finite();
  return ckpt;
}

void save_policy_file(const std::string& path, const PolicyParams& params,
                      const std::string& rng_state) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  save_policy(out, params, rng_state);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

PolicyCheckpoint load_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return load_policy(in);
}

}  // namespace grpolab
