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

#ifndef GRPOLAB_POLICY_H_
#define GRPOLAB_POLICY_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "grpolab/features.h"
#include "grpolab/rng.h"
#include "grpolab/vocab.h"

namespace grpolab {

// Weights of the linear-softmax reference policy, row-major
// [num_features x vocab_size]. `version` increments on every update, which
// is how a sampling snapshot (the "old" policy) is told apart.
struct PolicyParams {
  std::size_t num_features = 0;
  std::size_t vocab_size = 0;
  std::vector<double> weights;
  std::uint64_t version = 0;

  PolicyParams() = default;
  PolicyParams(std::size_t features, std::size_t vocab)
      : num_features(features),
        vocab_size(vocab),
        weights(features * vocab, 0.0) {}

  double* row(std::size_t feature) {
    return weights.data() + feature * vocab_size;
  }
  const double* row(std::size_t feature) const {
    return weights.data() + feature * vocab_size;
  }

  // Throws InvariantError when any weight is NaN or infinite.
  void check_finite() const;

  bool operator==(const PolicyParams&) const = default;
};

// Dense gradient with the same layout as PolicyParams::weights.
using PolicyGradient = std::vector<double>;

struct TokenContext {
  std::vector<TokenId> prompt_tokens;
  std::vector<TokenId> generated_prefix;
  SparseFeatures features;
};

TokenContext make_context(const FeatureMap& feature_map,
                          std::span<const TokenId> prompt,
                          std::span<const TokenId> prefix);

struct Rollout {
  std::vector<TokenId> tokens;
  // log pi_old(token_t | context_t), recorded when the token was drawn.
  std::vector<double> logprobs_old;
  bool truncated = false;
  // Features of the context preceding each token; a cache that depends only
  // on (prompt, prefix).
  std::vector<SparseFeatures> contexts;
  std::uint64_t policy_version = 0;
};

std::vector<double> compute_logits(const PolicyParams& params,
                                   std::span<const std::uint32_t> features);
// Throws InvariantError on non-finite logits.
std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> token_distribution(const PolicyParams& params,
                                       std::span<const std::uint32_t> features);
std::vector<double> token_distribution(const PolicyParams& params,
                                       const TokenContext& context);
double token_logprob(const PolicyParams& params,
                     std::span<const std::uint32_t> features, TokenId token);

struct SamplingOptions {
  double temperature = 1.0;
  double top_p = 1.0;
};

// Smallest set of tokens, taken in order of decreasing probability (ties to
// the lower id), whose mass reaches top_p.
std::vector<TokenId> nucleus(std::span<const double> probs, double top_p);

// Temperature scaling followed by nucleus truncation and renormalization.
std::vector<double> shape_distribution(std::span<const double> probs,
                                       const SamplingOptions& options);

TokenId sample_token(std::span<const double> probs, Rng& rng);

// Incremental decoder over one prompt.
class DecodingSession {
 public:
  virtual ~DecodingSession() = default;
  virtual std::vector<double> next_distribution() = 0;
  virtual void push(TokenId token) = 0;
};

// Any autoregressive model over the shared vocabulary.
class AutoregressivePolicy {
 public:
  virtual ~AutoregressivePolicy() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual std::unique_ptr<DecodingSession> start(
      std::span<const TokenId> prompt) const = 0;
};

// Draws until kEos or max_len tokens; truncated is set when the cap is hit
// without kEos. logprobs_old are logs of the shaped sampling distribution.
Rollout sample_response(const AutoregressivePolicy& policy,
                        std::span<const TokenId> prompt, std::size_t max_len,
                        Rng& rng, const SamplingOptions& options = {});

// The reference analytic policy: softmax(features . weights).
class LinearSoftmaxPolicy : public AutoregressivePolicy {
 public:
  LinearSoftmaxPolicy(const PolicyParams& params, const FeatureMap& features)
      : params_(&params), features_(&features) {}

  std::size_t vocab_size() const override { return params_->vocab_size; }
  std::unique_ptr<DecodingSession> start(
      std::span<const TokenId> prompt) const override;

  const PolicyParams& params() const { return *params_; }
  const FeatureMap& feature_map() const { return *features_; }

 private:
  const PolicyParams* params_;
  const FeatureMap* features_;
};

PolicyParams make_params(const FeatureMap& feature_map,
                         std::size_t vocab_size = vocab::kSize);

// Samples from the linear policy and caches per-token context features.
Rollout sample_rollout(const PolicyParams& params,
                       const FeatureMap& feature_map,
                       std::span<const TokenId> prompt, std::size_t max_len,
                       Rng& rng, const SamplingOptions& options = {});

// G >= 2 independent rollouts under one parameter snapshot.
std::vector<Rollout> sample_group(const PolicyParams& params,
                                  const FeatureMap& feature_map,
                                  std::span<const TokenId> prompt,
                                  std::size_t group_size, std::size_t max_len,
                                  Rng& rng);

// exp(log pi_new - log pi_old) per token.
std::vector<double> importance_ratio(const PolicyParams& params_new,
                                     const Rollout& rollout);

// Shannon entropy (nats) of the token distribution at one context.
double context_entropy(const PolicyParams& params,
                       std::span<const std::uint32_t> features);

// Mean token-level entropy over the given contexts.
double policy_entropy(const PolicyParams& params,
                      std::span<const SparseFeatures> contexts);

struct GradientTerm {
  std::span<const std::uint32_t> features;
  TokenId token = 0;
  double coefficient = 0.0;
};

// grad += coefficient * d log pi(token | features) / d weights
void accumulate_logprob_gradient(const PolicyParams& params,
                                 std::span<const std::uint32_t> features,
                                 TokenId token, double coefficient,
                                 PolicyGradient& grad);

// grad += scale * d H(pi(. | features)) / d weights
void accumulate_entropy_gradient(const PolicyParams& params,
                                 std::span<const std::uint32_t> features,
                                 double scale, PolicyGradient& grad);

// sum_k coefficient_k * d log pi(token_k | features_k) / d weights
PolicyGradient analytic_gradients(const PolicyParams& params,
                                  std::span<const GradientTerm> terms);

// weights += step * grad; bumps version.
void apply_update(PolicyParams& params, const PolicyGradient& grad,
                  double step);

// Text checkpoint: header, version, optional rng state and the nonzero
// weights as hexadecimal floats, so load(save(p)) == p bit for bit.
struct PolicyCheckpoint {
  PolicyParams params;
  std::string rng_state;
};

void save_policy(std::ostream& out, const PolicyParams& params,
                 const std::string& rng_state = {});
PolicyCheckpoint load_policy(std::istream& in);
void save_policy_file(const std::string& path, const PolicyParams& params,
                      const std::string& rng_state = {});
PolicyCheckpoint load_policy_file(const std::string& path);

}  // namespace grpolab

#endif  // GRPOLAB_POLICY_H_
