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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "grpolab/errors.h"
#include "grpolab/features.h"
#include "grpolab/vocab.h"
#include "test_util.h"

namespace grpolab {
namespace {

using testing::random_context;
using testing::random_params;

TEST(TokenDistribution, ZeroWeightsAreUniform) {
  const PolicyParams p(16, vocab::kSize);
  const SparseFeatures f = {3, 7};
  for (double q : token_distribution(p, f)) {
    EXPECT_DOUBLE_EQ(q, 1.0 / vocab::kSize);
  }
}

TEST(TokenDistribution, LargeLogitDominates) {
  PolicyParams p(4, vocab::kSize);
  p.row(2)[5] = 20.0;
  const SparseFeatures f = {2};
  EXPECT_GT(token_distribution(p, f)[5], 0.999);
}

TEST(TokenDistribution, SumsToOne) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_params(64, vocab::kSize, 3.0, rng);
    const auto probs = token_distribution(p, random_context(64, rng));
    double s = 0.0;
    for (double q : probs) {
      EXPECT_GT(q, 0.0);
      s += q;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(LogSoftmax, RejectsNonFiniteLogits) {
  const std::vector<double> z = {0.0, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(log_softmax(z), InvariantError);
  const std::vector<double> n = {std::nan(""), 0.0};
  EXPECT_THROW(log_softmax(n), InvariantError);
}

TEST(PolicyEntropy, FourTokenExample) {
  PolicyParams p(2, 4);
  const double dist[4] = {0.7, 0.1, 0.1, 0.1};
  for (int v = 0; v < 4; ++v) p.row(0)[v] = std::log(dist[v]);
  const std::vector<SparseFeatures> contexts = {{0}, {0}, {0}};
  double expected = 0.0;
  for (double q : dist) expected -= q * std::log(q);
  EXPECT_NEAR(policy_entropy(p, contexts), expected, 1e-12);
  EXPECT_NEAR(policy_entropy(p, contexts), 0.9404, 5e-5);
}

TEST(PolicyEntropy, BoundsAndLimits) {
  const PolicyParams uniform(8, vocab::kSize);
  const std::vector<SparseFeatures> ctx = {{1}, {2, 3}};
  EXPECT_NEAR(policy_entropy(uniform, ctx), std::log(vocab::kSize), 1e-12);

  PolicyParams peaked(8, vocab::kSize);
  peaked.row(1)[0] = 60.0;
  const std::vector<SparseFeatures> one = {{1}};
  EXPECT_LT(policy_entropy(peaked, one), 1e-20);

  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_params(32, vocab::kSize, 4.0, rng);
    const std::vector<SparseFeatures> c = {random_context(32, rng),
                                           random_context(32, rng)};
    const double h = policy_entropy(p, c);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(vocab::kSize) + 1e-12);
  }
}

TEST(Nucleus, SmallestPrefixReachingMass) {
  const std::vector<double> probs = {0.1, 0.5, 0.25, 0.15};
  EXPECT_EQ(nucleus(probs, 0.5), (std::vector<TokenId>{1}));
  EXPECT_EQ(nucleus(probs, 0.7), (std::vector<TokenId>{1, 2}));
  EXPECT_EQ(nucleus(probs, 1.0), (std::vector<TokenId>{1, 2, 3, 0}));
  const std::vector<double> tie = {0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(nucleus(tie, 0.3), (std::vector<TokenId>{0, 1}));
}

TEST(ShapeDistribution, RenormalizesInsideNucleus) {
  const std::vector<double> probs = {0.1, 0.5, 0.25, 0.15};
  SamplingOptions opt;
  opt.top_p = 0.7;
  const auto shaped = shape_distribution(probs, opt);
  EXPECT_DOUBLE_EQ(shaped[0], 0.0);
  EXPECT_DOUBLE_EQ(shaped[3], 0.0);
  EXPECT_NEAR(shaped[1], 0.5 / 0.75, 1e-15);
  EXPECT_NEAR(shaped[2], 0.25 / 0.75, 1e-15);
}

TEST(ShapeDistribution, SampledTokenAlwaysInNucleus) {
  Rng rng(3);
  SamplingOptions opt;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto p = random_params(16, vocab::kSize, 2.0, rng);
    const auto probs = token_distribution(p, random_context(16, rng));
    opt.top_p = 0.05 + 0.95 * rng.uniform();
    const auto nuc = nucleus(probs, opt.top_p);
    const TokenId t = sample_token(shape_distribution(probs, opt), rng);
    EXPECT_NE(std::find(nuc.begin(), nuc.end(), t), nuc.end());
  }
}

class RolloutTest : public ::testing::Test {
 protected:
  FeatureMap fmap_{256};
  std::vector<TokenId> prompt_ = vocab::tokenize("12+7=?");
};

TEST_F(RolloutTest, MaxLenOneYieldsOneToken) {
  const auto p = make_params(fmap_);
  Rng rng(4);
  const auto r = sample_rollout(p, fmap_, prompt_, 1, rng);
  EXPECT_EQ(r.tokens.size(), 1u);
  EXPECT_EQ(r.logprobs_old.size(), 1u);
  EXPECT_EQ(r.truncated, r.tokens[0] != vocab::kEos);
}

TEST_F(RolloutTest, SameSeedIsIdentical) {
  Rng init(5);
  const auto p = random_params(256, vocab::kSize, 1.0, init);
  Rng a(9), b(9);
  const auto ra = sample_rollout(p, fmap_, prompt_, 40, a);
  const auto rb = sample_rollout(p, fmap_, prompt_, 40, b);
  EXPECT_EQ(ra.tokens, rb.tokens);
  EXPECT_EQ(ra.logprobs_old, rb.logprobs_old);
  EXPECT_EQ(ra.contexts, rb.contexts);
  ASSERT_EQ(ra.logprobs_old.size(), ra.tokens.size());
  for (double lp : ra.logprobs_old) EXPECT_LE(lp, 0.0);
}

TEST_F(RolloutTest, NearOneHotPolicyIgnoresSeed) {
  PolicyParams p = make_params(fmap_);
  for (std::size_t f = 0; f < p.num_features; ++f) p.row(f)[7] = 50.0;
  Rng a(1), b(2);
  const auto ra = sample_rollout(p, fmap_, prompt_, 10, a);
  const auto rb = sample_rollout(p, fmap_, prompt_, 10, b);
  EXPECT_EQ(ra.tokens, rb.tokens);
  EXPECT_EQ(ra.tokens, std::vector<TokenId>(10, 7));
  EXPECT_TRUE(ra.truncated);
}

TEST_F(RolloutTest, UniformFirstTokenFrequencies) {
  const auto p = make_params(fmap_);
  Rng rng(6);
  const int n = 100000;
  std::vector<int> counts(vocab::kSize, 0);
  for (int i = 0; i < n; ++i) {
    ++counts[sample_rollout(p, fmap_, prompt_, 1, rng).tokens[0]];
  }
  const double q = 1.0 / vocab::kSize;
  const double sigma = std::sqrt(n * q * (1 - q));
  for (int c : counts) EXPECT_LT(std::fabs(c - n * q), 3.0 * sigma + 1.0);
}

TEST_F(RolloutTest, GroupNeedsTwoOutputs) {
  const auto p = make_params(fmap_);
  Rng rng(7);
  EXPECT_THROW(sample_group(p, fmap_, prompt_, 1, 8, rng), ConfigError);
  Rng a(8), b(8);
  const auto ga = sample_group(p, fmap_, prompt_, 8, 16, a);
  const auto gb = sample_group(p, fmap_, prompt_, 8, 16, b);
  ASSERT_EQ(ga.size(), 8u);
  for (std::size_t i = 0; i < ga.size(); ++i) {
    EXPECT_EQ(ga[i].tokens, gb[i].tokens);
    for (double lp : ga[i].logprobs_old) EXPECT_TRUE(std::isfinite(lp));
  }
}

TEST_F(RolloutTest, ImportanceRatioIdentityAndQuotient) {
  Rng rng(10);
  const auto p = random_params(256, vocab::kSize, 0.7, rng);
  const auto r = sample_rollout(p, fmap_, prompt_, 30, rng);
  for (double x : importance_ratio(p, r)) EXPECT_EQ(x, 1.0);

  auto q = p;
  for (double& w : q.weights) w += 0.1 * testing::gaussian(rng);
  const auto ratios = importance_ratio(q, r);
  for (std::size_t t = 0; t < r.tokens.size(); ++t) {
    const double direct = token_distribution(q, r.contexts[t])[r.tokens[t]] /
                          token_distribution(p, r.contexts[t])[r.tokens[t]];
    EXPECT_NEAR(ratios[t], direct, 1e-12 * direct);
    EXPECT_GT(ratios[t], 0.0);
  }
}

TEST_F(RolloutTest, ContextsDependOnlyOnPromptAndPrefix) {
  Rng rng(11);
  const auto p = random_params(256, vocab::kSize, 0.7, rng);
  const auto r = sample_rollout(p, fmap_, prompt_, 20, rng);
  for (std::size_t t = 0; t < r.tokens.size(); ++t) {
    const std::span<const TokenId> prefix(r.tokens.data(), t);
    EXPECT_EQ(make_context(fmap_, prompt_, prefix).features, r.contexts[t]);
  }
}

TEST(AnalyticGradients, ZeroCoefficients) {
  Rng rng(12);
  const auto p = random_params(8, 5, 1.0, rng);
  const SparseFeatures f = {1, 2};
  const std::vector<GradientTerm> terms = {{f, 3, 0.0}, {f, 1, 0.0}};
  for (double g : analytic_gradients(p, terms)) EXPECT_EQ(g, 0.0);
}

TEST(AnalyticGradients, UniformOneHotClosedForm) {
  const PolicyParams p(6, 4);
  const SparseFeatures f = {2};
  const std::vector<GradientTerm> terms = {{f, 1, 1.0}};
  const auto g = analytic_gradients(p, terms);
  for (std::size_t feat = 0; feat < 6; ++feat) {
    for (std::size_t v = 0; v < 4; ++v) {
      const double expected = feat == 2 ? (v == 1 ? 1.0 : 0.0) - 0.25 : 0.0;
      EXPECT_DOUBLE_EQ(g[feat * 4 + v], expected);
    }
  }
}

double weighted_logprob(const PolicyParams& p,
                        const std::vector<SparseFeatures>& ctx,
                        const std::vector<TokenId>& tok,
                        const std::vector<double>& coef) {
  double s = 0.0;
  for (std::size_t k = 0; k < ctx.size(); ++k) {
    std::vector<double> z(p.vocab_size, 0.0);
    for (auto f : ctx[k]) {
      for (std::size_t v = 0; v < p.vocab_size; ++v) z[v] += p.row(f)[v];
    }
    double m = z[0];
    for (double x : z) m = std::max(m, x);
    double norm = 0.0;
    for (double x : z) norm += std::exp(x - m);
    s += coef[k] * (z[tok[k]] - m - std::log(norm));
  }
  return s;
}

TEST(AnalyticGradients, MatchesFiniteDifferences) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_params(12, 6, 1.0, rng);
    std::vector<SparseFeatures> ctx;
    std::vector<TokenId> tok;
    std::vector<double> coef;
    std::vector<GradientTerm> terms;
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t k = 0; k < n; ++k) {
      ctx.push_back(random_context(12, rng));
      tok.push_back(static_cast<TokenId>(rng.below(6)));
      coef.push_back(2.0 * rng.uniform() - 1.0);
    }
    for (std::size_t k = 0; k < n; ++k) {
      terms.push_back({ctx[k], tok[k], coef[k]});
    }
    const auto g = analytic_gradients(p, terms);
    const double h = 1e-5;
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      const double w = p.weights[i];
      p.weights[i] = w + h;
      const double up = weighted_logprob(p, ctx, tok, coef);
      p.weights[i] = w - h;
      const double down = weighted_logprob(p, ctx, tok, coef);
      p.weights[i] = w;
      const double fd = (up - down) / (2 * h);
      diff += (fd - g[i]) * (fd - g[i]);
      norm += fd * fd;
    }
    EXPECT_LE(std::sqrt(diff), 1e-5 * std::max(std::sqrt(norm), 1e-12));
  }
}

TEST(AnalyticGradients, EntropyGradientMatchesFiniteDifferences) {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_params(10, 5, 1.0, rng);
    const auto f = random_context(10, rng);
    PolicyGradient g(p.weights.size(), 0.0);
    accumulate_entropy_gradient(p, f, 1.0, g);
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      const double w = p.weights[i];
      p.weights[i] = w + h;
      const double up = context_entropy(p, f);
      p.weights[i] = w - h;
      const double down = context_entropy(p, f);
      p.weights[i] = w;
      EXPECT_NEAR(g[i], (up - down) / (2 * h), 1e-8);
    }
  }
}

TEST(ApplyUpdate, BumpsVersionAndRejectsNonFinite) {
  PolicyParams p(2, 3);
  PolicyGradient g(6, 1.0);
  apply_update(p, g, 0.5);
  EXPECT_EQ(p.version, 1u);
  EXPECT_DOUBLE_EQ(p.weights[4], 0.5);
  g[2] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(apply_update(p, g, 1.0), InvariantError);
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(15);
  auto p = random_params(40, vocab::kSize, 1.0, rng);
  p.weights[3] = 0.0;
  p.weights[5] = -0.0;
  p.weights[7] = 1e-310;  // subnormal
  p.weights[9] = 0.1;
  p.version = 12345;
  Rng state(77);
  state.next_u64();
  std::stringstream ss;
  save_policy(ss, p, state.serialize());
  const auto loaded = load_policy(ss);
  ASSERT_EQ(loaded.params.weights.size(), p.weights.size());
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    EXPECT_EQ(loaded.params.weights[i], p.weights[i]);
  }
  EXPECT_EQ(loaded.params.version, p.version);
  Rng restored(0);
  restored.deserialize(loaded.rng_state);
  EXPECT_TRUE(restored == state);
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream ss("not a checkpoint\n");
  EXPECT_ANY_THROW(load_policy(ss));
}

}  // namespace
}  // namespace grpolab
