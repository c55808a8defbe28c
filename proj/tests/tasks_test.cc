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


#include "grpolab/tasks.h"

#include <gtest/gtest.h>

#include <cctype>
#include <string>
#include <vector>

#include "grpolab/curation.h"
#include "grpolab/errors.h"
#include "grpolab/eval.h"
#include "grpolab/reward.h"
#include "grpolab/vocab.h"

namespace grpolab {
namespace {

// Left-to-right evaluator over the rendered question text, written
// without the library's parser. Products only ever have two factors.
long long evaluate_question(const std::string& q) {
  const auto end = q.find('=');
  long long total = 0, term = 0, product = 0;
  char op = '+';
  bool in_product = false;
  for (std::size_t i = 0; i <= end; ++i) {
    const char c = q[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      term = term * 10 + (c - '0');
      continue;
    }
    if (c == '*') {
      product = term;
      in_product = true;
      term = 0;
      continue;
    }
    const long long value = in_product ? product * term : term;
    total += op == '+' ? value : -value;
    in_product = false;
    term = 0;
    op = c;
  }
  return total;
}

TEST(RenderQuestion, Examples) {
  const std::vector<std::int64_t> ops = {2, 3};
  EXPECT_EQ(render_question(TemplateKind::kAdd, ops), "2+3=?");
  const std::vector<std::int64_t> chain = {12, 5, 9};
  EXPECT_EQ(render_question(TemplateKind::kChain, chain), "12+5-9=?");
}

TEST(GenerateTasks, DeterministicWithMetadata) {
  const auto t = parse_templates("add,sub,mul,chain");
  const auto a = generate_tasks(t, 200, 7);
  EXPECT_EQ(a, generate_tasks(t, 200, 7));
  EXPECT_NE(a, generate_tasks(t, 200, 8));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, "t" + std::to_string(i));
    EXPECT_EQ(a[i].qtype, QuestionType::kCalculation);
    EXPECT_EQ(a[i].source, Source::kSynthetic);
  }
  const auto e = generate_tasks(t, 5, kEvalSeedBase + 1);
  EXPECT_EQ(e[0].id, "e0");
}

TEST(GenerateTasks, GoldAgreesWithIndependentEvaluator) {
  const auto t = parse_templates("add,sub,mul,chain");
  const auto corpus = generate_tasks(t, 10000, 123);
  const RewardConfig reward;
  std::size_t disagreements = 0;
  for (const auto& s : corpus) {
    const long long v = evaluate_question(s.question);
    EXPECT_GE(v, 0) << s.question;
    if (std::to_string(v) != s.answer) ++disagreements;
    EXPECT_TRUE(verify_answer_rule(s.answer, s.answer));
    const auto prompt = prompt_tokens(s.question);
    const auto ref = reference_response(prompt);
    ASSERT_EQ(ref.back(), vocab::kEos);
    const std::vector<TokenId> body(ref.begin(), ref.end() - 1);
    EXPECT_EQ(score_rollout(body, false, s.answer, reward).reward, 1.0)
        << s.question << " -> " << vocab::detokenize(ref);
  }
  EXPECT_EQ(disagreements, 0u);
}

TEST(GenerateTasks, OperandRanges) {
  std::vector<TaskTemplate> t = {{TemplateKind::kMul, 3, 3}};
  for (const auto& s : generate_tasks(t, 300, 9)) {
    const auto star = s.question.find('*');
    const auto eq = s.question.find('=');
    EXPECT_EQ(star, 3u);
    EXPECT_EQ(eq - star - 1, 1u);
  }
  t = {{TemplateKind::kSub, 1, 2}};
  for (const auto& s : generate_tasks(t, 300, 9)) {
    EXPECT_GE(std::stoll(s.answer), 0);
  }
  EXPECT_THROW(TaskTemplate({TemplateKind::kAdd, 0, 2}).validate(),
               ConfigError);
  EXPECT_THROW(TaskTemplate({TemplateKind::kAdd, 3, 2}).validate(),
               ConfigError);
  EXPECT_THROW(TaskTemplate({TemplateKind::kAdd, 1, 7}).validate(),
               ConfigError);
  EXPECT_THROW(parse_templates("add,div"), ConfigError);
}

TEST(GenerateTasks, TrainAndEvalPartitionsAreDisjoint) {
  const auto t = parse_templates("add,sub,mul,chain");
  const auto train = generate_tasks(t, 3000, 7);
  const auto eval = generate_tasks(t, 600, kEvalSeedBase + 7);
  std::vector<PromptSample> both = exact_dedup(train);
  const auto unique_train = both.size();
  const auto unique_eval = exact_dedup(eval).size();
  both.insert(both.end(), eval.begin(), eval.end());
  EXPECT_EQ(exact_dedup(both).size(), unique_train + unique_eval);
  for (const auto& s : train) EXPECT_FALSE(is_heldout_question(s.question));
  for (const auto& s : eval) EXPECT_TRUE(is_heldout_question(s.question));
}

TEST(DifficultyProfile, TracksResponderSkill) {
  const auto corpus =
      generate_tasks(parse_templates("add,sub"), 100, 11);
  const BernoulliResponder always(1.0), never(0.0), half(0.5);
  const auto hi = difficulty_profile(corpus, always, 8, 32, 1);
  EXPECT_EQ(hi.counts[8], 100u);
  EXPECT_EQ(hi.admissible_fraction(), 0.0);
  const auto lo = difficulty_profile(corpus, never, 8, 32, 1);
  EXPECT_EQ(lo.counts[0], 100u);
  for (double mu : lo.mu) EXPECT_EQ(mu, -1.0);
  const auto mid = difficulty_profile(corpus, half, 8, 32, 1);
  EXPECT_GT(mid.admissible_fraction(), 0.9);
  std::size_t total = 0;
  for (auto c : mid.counts) total += c;
  EXPECT_EQ(total, 100u);
  EXPECT_EQ(mid.counts, difficulty_profile(corpus, half, 8, 32, 1).counts);
}

}  // namespace
}  // namespace grpolab
