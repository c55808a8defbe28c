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

#ifndef GRPOLAB_CURATION_H_
#define GRPOLAB_CURATION_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grpolab {

enum class Source { kOpen, kProprietary, kSynthetic };

enum class QuestionType {
  kFillIn,
  kCalculation,
  kSingleChoice,
  kMultiChoice,
  kTrueFalse,
  kProof,
  kMixed,
};

std::string_view to_string(Source source);
std::string_view to_string(QuestionType qtype);
Source parse_source(std::string_view text);
QuestionType parse_question_type(std::string_view text);

// One question/answer pair; the unit of curation and sampling.
struct PromptSample {
  std::string id;
  std::string question;
  std::string answer;
  Source source = Source::kOpen;
  QuestionType qtype = QuestionType::kCalculation;

  bool operator==(const PromptSample&) const = default;
};

// Pattern heuristics used when a record carries no qtype:
//   proof       "prove", "proof", "show that", "证明"
//   true_false  "true or false", "true/false", "判断对错", "判断正误", "判断题"
//   choice      at least two distinct option markers among A-D written as
//               "A." "A)" "(A)" "A、" "A．"; multi_choice when the text also
//               says "select all", "all that apply", "多选" or "不定项"
//   fill_in     a blank "__" or an empty bracket "( )" / "（ ）"
//   otherwise   calculation
QuestionType infer_question_type(std::string_view question);

// Throws ConfigError on duplicate ids or empty question/answer.
void validate_corpus(std::span<const PromptSample> corpus);

// JSON Lines, one object per line: {id, question, answer, source, qtype}.
// `qtype` may be absent or null, in which case it is inferred; `source`
// defaults to "open". Blank lines are skipped. Throws IoError on malformed
// lines and ConfigError on invariant violations.
std::vector<PromptSample> read_jsonl(std::istream& in);
std::vector<PromptSample> read_jsonl_file(const std::string& path);
void write_jsonl(std::ostream& out, std::span<const PromptSample> corpus);
void write_jsonl_file(const std::string& path,
                      std::span<const PromptSample> corpus);

inline constexpr std::size_t kDefaultShingleWidth = 3;

struct ShingleSet {
  std::string sample_id;
  std::size_t width = kDefaultShingleWidth;
  // Sorted, unique code-point n-grams of the normalized question. Text
  // shorter than `width` yields a single shingle holding the whole text.
  std::vector<std::string> shingles;
};

ShingleSet make_shingles(const PromptSample& sample,
                         std::size_t width = kDefaultShingleWidth);
ShingleSet make_shingles(std::string_view sample_id, std::string_view text,
                         std::size_t width = kDefaultShingleWidth);

// |a ∩ b| / |a ∪ b|; two empty sets are identical (1.0).
double jaccard(const ShingleSet& a, const ShingleSet& b);

// Keeps the first occurrence of every normalized question.
std::vector<PromptSample> exact_dedup(std::span<const PromptSample> corpus);

// Drops a sample when its exact Jaccard similarity to an earlier retained
// sample is >= threshold. Candidate pairs come from an inverted shingle
// index, so every decision is exact.
std::vector<PromptSample> fuzzy_dedup(std::span<const PromptSample> corpus,
                                      double threshold,
                                      std::size_t width = kDefaultShingleWidth);

struct EmbeddingVector {
  std::string sample_id;
  std::vector<double> values;
};

// Pluggable question embedder. Input is the normalized question text;
// output must be deterministic with a fixed dimension.
class QuestionEmbedder {
 public:
  virtual ~QuestionEmbedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(std::string_view normalized) const = 0;
};

// Hashed bag of character n-gram term frequencies, L2-normalized.
class HashedNgramEmbedder : public QuestionEmbedder {
 public:
  explicit HashedNgramEmbedder(std::size_t dimension = 256,
                               std::size_t width = kDefaultShingleWidth);
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view normalized) const override;
  std::size_t bucket(std::string_view ngram) const;

 private:
  std::size_t dimension_;
  std::size_t width_;
};

const QuestionEmbedder& default_embedder();

EmbeddingVector embed(const PromptSample& sample,
                      const QuestionEmbedder& embedder = default_embedder());

double cosine(std::span<const double> a, std::span<const double> b);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Ties go to the lowest cluster
// index; an empty cluster keeps its previous centroid.
KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iterations = 50);

// k = max(1, floor(n / 64)).
std::size_t default_cluster_count(std::size_t corpus_size);

// Clusters embeddings, then inside each cluster drops a sample whose cosine
// to an earlier retained member is >= cosine_threshold. Clustering and
// removal repeat on the survivors until a pass removes nothing, which makes
// the stage idempotent. k == 0 selects default_cluster_count on every pass.
std::vector<PromptSample> semantic_dedup(
    std::span<const PromptSample> corpus, std::size_t k,
    double cosine_threshold, std::uint64_t seed,
    const QuestionEmbedder& embedder = default_embedder(),
    std::size_t max_iterations = 50);

bool is_verifiable_type(QuestionType qtype);

// Removes single_choice, multi_choice, true_false and proof questions.
std::vector<PromptSample> type_filter(std::span<const PromptSample> corpus);

enum class CurationStage { kExact, kFuzzy, kSemantic, kType };

std::string_view to_string(CurationStage stage);
// Parses "exact,fuzzy,semantic,type" (any subset, any order).
std::vector<CurationStage> parse_stages(std::string_view list);

struct CurationConfig {
  std::vector<CurationStage> stages = {CurationStage::kExact,
                                       CurationStage::kFuzzy,
                                       CurationStage::kSemantic,
                                       CurationStage::kType};
  double fuzzy_threshold = 0.8;
  double cosine_threshold = 0.92;
  std::size_t shingle_width = kDefaultShingleWidth;
  std::size_t embedding_dimension = 256;
  std::size_t clusters = 0;  // 0 = automatic
  std::size_t kmeans_iterations = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StageReport {
  CurationStage stage;
  std::size_t removed = 0;
  std::size_t retained = 0;
};

struct CurationResult {
  std::vector<PromptSample> corpus;
  std::vector<StageReport> report;
};

// Runs the selected stages in the fixed order exact -> fuzzy -> semantic ->
// type, whatever order they were listed in.
CurationResult curate(std::span<const PromptSample> corpus,
                      const CurationConfig& config);

// CSV with header "stage,removed_count,retained_count".
void write_report_csv(std::ostream& out, std::span<const StageReport> report);

}  // namespace grpolab

#endif  // GRPOLAB_CURATION_H_
