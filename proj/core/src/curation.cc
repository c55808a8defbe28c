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

#include "grpolab/curation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "grpolab/errors.h"
#include "grpolab/hash.h"
#include "grpolab/rng.h"
#include "grpolab/text.h"
#include "json.hpp"

namespace grpolab {

namespace {

constexpr std::pair<Source, std::string_view> kSourceNames[] = {
    {Source::kOpen, "open"},
    {Source::kProprietary, "proprietary"},
    {Source::kSynthetic, "synthetic"},
};

constexpr std::pair<QuestionType, std::string_view> kTypeNames[] = {
    {QuestionType::kFillIn, "fill_in"},
    {QuestionType::kCalculation, "calculation"},
    {QuestionType::kSingleChoice, "single_choice"},
    {QuestionType::kMultiChoice, "multi_choice"},
    {QuestionType::kTrueFalse, "true_false"},
    {QuestionType::kProof, "proof"},
    {QuestionType::kMixed, "mixed"},
};

constexpr std::pair<CurationStage, std::string_view> kStageNames[] = {
    {CurationStage::kExact, "exact"},
    {CurationStage::kFuzzy, "fuzzy"},
    {CurationStage::kSemantic, "semantic"},
    {CurationStage::kType, "type"},
};

bool contains_any(std::string_view text,
                  std::initializer_list<std::string_view> needles) {
  for (auto n : needles) {
    if (text.find(n) != std::string_view::npos) return true;
  }
  return false;
}

// Counts distinct option letters a-d that look like list markers.
int count_option_markers(std::string_view text) {
  bool seen[4] = {false, false, false, false};
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c < 'a' || c > 'd') continue;
    const bool boundary_before =
        i == 0 || text[i - 1] == ' ' || text[i - 1] == '(' ||
        (i >= 3 && text.substr(i - 3, 3) == "\xEF\xBC\x88");  // （
    if (!boundary_before) continue;
    const std::string_view rest = text.substr(i + 1);
    const bool marker = rest.starts_with(".") || rest.starts_with(")") ||
                        rest.starts_with("\xE3\x80\x81") ||   // 、
                        rest.starts_with("\xEF\xBC\x8E") ||   // ．
                        rest.starts_with("\xEF\xBC\x89");     // ）
    if (marker) seen[c - 'a'] = true;
  }
  return seen[0] + seen[1] + seen[2] + seen[3];
}

}  // namespace

std::string_view to_string(Source source) {
  for (const auto& [value, name] : kSourceNames) {
    if (value == source) return name;
  }
  return "open";
}

std::string_view to_string(QuestionType qtype) {
  for (const auto& [value, name] : kTypeNames) {
    if (value == qtype) return name;
  }
  return "calculation";
}

std::string_view to_string(CurationStage stage) {
  for (const auto& [value, name] : kStageNames) {
    if (value == stage) return name;
  }
  return "exact";
}

Source parse_source(std::string_view text) {
  for (const auto& [value, name] : kSourceNames) {
    if (name == text) return value;
  }
  throw ConfigError("unknown source: " + std::string(text));
}

QuestionType parse_question_type(std::string_view text) {
  for (const auto& [value, name] : kTypeNames) {
    if (name == text) return value;
  }
  throw ConfigError("unknown qtype: " + std::string(text));
}

QuestionType infer_question_type(std::string_view question) {
  const std::string text = normalize_text(question);
  if (contains_any(text, {"prove", "proof", "show that", "证明"})) {
    return QuestionType::kProof;
  }
  if (contains_any(text, {"true or false", "true/false", "判断对错",
                          "判断正误", "判断题"})) {
    return QuestionType::kTrueFalse;
  }
  if (count_option_markers(text) >= 2) {
    if (contains_any(text, {"select all", "all that apply", "多选", "不定项"})) {
      return QuestionType::kMultiChoice;
    }
    return QuestionType::kSingleChoice;
  }
  if (contains_any(text, {"__", "( )", "()", "\xEF\xBC\x88 \xEF\xBC\x89",
                          "\xEF\xBC\x88\xEF\xBC\x89"})) {
    return QuestionType::kFillIn;
  }
  return QuestionType::kCalculation;
}

void validate_corpus(std::span<const PromptSample> corpus) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(corpus.size());
  for (const auto& s : corpus) {
    if (s.question.empty()) throw ConfigError("empty question in " + s.id);
    if (s.answer.empty()) throw ConfigError("empty answer in " + s.id);
    if (!ids.insert(s.id).second) throw ConfigError("duplicate id " + s.id);
  }
}

std::vector<PromptSample> read_jsonl(std::istream& in) {
  std::vector<PromptSample> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_ascii(line).empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("id") ||
        !record.contains("question") || !record.contains("answer")) {
      throw IoError("line " + std::to_string(line_no) +
                    ": expected object with id, question, answer");
    }
    PromptSample s;
    try {
      s.id = record["id"].is_string() ? record["id"].get<std::string>()
                                       : record["id"].dump();
      s.question = record["question"].get<std::string>();
      s.answer = record["answer"].is_string()
                     ? record["answer"].get<std::string>()
                     : record["answer"].dump();
      s.source = record.contains("source") && !record["source"].is_null()
                     ? parse_source(record["source"].get<std::string>())
                     : Source::kOpen;
      s.qtype = record.contains("qtype") && !record["qtype"].is_null()
                    ? parse_question_type(record["qtype"].get<std::string>())
                    : infer_question_type(s.question);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    corpus.push_back(std::move(s));
  }
  validate_corpus(corpus);
  return corpus;
}

std::vector<PromptSample> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_jsonl(in);
}

void write_jsonl(std::ostream& out, std::span<const PromptSample> corpus) {
  for (const auto& s : corpus) {
    nlohmann::ordered_json record;
    record["id"] = s.id;
    record["question"] = s.question;
    record["answer"] = s.answer;
    record["source"] = std::string(to_string(s.source));
    record["qtype"] = std::string(to_string(s.qtype));
    out << record.dump() << '\n';
  }
}

void write_jsonl_file(const std::string& path,
                      std::span<const PromptSample> corpus) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_jsonl(out, corpus);
  if (!out) throw IoError("write failed: " + path);
}

ShingleSet make_shingles(std::string_view sample_id, std::string_view text,
                         std::size_t width) {
  if (width == 0) throw ConfigError("shingle width must be positive");
  ShingleSet set;
  set.sample_id = std::string(sample_id);
  set.width = width;
  const auto points = split_code_points(normalize_text(text));
  if (points.empty()) return set;
  if (points.size() < width) {
    std::string whole;
    for (const auto& p : points) whole += p;
    set.shingles.push_back(std::move(whole));
    return set;
  }
  set.shingles.reserve(points.size() - width + 1);
  for (std::size_t i = 0; i + width <= points.size(); ++i) {
    std::string gram;
    for (std::size_t j = 0; j < width; ++j) gram += points[i + j];
    set.shingles.push_back(std::move(gram));
  }
  std::sort(set.shingles.begin(), set.shingles.end());
  set.shingles.erase(std::unique(set.shingles.begin(), set.shingles.end()),
                     set.shingles.end());
  return set;
}

ShingleSet make_shingles(const PromptSample& sample, std::size_t width) {
  return make_shingles(sample.id, sample.question, width);
}

double jaccard(const ShingleSet& a, const ShingleSet& b) {
  if (a.width != b.width) {
    throw ConfigError("jaccard over shingle sets of different widths");
  }
  if (a.shingles.empty() && b.shingles.empty()) return 1.0;
  std::size_t common = 0;
  auto i = a.shingles.begin();
  auto j = b.shingles.begin();
  while (i != a.shingles.end() && j != b.shingles.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.shingles.size() + b.shingles.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::vector<PromptSample> exact_dedup(std::span<const PromptSample> corpus) {
  std::unordered_set<std::string> seen;
  std::vector<PromptSample> out;
  for (const auto& s : corpus) {
    if (seen.insert(normalize_text(s.question)).second) out.push_back(s);
  }
  return out;
}

std::vector<PromptSample> fuzzy_dedup(std::span<const PromptSample> corpus,
                                      double threshold, std::size_t width) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("fuzzy threshold must lie in (0, 1]");
  }
  std::vector<ShingleSet> sets;
  sets.reserve(corpus.size());
  for (const auto& s : corpus) sets.push_back(make_shingles(s, width));

  // shingle -> indices of retained samples containing it
  std::unordered_map<std::string_view, std::vector<std::size_t>> index;
  std::vector<std::size_t> retained;
  std::vector<std::size_t> overlap(corpus.size(), 0);
  std::vector<std::size_t> touched;

  for (std::size_t j = 0; j < corpus.size(); ++j) {
    const auto& mine = sets[j].shingles;
    bool duplicate = false;
    if (mine.empty()) {
      // Only another empty set can reach the threshold.
      for (std::size_t r : retained) {
        if (sets[r].shingles.empty()) {
          duplicate = true;
          break;
        }
      }
    } else {
      touched.clear();
      for (const auto& g : mine) {
        auto it = index.find(g);
        if (it == index.end()) continue;
        for (std::size_t r : it->second) {
          if (overlap[r]++ == 0) touched.push_back(r);
        }
      }
      for (std::size_t r : touched) {
        const std::size_t common = overlap[r];
        const std::size_t uni = mine.size() + sets[r].shingles.size() - common;
        if (static_cast<double>(common) / static_cast<double>(uni) >=
            threshold) {
          duplicate = true;
        }
        overlap[r] = 0;
      }
    }
    if (duplicate) continue;
    retained.push_back(j);
    for (const auto& g : mine) index[g].push_back(j);
  }

  std::vector<PromptSample> out;
  out.reserve(retained.size());
  for (std::size_t r : retained) out.push_back(corpus[r]);
  return out;
}

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dimension,
                                         std::size_t width)
    : dimension_(dimension), width_(width) {
  if (dimension_ == 0 || width_ == 0) {
    throw ConfigError("embedder dimension and width must be positive");
  }
}

std::size_t HashedNgramEmbedder::bucket(std::string_view ngram) const {
  return static_cast<std::size_t>(mix64(fnv1a64(ngram)) % dimension_);
}

std::vector<double> HashedNgramEmbedder::embed(
    std::string_view normalized) const {
  std::vector<double> v(dimension_, 0.0);
  const auto points = split_code_points(normalized);
  if (points.empty()) return v;
  auto add = [&](std::size_t begin, std::size_t count) {
    std::string gram;
    for (std::size_t j = 0; j < count; ++j) gram += points[begin + j];
    v[bucket(gram)] += 1.0;
  };
  if (points.size() < width_) {
    add(0, points.size());
  } else {
    for (std::size_t i = 0; i + width_ <= points.size(); ++i) add(i, width_);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

const QuestionEmbedder& default_embedder() {
  static const HashedNgramEmbedder embedder;
  return embedder;
}

EmbeddingVector embed(const PromptSample& sample,
                      const QuestionEmbedder& embedder) {
  if (sample.question.empty()) throw ConfigError("embed: empty question");
  return {sample.id, embedder.embed(normalize_text(sample.question))};
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

std::size_t nearest(std::span<const double> p,
                    const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iterations) {
  const std::size_t n = points.size();
  if (k == 0) throw ConfigError("kmeans: k must be >= 1");
  if (k > n) throw ConfigError("kmeans: k exceeds number of points");
  const std::size_t dim = points[0].size();

  Rng rng(seed);
  KMeansResult result;
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  result.centroids.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(points[i], result.centroids[0]);
  }
  while (result.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // rounding at the tail
        for (std::size_t i = n; i-- > 0;) {
          if (!chosen[i] && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Remaining points coincide with centroids; take the first unused.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    result.centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], points[pick]));
    }
  }

  result.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    result.assignment[i] = nearest(points[i], result.centroids);
  }
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    result.iterations = iter + 1;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[result.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
      ++counts[result.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        result.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest(points[i], result.centroids);
      if (c != result.assignment[i]) {
        result.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return result;
}

std::size_t default_cluster_count(std::size_t corpus_size) {
  return std::max<std::size_t>(1, corpus_size / 64);
}

std::vector<PromptSample> semantic_dedup(std::span<const PromptSample> corpus,
                                         std::size_t k,
                                         double cosine_threshold,
                                         std::uint64_t seed,
                                         const QuestionEmbedder& embedder,
                                         std::size_t max_iterations) {
  if (!(cosine_threshold > 0.0 && cosine_threshold <= 1.0)) {
    throw ConfigError("cosine threshold must lie in (0, 1]");
  }
  if (k > corpus.size()) {
    throw ConfigError("semantic_dedup: k exceeds corpus size");
  }
  std::vector<PromptSample> current(corpus.begin(), corpus.end());
  if (current.empty()) return current;

  std::vector<std::vector<double>> vectors;
  vectors.reserve(current.size());
  for (const auto& s : current) vectors.push_back(embed(s, embedder).values);

  while (true) {
    const std::size_t clusters =
        k == 0 ? default_cluster_count(current.size())
               : std::min(k, current.size());
    const KMeansResult km = kmeans(vectors, clusters, seed, max_iterations);

    std::vector<std::vector<std::size_t>> members(clusters);
    std::vector<bool> removed(current.size(), false);
    std::size_t removed_count = 0;
    for (std::size_t i = 0; i < current.size(); ++i) {
      auto& kept = members[km.assignment[i]];
      bool duplicate = false;
      for (std::size_t r : kept) {
        if (cosine(vectors[r], vectors[i]) >= cosine_threshold) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) {
        removed[i] = true;
        ++removed_count;
      } else {
        kept.push_back(i);
      }
    }
    if (removed_count == 0) return current;

    std::vector<PromptSample> next;
    std::vector<std::vector<double>> next_vectors;
    next.reserve(current.size() - removed_count);
    next_vectors.reserve(current.size() - removed_count);
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (removed[i]) continue;
      next.push_back(std::move(current[i]));
      next_vectors.push_back(std::move(vectors[i]));
    }
    current = std::move(next);
    vectors = std::move(next_vectors);
  }
}

bool is_verifiable_type(QuestionType qtype) {
  switch (qtype) {
    case QuestionType::kSingleChoice:
    case QuestionType::kMultiChoice:
    case QuestionType::kTrueFalse:
    case QuestionType::kProof:
      return false;
    default:
      return true;
  }
}

std::vector<PromptSample> type_filter(std::span<const PromptSample> corpus) {
  std::vector<PromptSample> out;
  for (const auto& s : corpus) {
    if (is_verifiable_type(s.qtype)) out.push_back(s);
  }
  return out;
}

std::vector<CurationStage> parse_stages(std::string_view list) {
  std::vector<CurationStage> stages;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const std::string_view name = trim_ascii(list.substr(start, comma - start));
    if (!name.empty()) {
      bool found = false;
      for (const auto& [value, stage_name] : kStageNames) {
        if (stage_name == name) {
          if (std::find(stages.begin(), stages.end(), value) == stages.end()) {
            stages.push_back(value);
          }
          found = true;
        }
      }
      if (!found) throw ConfigError("unknown stage: " + std::string(name));
    }
    start = comma + 1;
  }
  return stages;
}

void CurationConfig::validate() const {
  if (!(fuzzy_threshold > 0.0 && fuzzy_threshold <= 1.0)) {
    throw ConfigError("fuzzy threshold must lie in (0, 1]");
  }
  if (!(cosine_threshold > 0.0 && cosine_threshold <= 1.0)) {
    throw ConfigError("cosine threshold must lie in (0, 1]");
  }
  if (shingle_width == 0) throw ConfigError("shingle width must be positive");
  if (embedding_dimension == 0) {
    throw ConfigError("embedding dimension must be positive");
  }
}

CurationResult curate(std::span<const PromptSample> corpus,
                      const CurationConfig& config) {
  config.validate();
  validate_corpus(corpus);
  const HashedNgramEmbedder embedder(config.embedding_dimension,
                                     config.shingle_width);
  auto selected = [&](CurationStage s) {
    return std::find(config.stages.begin(), config.stages.end(), s) !=
           config.stages.end();
  };

  CurationResult result;
  result.corpus.assign(corpus.begin(), corpus.end());
  for (const auto& [stage, name] : kStageNames) {
    if (!selected(stage)) continue;
    const std::size_t before = result.corpus.size();
    switch (stage) {
      case CurationStage::kExact:
        result.corpus = exact_dedup(result.corpus);
        break;
      case CurationStage::kFuzzy:
        result.corpus = fuzzy_dedup(result.corpus, config.fuzzy_threshold,
                                    config.shingle_width);
        break;
      case CurationStage::kSemantic:
        result.corpus = semantic_dedup(
            result.corpus, std::min(config.clusters, result.corpus.size()),
            config.cosine_threshold, config.seed, embedder,
            config.kmeans_iterations);
        break;
      case CurationStage::kType:
        result.corpus = type_filter(result.corpus);
        break;
    }
    result.report.push_back({stage, before - result.corpus.size(),
                             result.corpus.size()});
  }
  return result;
}

void write_report_csv(std::ostream& out, std::span<const StageReport> report) {
  out << "stage,removed_count,retained_count\n";
  for (const auto& r : report) {
    out << to_string(r.stage) << ',' << r.removed << ',' << r.retained << '\n';
  }
}

}  // namespace grpolab
