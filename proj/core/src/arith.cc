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

#include "grpolab/arith.h"

#include <algorithm>

namespace grpolab {

namespace {

std::int64_t pow10(int n) {
  std::int64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int decimal_digits(std::int64_t v) {
  int n = 1;
  while (v >= 10) {
    v /= 10;
    ++n;
  }
  return n;
}

bool is_operator(TokenId t) {
  return t == vocab::kPlus || t == vocab::kMinus || t == vocab::kTimes;
}

}  // namespace

std::span<const TokenId> expression_tokens(std::span<const TokenId> prompt) {
  const auto it = std::find(prompt.begin(), prompt.end(), vocab::kEquals);
  return prompt.first(static_cast<std::size_t>(it - prompt.begin()));
}

std::optional<ArithmeticExpression> parse_arithmetic(
    std::span<const TokenId> tokens) {
  ArithmeticExpression expr;
  std::size_t i = 0;
  while (true) {
    std::vector<int> big_endian;
    while (i < tokens.size() && vocab::is_digit(tokens[i])) {
      big_endian.push_back(vocab::digit_value(tokens[i]));
      ++i;
    }
    if (big_endian.empty() || big_endian.size() > 9) return std::nullopt;
    std::int64_t value = 0;
    for (int d : big_endian) value = value * 10 + d;
    expr.operands.push_back(value);
    expr.digits.emplace_back(big_endian.rbegin(), big_endian.rend());
    if (i == tokens.size()) break;
    if (!is_operator(tokens[i])) return std::nullopt;
    expr.operators.push_back(tokens[i]);
    ++i;
  }
  return expr;
}

std::int64_t evaluate(const ArithmeticExpression& expr) {
  std::int64_t total = 0;
  std::int64_t term = expr.operands.at(0);
  int sign = 1;
  for (std::size_t i = 0; i < expr.operators.size(); ++i) {
    const TokenId op = expr.operators[i];
    const std::int64_t next = expr.operands[i + 1];
    if (op == vocab::kTimes) {
      term *= next;
      continue;
    }
    total += sign * term;
    sign = op == vocab::kPlus ? 1 : -1;
    term = next;
  }
  return total + sign * term;
}

int answer_width(const ArithmeticExpression& expr) {
  std::int64_t max_total = 0;
  std::int64_t term = pow10(static_cast<int>(expr.digits.at(0).size())) - 1;
  bool positive = true;
  for (std::size_t i = 0; i < expr.operators.size(); ++i) {
    const std::int64_t next =
        pow10(static_cast<int>(expr.digits[i + 1].size())) - 1;
    if (expr.operators[i] == vocab::kTimes) {
      term *= next;
      continue;
    }
    if (positive) max_total += term;
    positive = expr.operators[i] == vocab::kPlus;
    term = next;
  }
  if (positive) max_total += term;
  return decimal_digits(max_total);
}

std::vector<AnswerColumn> answer_columns(const ArithmeticExpression& expr) {
  const bool additive = std::none_of(
      expr.operators.begin(), expr.operators.end(),
      [](TokenId op) { return op == vocab::kTimes; });
  const bool single_product =
      expr.operators.size() == 1 && expr.operators[0] == vocab::kTimes;
  if (!additive && !single_product) return {};

  const int width = answer_width(expr);
  std::vector<AnswerColumn> columns(static_cast<std::size_t>(width));
  for (int j = 0; j < width; ++j) {
    auto& col = columns[static_cast<std::size_t>(j)];
    const std::int64_t scale = pow10(j);
    if (additive) {
      std::int64_t lower = expr.operands[0] % scale;
      for (std::size_t i = 0; i < expr.operators.size(); ++i) {
        const std::int64_t part = expr.operands[i + 1] % scale;
        lower += expr.operators[i] == vocab::kPlus ? part : -part;
      }
      col.carry = floor_div(lower, scale);
      for (const auto& d : expr.digits) {
        col.digits.push_back(static_cast<std::size_t>(j) < d.size()
                                 ? d[static_cast<std::size_t>(j)]
                                 : kBlankDigit);
      }
    } else {
      const std::int64_t lower = (expr.operands[0] % scale) * expr.operands[1];
      col.carry = floor_div(lower, scale);
      const auto& a = expr.digits[0];
      col.digits.push_back(static_cast<std::size_t>(j) < a.size()
                               ? a[static_cast<std::size_t>(j)]
                               : kBlankDigit);
      // The multiplier contributes to every column in full.
      for (int d : expr.digits[1]) col.digits.push_back(d);
    }
  }
  return columns;
}

}  // namespace grpolab
