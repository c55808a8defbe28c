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

#ifndef GRPOLAB_ARITH_H_
#define GRPOLAB_ARITH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "grpolab/vocab.h"

namespace grpolab {

// Integer expression over non-negative literals joined by +, - and *.
struct ArithmeticExpression {
  std::vector<std::int64_t> operands;
  // Little-endian decimal digits of each operand as written.
  std::vector<std::vector<int>> digits;
  // operators[i] joins operands[i] and operands[i + 1].
  std::vector<TokenId> operators;
};

inline constexpr int kBlankDigit = 10;

// Tokens of a prompt up to (excluding) the first '='.
std::span<const TokenId> expression_tokens(std::span<const TokenId> prompt);

// Parses digit runs separated by single operators. Literals are limited to
// nine digits. Returns nullopt for anything else.
std::optional<ArithmeticExpression> parse_arithmetic(
    std::span<const TokenId> tokens);

// Evaluates with the usual precedence (* binds tighter than + and -).
std::int64_t evaluate(const ArithmeticExpression& expr);

// Decimal digits needed for the largest value the expression's shape admits
// (every operand at its maximum, subtracted terms at zero). At least 1.
int answer_width(const ArithmeticExpression& expr);

// State of one answer column, least significant first: the operand digits
// aligned to that column (kBlankDigit past an operand's length) and the
// carry/borrow flowing in from the lower columns.
struct AnswerColumn {
  std::vector<int> digits;
  std::int64_t carry = 0;
};

// Column decomposition for expressions built only from + and -, or a single
// product of two literals. Empty for other shapes.
std::vector<AnswerColumn> answer_columns(const ArithmeticExpression& expr);

}  // namespace grpolab

#endif  // GRPOLAB_ARITH_H_
