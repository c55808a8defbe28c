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

#ifndef GRPOLAB_TEXT_H_
#define GRPOLAB_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace grpolab {

// Lowercases, collapses runs of Unicode whitespace to a single ASCII space,
// trims both ends and returns the NFC composition. Idempotent. Invalid UTF-8
// sequences are replaced with U+FFFD.
std::string normalize_text(std::string_view raw);

// Splits UTF-8 text into code points, each returned as its UTF-8 encoding.
std::vector<std::string> split_code_points(std::string_view utf8);

// True for Unicode White_Space code points.
bool is_unicode_whitespace(char32_t c);

// Trims ASCII whitespace from both ends.
std::string_view trim_ascii(std::string_view s);

}  // namespace grpolab

#endif  // GRPOLAB_TEXT_H_
