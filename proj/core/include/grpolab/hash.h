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

#ifndef GRPOLAB_HASH_H_
#define GRPOLAB_HASH_H_

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace grpolab {

// FNV-1a over raw bytes. Stable across platforms and runs.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t basis = 0xcbf29ce484222325ULL) {
  std::uint64_t h = basis;
  for (const char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Order-sensitive combination of integer keys.
constexpr std::uint64_t hash_keys(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint64_t k : keys) {
    for (int i = 0; i < 8; ++i) {
      h ^= (k >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace grpolab

#endif  // GRPOLAB_HASH_H_
