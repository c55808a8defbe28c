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

#ifndef GRPOLAB_RNG_H_
#define GRPOLAB_RNG_H_

#include <cstdint>
#include <random>
#include <string>

namespace grpolab {

// Stateless 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Derives an independent stream seed from a parent seed and a key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key_a,
                          std::uint64_t key_b);

// Mersenne-twister stream whose derived quantities do not depend on the
// standard library's distribution implementations, so draws are identical
// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::string serialize() const;
  void deserialize(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace grpolab

#endif  // GRPOLAB_RNG_H_
