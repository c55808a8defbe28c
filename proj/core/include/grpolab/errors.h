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

#ifndef GRPOLAB_ERRORS_H_
#define GRPOLAB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace grpolab {

// Invalid configuration or call-site arguments (bad thresholds, G < 2, ...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A documented invariant was breached. Never caught inside the library.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

// A verifier plugin failed to produce a verdict. Distinct from a -1 reward.
class VerifierError : public std::runtime_error {
 public:
  explicit VerifierError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files or failed writes.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grpolab

#endif  // GRPOLAB_ERRORS_H_
