// Copyright 2026 The cohere Authors
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

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cohere {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidShape,
  kNonFinite,
  kNotPositiveDefinite,
  kNotSymmetric,
  kNoConvergence,
  kRankDeficient,
  kSingleColumn,
  kZeroCoherence,
  kSingularG,
  kInvalidBounds,
  kInfeasible,
  kNumericalFailure,
  kParseError,
  kDimensionMismatch,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this exception type; the code
// identifies the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal diagnostics (input normalized, rows dropped, ...). The default
// sink writes to stderr; tests and the CLI may redirect or silence it.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace cohere
