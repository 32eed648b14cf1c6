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

#include "cohere/error.hpp"

#include <iostream>
#include <mutex>

namespace cohere {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidShape: return "InvalidShape";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kSingleColumn: return "SingleColumn";
    case ErrorCode::kZeroCoherence: return "ZeroCoherence";
    case ErrorCode::kSingularG: return "SingularG";
    case ErrorCode::kInvalidBounds: return "InvalidBounds";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) {
    std::cerr << "cohere: warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace cohere
