// Copyright 2026 The vsdesign Authors.
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

#ifndef VSDESIGN_ERROR_HPP
#define VSDESIGN_ERROR_HPP

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vsdesign {

enum class ErrorCode {
  kRankDeficient,
  kDimensionMismatch,
  kAlphaOutOfRange,
  kZeroProbabilityEntry,
  kInvalidDistribution,
  kPreconditionViolated,
  kTrialBudgetExhausted,
  kKTooSmall,
  kEnumerationTooLarge,
  kSketchRankDeficient,
  kEmptyList,
  kModelDimensionMismatch,
  kResponseInColumnSpan,
  kInvariantViolated,
  kParseError,
  kRaggedRows,
  kNonFiniteEntry,
  kInvalidConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kAlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::kZeroProbabilityEntry: return "ZeroProbabilityEntry";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kTrialBudgetExhausted: return "TrialBudgetExhausted";
    case ErrorCode::kKTooSmall: return "KTooSmall";
    case ErrorCode::kEnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::kSketchRankDeficient: return "SketchRankDeficient";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kModelDimensionMismatch: return "ModelDimensionMismatch";
    case ErrorCode::kResponseInColumnSpan: return "ResponseInColumnSpan";
    case ErrorCode::kInvariantViolated: return "InvariantViolated";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kRaggedRows: return "RaggedRows";
    case ErrorCode::kNonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Short %g rendering for error messages.
inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vsdesign

#endif  // VSDESIGN_ERROR_HPP
