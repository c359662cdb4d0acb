// Copyright 2026 The mreg Authors.
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

#ifndef MREG_ERROR_HPP
#define MREG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace mreg {

enum class ErrorCode {
  kInvalidArgument,
  kIndexOutOfRange,
  kDimensionMismatch,
  kNotACircuit,
  kDegenerateInput,
  kKindMismatch,
  kNoiseDimensionMismatch,
  kNotPSD,
  kObservationsMissing,
  kUnsupportedNoiseModel,
  kNotGraphStructured,
  kNoPath,
  kNoOddPath,
  kRankTooLow,
  kNoKernel,
  kTooLarge,
  kNonPositiveEntry,
  kTargetOutsideRowSpan,
  kParseError,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotACircuit: return "NotACircuit";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kKindMismatch: return "KindMismatch";
    case ErrorCode::kNoiseDimensionMismatch: return "NoiseDimensionMismatch";
    case ErrorCode::kNotPSD: return "NotPSD";
    case ErrorCode::kObservationsMissing: return "ObservationsMissing";
    case ErrorCode::kUnsupportedNoiseModel: return "UnsupportedNoiseModel";
    case ErrorCode::kNotGraphStructured: return "NotGraphStructured";
    case ErrorCode::kNoPath: return "NoPath";
    case ErrorCode::kNoOddPath: return "NoOddPath";
    case ErrorCode::kRankTooLow: return "RankTooLow";
    case ErrorCode::kNoKernel: return "NoKernel";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kNonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::kTargetOutsideRowSpan: return "TargetOutsideRowSpan";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

// All library failures are reported through this exception; `code()` lets
// callers dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Process exit status for the command-line tool: 1 parse, 2 math/structure,
// 3 resource guard.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kDimensionMismatch:
      return 1;
    case ErrorCode::kTooLarge:
      return 3;
    default:
      return 2;
  }
}

}  // namespace mreg

#endif  // MREG_ERROR_HPP
