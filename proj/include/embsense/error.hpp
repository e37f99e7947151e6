/*
 * Copyright 2026 The embsense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EMBSENSE_ERROR_HPP_
#define EMBSENSE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace embsense {

enum class ErrorCode {
  kInvalidParameter,
  kInvalidInput,
  kDegenerateInput,
  kDegenerateGeometry,
  kDimensionMismatch,
  kUnknownSample,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kDimensionOverflow,
  kMalformedTrailer,
  kIo,
  kConfig,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the Python bindings) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kUnknownSample: return "unknown-sample";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kDimensionOverflow: return "dimension-overflow";
    case ErrorCode::kMalformedTrailer: return "malformed-trailer";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace embsense

#endif  // EMBSENSE_ERROR_HPP_
