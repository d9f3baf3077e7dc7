// Copyright 2026 The dpcc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPCC_ERROR_H_
#define DPCC_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpcc {

// Machine-readable failure categories. The CLI prints the category name and
// maps it to an exit status.
enum class ErrorCode {
  kInvalidProgram,
  kInvalidQuery,
  kInvalidPrivacy,
  kInvalidSpec,
  kOutOfRange,
  kNotImplementable,
  kPrivacyTooStrong,
  kSolverFailure,
  kParseError,
  kConnectivityError,
  kDegenerateBase,
  kUsageError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dpcc

#endif  // DPCC_ERROR_H_
