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

#include "dpcc/error.h"

namespace dpcc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidProgram:
      return "InvalidProgram";
    case ErrorCode::kInvalidQuery:
      return "InvalidQuery";
    case ErrorCode::kInvalidPrivacy:
      return "InvalidPrivacy";
    case ErrorCode::kInvalidSpec:
      return "InvalidSpec";
    case ErrorCode::kOutOfRange:
      return "OutOfRange";
    case ErrorCode::kNotImplementable:
      return "NotImplementable";
    case ErrorCode::kPrivacyTooStrong:
      return "PrivacyTooStrong";
    case ErrorCode::kSolverFailure:
      return "SolverFailure";
    case ErrorCode::kParseError:
      return "ParseError";
    case ErrorCode::kConnectivityError:
      return "ConnectivityError";
    case ErrorCode::kDegenerateBase:
      return "DegenerateBase";
    case ErrorCode::kUsageError:
      return "UsageError";
  }
  return "Unknown";
}

}  // namespace dpcc
