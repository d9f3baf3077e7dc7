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

#ifndef DPCC_TOOLS_CLI_H_
#define DPCC_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace dpcc::cli {

// Exit statuses.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // computation or input error
constexpr int kExitUsage = 2;

// args excludes the program name. Errors are printed to `err` as
// "error[<Category>]: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dpcc::cli

#endif  // DPCC_TOOLS_CLI_H_
