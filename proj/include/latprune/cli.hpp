// Copyright 2026 The latprune Authors
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

#ifndef LATPRUNE_CLI_HPP_
#define LATPRUNE_CLI_HPP_

#include <iosfwd>

namespace latprune {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitInfeasible = 2,
  kExitIo = 3,
};

// Parses argv, runs one subcommand and maps failures to exit codes.
// Machine-readable output goes to `out` unless --out names a file.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out,
                       std::ostream& err);

}  // namespace latprune

#endif  // LATPRUNE_CLI_HPP_
