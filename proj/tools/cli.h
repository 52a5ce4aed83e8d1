// Copyright 2026 The rbpk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RBPK_TOOLS_CLI_H_
#define RBPK_TOOLS_CLI_H_

#include <ostream>

#include "rbpk/error.h"

namespace rbpk::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitConvergence = 4;
inline constexpr int kExitIo = 5;
inline constexpr int kExitFormat = 6;

int ExitCodeFor(ErrorKind kind);

// Entry point for the rbpk binary; argv[0] is the program name.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rbpk::cli

#endif  // RBPK_TOOLS_CLI_H_
