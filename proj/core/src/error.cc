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

#include "rbpk/error.h"

namespace rbpk {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kCapability: return "capability";
    case ErrorKind::kMerge: return "merge";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kUnderdetermined: return "underdetermined";
    case ErrorKind::kConvergence: return "convergence";
    case ErrorKind::kDegeneracy: return "degeneracy";
    case ErrorKind::kUsage: return "usage";
  }
  return "unknown";
}

}  // namespace rbpk
