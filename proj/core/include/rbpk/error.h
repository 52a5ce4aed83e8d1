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

#ifndef RBPK_ERROR_H_
#define RBPK_ERROR_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rbpk {

enum class ErrorKind {
  kValidation,       // argument or record out of its declared range
  kIo,               // open/read/write failure
  kFormat,           // bad magic, version, or unparseable table
  kCorruption,       // structurally valid header, damaged body
  kDegenerateInput,  // e.g. metric on an empty histogram
  kCapability,       // operation needs data the input does not carry
  kMerge,            // histogram metadata mismatch
  kDomain,           // value outside a function's mathematical domain
  kUnderdetermined,  // not enough distinct points to fit
  kConvergence,      // series or search did not reach tolerance
  kDegeneracy,       // lognormal fit on a single-rank histogram
  kUsage,            // command-line misuse
};

std::string_view ErrorKindName(ErrorKind kind);

// Single exception type for the library. Callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Error(ErrorKind kind, const std::string& what, std::uint64_t byte_offset)
      : std::runtime_error(what + " (at byte offset " +
                           std::to_string(byte_offset) + ")"),
        kind_(kind),
        byte_offset_(byte_offset) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::uint64_t> byte_offset() const noexcept {
    return byte_offset_;
  }

 private:
  ErrorKind kind_;
  std::optional<std::uint64_t> byte_offset_;
};

}  // namespace rbpk

#endif  // RBPK_ERROR_H_
