// Copyright 2026 The HDUS Authors
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

#ifndef HDUS_ERROR_H_
#define HDUS_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace hdus {

enum class ErrorCode {
  kDimension,
  kDomain,
  kValidation,
  kDivergence,
  kConfig,
  kNotFound,
  kConflict,
  kParse,
  kCapacity,
  kState,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported as hdus::Error. The code lets callers
// (notably the CLI) map failures to exit statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix, for re-wrapping with context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace hdus

#endif  // HDUS_ERROR_H_
