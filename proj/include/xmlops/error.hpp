// Copyright 2026 The xmlops Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xmlops {

enum class ErrorCode {
  kValidation,    // malformed input, bad parameters
  kNotFound,      // unknown entity id
  kImmutable,     // mutation of a sealed / append-only entity
  kConflict,      // state does not allow the operation
  kPrecondition,  // operation precondition not met
  kInternal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_validation(const std::string& msg) {
  throw Error(ErrorCode::kValidation, msg);
}
[[noreturn]] inline void throw_not_found(std::string_view kind,
                                         std::string_view id) {
  throw Error(ErrorCode::kNotFound,
              "unknown " + std::string(kind) + ": " + std::string(id));
}
[[noreturn]] inline void throw_immutable(const std::string& msg) {
  throw Error(ErrorCode::kImmutable, msg);
}
[[noreturn]] inline void throw_conflict(const std::string& msg) {
  throw Error(ErrorCode::kConflict, msg);
}
[[noreturn]] inline void throw_precondition(const std::string& msg) {
  throw Error(ErrorCode::kPrecondition, msg);
}
[[noreturn]] inline void throw_internal(const std::string& msg) {
  throw Error(ErrorCode::kInternal, msg);
}

}  // namespace xmlops
