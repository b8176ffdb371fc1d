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

#include <string>
#include <string_view>

#include "json.hpp"

namespace xmlops {

using Json = nlohmann::json;
using Id = std::string;

inline constexpr std::string_view kHashAlgorithm = "sha256";

// Lowercase hex SHA-256 digest (64 chars).
std::string sha256_hex(std::string_view bytes);

// Canonical serialization: sorted keys, no whitespace, shortest round-trip
// doubles. Two equal JSON values always produce identical bytes.
std::string canonical(const Json& value);

inline Id content_id(const Json& value) { return sha256_hex(canonical(value)); }

bool is_hex_digest(std::string_view id);

}  // namespace xmlops
