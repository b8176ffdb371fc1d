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

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace xmlops {

// RFC 3339 instant with an explicit UTC offset. Offset-less strings are
// rejected; the original offset is kept for display and hashing.
class Timestamp {
 public:
  Timestamp() = default;

  static Timestamp parse(std::string_view text);
  static Timestamp from_utc_micros(std::int64_t micros, int offset_minutes = 0);

  std::int64_t utc_micros() const noexcept { return utc_micros_; }
  int offset_minutes() const noexcept { return offset_minutes_; }

  std::string to_string() const;

  Timestamp plus_micros(std::int64_t delta) const {
    return from_utc_micros(utc_micros_ + delta, offset_minutes_);
  }

  friend bool operator==(const Timestamp& a, const Timestamp& b) {
    return a.utc_micros_ == b.utc_micros_ &&
           a.offset_minutes_ == b.offset_minutes_;
  }
  friend std::strong_ordering operator<=>(const Timestamp& a,
                                          const Timestamp& b) {
    if (auto c = a.utc_micros_ <=> b.utc_micros_; c != 0) return c;
    return a.offset_minutes_ <=> b.offset_minutes_;
  }

 private:
  std::int64_t utc_micros_ = 0;
  int offset_minutes_ = 0;
};

// Injectable time source; tests pin it, the server uses the system clock.
using Clock = std::function<Timestamp()>;

Clock system_clock();

// Deterministic clock advancing by `step_micros` on every call.
Clock stepping_clock(Timestamp start, std::int64_t step_micros);

}  // namespace xmlops
