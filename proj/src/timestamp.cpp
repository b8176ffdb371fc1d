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

#include "xmlops/timestamp.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <memory>

#include "xmlops/error.hpp"

namespace xmlops {
namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m,
                     unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

bool is_leap(std::int64_t y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30,
                                       31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

int read_digits(std::string_view text, std::size_t pos, std::size_t count,
                std::string_view original) {
  if (pos + count > text.size()) {
    throw_validation("timestamp too short: '" + std::string(original) + "'");
  }
  int value = 0;
  auto [ptr, ec] =
      std::from_chars(text.data() + pos, text.data() + pos + count, value);
  if (ec != std::errc() || ptr != text.data() + pos + count) {
    throw_validation("malformed timestamp: '" + std::string(original) + "'");
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c,
                 std::string_view original) {
  if (pos >= text.size() || text[pos] != c) {
    throw_validation("malformed timestamp: '" + std::string(original) + "'");
  }
}

}  // namespace

Timestamp Timestamp::parse(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
  const int year = read_digits(text, 0, 4, text);
  expect_char(text, 4, '-', text);
  const int month = read_digits(text, 5, 2, text);
  expect_char(text, 7, '-', text);
  const int day = read_digits(text, 8, 2, text);
  if (text.size() <= 10 || (text[10] != 'T' && text[10] != 't' &&
                            text[10] != ' ')) {
    throw_validation("malformed timestamp: '" + std::string(text) + "'");
  }
  const int hour = read_digits(text, 11, 2, text);
  expect_char(text, 13, ':', text);
  const int minute = read_digits(text, 14, 2, text);
  expect_char(text, 16, ':', text);
  const int second = read_digits(text, 17, 2, text);
  std::size_t pos = 19;
  std::int64_t micros = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (digits < 6) micros = micros * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) {
      throw_validation("malformed fractional seconds: '" + std::string(text) +
                       "'");
    }
    for (int i = digits; i < 6; ++i) micros *= 10;
  }
  if (pos >= text.size()) {
    throw_validation("timestamp lacks a UTC offset: '" + std::string(text) +
                     "'");
  }
  int offset = 0;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '-' ? -1 : 1;
    const int oh = read_digits(text, pos + 1, 2, text);
    expect_char(text, pos + 3, ':', text);
    const int om = read_digits(text, pos + 4, 2, text);
    if (oh > 23 || om > 59) {
      throw_validation("offset out of range: '" + std::string(text) + "'");
    }
    offset = sign * (oh * 60 + om);
    pos += 6;
  } else {
    throw_validation("timestamp lacks a UTC offset: '" + std::string(text) +
                     "'");
  }
  if (pos != text.size()) {
    throw_validation("trailing characters in timestamp: '" +
                     std::string(text) + "'");
  }
  if (month < 1 || month > 12 || day < 1 ||
      static_cast<unsigned>(day) > days_in_month(year, month) || hour > 23 ||
      minute > 59 || second > 60) {
    throw_validation("timestamp field out of range: '" + std::string(text) +
                     "'");
  }
  const std::int64_t days = days_from_civil(year, month, day);
  const std::int64_t local_seconds =
      days * 86400 + hour * 3600 + minute * 60 + std::min(second, 59);
  Timestamp ts;
  ts.utc_micros_ = (local_seconds - offset * 60) * 1000000 + micros;
  ts.offset_minutes_ = offset;
  return ts;
}

Timestamp Timestamp::from_utc_micros(std::int64_t micros, int offset_minutes) {
  Timestamp ts;
  ts.utc_micros_ = micros;
  ts.offset_minutes_ = offset_minutes;
  return ts;
}

std::string Timestamp::to_string() const {
  const std::int64_t local = utc_micros_ + std::int64_t{offset_minutes_} * 60 *
                                               1000000;
  std::int64_t secs = local / 1000000;
  std::int64_t frac = local % 1000000;
  if (frac < 0) {
    frac += 1000000;
    secs -= 1;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[64];
  int n = std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                        static_cast<long long>(y), m, d,
                        static_cast<long long>(rem / 3600),
                        static_cast<long long>((rem % 3600) / 60),
                        static_cast<long long>(rem % 60));
  std::string out(buf, static_cast<std::size_t>(n));
  if (frac != 0) {
    std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(frac));
    out += buf;
  }
  const int off = offset_minutes_ < 0 ? -offset_minutes_ : offset_minutes_;
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", offset_minutes_ < 0 ? '-' : '+',
                off / 60, off % 60);
  out += buf;
  return out;
}

Clock system_clock() {
  return [] {
    const auto now = std::chrono::system_clock::now();
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
                            now.time_since_epoch())
                            .count();
    return Timestamp::from_utc_micros(micros, 0);
  };
}

Clock stepping_clock(Timestamp start, std::int64_t step_micros) {
  auto current = std::make_shared<std::int64_t>(start.utc_micros());
  const int offset = start.offset_minutes();
  return [current, step_micros, offset] {
    const std::int64_t value = *current;
    *current += step_micros;
    return Timestamp::from_utc_micros(value, offset);
  };
}

}  // namespace xmlops
