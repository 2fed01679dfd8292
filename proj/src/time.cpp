// Copyright 2026 The imz-registry Authors
//
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

#include "imz/time.hpp"

#include <cstdio>

#include "imz/error.hpp"

namespace imz {
namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!read_digits(text, 0, 4, y) || !read_digits(text, 5, 2, m) ||
      !read_digits(text, 8, 2, d)) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y},
                                  std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  auto date = parse_date(text.substr(0, 10));
  int hh = 0, mm = 0, ss = 0;
  if (!date || !read_digits(text, 11, 2, hh) || !read_digits(text, 14, 2, mm) ||
      !read_digits(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return start_of(*date) + std::chrono::hours{hh} + std::chrono::minutes{mm} +
         std::chrono::seconds{ss};
}

std::string format_date(Date d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

namespace {

struct Clock24 {
  long h, m, s;
};

Clock24 split_time(Timestamp t) {
  auto secs = (t - start_of(date_of(t))).count();
  return {secs / 3600, (secs / 60) % 60, secs % 60};
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  auto c = split_time(t);
  char buf[64];
  std::snprintf(buf, sizeof buf, "T%02ld:%02ld:%02ldZ", c.h, c.m, c.s);
  return format_date(date_of(t)) + buf;
}

std::string format_timestamp_compact(Timestamp t) {
  std::chrono::year_month_day ymd{date_of(t)};
  auto c = split_time(t);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d%02u%02uT%02ld%02ld%02ldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), c.h, c.m, c.s);
  return buf;
}

Date parse_date_or_throw(std::string_view text, std::string_view what) {
  auto d = parse_date(text);
  if (!d) {
    throw Error(ErrorCode::InvalidRequest,
                std::string(what) + ": expected YYYY-MM-DD, got '" +
                    std::string(text) + "'");
  }
  return *d;
}

Timestamp parse_timestamp_or_throw(std::string_view text, std::string_view what) {
  auto t = parse_timestamp(text);
  if (!t) {
    throw Error(ErrorCode::InvalidRequest,
                std::string(what) + ": expected YYYY-MM-DDTHH:MM:SSZ, got '" +
                    std::string(text) + "'");
  }
  return *t;
}

Timestamp wall_clock_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace imz
