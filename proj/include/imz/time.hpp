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

#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace imz {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

/// Injectable source of "now"; the simulator drives it in simulated time.
using Clock = std::function<Timestamp()>;

Timestamp wall_clock_now();

/// Parses a strict `YYYY-MM-DD` calendar date.
std::optional<Date> parse_date(std::string_view text);
/// Parses a strict `YYYY-MM-DDTHH:MM:SSZ` UTC timestamp.
std::optional<Timestamp> parse_timestamp(std::string_view text);

std::string format_date(Date d);
std::string format_timestamp(Timestamp t);
/// `YYYYMMDDTHHMMSSZ`, safe for file names.
std::string format_timestamp_compact(Timestamp t);

inline Date date_of(Timestamp t) {
  return std::chrono::floor<std::chrono::days>(t);
}

inline Timestamp start_of(Date d) { return Timestamp{d}; }

inline Date add_days(Date d, long n) { return d + std::chrono::days{n}; }

inline long days_between(Date from, Date to) {
  return (to - from).count();
}

Date parse_date_or_throw(std::string_view text, std::string_view what);
Timestamp parse_timestamp_or_throw(std::string_view text, std::string_view what);

}  // namespace imz
