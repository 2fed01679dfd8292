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

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "imz/error.hpp"
#include "imz/identity.hpp"
#include "imz/time.hpp"

// Field accessors for decoding request bodies and log payloads. All of them
// throw Error(InvalidRequest) naming the offending field.
namespace imz::json_util {

using nlohmann::json;

const json& require(const json& obj, std::string_view field);
std::string get_string(const json& obj, std::string_view field);
std::string get_string_or(const json& obj, std::string_view field,
                          std::string fallback);
std::int64_t get_int(const json& obj, std::string_view field);
double get_number(const json& obj, std::string_view field);
Date get_date(const json& obj, std::string_view field);
Timestamp get_timestamp(const json& obj, std::string_view field);
Uid get_uid(const json& obj, std::string_view field);

/// Parses a request body, mapping syntax errors to Error(InvalidRequest).
json parse_body(std::string_view body);

}  // namespace imz::json_util
