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

#include "imz/json_util.hpp"

namespace imz::json_util {
namespace {

[[noreturn]] void bad_field(std::string_view field, std::string_view why) {
  throw Error(ErrorCode::InvalidRequest,
              "field '" + std::string(field) + "' " + std::string(why));
}

}  // namespace

const json& require(const json& obj, std::string_view field) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::InvalidRequest, "expected a JSON object");
  }
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) bad_field(field, "is required");
  return *it;
}

std::string get_string(const json& obj, std::string_view field) {
  const auto& v = require(obj, field);
  if (!v.is_string()) bad_field(field, "must be a string");
  return v.get<std::string>();
}

std::string get_string_or(const json& obj, std::string_view field,
                          std::string fallback) {
  if (!obj.is_object()) return fallback;
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_string()) bad_field(field, "must be a string");
  return it->get<std::string>();
}

std::int64_t get_int(const json& obj, std::string_view field) {
  const auto& v = require(obj, field);
  if (!v.is_number_integer()) bad_field(field, "must be an integer");
  return v.get<std::int64_t>();
}

double get_number(const json& obj, std::string_view field) {
  const auto& v = require(obj, field);
  if (!v.is_number()) bad_field(field, "must be a number");
  return v.get<double>();
}

Date get_date(const json& obj, std::string_view field) {
  auto d = parse_date(get_string(obj, field));
  if (!d) bad_field(field, "must be a YYYY-MM-DD date");
  return *d;
}

Timestamp get_timestamp(const json& obj, std::string_view field) {
  auto t = parse_timestamp(get_string(obj, field));
  if (!t) bad_field(field, "must be a YYYY-MM-DDTHH:MM:SSZ timestamp");
  return *t;
}

Uid get_uid(const json& obj, std::string_view field) {
  auto text = get_string(obj, field);
  auto uid = Uid::parse(text);
  if (!uid) {
    throw Error(ErrorCode::InvalidUid,
                "field '" + std::string(field) + "' is not a valid uid");
  }
  return *uid;
}

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidRequest, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace imz::json_util
