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

// An in-process service with a controllable clock, three centers and a
// small identity directory.

#include <memory>
#include <string>

#include <json.hpp>

#include "fixtures.hpp"
#include "imz/service.hpp"

namespace fixtures {

inline const std::string kKeyA = "key-alpha";
inline const std::string kKeyB = "key-beta";
inline const std::string kKeyOff = "key-retired";

inline imz::Uid guardian_uid() { return imz::Uid::from_string("234567890124"); }
inline imz::Uid guardian2_uid() { return imz::Uid::from_string("345678901238"); }

class Harness {
 public:
  explicit Harness(imz::ServiceOptions o = {}) {
    o.clock = [this] { return now; };
    o.sleeper = imz::no_sleep();
    service = std::make_unique<imz::ImmunizationService>(std::move(o));
    service->add_center({"A", "Rampur PHC", "Z1", imz::CenterKind::Government, "", true}, kKeyA);
    service->add_center({"B", "Sunrise Clinic", "Z1", imz::CenterKind::Private, "", true}, kKeyB);
    service->add_center({"OFF", "Closed Clinic", "Z2", imz::CenterKind::Private, "", false},
                        kKeyOff);
    service->identity().add_person(
        {guardian_uid(), "Asha Devi", "+919812345678", imz::GuardianType::Parent, std::nullopt});
    service->identity().add_person(
        {guardian2_uid(), "Ramesh Kumar", "", imz::GuardianType::Parent, std::nullopt});
  }

  imz::ServiceResponse call(const std::string& method, const std::string& path,
                            const std::string& body = "", const std::string& key = kKeyA,
                            const std::string& idem = "",
                            std::map<std::string, std::string> query = {}) {
    imz::ServiceRequest r;
    r.method = method;
    r.path = path;
    r.query = std::move(query);
    r.body = body;
    if (!key.empty()) r.headers["X-Api-Key"] = key;
    if (!idem.empty()) r.headers["Idempotency-Key"] = idem;
    return service->handle(r);
  }

  nlohmann::json registration(const std::string& request_id, const std::string& dob,
                              const std::string& center = "A",
                              const std::string& name = "Baby Devi") const {
    return {{"request_id", request_id},
            {"child_name", name},
            {"date_of_birth", dob},
            {"sex", "F"},
            {"place_of_birth", "Rampur PHC"},
            {"guardian", {{"uid", guardian_uid().str()}, {"name", "asha devi"}}},
            {"center_id", center}};
  }

  /// Registers a child and returns its UID text.
  std::string register_child(const std::string& request_id, const std::string& dob,
                             const std::string& key = kKeyA, const std::string& center = "A") {
    auto r = call("POST", "/registrations", registration(request_id, dob, center).dump(), key);
    if (r.status != 201 && r.status != 200) return "";
    return nlohmann::json::parse(r.body).at("uid").get<std::string>();
  }

  static nlohmann::json dose(const std::string& vaccine, int n, const std::string& date) {
    return {{"vaccine", vaccine}, {"dose", n}, {"administered_date", date}, {"batch_id", "LOT-7"}};
  }

  imz::Timestamp now = at("2025-06-01T09:00:00Z");
  std::unique_ptr<imz::ImmunizationService> service;
};

inline nlohmann::json body(const imz::ServiceResponse& r) { return nlohmann::json::parse(r.body); }

inline std::string error_code(const imz::ServiceResponse& r) {
  return nlohmann::json::parse(r.body).at("error").at("code").get<std::string>();
}

}  // namespace fixtures
