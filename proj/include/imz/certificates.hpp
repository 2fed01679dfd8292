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

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "imz/event_log.hpp"
#include "imz/registry.hpp"

namespace imz {

struct BirthCertificate {
  std::string certificate_id;
  Uid child_uid;
  std::string child_name;
  Date date_of_birth;
  std::string place_of_birth;
  Sex sex = Sex::X;
  std::string guardian_name;
  Uid guardian_uid;
  std::string issuing_center;
  Timestamp issued_at;
  std::string content_hash;

  friend bool operator==(const BirthCertificate&, const BirthCertificate&) = default;
};

/// `field=value` lines in fixed order joined by '\n'. Backslashes and line
/// breaks inside values are escaped so distinct field values never collide.
/// content_hash itself is not part of the text.
std::string canonical_text(const BirthCertificate& cert);
std::string compute_content_hash(const BirthCertificate& cert);

/// Export document: every field plus `canonical_text`.
nlohmann::json to_json(const BirthCertificate& cert);
BirthCertificate certificate_from_json(const nlohmann::json& j);

enum class CertificateStatus { Valid, HashMismatch, UnknownCertificate };
std::string_view to_string(CertificateStatus s) noexcept;

/// Issues one birth certificate per registered child.
class CertificateStore {
 public:
  CertificateStore(const Registry& registry, EventLog* log = nullptr,
                   Clock clock = wall_clock_now);

  /// Reissue returns the stored certificate unchanged.
  /// Throws Error(UnknownChild).
  BirthCertificate issue_birth_certificate(const Uid& child_uid,
                                           std::string_view center_id);
  CertificateStatus verify_certificate(const BirthCertificate& doc) const;

  std::optional<BirthCertificate> find_by_child(const Uid& child_uid) const;
  std::size_t size() const;

  nlohmann::json snapshot() const;
  bool apply_record(const LogRecord& record);

 private:
  const Registry& registry_;
  EventLog* log_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<Uid, BirthCertificate> by_child_;
  std::map<std::string, Uid> by_id_;
};

}  // namespace imz
