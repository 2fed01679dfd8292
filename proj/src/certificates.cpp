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

#include "imz/certificates.hpp"

#include "imz/crypto.hpp"
#include "imz/error.hpp"
#include "imz/json_util.hpp"

namespace imz {

using nlohmann::json;
namespace ju = json_util;

namespace {

std::string escape_value(std::string_view v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string canonical_text(const BirthCertificate& c) {
  const std::pair<const char*, std::string> fields[] = {
      {"certificate_id", c.certificate_id},
      {"child_uid", c.child_uid.str()},
      {"child_name", c.child_name},
      {"date_of_birth", format_date(c.date_of_birth)},
      {"place_of_birth", c.place_of_birth},
      {"sex", std::string(to_string(c.sex))},
      {"guardian_name", c.guardian_name},
      {"guardian_uid", c.guardian_uid.str()},
      {"issuing_center", c.issuing_center},
      {"issued_at", format_timestamp(c.issued_at)},
  };
  std::string out;
  for (const auto& [name, value] : fields) {
    if (!out.empty()) out.push_back('\n');
    out += name;
    out.push_back('=');
    out += escape_value(value);
  }
  return out;
}

std::string compute_content_hash(const BirthCertificate& cert) {
  return sha256_hex(canonical_text(cert));
}

json to_json(const BirthCertificate& c) {
  return {{"certificate_id", c.certificate_id},
          {"child_uid", c.child_uid.str()},
          {"child_name", c.child_name},
          {"date_of_birth", format_date(c.date_of_birth)},
          {"place_of_birth", c.place_of_birth},
          {"sex", to_string(c.sex)},
          {"guardian_name", c.guardian_name},
          {"guardian_uid", c.guardian_uid.str()},
          {"issuing_center", c.issuing_center},
          {"issued_at", format_timestamp(c.issued_at)},
          {"content_hash", c.content_hash},
          {"canonical_text", canonical_text(c)}};
}

BirthCertificate certificate_from_json(const json& j) {
  auto sex = parse_sex(ju::get_string(j, "sex"));
  if (!sex) throw Error(ErrorCode::InvalidRequest, "field 'sex' must be F, M or X");
  return BirthCertificate{ju::get_string(j, "certificate_id"),
                          ju::get_uid(j, "child_uid"),
                          ju::get_string(j, "child_name"),
                          ju::get_date(j, "date_of_birth"),
                          ju::get_string(j, "place_of_birth"),
                          *sex,
                          ju::get_string(j, "guardian_name"),
                          ju::get_uid(j, "guardian_uid"),
                          ju::get_string(j, "issuing_center"),
                          ju::get_timestamp(j, "issued_at"),
                          ju::get_string(j, "content_hash")};
}

std::string_view to_string(CertificateStatus s) noexcept {
  switch (s) {
    case CertificateStatus::Valid: return "VALID";
    case CertificateStatus::HashMismatch: return "HASH_MISMATCH";
    case CertificateStatus::UnknownCertificate: return "UNKNOWN_CERTIFICATE";
  }
  return "UNKNOWN_CERTIFICATE";
}

CertificateStore::CertificateStore(const Registry& registry, EventLog* log, Clock clock)
    : registry_(registry), log_(log), clock_(std::move(clock)) {}

BirthCertificate CertificateStore::issue_birth_certificate(const Uid& child_uid,
                                                           std::string_view center_id) {
  auto child = registry_.find_child(child_uid);
  if (!child) {
    throw Error(ErrorCode::UnknownChild, "child " + child_uid.str() + " is not registered");
  }
  std::lock_guard lock(mu_);
  if (auto it = by_child_.find(child_uid); it != by_child_.end()) return it->second;
  BirthCertificate cert{"BC-" + child_uid.str(),
                        child->uid,
                        child->child_name,
                        child->date_of_birth,
                        child->place_of_birth,
                        child->sex,
                        child->guardian_name,
                        child->guardian_uid,
                        std::string(center_id),
                        clock_(),
                        ""};
  cert.content_hash = compute_content_hash(cert);
  by_child_.emplace(child_uid, cert);
  by_id_.emplace(cert.certificate_id, child_uid);
  if (log_) log_->append("certificate_issued", to_json(cert), clock_());
  return cert;
}

CertificateStatus CertificateStore::verify_certificate(const BirthCertificate& doc) const {
  std::lock_guard lock(mu_);
  auto id = by_id_.find(doc.certificate_id);
  if (id == by_id_.end()) return CertificateStatus::UnknownCertificate;
  const auto& stored = by_child_.at(id->second);
  auto recomputed = compute_content_hash(doc);
  if (recomputed != doc.content_hash || recomputed != stored.content_hash) {
    return CertificateStatus::HashMismatch;
  }
  return CertificateStatus::Valid;
}

std::optional<BirthCertificate> CertificateStore::find_by_child(const Uid& child_uid) const {
  std::lock_guard lock(mu_);
  auto it = by_child_.find(child_uid);
  if (it == by_child_.end()) return std::nullopt;
  return it->second;
}

std::size_t CertificateStore::size() const {
  std::lock_guard lock(mu_);
  return by_child_.size();
}

json CertificateStore::snapshot() const {
  std::lock_guard lock(mu_);
  json out = json::array();
  for (const auto& [_, c] : by_child_) {
    auto j = to_json(c);
    j.erase("canonical_text");
    out.push_back(std::move(j));
  }
  return out;
}

bool CertificateStore::apply_record(const LogRecord& record) {
  if (record.type != "certificate_issued") return false;
  auto cert = certificate_from_json(record.payload);
  std::lock_guard lock(mu_);
  by_id_.emplace(cert.certificate_id, cert.child_uid);
  by_child_.emplace(cert.child_uid, std::move(cert));
  return true;
}

}  // namespace imz
