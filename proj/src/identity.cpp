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

#include "imz/identity.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <sstream>

#include "imz/error.hpp"

namespace imz {
namespace {

// Verhoeff tables: multiplication in the dihedral group D5, the position
// permutation, and the group inverse.
constexpr std::array<std::array<std::uint8_t, 10>, 10> kMul{{
    {0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
    {1, 2, 3, 4, 0, 6, 7, 8, 9, 5},
    {2, 3, 4, 0, 1, 7, 8, 9, 5, 6},
    {3, 4, 0, 1, 2, 8, 9, 5, 6, 7},
    {4, 0, 1, 2, 3, 9, 5, 6, 7, 8},
    {5, 9, 8, 7, 6, 0, 4, 3, 2, 1},
    {6, 5, 9, 8, 7, 1, 0, 4, 3, 2},
    {7, 6, 5, 9, 8, 2, 1, 0, 4, 3},
    {8, 7, 6, 5, 9, 3, 2, 1, 0, 4},
    {9, 8, 7, 6, 5, 4, 3, 2, 1, 0},
}};

constexpr std::array<std::array<std::uint8_t, 10>, 8> kPerm{{
    {0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
    {1, 5, 7, 6, 2, 8, 3, 0, 9, 4},
    {5, 8, 0, 3, 7, 9, 6, 1, 4, 2},
    {8, 9, 1, 6, 0, 4, 3, 5, 2, 7},
    {9, 4, 5, 3, 1, 2, 6, 8, 7, 0},
    {4, 2, 8, 6, 5, 7, 3, 9, 0, 1},
    {2, 7, 9, 3, 8, 0, 6, 4, 1, 5},
    {7, 0, 4, 6, 9, 1, 3, 2, 5, 8},
}};

constexpr std::array<std::uint8_t, 10> kInv{0, 4, 3, 2, 1, 5, 6, 7, 8, 9};

bool all_digits(std::string_view s) noexcept {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string request_fingerprint(const InfantRegistrationRequest& r) {
  std::ostringstream os;
  os << r.child_name << '\x1f' << format_date(r.date_of_birth) << '\x1f'
     << to_string(r.sex) << '\x1f' << r.place_of_birth << '\x1f'
     << r.guardian.uid.str() << '\x1f' << r.guardian.name << '\x1f'
     << r.guardian.mobile << '\x1f' << to_string(r.guardian.type) << '\x1f'
     << r.center_id;
  return os.str();
}

}  // namespace

bool verhoeff_valid(std::string_view digits) noexcept {
  if (digits.empty() || !all_digits(digits)) return false;
  std::uint8_t c = 0;
  std::size_t i = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it, ++i) {
    c = kMul[c][kPerm[i % 8][*it - '0']];
  }
  return c == 0;
}

char compute_check_digit(std::string_view payload) {
  if (payload.size() != kUidPayloadLength || !all_digits(payload)) {
    throw Error(ErrorCode::MalformedPayload,
                "uid payload must be exactly 11 decimal digits");
  }
  std::uint8_t c = 0;
  std::size_t i = 0;
  for (auto it = payload.rbegin(); it != payload.rend(); ++it, ++i) {
    c = kMul[c][kPerm[(i + 1) % 8][*it - '0']];
  }
  return static_cast<char>('0' + kInv[c]);
}

bool validate_uid(std::string_view candidate) noexcept {
  return candidate.size() == kUidLength && candidate[0] != '0' &&
         verhoeff_valid(candidate);
}

std::optional<Uid> Uid::parse(std::string_view text) {
  if (!validate_uid(text)) return std::nullopt;
  return Uid(std::string(text));
}

Uid Uid::from_string(std::string_view text) {
  auto uid = parse(text);
  if (!uid) {
    throw Error(ErrorCode::InvalidUid, "invalid uid '" + std::string(text) + "'");
  }
  return *uid;
}

std::string_view to_string(GuardianType t) noexcept {
  switch (t) {
    case GuardianType::Parent: return "PARENT";
    case GuardianType::Guardian: return "GUARDIAN";
    case GuardianType::Orphanage: return "ORPHANAGE";
  }
  return "PARENT";
}

std::string_view to_string(Sex s) noexcept {
  switch (s) {
    case Sex::F: return "F";
    case Sex::M: return "M";
    case Sex::X: return "X";
  }
  return "X";
}

std::optional<GuardianType> parse_guardian_type(std::string_view text) {
  if (text == "PARENT") return GuardianType::Parent;
  if (text == "GUARDIAN") return GuardianType::Guardian;
  if (text == "ORPHANAGE") return GuardianType::Orphanage;
  return std::nullopt;
}

std::optional<Sex> parse_sex(std::string_view text) {
  if (text == "F") return Sex::F;
  if (text == "M") return Sex::M;
  if (text == "X") return Sex::X;
  return std::nullopt;
}

std::string_view to_string(VerificationResult r) noexcept {
  switch (r) {
    case VerificationResult::Verified: return "VERIFIED";
    case VerificationResult::UnknownUid: return "UNKNOWN_UID";
    case VerificationResult::NameMismatch: return "NAME_MISMATCH";
  }
  return "UNKNOWN_UID";
}

bool valid_mobile(std::string_view mobile) noexcept {
  if (mobile.size() < 9 || mobile.size() > 16 || mobile[0] != '+') return false;
  return all_digits(mobile.substr(1));
}

std::string normalize_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (char ch : name) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

void validate_request(const InfantRegistrationRequest& req, Date received_on) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::InvalidRequest, msg);
  };
  if (req.request_id.empty()) fail("request_id is required");
  if (trim(req.child_name).empty()) fail("child_name must not be blank");
  if (req.date_of_birth > received_on) fail("date_of_birth is in the future");
  if (!req.guardian.mobile.empty() && !valid_mobile(req.guardian.mobile)) {
    fail("guardian mobile must be '+' followed by 8-15 digits");
  }
  if (req.center_id.empty()) fail("center_id is required");
}

std::vector<PersonRecord> load_identity_seed(std::istream& in) {
  std::vector<PersonRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::ParseError,
                   "identity seed line " + std::to_string(lineno) + ": " + why);
    };
    if (cols.size() != 4) throw bad("expected 4 columns");
    auto uid = Uid::parse(trim(cols[0]));
    if (!uid) throw bad("invalid uid");
    auto type = parse_guardian_type(trim(cols[3]));
    if (!type) throw bad("unknown guardian_type");
    auto mobile = trim(cols[2]);
    if (!mobile.empty() && !valid_mobile(mobile)) throw bad("invalid mobile");
    out.push_back(PersonRecord{*uid, trim(cols[1]), mobile, *type, std::nullopt});
  }
  return out;
}

IdentityStore::IdentityStore(std::uint64_t seed) : rng_(seed) {}

void IdentityStore::add_person(PersonRecord person) {
  std::lock_guard lock(mu_);
  auto key = person.uid.str();
  if (auto it = people_.find(key); it != people_.end()) {
    const auto& p = it->second;
    if (p.name == person.name && p.mobile == person.mobile &&
        p.type == person.type && p.guardian == person.guardian) {
      return;
    }
    throw Error(ErrorCode::UidConflict, "uid " + key + " already registered");
  }
  people_.emplace(std::move(key), std::move(person));
}

void IdentityStore::reserve(const Uid& uid) {
  std::lock_guard lock(mu_);
  reserved_.insert(uid.str());
}

bool IdentityStore::contains(const Uid& uid) const {
  std::lock_guard lock(mu_);
  return people_.count(uid.str()) > 0 || reserved_.count(uid.str()) > 0;
}

std::optional<PersonRecord> IdentityStore::find(const Uid& uid) const {
  std::lock_guard lock(mu_);
  auto it = people_.find(uid.str());
  if (it == people_.end()) return std::nullopt;
  return it->second;
}

std::size_t IdentityStore::size() const {
  std::lock_guard lock(mu_);
  return people_.size();
}

VerificationResult IdentityStore::verify_guardian(
    const GuardianRecord& guardian) const {
  std::lock_guard lock(mu_);
  return verify_locked(guardian);
}

VerificationResult IdentityStore::verify_locked(
    const GuardianRecord& guardian) const {
  auto it = people_.find(guardian.uid.str());
  if (it == people_.end()) return VerificationResult::UnknownUid;
  if (normalize_name(it->second.name) != normalize_name(guardian.name)) {
    return VerificationResult::NameMismatch;
  }
  return VerificationResult::Verified;
}

Uid IdentityStore::draw_fresh_uid_locked() {
  std::uniform_int_distribution<int> lead(1, 9);
  std::uniform_int_distribution<int> digit(0, 9);
  for (;;) {
    std::string payload;
    payload.reserve(kUidLength);
    payload.push_back(static_cast<char>('0' + lead(rng_)));
    while (payload.size() < kUidPayloadLength) {
      payload.push_back(static_cast<char>('0' + digit(rng_)));
    }
    payload.push_back(compute_check_digit(payload));
    if (people_.count(payload) == 0 && reserved_.count(payload) == 0) {
      return Uid::from_string(payload);
    }
  }
}

Uid IdentityStore::issue_infant_uid(const InfantRegistrationRequest& req) {
  auto fingerprint = request_fingerprint(req);
  std::lock_guard lock(mu_);
  if (auto it = requests_.find(req.request_id); it != requests_.end()) {
    if (it->second.fingerprint != fingerprint) {
      throw Error(ErrorCode::DuplicateRequestConflict,
                  "request_id '" + req.request_id +
                      "' was already used with a different payload");
    }
    return it->second.uid;
  }
  if (verify_locked(req.guardian) != VerificationResult::Verified) {
    throw Error(ErrorCode::GuardianUnverified,
                "guardian " + req.guardian.uid.str() + " could not be verified");
  }
  Uid uid = draw_fresh_uid_locked();
  people_.emplace(uid.str(), PersonRecord{uid, req.child_name, req.guardian.mobile,
                                          GuardianType::Parent, req.guardian.uid});
  requests_.emplace(req.request_id, Issued{std::move(fingerprint), uid});
  return uid;
}

bool IdentityStore::revoke(std::string_view request_id) {
  std::lock_guard lock(mu_);
  auto it = requests_.find(std::string(request_id));
  if (it == requests_.end()) return false;
  people_.erase(it->second.uid.str());
  requests_.erase(it);
  return true;
}

}  // namespace imz
