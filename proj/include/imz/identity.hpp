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
#include <iosfwd>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "imz/time.hpp"

namespace imz {

inline constexpr std::size_t kUidLength = 12;
inline constexpr std::size_t kUidPayloadLength = kUidLength - 1;

/// True iff `digits` is a non-empty decimal string whose trailing digit is a
/// correct Verhoeff check digit for the rest.
bool verhoeff_valid(std::string_view digits) noexcept;

/// Verhoeff check digit ('0'..'9') for an 11-digit payload.
/// Throws Error(MalformedPayload) if the payload is not 11 decimal digits.
char compute_check_digit(std::string_view payload);

/// 12 digits, non-zero leading digit, Verhoeff-valid.
bool validate_uid(std::string_view candidate) noexcept;

/// A validated 12-digit identifier.
class Uid {
 public:
  static std::optional<Uid> parse(std::string_view text);
  /// Throws Error(InvalidUid).
  static Uid from_string(std::string_view text);

  const std::string& str() const noexcept { return digits_; }

  friend bool operator==(const Uid&, const Uid&) = default;
  friend auto operator<=>(const Uid&, const Uid&) = default;

 private:
  explicit Uid(std::string digits) : digits_(std::move(digits)) {}
  std::string digits_;
};

enum class GuardianType { Parent, Guardian, Orphanage };
enum class Sex { F, M, X };

std::string_view to_string(GuardianType t) noexcept;
std::string_view to_string(Sex s) noexcept;
std::optional<GuardianType> parse_guardian_type(std::string_view text);
std::optional<Sex> parse_sex(std::string_view text);

/// `+` followed by 8 to 15 digits.
bool valid_mobile(std::string_view mobile) noexcept;

/// Lower-cased, trimmed, inner whitespace collapsed. Used for name matching.
std::string normalize_name(std::string_view name);

struct GuardianRecord {
  Uid uid;
  std::string name;
  std::string mobile;  // empty when the guardian has no phone
  GuardianType type = GuardianType::Parent;
};

struct InfantRegistrationRequest {
  std::string request_id;
  std::string child_name;
  Date date_of_birth;
  Sex sex = Sex::X;
  std::string place_of_birth;
  GuardianRecord guardian;
  std::string center_id;
};

/// Checks the request invariants against the day the request was received.
/// Throws Error(InvalidRequest).
void validate_request(const InfantRegistrationRequest& req, Date received_on);

enum class VerificationResult { Verified, UnknownUid, NameMismatch };
std::string_view to_string(VerificationResult r) noexcept;

/// One entry of the simulated national identity directory.
struct PersonRecord {
  Uid uid;
  std::string name;
  std::string mobile;
  GuardianType type = GuardianType::Parent;
  std::optional<Uid> guardian;  // set for infants issued through a guardian
};

/// Reads `uid,name,mobile,guardian_type` lines. Blank lines and lines
/// starting with '#' are skipped. Throws Error(ParseError).
std::vector<PersonRecord> load_identity_seed(std::istream& in);

/// Simulated UID authority: verifies guardians and issues infant UIDs.
/// All members are safe to call concurrently.
class IdentityStore {
 public:
  explicit IdentityStore(std::uint64_t seed = 0x1d5eedULL);

  /// Adds a known person. Throws Error(UidConflict) on a different record
  /// under an existing uid.
  void add_person(PersonRecord person);
  /// Marks a uid as taken without a directory entry (used on restart).
  void reserve(const Uid& uid);

  bool contains(const Uid& uid) const;
  std::optional<PersonRecord> find(const Uid& uid) const;
  std::size_t size() const;

  VerificationResult verify_guardian(const GuardianRecord& guardian) const;

  /// Issues a fresh infant UID linked to the verified guardian. Replaying the
  /// same request_id with the same payload returns the same UID.
  /// Throws Error(GuardianUnverified) or Error(DuplicateRequestConflict).
  Uid issue_infant_uid(const InfantRegistrationRequest& req);

  /// Undoes an issuance whose downstream transaction failed.
  bool revoke(std::string_view request_id);

 private:
  struct Issued {
    std::string fingerprint;
    Uid uid;
  };

  VerificationResult verify_locked(const GuardianRecord& guardian) const;
  Uid draw_fresh_uid_locked();

  mutable std::mutex mu_;
  std::unordered_map<std::string, PersonRecord> people_;
  std::unordered_set<std::string> reserved_;
  std::unordered_map<std::string, Issued> requests_;
  std::mt19937_64 rng_;
};

}  // namespace imz
