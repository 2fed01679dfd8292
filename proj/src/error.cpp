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

#include "imz/error.hpp"

namespace imz {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedPayload: return "MALFORMED_PAYLOAD";
    case ErrorCode::InvalidUid: return "INVALID_UID";
    case ErrorCode::GuardianUnverified: return "GUARDIAN_UNVERIFIED";
    case ErrorCode::DuplicateRequestConflict: return "DUPLICATE_REQUEST_CONFLICT";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::InvalidSchedule: return "INVALID_SCHEDULE";
    case ErrorCode::UnknownVaccine: return "UNKNOWN_VACCINE";
    case ErrorCode::UidConflict: return "UID_CONFLICT";
    case ErrorCode::UnknownChild: return "UNKNOWN_CHILD";
    case ErrorCode::UnknownDose: return "UNKNOWN_DOSE";
    case ErrorCode::DateBeforeBirth: return "DATE_BEFORE_BIRTH";
    case ErrorCode::UnknownCenter: return "UNKNOWN_CENTER";
    case ErrorCode::QueueFull: return "QUEUE_FULL";
    case ErrorCode::TransportFailure: return "TRANSPORT_FAILURE";
    case ErrorCode::CorruptRecord: return "CORRUPT_RECORD";
    case ErrorCode::MissingMobile: return "MISSING_MOBILE";
    case ErrorCode::EmptyCohort: return "EMPTY_COHORT";
    case ErrorCode::NoStarters: return "NO_STARTERS";
    case ErrorCode::InvalidCounts: return "INVALID_COUNTS";
    case ErrorCode::InvalidWastageRate: return "INVALID_WASTAGE_RATE";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::Unauthenticated: return "UNAUTHENTICATED";
    case ErrorCode::ConflictIdempotency: return "CONFLICT_IDEMPOTENCY";
    case ErrorCode::InvalidRequest: return "INVALID_REQUEST";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "UNKNOWN_ERROR";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(ErrorCode::Internal); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (error_code_name(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace imz
