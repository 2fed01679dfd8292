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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace imz {

// Every failure mode that can cross a module boundary. The wire names
// returned by error_code_name() are stable and documented in docs/api.md.
enum class ErrorCode {
  MalformedPayload,
  InvalidUid,
  GuardianUnverified,
  DuplicateRequestConflict,
  ParseError,
  InvalidSchedule,
  UnknownVaccine,
  UidConflict,
  UnknownChild,
  UnknownDose,
  DateBeforeBirth,
  UnknownCenter,
  QueueFull,
  TransportFailure,
  CorruptRecord,
  MissingMobile,
  EmptyCohort,
  NoStarters,
  InvalidCounts,
  InvalidWastageRate,
  InvalidConfig,
  Unauthenticated,
  ConflictIdempotency,
  InvalidRequest,
  NotFound,
  Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;
/// Inverse of error_code_name().
std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class CorruptRecordError : public Error {
 public:
  CorruptRecordError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::CorruptRecord,
              message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace imz
