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

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "imz/time.hpp"

namespace imz {

// Declaration order is the tie-break order used when sorting due doses.
enum class Vaccine { BCG, OPV, DPT, HEPB, MEASLES, TT };

inline constexpr std::array<Vaccine, 6> kAllVaccines{
    Vaccine::BCG,  Vaccine::OPV,     Vaccine::DPT,
    Vaccine::HEPB, Vaccine::MEASLES, Vaccine::TT};

std::string_view to_string(Vaccine v) noexcept;
std::optional<Vaccine> parse_vaccine(std::string_view text);

struct DoseKey {
  Vaccine vaccine = Vaccine::BCG;
  int dose = 0;

  friend auto operator<=>(const DoseKey&, const DoseKey&) = default;
};

/// "BCG-1", "OPV-0", ...
std::string to_string(const DoseKey& key);
std::optional<DoseKey> parse_dose_key(std::string_view text);

struct ScheduleEntry {
  Vaccine vaccine = Vaccine::BCG;
  int dose = 0;
  int offset_days = 0;
  int grace_days = 0;

  DoseKey key() const { return {vaccine, dose}; }
  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct FullyImmunizedRule {
  int cutoff_days = 365;
  std::set<DoseKey> doses;

  friend bool operator==(const FullyImmunizedRule&,
                         const FullyImmunizedRule&) = default;
};

// Longest offset+grace we accept: 18 years of days.
inline constexpr int kMaxScheduleDays = 18 * 365 + 4;

/// A validated national schedule. Entries are kept sorted by DoseKey.
class ScheduleConfig {
 public:
  /// Throws Error(InvalidSchedule) when an invariant does not hold.
  ScheduleConfig(std::vector<ScheduleEntry> entries, FullyImmunizedRule rule);

  const std::vector<ScheduleEntry>& entries() const noexcept { return entries_; }
  const FullyImmunizedRule& rule() const noexcept { return rule_; }

  const ScheduleEntry* find(const DoseKey& key) const noexcept;
  int scheduled_doses(Vaccine v) const noexcept;

  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;

 private:
  std::vector<ScheduleEntry> entries_;
  FullyImmunizedRule rule_;
};

/// Parses the JSON schedule document. Throws Error(ParseError) for malformed
/// JSON or fields, Error(InvalidSchedule) for invariant violations and for
/// documents with no entries (including an empty file).
ScheduleConfig load_schedule(std::string_view document);
ScheduleConfig load_schedule_file(const std::string& path);
std::string schedule_to_json(const ScheduleConfig& cfg);

/// The shipped default (data/schedule.default.json has identical content).
const ScheduleConfig& default_schedule();

enum class DoseStatus { Given, Due, Overdue, Future };
std::string_view to_string(DoseStatus s) noexcept;

struct AdministeredDose {
  DoseKey key;
  Date date;
};
using DoseHistory = std::vector<AdministeredDose>;

struct DueDose {
  Vaccine vaccine = Vaccine::BCG;
  int dose = 0;
  Date due_date;
  DoseStatus status = DoseStatus::Due;

  DoseKey key() const { return {vaccine, dose}; }
  friend bool operator==(const DueDose&, const DueDose&) = default;
};

/// Status of every schedule entry. Throws Error(UnknownVaccine) if history
/// holds a dose absent from `cfg`, Error(InvalidRequest) if as_of < dob.
std::map<DoseKey, DoseStatus> dose_status(Date dob, const DoseHistory& history,
                                          Date as_of, const ScheduleConfig& cfg);

/// Every entry not yet given, with its due date and status (FUTURE
/// included), sorted by (due_date, vaccine, dose).
std::vector<DueDose> pending_doses(Date dob, const DoseHistory& history,
                                   Date as_of, const ScheduleConfig& cfg);

/// The DUE and OVERDUE subset of pending_doses().
std::vector<DueDose> next_due(Date dob, const DoseHistory& history, Date as_of,
                              const ScheduleConfig& cfg);

bool is_fully_immunized(Date dob, const DoseHistory& history,
                        const ScheduleConfig& cfg);

}  // namespace imz
