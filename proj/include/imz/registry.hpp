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

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imz/event_log.hpp"
#include "imz/identity.hpp"
#include "imz/schedule.hpp"
#include "imz/time.hpp"

namespace imz {

/// Central registry row for one child.
struct ChildRecord {
  Uid uid;
  std::string child_name;
  std::string guardian_name;
  std::string guardian_mobile;  // may be empty
  Uid guardian_uid;
  Date date_of_birth;
  Sex sex = Sex::X;
  std::string place_of_birth;
  std::string zone_id;
  std::string registered_center;
  Timestamp registered_at;

  friend bool operator==(const ChildRecord&, const ChildRecord&) = default;
};

enum class CenterKind { Government, Private };
std::string_view to_string(CenterKind k) noexcept;
std::optional<CenterKind> parse_center_kind(std::string_view text);

struct CenterRecord {
  std::string center_id;
  std::string name;
  std::string zone_id;
  CenterKind kind = CenterKind::Government;
  std::string api_key_hash;  // hex SHA-256 of the center's API key
  bool active = true;

  friend bool operator==(const CenterRecord&, const CenterRecord&) = default;
};

struct VaccinationEvent {
  std::string event_id;
  Uid child_uid;
  Vaccine vaccine = Vaccine::BCG;
  int dose = 0;
  Date administered_date;
  std::string center_id;
  std::string batch_id;
  Timestamp recorded_at;

  DoseKey key() const { return {vaccine, dose}; }
  friend bool operator==(const VaccinationEvent&, const VaccinationEvent&) = default;
};

nlohmann::json to_json(const ChildRecord& c);
nlohmann::json to_json(const CenterRecord& c);
nlohmann::json to_json(const VaccinationEvent& e);
/// Decoders throw Error(InvalidRequest) or Error(InvalidUid).
ChildRecord child_from_json(const nlohmann::json& j);
CenterRecord center_from_json(const nlohmann::json& j);
VaccinationEvent event_from_json(const nlohmann::json& j);

/// Reads `center_id,name,zone_id,kind` lines (a header line starting with
/// `center_id` is skipped). Throws Error(ParseError).
std::vector<CenterRecord> load_center_registry(std::istream& in);

enum class RecordOutcome {
  Accepted,          // stored as the active event for its dose
  DuplicateIgnored,  // same event_id already stored; nothing changed
  ConflictResolved,  // stored; the earliest-date rule superseded one event
  Parked,            // child not yet known; held until it is registered
};
std::string_view to_string(RecordOutcome o) noexcept;

struct HistoryEntry {
  VaccinationEvent event;
  bool superseded = false;
};

struct ChildHistory {
  ChildRecord child;
  std::vector<HistoryEntry> events;  // sorted by (administered_date, event_id)
};

struct DueListEntry {
  ChildRecord child;
  std::vector<DueDose> due;
};

/// The central immunization database.
///
/// Mutations are validated, applied and appended to the attached EventLog
/// under one exclusive lock, so the log order is the application order.
/// Reads take a shared lock. Replaying the log into a fresh Registry through
/// apply_record() rebuilds an identical snapshot.
class Registry {
 public:
  Registry(ScheduleConfig schedule, EventLog* log = nullptr,
           Clock clock = wall_clock_now);

  const ScheduleConfig& schedule() const noexcept { return schedule_; }

  /// Inserts or replaces a center. Returns false when nothing changed.
  bool upsert_center(const CenterRecord& center);
  std::optional<CenterRecord> find_center(std::string_view center_id) const;
  std::vector<CenterRecord> centers() const;

  /// Byte-identical replay returns the stored record.
  /// Throws Error(UidConflict) or Error(InvalidRequest).
  ChildRecord register_child(const ChildRecord& child, bool* inserted = nullptr);
  std::optional<ChildRecord> find_child(const Uid& uid) const;

  /// Throws Error(UnknownChild), Error(UnknownDose), Error(DateBeforeBirth),
  /// Error(DuplicateRequestConflict) for a reused event_id with a different
  /// payload, Error(InvalidRequest) if administered after recorded_at.
  RecordOutcome record_vaccination(const VaccinationEvent& event);
  /// Same as record_vaccination() but parks events for unknown children
  /// instead of failing. Used by the sync path, where arrival order across
  /// centers is arbitrary.
  RecordOutcome ingest_vaccination(const VaccinationEvent& event);
  /// Throws like record_vaccination() without mutating anything.
  void check_vaccination(const VaccinationEvent& event) const;

  ChildHistory vaccination_history(const Uid& uid,
                                   bool include_superseded = false) const;
  /// Active (non-superseded) doses of a child; empty for unknown uids.
  DoseHistory dose_history(const Uid& uid) const;

  std::vector<DueListEntry> due_list(std::string_view center_id, Date date) const;

  std::vector<ChildRecord> children_of_guardian(const Uid& guardian_uid) const;
  std::vector<ChildRecord> children_by_mobile(std::string_view mobile) const;
  /// Guardian uid when `query` is a valid uid, guardian mobile otherwise.
  std::vector<ChildRecord> child_lookup(std::string_view query) const;

  /// Visits every child with its active dose history, in uid order.
  void for_each_child(
      const std::function<void(const ChildRecord&, const DoseHistory&)>& fn) const;

  std::size_t child_count() const;
  std::size_t event_count() const;
  std::size_t parked_count() const;

  nlohmann::json snapshot() const;

  /// Applies one log record without re-logging it. Returns false for record
  /// types owned by other components.
  bool apply_record(const LogRecord& record);

 private:
  struct StoredEvent {
    VaccinationEvent event;
    bool superseded = false;
  };
  using DoseSlot = std::pair<Uid, DoseKey>;

  void check_event_locked(const VaccinationEvent& e, bool need_child) const;
  ChildRecord register_locked(const ChildRecord& child, bool& inserted);
  RecordOutcome place_event_locked(const VaccinationEvent& e);
  RecordOutcome ingest_locked(const VaccinationEvent& e, bool park_unknown);
  void release_parked_locked(const Uid& uid);
  DoseHistory dose_history_locked(const Uid& uid) const;
  void log(std::string_view type, const nlohmann::json& payload);

  ScheduleConfig schedule_;
  EventLog* log_;
  Clock clock_;

  mutable std::shared_mutex mu_;
  std::map<std::string, CenterRecord, std::less<>> centers_;
  std::map<Uid, ChildRecord> children_;
  std::map<std::string, StoredEvent, std::less<>> events_;
  std::map<Uid, std::vector<std::string>> events_by_child_;
  std::map<DoseSlot, std::string> active_;
  std::map<Uid, std::map<std::string, VaccinationEvent>> parked_;
  std::multimap<Uid, Uid> by_guardian_;
  std::multimap<std::string, Uid, std::less<>> by_mobile_;
};

}  // namespace imz
