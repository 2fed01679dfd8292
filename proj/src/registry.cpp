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

#include "imz/registry.hpp"

#include <algorithm>
#include <istream>
#include <mutex>
#include <sstream>

#include "imz/error.hpp"
#include "imz/json_util.hpp"

namespace imz {

using nlohmann::json;
namespace ju = json_util;

std::string_view to_string(CenterKind k) noexcept {
  return k == CenterKind::Private ? "PRIVATE" : "GOVERNMENT";
}

std::optional<CenterKind> parse_center_kind(std::string_view text) {
  if (text == "GOVERNMENT") return CenterKind::Government;
  if (text == "PRIVATE") return CenterKind::Private;
  return std::nullopt;
}

std::string_view to_string(RecordOutcome o) noexcept {
  switch (o) {
    case RecordOutcome::Accepted: return "ACCEPTED";
    case RecordOutcome::DuplicateIgnored: return "DUPLICATE_IGNORED";
    case RecordOutcome::ConflictResolved: return "CONFLICT_RESOLVED";
    case RecordOutcome::Parked: return "PARKED";
  }
  return "ACCEPTED";
}

json to_json(const ChildRecord& c) {
  return {{"uid", c.uid.str()},
          {"child_name", c.child_name},
          {"guardian_name", c.guardian_name},
          {"guardian_mobile", c.guardian_mobile},
          {"guardian_uid", c.guardian_uid.str()},
          {"date_of_birth", format_date(c.date_of_birth)},
          {"sex", to_string(c.sex)},
          {"place_of_birth", c.place_of_birth},
          {"zone_id", c.zone_id},
          {"registered_center", c.registered_center},
          {"registered_at", format_timestamp(c.registered_at)}};
}

json to_json(const CenterRecord& c) {
  return {{"center_id", c.center_id}, {"name", c.name},
          {"zone_id", c.zone_id},     {"kind", to_string(c.kind)},
          {"api_key_hash", c.api_key_hash}, {"active", c.active}};
}

json to_json(const VaccinationEvent& e) {
  return {{"event_id", e.event_id},
          {"child_uid", e.child_uid.str()},
          {"vaccine", to_string(e.vaccine)},
          {"dose", e.dose},
          {"administered_date", format_date(e.administered_date)},
          {"center_id", e.center_id},
          {"batch_id", e.batch_id},
          {"recorded_at", format_timestamp(e.recorded_at)}};
}

ChildRecord child_from_json(const json& j) {
  auto sex = parse_sex(ju::get_string(j, "sex"));
  if (!sex) throw Error(ErrorCode::InvalidRequest, "field 'sex' must be F, M or X");
  return ChildRecord{ju::get_uid(j, "uid"),
                     ju::get_string(j, "child_name"),
                     ju::get_string(j, "guardian_name"),
                     ju::get_string_or(j, "guardian_mobile", ""),
                     ju::get_uid(j, "guardian_uid"),
                     ju::get_date(j, "date_of_birth"),
                     *sex,
                     ju::get_string_or(j, "place_of_birth", ""),
                     ju::get_string(j, "zone_id"),
                     ju::get_string(j, "registered_center"),
                     ju::get_timestamp(j, "registered_at")};
}

CenterRecord center_from_json(const json& j) {
  auto kind = parse_center_kind(ju::get_string(j, "kind"));
  if (!kind) {
    throw Error(ErrorCode::InvalidRequest, "field 'kind' must be GOVERNMENT or PRIVATE");
  }
  bool active = true;
  if (j.contains("active")) {
    if (!j["active"].is_boolean()) {
      throw Error(ErrorCode::InvalidRequest, "field 'active' must be a boolean");
    }
    active = j["active"].get<bool>();
  }
  return CenterRecord{ju::get_string(j, "center_id"), ju::get_string(j, "name"),
                      ju::get_string(j, "zone_id"), *kind,
                      ju::get_string_or(j, "api_key_hash", ""), active};
}

VaccinationEvent event_from_json(const json& j) {
  auto vaccine = parse_vaccine(ju::get_string(j, "vaccine"));
  if (!vaccine) {
    throw Error(ErrorCode::UnknownDose,
                "unknown vaccine '" + ju::get_string(j, "vaccine") + "'");
  }
  return VaccinationEvent{ju::get_string(j, "event_id"),
                          ju::get_uid(j, "child_uid"),
                          *vaccine,
                          static_cast<int>(ju::get_int(j, "dose")),
                          ju::get_date(j, "administered_date"),
                          ju::get_string(j, "center_id"),
                          ju::get_string_or(j, "batch_id", ""),
                          ju::get_timestamp(j, "recorded_at")};
}

std::vector<CenterRecord> load_center_registry(std::istream& in) {
  std::vector<CenterRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.rfind("center_id", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::ParseError,
                   "center registry line " + std::to_string(lineno) + ": " + why);
    };
    if (cols.size() != 4) throw bad("expected 4 columns");
    auto kind = parse_center_kind(cols[3]);
    if (!kind) throw bad("kind must be GOVERNMENT or PRIVATE");
    if (cols[0].empty()) throw bad("empty center_id");
    out.push_back(CenterRecord{cols[0], cols[1], cols[2], *kind, "", true});
  }
  return out;
}

Registry::Registry(ScheduleConfig schedule, EventLog* log, Clock clock)
    : schedule_(std::move(schedule)), log_(log), clock_(std::move(clock)) {}

void Registry::log(std::string_view type, const json& payload) {
  if (log_) log_->append(type, payload, clock_());
}

bool Registry::upsert_center(const CenterRecord& center) {
  std::unique_lock lock(mu_);
  auto it = centers_.find(center.center_id);
  if (it != centers_.end() && it->second == center) return false;
  centers_.insert_or_assign(center.center_id, center);
  log("center_upserted", to_json(center));
  return true;
}

std::optional<CenterRecord> Registry::find_center(std::string_view center_id) const {
  std::shared_lock lock(mu_);
  auto it = centers_.find(center_id);
  if (it == centers_.end()) return std::nullopt;
  return it->second;
}

std::vector<CenterRecord> Registry::centers() const {
  std::shared_lock lock(mu_);
  std::vector<CenterRecord> out;
  for (const auto& [_, c] : centers_) out.push_back(c);
  return out;
}

ChildRecord Registry::register_locked(const ChildRecord& child, bool& inserted) {
  inserted = false;
  if (auto it = children_.find(child.uid); it != children_.end()) {
    if (it->second == child) return it->second;
    throw Error(ErrorCode::UidConflict,
                "uid " + child.uid.str() + " is registered with different details");
  }
  if (child.uid == child.guardian_uid) {
    throw Error(ErrorCode::InvalidRequest, "child uid equals guardian uid");
  }
  if (child.child_name.find_first_not_of(" \t") == std::string::npos) {
    throw Error(ErrorCode::InvalidRequest, "child_name must not be blank");
  }
  if (child.date_of_birth > date_of(child.registered_at)) {
    throw Error(ErrorCode::InvalidRequest, "date_of_birth is after registered_at");
  }
  children_.emplace(child.uid, child);
  by_guardian_.emplace(child.guardian_uid, child.uid);
  if (!child.guardian_mobile.empty()) by_mobile_.emplace(child.guardian_mobile, child.uid);
  inserted = true;
  release_parked_locked(child.uid);
  return child;
}

ChildRecord Registry::register_child(const ChildRecord& child, bool* inserted) {
  std::unique_lock lock(mu_);
  bool fresh = false;
  auto stored = register_locked(child, fresh);
  if (fresh) log("child_registered", to_json(child));
  if (inserted) *inserted = fresh;
  return stored;
}

std::optional<ChildRecord> Registry::find_child(const Uid& uid) const {
  std::shared_lock lock(mu_);
  auto it = children_.find(uid);
  if (it == children_.end()) return std::nullopt;
  return it->second;
}

void Registry::check_event_locked(const VaccinationEvent& e, bool need_child) const {
  if (e.event_id.empty()) throw Error(ErrorCode::InvalidRequest, "event_id is required");
  if (!schedule_.find(e.key())) {
    throw Error(ErrorCode::UnknownDose,
                to_string(e.key()) + " is not in the active schedule");
  }
  if (e.administered_date > date_of(e.recorded_at)) {
    throw Error(ErrorCode::InvalidRequest, "administered_date is after recorded_at");
  }
  const VaccinationEvent* existing = nullptr;
  if (auto it = events_.find(e.event_id); it != events_.end()) {
    existing = &it->second.event;
  } else if (auto p = parked_.find(e.child_uid); p != parked_.end()) {
    if (auto q = p->second.find(e.event_id); q != p->second.end()) existing = &q->second;
  }
  if (existing && !(*existing == e)) {
    throw Error(ErrorCode::DuplicateRequestConflict,
                "event_id '" + e.event_id + "' was already used with a different payload");
  }
  auto child = children_.find(e.child_uid);
  if (child == children_.end()) {
    if (need_child) {
      throw Error(ErrorCode::UnknownChild, "child " + e.child_uid.str() + " is not registered");
    }
    return;
  }
  if (e.administered_date < child->second.date_of_birth) {
    throw Error(ErrorCode::DateBeforeBirth,
                "administered_date precedes the child's date of birth");
  }
}

void Registry::check_vaccination(const VaccinationEvent& event) const {
  std::shared_lock lock(mu_);
  check_event_locked(event, true);
}

RecordOutcome Registry::place_event_locked(const VaccinationEvent& e) {
  if (events_.count(e.event_id)) return RecordOutcome::DuplicateIgnored;
  DoseSlot slot{e.child_uid, e.key()};
  auto& ids = events_by_child_[e.child_uid];
  ids.push_back(e.event_id);
  auto active = active_.find(slot);
  if (active == active_.end()) {
    events_.emplace(e.event_id, StoredEvent{e, false});
    active_.emplace(slot, e.event_id);
    return RecordOutcome::Accepted;
  }
  // Earliest administered_date wins; ties go to the smaller event_id.
  auto& current = events_.at(active->second);
  auto rank = [](const VaccinationEvent& v) {
    return std::tie(v.administered_date, v.event_id);
  };
  if (rank(e) < rank(current.event)) {
    current.superseded = true;
    events_.emplace(e.event_id, StoredEvent{e, false});
    active->second = e.event_id;
  } else {
    events_.emplace(e.event_id, StoredEvent{e, true});
  }
  return RecordOutcome::ConflictResolved;
}

RecordOutcome Registry::ingest_locked(const VaccinationEvent& e, bool park_unknown) {
  check_event_locked(e, !park_unknown);
  if (children_.count(e.child_uid)) return place_event_locked(e);
  auto& bucket = parked_[e.child_uid];
  if (bucket.count(e.event_id)) return RecordOutcome::DuplicateIgnored;
  bucket.emplace(e.event_id, e);
  return RecordOutcome::Parked;
}

void Registry::release_parked_locked(const Uid& uid) {
  auto it = parked_.find(uid);
  if (it == parked_.end()) return;
  auto bucket = std::move(it->second);
  parked_.erase(it);
  const auto& child = children_.at(uid);
  for (const auto& [_, e] : bucket) {
    // Events dated before birth can only be discovered now; they are dropped.
    if (e.administered_date < child.date_of_birth) continue;
    place_event_locked(e);
  }
}

RecordOutcome Registry::record_vaccination(const VaccinationEvent& event) {
  std::unique_lock lock(mu_);
  auto outcome = ingest_locked(event, false);
  if (outcome != RecordOutcome::DuplicateIgnored) {
    log("vaccination_recorded", to_json(event));
  }
  return outcome;
}

RecordOutcome Registry::ingest_vaccination(const VaccinationEvent& event) {
  std::unique_lock lock(mu_);
  auto outcome = ingest_locked(event, true);
  if (outcome != RecordOutcome::DuplicateIgnored) {
    log("vaccination_recorded", to_json(event));
  }
  return outcome;
}

ChildHistory Registry::vaccination_history(const Uid& uid, bool include_superseded) const {
  std::shared_lock lock(mu_);
  auto child = children_.find(uid);
  if (child == children_.end()) {
    throw Error(ErrorCode::UnknownChild, "child " + uid.str() + " is not registered");
  }
  ChildHistory out{child->second, {}};
  if (auto ids = events_by_child_.find(uid); ids != events_by_child_.end()) {
    for (const auto& id : ids->second) {
      const auto& stored = events_.at(id);
      if (stored.superseded && !include_superseded) continue;
      out.events.push_back(HistoryEntry{stored.event, stored.superseded});
    }
  }
  std::sort(out.events.begin(), out.events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.event.administered_date, a.event.event_id) <
           std::tie(b.event.administered_date, b.event.event_id);
  });
  return out;
}

DoseHistory Registry::dose_history_locked(const Uid& uid) const {
  DoseHistory out;
  auto ids = events_by_child_.find(uid);
  if (ids == events_by_child_.end()) return out;
  for (const auto& id : ids->second) {
    const auto& stored = events_.at(id);
    if (!stored.superseded) {
      out.push_back(AdministeredDose{stored.event.key(), stored.event.administered_date});
    }
  }
  return out;
}

DoseHistory Registry::dose_history(const Uid& uid) const {
  std::shared_lock lock(mu_);
  return dose_history_locked(uid);
}

std::vector<DueListEntry> Registry::due_list(std::string_view center_id, Date date) const {
  std::shared_lock lock(mu_);
  if (!centers_.count(center_id)) {
    throw Error(ErrorCode::UnknownCenter, "center '" + std::string(center_id) + "' is unknown");
  }
  std::vector<DueListEntry> out;
  for (const auto& [uid, child] : children_) {
    if (child.registered_center != center_id || date < child.date_of_birth) continue;
    auto due = next_due(child.date_of_birth, dose_history_locked(uid), date, schedule_);
    if (!due.empty()) out.push_back(DueListEntry{child, std::move(due)});
  }
  return out;
}

std::vector<ChildRecord> Registry::children_of_guardian(const Uid& guardian_uid) const {
  std::shared_lock lock(mu_);
  std::vector<ChildRecord> out;
  auto [b, e] = by_guardian_.equal_range(guardian_uid);
  for (auto it = b; it != e; ++it) out.push_back(children_.at(it->second));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.uid < b.uid; });
  return out;
}

std::vector<ChildRecord> Registry::children_by_mobile(std::string_view mobile) const {
  std::shared_lock lock(mu_);
  std::vector<ChildRecord> out;
  if (mobile.empty()) return out;
  auto [b, e] = by_mobile_.equal_range(mobile);
  for (auto it = b; it != e; ++it) out.push_back(children_.at(it->second));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.uid < b.uid; });
  return out;
}

std::vector<ChildRecord> Registry::child_lookup(std::string_view query) const {
  if (auto uid = Uid::parse(query)) return children_of_guardian(*uid);
  return children_by_mobile(query);
}

void Registry::for_each_child(
    const std::function<void(const ChildRecord&, const DoseHistory&)>& fn) const {
  std::shared_lock lock(mu_);
  for (const auto& [uid, child] : children_) fn(child, dose_history_locked(uid));
}

std::size_t Registry::child_count() const {
  std::shared_lock lock(mu_);
  return children_.size();
}

std::size_t Registry::event_count() const {
  std::shared_lock lock(mu_);
  return events_.size();
}

std::size_t Registry::parked_count() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, bucket] : parked_) n += bucket.size();
  return n;
}

json Registry::snapshot() const {
  std::shared_lock lock(mu_);
  json centers = json::array();
  for (const auto& [_, c] : centers_) centers.push_back(to_json(c));
  json children = json::array();
  for (const auto& [_, c] : children_) children.push_back(to_json(c));
  json events = json::array();
  for (const auto& [_, s] : events_) {
    auto j = to_json(s.event);
    j["superseded"] = s.superseded;
    events.push_back(std::move(j));
  }
  json parked = json::array();
  for (const auto& [_, bucket] : parked_) {
    for (const auto& [__, e] : bucket) parked.push_back(to_json(e));
  }
  return {{"centers", centers},
          {"children", children},
          {"events", events},
          {"parked", parked}};
}

bool Registry::apply_record(const LogRecord& record) {
  std::unique_lock lock(mu_);
  if (record.type == "center_upserted") {
    auto c = center_from_json(record.payload);
    centers_.insert_or_assign(c.center_id, c);
    return true;
  }
  if (record.type == "child_registered") {
    bool inserted = false;
    register_locked(child_from_json(record.payload), inserted);
    return true;
  }
  if (record.type == "vaccination_recorded") {
    ingest_locked(event_from_json(record.payload), true);
    return true;
  }
  return false;
}

}  // namespace imz
