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

#include "imz/schedule.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imz/error.hpp"

namespace imz {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorCode::InvalidSchedule, msg);
}

[[noreturn]] void malformed(const std::string& msg) {
  throw Error(ErrorCode::ParseError, "schedule: " + msg);
}

int read_int(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_number_integer()) {
    malformed(std::string("missing integer field '") + field + "'");
  }
  return it->get<int>();
}

Vaccine read_vaccine(const json& value) {
  if (!value.is_string()) malformed("vaccine must be a string");
  auto v = parse_vaccine(value.get<std::string>());
  if (!v) malformed("unknown vaccine '" + value.get<std::string>() + "'");
  return *v;
}

}  // namespace

std::string_view to_string(Vaccine v) noexcept {
  switch (v) {
    case Vaccine::BCG: return "BCG";
    case Vaccine::OPV: return "OPV";
    case Vaccine::DPT: return "DPT";
    case Vaccine::HEPB: return "HEPB";
    case Vaccine::MEASLES: return "MEASLES";
    case Vaccine::TT: return "TT";
  }
  return "BCG";
}

std::optional<Vaccine> parse_vaccine(std::string_view text) {
  for (auto v : kAllVaccines) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

std::string to_string(const DoseKey& key) {
  return std::string(to_string(key.vaccine)) + "-" + std::to_string(key.dose);
}

std::optional<DoseKey> parse_dose_key(std::string_view text) {
  auto dash = text.rfind('-');
  if (dash == std::string_view::npos || dash + 1 >= text.size()) return std::nullopt;
  auto v = parse_vaccine(text.substr(0, dash));
  if (!v) return std::nullopt;
  int dose = 0;
  for (char c : text.substr(dash + 1)) {
    if (c < '0' || c > '9' || dose > 1000) return std::nullopt;
    dose = dose * 10 + (c - '0');
  }
  return DoseKey{*v, dose};
}

std::string_view to_string(DoseStatus s) noexcept {
  switch (s) {
    case DoseStatus::Given: return "GIVEN";
    case DoseStatus::Due: return "DUE";
    case DoseStatus::Overdue: return "OVERDUE";
    case DoseStatus::Future: return "FUTURE";
  }
  return "FUTURE";
}

ScheduleConfig::ScheduleConfig(std::vector<ScheduleEntry> entries,
                               FullyImmunizedRule rule)
    : entries_(std::move(entries)), rule_(std::move(rule)) {
  if (entries_.empty()) invalid("schedule has no entries");
  std::sort(entries_.begin(), entries_.end(),
            [](const auto& a, const auto& b) { return a.key() < b.key(); });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.dose < 0 || e.offset_days < 0 || e.grace_days < 0) {
      invalid(to_string(e.key()) + ": negative dose, offset or grace");
    }
    if (e.offset_days + e.grace_days > kMaxScheduleDays) {
      invalid(to_string(e.key()) + ": offset+grace exceeds 18 years");
    }
    if (i > 0) {
      const auto& prev = entries_[i - 1];
      if (prev.key() == e.key()) invalid("duplicate entry " + to_string(e.key()));
      if (prev.vaccine == e.vaccine && e.offset_days <= prev.offset_days) {
        invalid(to_string(e.key()) + " offset must exceed " +
                to_string(prev.key()) + " offset");
      }
    }
  }
  if (rule_.cutoff_days < 0) invalid("fully_immunized cutoff must be >= 0");
  for (const auto& k : rule_.doses) {
    if (!find(k)) invalid("fully_immunized references unknown dose " + to_string(k));
  }
}

const ScheduleEntry* ScheduleConfig::find(const DoseKey& key) const noexcept {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), key,
      [](const ScheduleEntry& e, const DoseKey& k) { return e.key() < k; });
  if (it == entries_.end() || it->key() != key) return nullptr;
  return &*it;
}

int ScheduleConfig::scheduled_doses(Vaccine v) const noexcept {
  return static_cast<int>(std::count_if(
      entries_.begin(), entries_.end(),
      [v](const ScheduleEntry& e) { return e.vaccine == v; }));
}

ScheduleConfig load_schedule(std::string_view document) {
  if (document.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    invalid("schedule document is empty");
  }
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("top level must be an object");
  auto entries_it = doc.find("entries");
  if (entries_it == doc.end() || !entries_it->is_array()) {
    malformed("'entries' must be an array");
  }
  std::vector<ScheduleEntry> entries;
  for (const auto& e : *entries_it) {
    if (!e.is_object()) malformed("entry must be an object");
    if (!e.contains("vaccine")) malformed("entry missing 'vaccine'");
    entries.push_back(ScheduleEntry{read_vaccine(e.at("vaccine")),
                                    read_int(e, "dose"), read_int(e, "offset_days"),
                                    read_int(e, "grace_days")});
  }
  FullyImmunizedRule rule;
  auto rule_it = doc.find("fully_immunized");
  if (rule_it == doc.end() || !rule_it->is_object()) {
    malformed("'fully_immunized' must be an object");
  }
  rule.cutoff_days = read_int(*rule_it, "cutoff_days");
  auto doses_it = rule_it->find("doses");
  if (doses_it == rule_it->end() || !doses_it->is_array()) {
    malformed("'fully_immunized.doses' must be an array");
  }
  for (const auto& pair : *doses_it) {
    if (!pair.is_array() || pair.size() != 2 || !pair[1].is_number_integer()) {
      malformed("fully_immunized dose must be [vaccine, dose]");
    }
    rule.doses.insert(DoseKey{read_vaccine(pair[0]), pair[1].get<int>()});
  }
  return ScheduleConfig(std::move(entries), std::move(rule));
}

ScheduleConfig load_schedule_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open schedule file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_schedule(ss.str());
}

std::string schedule_to_json(const ScheduleConfig& cfg) {
  json entries = json::array();
  for (const auto& e : cfg.entries()) {
    entries.push_back({{"vaccine", to_string(e.vaccine)},
                       {"dose", e.dose},
                       {"offset_days", e.offset_days},
                       {"grace_days", e.grace_days}});
  }
  json doses = json::array();
  for (const auto& k : cfg.rule().doses) {
    doses.push_back(json::array({to_string(k.vaccine), k.dose}));
  }
  json doc = {{"entries", entries},
              {"fully_immunized",
               {{"cutoff_days", cfg.rule().cutoff_days}, {"doses", doses}}}};
  return doc.dump(2);
}

const ScheduleConfig& default_schedule() {
  static const ScheduleConfig cfg = [] {
    constexpr int kGrace = 28;
    std::vector<ScheduleEntry> e{
        {Vaccine::BCG, 1, 0, kGrace},       {Vaccine::OPV, 0, 0, kGrace},
        {Vaccine::OPV, 1, 42, kGrace},      {Vaccine::OPV, 2, 70, kGrace},
        {Vaccine::OPV, 3, 98, kGrace},      {Vaccine::HEPB, 1, 0, kGrace},
        {Vaccine::HEPB, 2, 42, kGrace},     {Vaccine::HEPB, 3, 98, kGrace},
        {Vaccine::DPT, 1, 42, kGrace},      {Vaccine::DPT, 2, 70, kGrace},
        {Vaccine::DPT, 3, 98, kGrace},      {Vaccine::MEASLES, 1, 270, kGrace},
        {Vaccine::TT, 1, 3650, kGrace},
    };
    FullyImmunizedRule rule{365,
                            {{Vaccine::BCG, 1},
                             {Vaccine::OPV, 1},
                             {Vaccine::OPV, 2},
                             {Vaccine::OPV, 3},
                             {Vaccine::DPT, 1},
                             {Vaccine::DPT, 2},
                             {Vaccine::DPT, 3},
                             {Vaccine::MEASLES, 1}}};
    return ScheduleConfig(std::move(e), std::move(rule));
  }();
  return cfg;
}

std::map<DoseKey, DoseStatus> dose_status(Date dob, const DoseHistory& history,
                                          Date as_of, const ScheduleConfig& cfg) {
  if (as_of < dob) {
    throw Error(ErrorCode::InvalidRequest, "as_of precedes date of birth");
  }
  std::set<DoseKey> given;
  for (const auto& h : history) {
    if (!cfg.find(h.key)) {
      throw Error(ErrorCode::UnknownVaccine,
                  "history references " + to_string(h.key) +
                      " which is not in the schedule");
    }
    given.insert(h.key);
  }
  std::map<DoseKey, DoseStatus> out;
  for (const auto& e : cfg.entries()) {
    Date due = add_days(dob, e.offset_days);
    DoseStatus s;
    if (given.count(e.key())) {
      s = DoseStatus::Given;
    } else if (as_of < due) {
      s = DoseStatus::Future;
    } else if (as_of <= add_days(due, e.grace_days)) {
      s = DoseStatus::Due;
    } else {
      s = DoseStatus::Overdue;
    }
    out.emplace(e.key(), s);
  }
  return out;
}

std::vector<DueDose> pending_doses(Date dob, const DoseHistory& history,
                                   Date as_of, const ScheduleConfig& cfg) {
  auto status = dose_status(dob, history, as_of, cfg);
  std::vector<DueDose> out;
  for (const auto& e : cfg.entries()) {
    auto s = status.at(e.key());
    if (s == DoseStatus::Given) continue;
    out.push_back(DueDose{e.vaccine, e.dose, add_days(dob, e.offset_days), s});
  }
  std::sort(out.begin(), out.end(), [](const DueDose& a, const DueDose& b) {
    if (a.due_date != b.due_date) return a.due_date < b.due_date;
    return a.key() < b.key();
  });
  return out;
}

std::vector<DueDose> next_due(Date dob, const DoseHistory& history, Date as_of,
                              const ScheduleConfig& cfg) {
  auto all = pending_doses(dob, history, as_of, cfg);
  std::erase_if(all, [](const DueDose& d) { return d.status == DoseStatus::Future; });
  return all;
}

bool is_fully_immunized(Date dob, const DoseHistory& history,
                        const ScheduleConfig& cfg) {
  Date cutoff = add_days(dob, cfg.rule().cutoff_days);
  for (const auto& required : cfg.rule().doses) {
    bool found = std::any_of(history.begin(), history.end(), [&](const auto& h) {
      return h.key == required && h.date <= cutoff;
    });
    if (!found) return false;
  }
  return true;
}

}  // namespace imz
