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

#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "imz/error.hpp"
#include "imz/schedule.hpp"

using namespace imz;
using fixtures::day;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no imz::Error thrown";
  return ErrorCode::Internal;
}

const Date d0 = day("2025-01-10");

DoseKey key(const char* text) { return *parse_dose_key(text); }

}  // namespace

TEST(LoadSchedule, DefaultFileHasThirteenEntries) {
  auto cfg = load_schedule_file(std::string(IMZ_DATA_DIR) + "/schedule.default.json");
  EXPECT_EQ(cfg.entries().size(), fixtures::default_rows().size());
  EXPECT_EQ(cfg.entries().size(), 13u);
  EXPECT_EQ(cfg, default_schedule());
  EXPECT_EQ(cfg.rule().cutoff_days, 365);
  EXPECT_EQ(cfg.rule().doses.size(), 8u);
}

TEST(LoadSchedule, DecreasingOffsetsRejected) {
  const char* doc = R"({"entries": [
      {"vaccine": "DPT", "dose": 1, "offset_days": 42, "grace_days": 28},
      {"vaccine": "DPT", "dose": 2, "offset_days": 40, "grace_days": 28}],
    "fully_immunized": {"cutoff_days": 365, "doses": [["DPT", 1]]}})";
  EXPECT_EQ(code_of([&] { load_schedule(doc); }), ErrorCode::InvalidSchedule);
}

TEST(LoadSchedule, EmptyDocumentRejected) {
  EXPECT_EQ(code_of([] { load_schedule(""); }), ErrorCode::InvalidSchedule);
  EXPECT_EQ(code_of([] {
              load_schedule(R"({"entries": [], "fully_immunized": {"cutoff_days": 365, "doses": []}})");
            }),
            ErrorCode::InvalidSchedule);
}

TEST(LoadSchedule, OtherInvariants) {
  auto dup = R"({"entries": [
      {"vaccine": "BCG", "dose": 1, "offset_days": 0, "grace_days": 28},
      {"vaccine": "BCG", "dose": 1, "offset_days": 10, "grace_days": 28}],
    "fully_immunized": {"cutoff_days": 365, "doses": []}})";
  EXPECT_EQ(code_of([&] { load_schedule(dup); }), ErrorCode::InvalidSchedule);
  auto dangling = R"({"entries": [
      {"vaccine": "BCG", "dose": 1, "offset_days": 0, "grace_days": 28}],
    "fully_immunized": {"cutoff_days": 365, "doses": [["OPV", 1]]}})";
  EXPECT_EQ(code_of([&] { load_schedule(dangling); }), ErrorCode::InvalidSchedule);
  auto too_late = R"({"entries": [
      {"vaccine": "TT", "dose": 1, "offset_days": 6600, "grace_days": 28}],
    "fully_immunized": {"cutoff_days": 365, "doses": []}})";
  EXPECT_EQ(code_of([&] { load_schedule(too_late); }), ErrorCode::InvalidSchedule);
  EXPECT_EQ(code_of([] { load_schedule("{not json"); }), ErrorCode::ParseError);
  auto bad_vaccine = R"({"entries": [
      {"vaccine": "POLIO", "dose": 1, "offset_days": 0, "grace_days": 28}],
    "fully_immunized": {"cutoff_days": 365, "doses": []}})";
  EXPECT_EQ(code_of([&] { load_schedule(bad_vaccine); }), ErrorCode::ParseError);
}

TEST(LoadSchedule, SerializationRoundTrips) {
  auto text = schedule_to_json(default_schedule());
  EXPECT_EQ(load_schedule(text), default_schedule());
}

TEST(DoseStatus, BirthDay) {
  auto s = dose_status(d0, {}, d0, default_schedule());
  for (const auto& [k, st] : s) {
    bool day_zero = k == key("BCG-1") || k == key("OPV-0") || k == key("HEPB-1");
    EXPECT_EQ(st, day_zero ? DoseStatus::Due : DoseStatus::Future) << to_string(k);
  }
}

TEST(DoseStatus, MeaslesOverdueAtDay400) {
  auto s = dose_status(d0, {}, add_days(d0, 400), default_schedule());
  EXPECT_EQ(s.at(key("MEASLES-1")), DoseStatus::Overdue);
  EXPECT_EQ(s.at(key("TT-1")), DoseStatus::Future);
}

TEST(DoseStatus, GraceBoundary) {
  auto at = [&](int d) {
    return dose_status(d0, {}, add_days(d0, d), default_schedule()).at(key("MEASLES-1"));
  };
  EXPECT_EQ(at(269), DoseStatus::Future);
  EXPECT_EQ(at(270), DoseStatus::Due);
  EXPECT_EQ(at(298), DoseStatus::Due);
  EXPECT_EQ(at(299), DoseStatus::Overdue);
}

TEST(DoseStatus, AllGiven) {
  DoseHistory h;
  for (const auto& e : default_schedule().entries()) h.push_back({e.key(), add_days(d0, e.offset_days)});
  for (const auto& [k, st] : dose_status(d0, h, add_days(d0, 4000), default_schedule())) {
    EXPECT_EQ(st, DoseStatus::Given) << to_string(k);
  }
}

TEST(DoseStatus, Errors) {
  DoseHistory h{{DoseKey{Vaccine::BCG, 7}, d0}};
  EXPECT_EQ(code_of([&] { dose_status(d0, h, d0, default_schedule()); }),
            ErrorCode::UnknownVaccine);
  EXPECT_EQ(code_of([&] { dose_status(d0, {}, add_days(d0, -1), default_schedule()); }),
            ErrorCode::InvalidRequest);
}

TEST(NextDue, AfterBirthDoses) {
  DoseHistory h{{key("BCG-1"), d0}, {key("OPV-0"), d0}, {key("HEPB-1"), d0}};
  auto due = next_due(d0, h, add_days(d0, 42), default_schedule());
  ASSERT_EQ(due.size(), 3u);
  EXPECT_EQ(to_string(due[0].key()), "OPV-1");
  EXPECT_EQ(to_string(due[1].key()), "DPT-1");
  EXPECT_EQ(to_string(due[2].key()), "HEPB-2");
  for (const auto& d : due) {
    EXPECT_EQ(d.due_date, add_days(d0, 42));
    EXPECT_EQ(d.status, DoseStatus::Due);
  }
}

TEST(NextDue, FullyVaccinatedIsEmpty) {
  DoseHistory h;
  for (const auto& e : default_schedule().entries()) h.push_back({e.key(), add_days(d0, e.offset_days)});
  EXPECT_TRUE(next_due(d0, h, add_days(d0, 5000), default_schedule()).empty());
}

TEST(NextDue, BirthDayGivesDayZeroRows) {
  auto due = next_due(d0, {}, d0, default_schedule());
  ASSERT_EQ(due.size(), 3u);
  EXPECT_EQ(to_string(due[0].key()), "BCG-1");
  EXPECT_EQ(to_string(due[1].key()), "OPV-0");
  EXPECT_EQ(to_string(due[2].key()), "HEPB-1");
}

TEST(PendingDoses, IncludesFutureRows) {
  auto p = pending_doses(d0, {}, d0, default_schedule());
  EXPECT_EQ(p.size(), 13u);
  EXPECT_EQ(p.back().vaccine, Vaccine::TT);
  EXPECT_EQ(p.back().status, DoseStatus::Future);
}

TEST(FullyImmunized, Examples) {
  auto h = fixtures::full_history(d0);
  EXPECT_TRUE(is_fully_immunized(d0, h, default_schedule()));

  auto no_measles = h;
  std::erase_if(no_measles, [](const AdministeredDose& a) { return a.key.vaccine == Vaccine::MEASLES; });
  EXPECT_FALSE(is_fully_immunized(d0, no_measles, default_schedule()));

  auto late = no_measles;
  late.push_back({key("MEASLES-1"), add_days(d0, 400)});
  EXPECT_FALSE(is_fully_immunized(d0, late, default_schedule()));

  auto on_cutoff = no_measles;
  on_cutoff.push_back({key("MEASLES-1"), add_days(d0, 365)});
  EXPECT_TRUE(is_fully_immunized(d0, on_cutoff, default_schedule()));
}

TEST(DoseKeys, ParseAndPrint) {
  EXPECT_EQ(to_string(key("OPV-0")), "OPV-0");
  EXPECT_FALSE(parse_dose_key("OPV"));
  EXPECT_FALSE(parse_dose_key("XYZ-1"));
  EXPECT_FALSE(parse_dose_key("BCG-x"));
}

// ---- properties ---------------------------------------------------------

namespace {

struct Instance {
  Date dob;
  DoseHistory history;
  std::vector<std::string> given;
  long as_of_day;
};

Instance random_instance(std::mt19937_64& rng) {
  const auto& rows = default_schedule().entries();
  Instance in;
  in.dob = add_days(day("2020-01-01"), static_cast<long>(rng() % 2000));
  in.as_of_day = static_cast<long>(rng() % 4200);
  for (const auto& e : rows) {
    if (rng() % 3 == 0) continue;
    if (e.offset_days > in.as_of_day) continue;
    long when = e.offset_days + static_cast<long>(rng() % 60);
    if (when > in.as_of_day) when = in.as_of_day;
    in.history.push_back({e.key(), add_days(in.dob, when)});
    in.given.push_back(to_string(e.key()));
  }
  return in;
}

}  // namespace

TEST(NextDueProperty, MatchesBruteForceOracle) {
  auto rows = fixtures::default_rows();
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    auto in = random_instance(rng);
    auto got = next_due(in.dob, in.history, add_days(in.dob, in.as_of_day), default_schedule());
    EXPECT_EQ(fixtures::to_oracle(got, in.dob), fixtures::oracle_next_due(rows, in.given, in.as_of_day))
        << "instance " << i;
  }
}

TEST(DoseStatusProperty, PartitionsTheSchedule) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto in = random_instance(rng);
    Date as_of = add_days(in.dob, in.as_of_day);
    auto status = dose_status(in.dob, in.history, as_of, default_schedule());
    auto pending = pending_doses(in.dob, in.history, as_of, default_schedule());
    auto due = next_due(in.dob, in.history, as_of, default_schedule());
    std::size_t given = 0, future = 0;
    for (const auto& [k, s] : status) {
      given += s == DoseStatus::Given;
      future += s == DoseStatus::Future;
    }
    EXPECT_EQ(status.size(), default_schedule().entries().size());
    EXPECT_EQ(given, in.history.size());
    EXPECT_EQ(pending.size() + given, status.size());
    EXPECT_EQ(due.size() + future, pending.size());
  }
}

TEST(DoseStatusProperty, ProgressesMonotonicallyWithTime) {
  auto rank = [](DoseStatus s) {
    switch (s) {
      case DoseStatus::Future: return 0;
      case DoseStatus::Due: return 1;
      case DoseStatus::Overdue: return 2;
      case DoseStatus::Given: return 3;
    }
    return -1;
  };
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    auto in = random_instance(rng);
    std::map<DoseKey, int> prev;
    for (long t = in.as_of_day; t < in.as_of_day + 400; t += 7) {
      for (const auto& [k, s] : dose_status(in.dob, in.history, add_days(in.dob, t), default_schedule())) {
        EXPECT_GE(rank(s), prev[k]);
        prev[k] = rank(s);
      }
    }
  }
}
