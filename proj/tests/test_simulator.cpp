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

#include <filesystem>
#include <map>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "imz/central.hpp"
#include "imz/crypto.hpp"
#include "imz/error.hpp"
#include "imz/simulator.hpp"

using namespace imz;

namespace {

SimConfig small(std::uint64_t seed = 7, int births = 300) {
  SimConfig c;
  c.seed = seed;
  c.zones = {{"Z1", births}, {"Z2", births / 2}};
  c.p_full = 0.435;
  c.p_partial = 0.515;
  c.p_none = 0.05;
  c.partial_quit_hazard = 0.3;
  c.relocation_prob = 0.1;
  c.centers_per_zone = 2;
  c.missing_mobile_prob = 0.1;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("imz-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::size_t count_files(const std::filesystem::path& dir) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST(SimConfig, Validation) {
  auto expect_invalid = [](SimConfig c) {
    try {
      validate(c);
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
  };
  auto c = small();
  EXPECT_NO_THROW(validate(c));
  auto bad = c;
  bad.p_full = 0.5;
  expect_invalid(bad);
  bad = c;
  bad.partial_quit_hazard = 1.5;
  expect_invalid(bad);
  bad = c;
  bad.zones.push_back({"Z1", 3});
  expect_invalid(bad);
  bad = c;
  bad.centers_per_zone = 0;
  expect_invalid(bad);
  bad = c;
  bad.zones[0].births_per_year = -1;
  expect_invalid(bad);
  bad = c;
  bad.years = 0;
  expect_invalid(bad);
}

TEST(SimConfig, JsonRoundTrip) {
  auto c = small();
  auto back = sim_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(sim_config_from_json(nlohmann::json::array()), Error);
  EXPECT_THROW(sim_config_from_json({{"zones", {{{"zone_id", "Z1"}}}}}), Error);
}

TEST(SimConfig, DefaultFileLoads) {
  auto c = load_sim_config(std::string(IMZ_DATA_DIR) + "/sim.default.json");
  EXPECT_EQ(c.zones.size(), 2u);
  EXPECT_NEAR(c.p_full, 0.435, 1e-12);
}

TEST(GenerateCohort, Deterministic) {
  auto a = generate_cohort(small(11));
  auto b = generate_cohort(small(11));
  ASSERT_EQ(a.children.size(), b.children.size());
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    const auto& x = a.children[i];
    const auto& y = b.children[i];
    EXPECT_EQ(x.date_of_birth, y.date_of_birth);
    EXPECT_EQ(x.compliance, y.compliance);
    ASSERT_EQ(x.visits.size(), y.visits.size());
    for (std::size_t v = 0; v < x.visits.size(); ++v) {
      EXPECT_EQ(x.visits[v].date, y.visits[v].date);
      EXPECT_EQ(x.visits[v].center_id, y.visits[v].center_id);
      EXPECT_EQ(x.visits[v].doses, y.visits[v].doses);
    }
  }
  auto c = generate_cohort(small(12));
  bool differs = c.children.size() != a.children.size();
  for (std::size_t i = 0; !differs && i < a.children.size(); ++i) {
    differs = a.children[i].visits.size() != c.children[i].visits.size() ||
              a.children[i].compliance != c.children[i].compliance;
  }
  EXPECT_TRUE(differs);
}

TEST(GenerateCohort, ExactCompliancePerZone) {
  auto cohort = generate_cohort(small(3, 1000));
  std::map<std::string, std::map<Compliance, int>> counts;
  for (const auto& c : cohort.children) ++counts[c.zone_id][c.compliance];
  EXPECT_EQ(counts["Z1"][Compliance::Full], 435);
  EXPECT_EQ(counts["Z1"][Compliance::None], 50);
  EXPECT_EQ(counts["Z1"][Compliance::Partial], 515);
}

TEST(GenerateCohort, LifeHistoryShapes) {
  auto cfg = small(5);
  auto cohort = generate_cohort(cfg);
  for (const auto& c : cohort.children) {
    std::size_t doses = 0;
    for (const auto& v : c.visits) {
      doses += v.doses.size();
      EXPECT_LE(v.date, cohort.end_date);
      EXPECT_GE(v.date, c.date_of_birth);
    }
    if (c.compliance == Compliance::None) {
      EXPECT_EQ(doses, 0u);
    }
    if (c.compliance == Compliance::Full) {
      for (const auto& v : c.visits) {
        for (const auto& k : v.doses) {
          EXPECT_EQ(v.date, add_days(c.date_of_birth, default_schedule().find(k)->offset_days));
        }
      }
    }
  }
}

TEST(GenerateCohort, AllFullMeansCoverageOneDropoutZero) {
  auto cfg = small(9);
  cfg.p_full = 1.0;
  cfg.p_partial = 0.0;
  cfg.p_none = 0.0;
  EXPECT_DOUBLE_EQ(measure_dropout(cfg), 0.0);
  auto s = run_simulation(cfg);
  ASSERT_TRUE(s.coverage);
  EXPECT_DOUBLE_EQ(s.coverage->coverage_rate, 1.0);
  ASSERT_TRUE(s.dropout);
  EXPECT_DOUBLE_EQ(s.dropout->rate, 0.0);
  EXPECT_TRUE(s.conservation_ok);
}

TEST(GenerateCohort, NoneMeansNoEvents) {
  auto cfg = small(9);
  cfg.p_full = 0.0;
  cfg.p_partial = 0.0;
  cfg.p_none = 1.0;
  auto s = run_simulation(cfg);
  EXPECT_EQ(s.events, 0u);
  EXPECT_EQ(s.expected_messages, 0u);
  EXPECT_EQ(s.registrations, s.children);
  EXPECT_TRUE(s.conservation_ok);
}

TEST(RunSimulation, EmptyPopulation) {
  auto cfg = small();
  cfg.zones = {{"Z1", 0}};
  auto s = run_simulation(cfg);
  EXPECT_EQ(s.children, 0u);
  EXPECT_EQ(s.events, 0u);
  EXPECT_FALSE(s.coverage);
  EXPECT_TRUE(s.conservation_ok);
}

TEST(RunSimulation, SameSeedSameBytes) {
  auto a = run_simulation(small(21));
  auto b = run_simulation(small(21));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.snapshot_sha256, b.snapshot_sha256);
}

TEST(RunSimulation, RelocatedChildrenKeepCompleteHistories) {
  auto cfg = small(31);
  cfg.relocation_prob = 0.3;
  auto dir = temp_dir("sim-relocation");
  SimOptions opts;
  opts.out_dir = dir;
  auto summary = run_simulation(cfg, opts);
  EXPECT_TRUE(summary.conservation_ok);

  auto cohort = generate_cohort(cfg);
  auto central = CentralState::replay_log(fixtures::slurp((dir / "central.log").string()),
                                          default_schedule());
  EXPECT_EQ(sha256_hex(central->snapshot_bytes()), summary.snapshot_sha256);

  std::map<std::string, const SimChild*> by_name;
  for (const auto& c : cohort.children) {
    by_name["Child " + c.zone_id + "-" + std::to_string(c.index)] = &c;
  }
  std::size_t moved = 0, checked = 0;
  central->registry().for_each_child([&](const ChildRecord& rec, const DoseHistory&) {
    auto it = by_name.find(rec.child_name);
    ASSERT_NE(it, by_name.end()) << rec.child_name;
    const SimChild& sim = *it->second;
    std::multiset<std::pair<std::string, std::string>> want, got;
    for (const auto& v : sim.visits) {
      for (const auto& k : v.doses) want.insert({to_string(k), format_date(v.date)});
      moved += v.center_id != sim.home_center;
    }
    for (const auto& h : central->registry().vaccination_history(rec.uid).events) {
      got.insert({to_string(h.event.key()), format_date(h.event.administered_date)});
    }
    EXPECT_EQ(got, want) << rec.child_name;
    ++checked;
  });
  EXPECT_EQ(checked, cohort.children.size());
  EXPECT_GT(moved, 0u);
}

TEST(RunSimulation, SpoolMatchesAcceptedVisits) {
  auto dir = temp_dir("sim-spool");
  SimOptions opts;
  opts.out_dir = dir;
  auto s = run_simulation(small(41), opts);
  EXPECT_TRUE(s.conservation_ok);
  EXPECT_GT(s.expected_messages, 0u);
  EXPECT_EQ(count_files(dir / "sms"), s.expected_messages);
  EXPECT_EQ(s.messages_sent + s.messages_failed + s.messages_pending, s.expected_messages);
  for (const char* f : {"summary.json", "snapshot.json", "coverage.csv", "dropout.json",
                        "demand.csv", "municipal.csv", "config.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
}

TEST(Calibration, HitsTargetOnSmallPopulation) {
  auto cfg = small(51, 2000);
  auto r = calibrate_quit_hazard(cfg, 0.327);
  EXPECT_NEAR(r.dropout, 0.327, 0.01);
  cfg.partial_quit_hazard = r.hazard;
  EXPECT_DOUBLE_EQ(measure_dropout(cfg), r.dropout);
  EXPECT_THROW(calibrate_quit_hazard(cfg, 0.99), Error);
}
