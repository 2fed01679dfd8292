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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imz/analytics.hpp"
#include "imz/schedule.hpp"
#include "imz/sync.hpp"

namespace imz {

struct ZoneSpec {
  std::string zone_id;
  int births_per_year = 0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::vector<ZoneSpec> zones;
  int years = 1;
  double p_full = 0.435;
  double p_partial = 0.515;
  double p_none = 0.05;
  double partial_quit_hazard = 0.5;
  double relocation_prob = 0.0;
  int centers_per_zone = 2;
  double missing_mobile_prob = 0.0;
  Date start_date = Date{std::chrono::year{2024} / 1 / 1};
  std::size_t sync_batch = kDefaultSyncBatch;
};

/// Throws Error(InvalidConfig).
void validate(const SimConfig& cfg);
/// Throws Error(InvalidConfig).
SimConfig sim_config_from_json(const nlohmann::json& j);
SimConfig load_sim_config(const std::filesystem::path& path);
nlohmann::json to_json(const SimConfig& cfg);

enum class Compliance { Full, Partial, None };
std::string_view to_string(Compliance c) noexcept;

struct SimVisit {
  Date date;
  std::string center_id;
  std::vector<DoseKey> doses;
};

struct SimChild {
  std::string zone_id;
  std::size_t index = 0;  // within the zone
  Date date_of_birth;
  Sex sex = Sex::F;
  Compliance compliance = Compliance::None;
  std::string home_center;
  bool has_mobile = true;
  std::vector<SimVisit> visits;  // in date order, all on or before eval_date
};

struct SimCohort {
  std::vector<std::string> centers;
  std::vector<SimChild> children;  // ordered by (date_of_birth, zone, index)
  Date end_date;                   // last simulated day; reports are taken here
  DateWindow cohort;               // births aged 12 to 23 months on end_date
};

/// Center ids are `{zone}-C{k}`, k from 1.
std::vector<std::string> sim_center_ids(const SimConfig& cfg);

/// Life histories for every simulated birth. Deterministic in cfg. Each
/// zone gets exactly round(N * p) children of each compliance class, and
/// every child draws from its own counter-keyed random stream, so changing
/// one child's parameters never shifts another child's draws.
/// Throws Error(InvalidConfig).
SimCohort generate_cohort(const SimConfig& cfg, const ScheduleConfig& schedule = default_schedule());

/// BCG-1 to MEASLES-1 dropout measured on the generated life histories.
/// Throws Error(NoStarters).
double measure_dropout(const SimConfig& cfg, const ScheduleConfig& schedule = default_schedule());

struct CalibrationResult {
  double hazard = 0.0;
  double dropout = 0.0;
  int iterations = 0;
};

/// Finds partial_quit_hazard giving `target` dropout. Dropout rises then
/// falls in the hazard; the search bisects the falling branch, where the
/// full-compliance coverage is least disturbed. Throws Error(InvalidConfig)
/// when the target is out of reach.
CalibrationResult calibrate_quit_hazard(SimConfig cfg, double target,
                                        const ScheduleConfig& schedule = default_schedule(),
                                        int max_iterations = 60);

struct SimSummary {
  std::size_t children = 0;
  std::size_t registrations = 0;
  std::size_t visits = 0;
  std::size_t events = 0;
  /// Visits whose guardian has a mobile number; each must yield one SMS.
  std::size_t expected_messages = 0;
  std::size_t messages_queued = 0;
  std::size_t messages_sent = 0;
  std::size_t messages_failed = 0;
  std::size_t messages_pending = 0;
  std::size_t messages_spooled = 0;  // files in the spool directory
  SyncResult sync;
  std::optional<CoverageReport> coverage;
  std::optional<DropoutReport> dropout;
  std::string snapshot_sha256;
  bool conservation_ok = false;
};

nlohmann::json to_json(const SimSummary& s);

struct SimOptions {
  /// Receives central.log, sms/, snapshot.json and the report files. Without
  /// it the run is in memory and SMS go to a stub gateway.
  std::optional<std::filesystem::path> out_dir;
};

/// Drives births, registrations, visits, center sync and reminders through
/// an in-process service day by day, then takes the reports.
SimSummary run_simulation(const SimConfig& cfg, const SimOptions& options = {});

}  // namespace imz
