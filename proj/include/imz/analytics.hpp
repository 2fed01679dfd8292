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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "imz/registry.hpp"
#include "imz/schedule.hpp"

namespace imz {

/// Inclusive date range.
struct DateWindow {
  Date from;
  Date to;

  bool contains(Date d) const noexcept { return from <= d && d <= to; }
  friend bool operator==(const DateWindow&, const DateWindow&) = default;
};

/// A set of zones; empty means every zone ("ALL").
struct Scope {
  std::set<std::string> zones;

  static Scope all() { return {}; }
  static Scope zone(std::string z) { return Scope{{std::move(z)}}; }

  bool contains(std::string_view zone) const;
  /// "ALL", or the zone ids joined with '+'.
  std::string label() const;
};

/// "ALL" (or empty) for every zone, otherwise comma-separated zone ids.
Scope parse_scope(std::string_view text);

struct CoverageReport {
  std::string scope;
  DateWindow cohort;
  std::size_t n_children = 0;
  std::size_t n_fully_immunized = 0;
  double coverage_rate = 0.0;
  /// Only vaccines that appear in the fully-immunized rule.
  std::map<Vaccine, double> per_vaccine_rates;
};

struct DropoutReport {
  std::string scope;
  DateWindow cohort;
  DoseKey from;
  DoseKey to;
  std::size_t n_from = 0;
  std::size_t n_both = 0;
  double rate = 0.0;
};

struct VaccineDemand {
  int scheduled_doses = 0;
  double wastage_rate = 0.0;
  double wastage_factor = 1.0;
  std::int64_t doses_required = 0;
};

struct ZoneDemandForecast {
  std::string zone;
  std::optional<DateWindow> horizon;
  std::int64_t expected_cohort = 0;
  std::map<Vaccine, VaccineDemand> per_vaccine;
};

struct MunicipalRow {
  Uid uid;
  std::string child_name;
  Date date_of_birth;
  Sex sex = Sex::X;
  std::string guardian_name;
};

struct MunicipalReport {
  std::string zone;
  DateWindow period;
  std::vector<MunicipalRow> registrations;
  std::map<Sex, std::size_t> counts_by_sex;
};

using WastageRates = std::map<Vaccine, double>;

/// Children of `scope` born inside `cohort`. Throws Error(InvalidRequest) for
/// a reversed window, Error(EmptyCohort) when no child matches.
CoverageReport coverage_report(const Registry& registry, const Scope& scope,
                               const DateWindow& cohort, const ScheduleConfig& cfg);

/// Throws Error(NoStarters) when nobody in the cohort holds `from`.
DropoutReport dropout_report(const Registry& registry, const Scope& scope,
                             const DateWindow& cohort,
                             DoseKey from = {Vaccine::BCG, 1},
                             DoseKey to = {Vaccine::MEASLES, 1});
double dropout_rate(const Registry& registry, const Scope& scope, const DateWindow& cohort,
                    DoseKey from = {Vaccine::BCG, 1}, DoseKey to = {Vaccine::MEASLES, 1});

/// Throws Error(InvalidCounts).
double wastage_rate(std::int64_t doses_issued, std::int64_t doses_administered);

/// Vaccines scheduled in `cfg` but missing from `rates` are planned with no
/// wastage. Throws Error(InvalidWastageRate), Error(InvalidRequest) for a
/// negative cohort.
ZoneDemandForecast demand_forecast(const std::string& zone, std::int64_t expected_cohort,
                                   const ScheduleConfig& cfg, const WastageRates& rates,
                                   std::optional<DateWindow> horizon = std::nullopt);

/// ceil(cohort * doses / (1 - w)), robust to representation error in w.
std::int64_t doses_required(std::int64_t cohort, int scheduled_doses, double wastage_rate);

MunicipalReport municipal_report(const Registry& registry, const Scope& zone,
                                 const DateWindow& period);

/// `vaccine,rate` CSV with a header line. Throws Error(ParseError) or
/// Error(InvalidWastageRate).
WastageRates load_wastage_rates(std::istream& in);
WastageRates load_wastage_rates_file(const std::string& path);
/// Same content as data/wastage.default.csv.
const WastageRates& default_wastage_rates();

nlohmann::json to_json(const DateWindow& w);
nlohmann::json to_json(const CoverageReport& r);
nlohmann::json to_json(const DropoutReport& r);
nlohmann::json to_json(const ZoneDemandForecast& f);
nlohmann::json to_json(const MunicipalReport& r);

std::string to_csv(const CoverageReport& r);
std::string to_csv(const DropoutReport& r);
std::string to_csv(const ZoneDemandForecast& f);
std::string to_csv(const MunicipalReport& r);

}  // namespace imz
