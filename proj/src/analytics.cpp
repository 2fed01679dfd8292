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

#include "imz/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "imz/error.hpp"

namespace imz {

using nlohmann::json;

bool Scope::contains(std::string_view zone) const {
  return zones.empty() || zones.find(std::string(zone)) != zones.end();
}

std::string Scope::label() const {
  if (zones.empty()) return "ALL";
  std::string out;
  for (const auto& z : zones) {
    if (!out.empty()) out.push_back('+');
    out += z;
  }
  return out;
}

Scope parse_scope(std::string_view text) {
  Scope s;
  if (text.empty() || text == "ALL") return s;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto part = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    if (!part.empty()) s.zones.emplace(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return s;
}

namespace {

void check_window(const DateWindow& w, std::string_view what) {
  if (w.to < w.from) {
    throw Error(ErrorCode::InvalidRequest,
                std::string(what) + " window ends before it starts");
  }
}

bool holds(const DoseHistory& h, const DoseKey& key) {
  return std::any_of(h.begin(), h.end(), [&](const auto& d) { return d.key == key; });
}

bool holds_by(const DoseHistory& h, const DoseKey& key, Date cutoff) {
  return std::any_of(h.begin(), h.end(),
                     [&](const auto& d) { return d.key == key && d.date <= cutoff; });
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(s[i])) ++i;
  return s.substr(i);
}

void check_rate(Vaccine v, double w) {
  if (!(w >= 0.0 && w < 1.0)) {
    throw Error(ErrorCode::InvalidWastageRate,
                "wastage rate for " + std::string(to_string(v)) + " must be in [0, 1)");
  }
}

}  // namespace

CoverageReport coverage_report(const Registry& registry, const Scope& scope,
                               const DateWindow& cohort, const ScheduleConfig& cfg) {
  check_window(cohort, "cohort");
  const auto& rule = cfg.rule();
  std::map<Vaccine, std::vector<DoseKey>> rule_by_vaccine;
  for (const auto& k : rule.doses) rule_by_vaccine[k.vaccine].push_back(k);

  CoverageReport r;
  r.scope = scope.label();
  r.cohort = cohort;
  std::map<Vaccine, std::size_t> vaccine_counts;
  registry.for_each_child([&](const ChildRecord& c, const DoseHistory& h) {
    if (!scope.contains(c.zone_id) || !cohort.contains(c.date_of_birth)) return;
    ++r.n_children;
    if (is_fully_immunized(c.date_of_birth, h, cfg)) ++r.n_fully_immunized;
    Date cutoff = add_days(c.date_of_birth, rule.cutoff_days);
    for (const auto& [v, keys] : rule_by_vaccine) {
      bool all = std::all_of(keys.begin(), keys.end(),
                             [&](const auto& k) { return holds_by(h, k, cutoff); });
      if (all) ++vaccine_counts[v];
    }
  });
  if (r.n_children == 0) {
    throw Error(ErrorCode::EmptyCohort, "no children of " + r.scope + " born between " +
                                            format_date(cohort.from) + " and " +
                                            format_date(cohort.to));
  }
  auto n = static_cast<double>(r.n_children);
  r.coverage_rate = static_cast<double>(r.n_fully_immunized) / n;
  for (const auto& [v, keys] : rule_by_vaccine) {
    r.per_vaccine_rates[v] = static_cast<double>(vaccine_counts[v]) / n;
  }
  return r;
}

DropoutReport dropout_report(const Registry& registry, const Scope& scope,
                             const DateWindow& cohort, DoseKey from, DoseKey to) {
  check_window(cohort, "cohort");
  DropoutReport r;
  r.scope = scope.label();
  r.cohort = cohort;
  r.from = from;
  r.to = to;
  registry.for_each_child([&](const ChildRecord& c, const DoseHistory& h) {
    if (!scope.contains(c.zone_id) || !cohort.contains(c.date_of_birth)) return;
    if (!holds(h, from)) return;
    ++r.n_from;
    if (holds(h, to)) ++r.n_both;
  });
  if (r.n_from == 0) {
    throw Error(ErrorCode::NoStarters,
                "no child in " + r.scope + " cohort holds " + to_string(from));
  }
  r.rate = static_cast<double>(r.n_from - r.n_both) / static_cast<double>(r.n_from);
  return r;
}

double dropout_rate(const Registry& registry, const Scope& scope, const DateWindow& cohort,
                    DoseKey from, DoseKey to) {
  return dropout_report(registry, scope, cohort, from, to).rate;
}

double wastage_rate(std::int64_t doses_issued, std::int64_t doses_administered) {
  if (doses_issued <= 0 || doses_administered < 0 || doses_administered > doses_issued) {
    throw Error(ErrorCode::InvalidCounts,
                "need doses_issued >= doses_administered >= 0 and doses_issued > 0");
  }
  return static_cast<double>(doses_issued - doses_administered) /
         static_cast<double>(doses_issued);
}

std::int64_t doses_required(std::int64_t cohort, int scheduled_doses, double w) {
  double x = static_cast<double>(cohort) * scheduled_doses / (1.0 - w);
  // Rates such as 0.27 are not exact in binary; a relative slack keeps an
  // exact quotient from being pushed up to the next integer.
  double slack = 1e-9 * std::max(1.0, x);
  return static_cast<std::int64_t>(std::ceil(x - slack));
}

ZoneDemandForecast demand_forecast(const std::string& zone, std::int64_t expected_cohort,
                                   const ScheduleConfig& cfg, const WastageRates& rates,
                                   std::optional<DateWindow> horizon) {
  if (expected_cohort < 0) {
    throw Error(ErrorCode::InvalidRequest, "expected_cohort must be non-negative");
  }
  for (const auto& [v, w] : rates) check_rate(v, w);
  ZoneDemandForecast f;
  f.zone = zone;
  f.horizon = horizon;
  f.expected_cohort = expected_cohort;
  for (Vaccine v : kAllVaccines) {
    int doses = cfg.scheduled_doses(v);
    if (doses == 0) continue;
    auto it = rates.find(v);
    double w = it == rates.end() ? 0.0 : it->second;
    f.per_vaccine[v] =
        VaccineDemand{doses, w, 1.0 / (1.0 - w), doses_required(expected_cohort, doses, w)};
  }
  return f;
}

MunicipalReport municipal_report(const Registry& registry, const Scope& zone,
                                 const DateWindow& period) {
  check_window(period, "period");
  MunicipalReport r;
  r.zone = zone.label();
  r.period = period;
  r.counts_by_sex = {{Sex::F, 0}, {Sex::M, 0}, {Sex::X, 0}};
  registry.for_each_child([&](const ChildRecord& c, const DoseHistory&) {
    if (!zone.contains(c.zone_id) || !period.contains(date_of(c.registered_at))) return;
    r.registrations.push_back(
        MunicipalRow{c.uid, c.child_name, c.date_of_birth, c.sex, c.guardian_name});
    ++r.counts_by_sex[c.sex];
  });
  std::sort(r.registrations.begin(), r.registrations.end(), [](const auto& a, const auto& b) {
    if (a.date_of_birth != b.date_of_birth) return a.date_of_birth < b.date_of_birth;
    return a.uid < b.uid;
  });
  return r;
}

WastageRates load_wastage_rates(std::istream& in) {
  WastageRates out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("vaccine", 0) == 0) continue;
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::ParseError,
                   "wastage file line " + std::to_string(lineno) + ": " + why);
    };
    auto comma = line.find(',');
    if (comma == std::string::npos) throw bad("expected vaccine,rate");
    auto v = parse_vaccine(trim(line.substr(0, comma)));
    if (!v) throw bad("unknown vaccine");
    auto rate_text = trim(line.substr(comma + 1));
    double w = 0;
    try {
      std::size_t used = 0;
      w = std::stod(rate_text, &used);
      if (used != rate_text.size()) throw bad("rate is not a number");
    } catch (const std::logic_error&) {
      throw bad("rate is not a number");
    }
    check_rate(*v, w);
    if (!out.emplace(*v, w).second) throw bad("vaccine listed twice");
  }
  return out;
}

WastageRates load_wastage_rates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open wastage file " + path);
  return load_wastage_rates(in);
}

const WastageRates& default_wastage_rates() {
  static const WastageRates rates{{Vaccine::BCG, 0.61},  {Vaccine::OPV, 0.47},
                                  {Vaccine::MEASLES, 0.35}, {Vaccine::TT, 0.34},
                                  {Vaccine::HEPB, 0.33}, {Vaccine::DPT, 0.27}};
  return rates;
}

json to_json(const DateWindow& w) {
  return {{"from", format_date(w.from)}, {"to", format_date(w.to)}};
}

json to_json(const CoverageReport& r) {
  json per = json::object();
  for (const auto& [v, rate] : r.per_vaccine_rates) per[std::string(to_string(v))] = rate;
  return {{"scope", r.scope},
          {"cohort", to_json(r.cohort)},
          {"n_children", r.n_children},
          {"n_fully_immunized", r.n_fully_immunized},
          {"coverage_rate", r.coverage_rate},
          {"per_vaccine_rates", per}};
}

json to_json(const DropoutReport& r) {
  return {{"scope", r.scope},
          {"cohort", to_json(r.cohort)},
          {"from", to_string(r.from)},
          {"to", to_string(r.to)},
          {"n_from", r.n_from},
          {"n_both", r.n_both},
          {"dropout_rate", r.rate}};
}

json to_json(const ZoneDemandForecast& f) {
  json per = json::object();
  for (const auto& [v, d] : f.per_vaccine) {
    per[std::string(to_string(v))] = {{"scheduled_doses", d.scheduled_doses},
                                      {"wastage_rate", d.wastage_rate},
                                      {"wastage_factor", d.wastage_factor},
                                      {"doses_required", d.doses_required}};
  }
  return {{"zone", f.zone},
          {"horizon", f.horizon ? to_json(*f.horizon) : json(nullptr)},
          {"expected_cohort", f.expected_cohort},
          {"per_vaccine", per}};
}

json to_json(const MunicipalReport& r) {
  json rows = json::array();
  for (const auto& row : r.registrations) {
    rows.push_back({{"uid", row.uid.str()},
                    {"child_name", row.child_name},
                    {"date_of_birth", format_date(row.date_of_birth)},
                    {"sex", to_string(row.sex)},
                    {"guardian_name", row.guardian_name}});
  }
  json counts = json::object();
  for (const auto& [s, n] : r.counts_by_sex) counts[std::string(to_string(s))] = n;
  return {{"zone", r.zone},
          {"period", to_json(r.period)},
          {"registrations", rows},
          {"counts_by_sex", counts}};
}

std::string to_csv(const CoverageReport& r) {
  std::string out = "scope,cohort_from,cohort_to,n_children,n_fully_immunized,coverage_rate";
  for (const auto& [v, rate] : r.per_vaccine_rates) out += "," + std::string(to_string(v));
  out += "\n" + csv_field(r.scope) + "," + format_date(r.cohort.from) + "," +
         format_date(r.cohort.to) + "," + std::to_string(r.n_children) + "," +
         std::to_string(r.n_fully_immunized) + "," + fmt(r.coverage_rate);
  for (const auto& [v, rate] : r.per_vaccine_rates) out += "," + fmt(rate);
  out += "\n";
  return out;
}

std::string to_csv(const DropoutReport& r) {
  return "scope,cohort_from,cohort_to,from,to,n_from,n_both,dropout_rate\n" +
         csv_field(r.scope) + "," + format_date(r.cohort.from) + "," +
         format_date(r.cohort.to) + "," + to_string(r.from) + "," + to_string(r.to) + "," +
         std::to_string(r.n_from) + "," + std::to_string(r.n_both) + "," + fmt(r.rate) + "\n";
}

std::string to_csv(const ZoneDemandForecast& f) {
  std::string out =
      "zone,expected_cohort,vaccine,scheduled_doses,wastage_rate,wastage_factor,doses_required\n";
  for (const auto& [v, d] : f.per_vaccine) {
    out += csv_field(f.zone) + "," + std::to_string(f.expected_cohort) + "," +
           std::string(to_string(v)) + "," + std::to_string(d.scheduled_doses) + "," +
           fmt(d.wastage_rate) + "," + fmt(d.wastage_factor) + "," +
           std::to_string(d.doses_required) + "\n";
  }
  return out;
}

std::string to_csv(const MunicipalReport& r) {
  std::string out = "zone,uid,child_name,date_of_birth,sex,guardian_name\n";
  for (const auto& row : r.registrations) {
    out += csv_field(r.zone) + "," + row.uid.str() + "," + csv_field(row.child_name) + "," +
           format_date(row.date_of_birth) + "," + std::string(to_string(row.sex)) + "," +
           csv_field(row.guardian_name) + "\n";
  }
  return out;
}

}  // namespace imz
