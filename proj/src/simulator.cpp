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

#include "imz/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "imz/crypto.hpp"
#include "imz/error.hpp"
#include "imz/service.hpp"

namespace imz {

using nlohmann::json;

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// SplitMix64 stream keyed by (seed, zone, child, stream id).
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t zone, std::uint64_t child, std::uint64_t stream) {
    state_ = mix64(seed + 0x9E3779B97F4A7C15ULL);
    state_ = mix64(state_ ^ (zone + 0xD1B54A32D192ED03ULL));
    state_ = mix64(state_ ^ (child + 0x8CB92BA72F3D8DD7ULL));
    state_ = mix64(state_ ^ (stream + 0xABC98388FB8FAC03ULL));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::size_t below(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(k, n - 1);
  }

 private:
  std::uint64_t state_;
};

enum Stream : std::uint64_t { kAttributes = 0, kQuit = 1, kRelocation = 2 };

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

// Distinct schedule offsets with the doses given at each, ascending.
std::vector<std::pair<int, std::vector<DoseKey>>> visit_plan(const ScheduleConfig& schedule) {
  std::map<int, std::vector<DoseKey>> by_offset;
  for (const auto& e : schedule.entries()) by_offset[e.offset_days].push_back(e.key());
  return {by_offset.begin(), by_offset.end()};
}

std::string guardian_uid_for(std::size_t global_index) {
  char payload[16];
  std::snprintf(payload, sizeof payload, "9%010zu", global_index);
  return std::string(payload) + compute_check_digit(payload);
}

std::string mobile_for(std::size_t global_index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "+919%09zu", global_index);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  out << content;
}

std::string child_label(const SimChild& c) {
  return c.zone_id + "-" + std::to_string(c.index);
}

}  // namespace

void validate(const SimConfig& cfg) {
  require(cfg.years >= 1, "years must be at least 1");
  require(is_prob(cfg.p_full) && is_prob(cfg.p_partial) && is_prob(cfg.p_none),
          "compliance probabilities must lie in [0, 1]");
  require(std::abs(cfg.p_full + cfg.p_partial + cfg.p_none - 1.0) <= 1e-9,
          "p_full + p_partial + p_none must equal 1");
  require(is_prob(cfg.partial_quit_hazard), "partial_quit_hazard must lie in [0, 1]");
  require(is_prob(cfg.relocation_prob), "relocation_prob must lie in [0, 1]");
  require(is_prob(cfg.missing_mobile_prob), "missing_mobile_prob must lie in [0, 1]");
  require(cfg.centers_per_zone >= 1, "centers_per_zone must be at least 1");
  require(cfg.sync_batch >= 1, "sync_batch must be at least 1");
  std::set<std::string> seen;
  for (const auto& z : cfg.zones) {
    require(!z.zone_id.empty(), "zone_id must not be empty");
    require(z.zone_id.find_first_of(",+/ ") == std::string::npos,
            "zone_id '" + z.zone_id + "' contains a reserved character");
    require(z.births_per_year >= 0, "births_per_year must be non-negative");
    require(seen.insert(z.zone_id).second, "zone '" + z.zone_id + "' listed twice");
  }
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  try {
    require(j.is_object(), "simulation config must be a JSON object");
    c.seed = j.value("seed", c.seed);
    if (j.contains("zones")) {
      for (const auto& z : j.at("zones")) {
        c.zones.push_back(
            ZoneSpec{z.at("zone_id").get<std::string>(), z.at("births_per_year").get<int>()});
      }
    }
    c.years = j.value("years", c.years);
    if (j.contains("compliance_mix")) {
      const auto& m = j.at("compliance_mix");
      c.p_full = m.at("p_full").get<double>();
      c.p_partial = m.at("p_partial").get<double>();
      c.p_none = m.at("p_none").get<double>();
    }
    c.partial_quit_hazard = j.value("partial_quit_hazard", c.partial_quit_hazard);
    c.relocation_prob = j.value("relocation_prob", c.relocation_prob);
    c.centers_per_zone = j.value("centers_per_zone", c.centers_per_zone);
    c.missing_mobile_prob = j.value("missing_mobile_prob", c.missing_mobile_prob);
    if (j.contains("start_date")) {
      auto d = parse_date(j.at("start_date").get<std::string>());
      require(d.has_value(), "start_date must be YYYY-MM-DD");
      c.start_date = *d;
    }
    c.sync_batch = j.value("sync_batch", c.sync_batch);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  validate(c);
  return c;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path.string());
  try {
    return sim_config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

json to_json(const SimConfig& c) {
  json zones = json::array();
  for (const auto& z : c.zones) {
    zones.push_back({{"zone_id", z.zone_id}, {"births_per_year", z.births_per_year}});
  }
  return {{"seed", c.seed},
          {"zones", zones},
          {"years", c.years},
          {"compliance_mix",
           {{"p_full", c.p_full}, {"p_partial", c.p_partial}, {"p_none", c.p_none}}},
          {"partial_quit_hazard", c.partial_quit_hazard},
          {"relocation_prob", c.relocation_prob},
          {"centers_per_zone", c.centers_per_zone},
          {"missing_mobile_prob", c.missing_mobile_prob},
          {"start_date", format_date(c.start_date)},
          {"sync_batch", c.sync_batch}};
}

std::string_view to_string(Compliance c) noexcept {
  switch (c) {
    case Compliance::Full: return "FULL";
    case Compliance::Partial: return "PARTIAL";
    case Compliance::None: return "NONE";
  }
  return "NONE";
}

std::vector<std::string> sim_center_ids(const SimConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& z : cfg.zones) {
    for (int k = 1; k <= cfg.centers_per_zone; ++k) out.push_back(z.zone_id + "-C" + std::to_string(k));
  }
  return out;
}

SimCohort generate_cohort(const SimConfig& cfg, const ScheduleConfig& schedule) {
  validate(cfg);
  SimCohort out;
  out.centers = sim_center_ids(cfg);
  const long days = 365L * cfg.years;
  out.end_date = add_days(cfg.start_date, days + 364);
  out.cohort = DateWindow{add_days(out.end_date, -729), add_days(out.end_date, -365)};
  auto plan = visit_plan(schedule);
  const auto cpz = static_cast<std::size_t>(cfg.centers_per_zone);

  for (std::size_t zi = 0; zi < cfg.zones.size(); ++zi) {
    const auto& zone = cfg.zones[zi];
    auto n = static_cast<std::size_t>(zone.births_per_year) * cfg.years;
    auto n_full = static_cast<std::size_t>(std::llround(n * cfg.p_full));
    auto n_none = static_cast<std::size_t>(std::llround(n * cfg.p_none));
    n_full = std::min(n_full, n);
    n_none = std::min(n_none, n - n_full);
    std::vector<Compliance> classes(n, Compliance::Partial);
    std::fill_n(classes.begin(), n_full, Compliance::Full);
    std::fill_n(classes.begin() + static_cast<long>(n_full), n_none, Compliance::None);
    std::seed_seq zone_seed{static_cast<std::uint32_t>(cfg.seed),
                            static_cast<std::uint32_t>(cfg.seed >> 32),
                            static_cast<std::uint32_t>(zi)};
    std::mt19937_64 zone_rng(zone_seed);
    std::shuffle(classes.begin(), classes.end(), zone_rng);

    for (std::size_t i = 0; i < n; ++i) {
      StreamRng attr(cfg.seed, zi, i, kAttributes);
      StreamRng quit(cfg.seed, zi, i, kQuit);
      StreamRng move(cfg.seed, zi, i, kRelocation);
      SimChild c;
      c.zone_id = zone.zone_id;
      c.index = i;
      c.compliance = classes[i];
      c.date_of_birth = add_days(cfg.start_date, static_cast<long>(attr.below(days)));
      c.sex = attr.uniform() < 0.5 ? Sex::F : Sex::M;
      std::size_t home = zi * cpz + attr.below(cpz);
      c.home_center = out.centers[home];
      c.has_mobile = attr.uniform() >= cfg.missing_mobile_prob;
      if (c.compliance != Compliance::None) {
        for (const auto& [offset, doses] : plan) {
          Date date = add_days(c.date_of_birth, offset);
          if (date > out.end_date) break;
          if (c.compliance == Compliance::Partial && quit.uniform() < cfg.partial_quit_hazard) {
            break;
          }
          double u = move.uniform();
          std::size_t pick = move.below(out.centers.size() > 1 ? out.centers.size() - 1 : 1);
          std::size_t center = home;
          if (out.centers.size() > 1 && u < cfg.relocation_prob) {
            center = pick >= home ? pick + 1 : pick;
          }
          c.visits.push_back(SimVisit{date, out.centers[center], doses});
        }
      }
      out.children.push_back(std::move(c));
    }
  }
  std::stable_sort(out.children.begin(), out.children.end(), [](const auto& a, const auto& b) {
    return a.date_of_birth < b.date_of_birth;
  });
  return out;
}

double measure_dropout(const SimConfig& cfg, const ScheduleConfig& schedule) {
  const DoseKey from{Vaccine::BCG, 1};
  const DoseKey to{Vaccine::MEASLES, 1};
  auto cohort = generate_cohort(cfg, schedule);
  std::size_t starters = 0;
  std::size_t finishers = 0;
  for (const auto& c : cohort.children) {
    if (!cohort.cohort.contains(c.date_of_birth)) continue;
    bool has_from = false;
    bool has_to = false;
    for (const auto& v : c.visits) {
      for (const auto& k : v.doses) {
        has_from = has_from || k == from;
        has_to = has_to || k == to;
      }
    }
    if (!has_from) continue;
    ++starters;
    if (has_to) ++finishers;
  }
  if (starters == 0) throw Error(ErrorCode::NoStarters, "simulated cohort has no BCG-1 doses");
  return static_cast<double>(starters - finishers) / static_cast<double>(starters);
}

CalibrationResult calibrate_quit_hazard(SimConfig cfg, double target,
                                        const ScheduleConfig& schedule, int max_iterations) {
  auto f = [&](double h) {
    cfg.partial_quit_hazard = h;
    return measure_dropout(cfg, schedule);
  };
  double peak_h = 0.0;
  double peak = -1.0;
  for (int i = 0; i <= 50; ++i) {
    double h = i / 50.0;
    double d = f(h);
    if (d > peak) {
      peak = d;
      peak_h = h;
    }
  }
  if (peak < target) {
    throw Error(ErrorCode::InvalidConfig, "target dropout is above the largest reachable value");
  }
  double lo = peak_h;
  double hi = 1.0;
  double f_lo = peak;
  double f_hi = f(hi);
  if (f_hi > target) {
    throw Error(ErrorCode::InvalidConfig, "target dropout is below the smallest reachable value");
  }
  CalibrationResult r;
  while (r.iterations < max_iterations && hi - lo > 1e-9) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    ++r.iterations;
    if (fm > target) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
      f_hi = fm;
    }
  }
  bool pick_lo = std::abs(f_lo - target) <= std::abs(f_hi - target);
  r.hazard = pick_lo ? lo : hi;
  r.dropout = pick_lo ? f_lo : f_hi;
  return r;
}

json to_json(const SimSummary& s) {
  return {{"children", s.children},
          {"registrations", s.registrations},
          {"visits", s.visits},
          {"events", s.events},
          {"messages",
           {{"expected", s.expected_messages},
            {"queued", s.messages_queued},
            {"sent", s.messages_sent},
            {"failed", s.messages_failed},
            {"pending", s.messages_pending},
            {"spooled", s.messages_spooled}}},
          {"sync", to_json(s.sync)},
          {"coverage", s.coverage ? to_json(*s.coverage) : json(nullptr)},
          {"dropout", s.dropout ? to_json(*s.dropout) : json(nullptr)},
          {"snapshot_sha256", s.snapshot_sha256},
          {"conservation_ok", s.conservation_ok}};
}

SimSummary run_simulation(const SimConfig& cfg, const SimOptions& options) {
  const auto& schedule = default_schedule();
  auto cohort = generate_cohort(cfg, schedule);

  Timestamp now = start_of(cfg.start_date);
  ServiceOptions so;
  so.schedule = schedule;
  so.wastage = default_wastage_rates();
  so.clock = [&now] { return now; };
  so.uid_seed = cfg.seed;
  so.sleeper = no_sleep();
  so.sms_queue_bound = std::size_t{1} << 22;
  so.max_sync_batch = std::max<std::size_t>(cfg.sync_batch, 1'000);
  std::filesystem::path spool_dir;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    spool_dir = *options.out_dir / "sms";
    std::filesystem::remove_all(spool_dir);
    std::filesystem::remove(*options.out_dir / "central.log");
    so.log_file = *options.out_dir / "central.log";
    so.gateway = std::make_unique<FileSpoolGateway>(spool_dir);
  }
  ImmunizationService service(std::move(so));

  std::map<std::string, std::string> zone_of_center;
  for (const auto& z : cfg.zones) {
    for (int k = 1; k <= cfg.centers_per_zone; ++k) {
      zone_of_center[z.zone_id + "-C" + std::to_string(k)] = z.zone_id;
    }
  }
  std::map<std::string, CenterNode> nodes;
  std::map<std::string, std::unique_ptr<ServiceSyncTransport>> transports;
  int ordinal = 0;
  for (const auto& id : cohort.centers) {
    auto kind = (ordinal++ % 2 == 0) ? CenterKind::Government : CenterKind::Private;
    service.add_center(CenterRecord{id, "Health Centre " + id, zone_of_center[id], kind, "", true},
                       "key-" + id);
    nodes.try_emplace(id, id, std::size_t{1} << 20);
    transports.emplace(id, std::make_unique<ServiceSyncTransport>(service, "key-" + id));
  }

  // Zone offsets give every simulated guardian a distinct global index.
  std::map<std::string, std::size_t> zone_base;
  std::size_t base = 0;
  for (const auto& z : cfg.zones) {
    zone_base[z.zone_id] = base;
    base += static_cast<std::size_t>(z.births_per_year) * cfg.years;
  }
  const auto& children = cohort.children;
  for (const auto& c : children) {
    auto g = zone_base[c.zone_id] + c.index;
    service.identity().add_person(PersonRecord{Uid::from_string(guardian_uid_for(g)),
                                               "Guardian " + child_label(c),
                                               c.has_mobile ? mobile_for(g) : "",
                                               GuardianType::Parent, std::nullopt});
  }

  std::map<Date, std::vector<std::pair<std::size_t, std::size_t>>> visits_by_day;
  for (std::size_t i = 0; i < children.size(); ++i) {
    for (std::size_t v = 0; v < children[i].visits.size(); ++v) {
      visits_by_day[children[i].visits[v].date].emplace_back(i, v);
    }
  }

  SimSummary s;
  s.children = children.size();
  std::vector<std::optional<Uid>> uids(children.size());
  std::size_t next_birth = 0;
  auto fail = [](const std::string& what, const ServiceResponse& resp) {
    ErrorCode code = ErrorCode::Internal;
    try {
      auto body = json::parse(resp.body);
      if (auto parsed = parse_error_code(body.at("error").at("code").get<std::string>())) {
        code = *parsed;
      }
    } catch (const json::exception&) {
    }
    return Error(code, what + ": HTTP " + std::to_string(resp.status) + " " + resp.body);
  };

  for (Date day = cfg.start_date; day <= cohort.end_date; day = add_days(day, 1)) {
    now = start_of(day) + std::chrono::hours{9};
    for (; next_birth < children.size() && children[next_birth].date_of_birth == day;
         ++next_birth) {
      const auto& c = children[next_birth];
      auto g = zone_base[c.zone_id] + c.index;
      json body{{"request_id", "sim-" + child_label(c)},
                {"child_name", "Child " + child_label(c)},
                {"date_of_birth", format_date(c.date_of_birth)},
                {"sex", to_string(c.sex)},
                {"place_of_birth", "Health Centre " + c.home_center},
                {"guardian",
                 {{"uid", guardian_uid_for(g)},
                  {"name", "Guardian " + child_label(c)},
                  {"mobile", c.has_mobile ? mobile_for(g) : ""},
                  {"type", "PARENT"}}},
                {"center_id", c.home_center}};
      ServiceRequest req{"POST", "/registrations", {}, {{"X-Api-Key", "key-" + c.home_center}},
                         body.dump()};
      auto resp = service.handle(req);
      if (resp.status != 201) throw fail("registering child " + child_label(c), resp);
      uids[next_birth] = Uid::from_string(json::parse(resp.body).at("uid").get<std::string>());
      ++s.registrations;
    }

    now = start_of(day) + std::chrono::hours{17};
    if (auto it = visits_by_day.find(day); it != visits_by_day.end()) {
      for (auto [ci, vi] : it->second) {
        const auto& c = children[ci];
        const auto& visit = c.visits[vi];
        for (const auto& key : visit.doses) {
          VaccinationEvent e{visit.center_id + ":" + uids[ci]->str() + ":" + to_string(key) +
                                 ":" + format_date(day),
                             *uids[ci],
                             key.vaccine,
                             key.dose,
                             day,
                             visit.center_id,
                             "LOT-" + visit.center_id,
                             now};
          nodes.at(visit.center_id)
              .append_local(SyncEnvelope{e.event_id, visit.center_id, 0,
                                         EnvelopeKind::RecordVaccination, to_json(e), now});
          ++s.events;
        }
        ++s.visits;
        if (c.has_mobile) ++s.expected_messages;
      }
    }

    now = start_of(day) + std::chrono::hours{20};
    for (auto& [id, node] : nodes) {
      if (node.pending() == 0) continue;
      auto r = drain_outbox(node, *transports.at(id), cfg.sync_batch);
      s.sync.accepted += r.accepted;
      s.sync.duplicates += r.duplicates;
      s.sync.conflicts += r.conflicts;
      s.sync.rejected += r.rejected;
      for (auto& x : r.rejections) s.sync.rejections.push_back(std::move(x));
    }
    service.sms().drain();
  }

  auto& central = service.central();
  const auto& registry = central.registry();
  s.messages_queued = service.sms_queued();
  auto stats = service.sms().stats();
  s.messages_sent = stats.sent;
  s.messages_failed = stats.failed;
  s.messages_pending = stats.pending;
  if (!spool_dir.empty()) {
    for (const auto& entry : std::filesystem::directory_iterator(spool_dir)) {
      if (entry.path().extension() == ".sms") ++s.messages_spooled;
    }
  } else {
    s.messages_spooled = static_cast<StubGateway&>(service.gateway()).delivered().size();
  }
  s.conservation_ok = s.messages_queued == s.expected_messages &&
                      s.messages_sent + s.messages_failed + s.messages_pending ==
                          s.expected_messages &&
                      s.messages_spooled == s.messages_sent;

  try {
    s.coverage = coverage_report(registry, Scope::all(), cohort.cohort, schedule);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyCohort) throw;
  }
  try {
    s.dropout = dropout_report(registry, Scope::all(), cohort.cohort);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoStarters) throw;
  }
  auto snapshot = central.snapshot_bytes();
  s.snapshot_sha256 = sha256_hex(snapshot);

  if (options.out_dir) {
    const auto& dir = *options.out_dir;
    write_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
    write_file(dir / "summary.json", to_json(s).dump(2) + "\n");
    write_file(dir / "snapshot.json", snapshot);

    json coverage{{"all", s.coverage ? to_json(*s.coverage) : json(nullptr)},
                  {"zones", json::array()}};
    std::string coverage_csv;
    if (s.coverage) coverage_csv = to_csv(*s.coverage);
    for (const auto& z : cfg.zones) {
      try {
        auto r = coverage_report(registry, Scope::zone(z.zone_id), cohort.cohort, schedule);
        coverage["zones"].push_back(to_json(r));
        auto csv = to_csv(r);
        coverage_csv += coverage_csv.empty() ? csv : csv.substr(csv.find('\n') + 1);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyCohort) throw;
      }
    }
    write_file(dir / "coverage.json", coverage.dump(2) + "\n");
    write_file(dir / "coverage.csv", coverage_csv);
    if (s.dropout) {
      write_file(dir / "dropout.json", to_json(*s.dropout).dump(2) + "\n");
      write_file(dir / "dropout.csv", to_csv(*s.dropout));
    }

    json demand = json::array();
    std::string demand_csv;
    for (const auto& z : cfg.zones) {
      auto f = demand_forecast(z.zone_id, z.births_per_year, schedule, default_wastage_rates(),
                               DateWindow{add_days(cohort.end_date, 1),
                                          add_days(cohort.end_date, 365)});
      demand.push_back(to_json(f));
      auto csv = to_csv(f);
      demand_csv += demand_csv.empty() ? csv : csv.substr(csv.find('\n') + 1);
    }
    write_file(dir / "demand.json", demand.dump(2) + "\n");
    write_file(dir / "demand.csv", demand_csv);

    auto municipal =
        municipal_report(registry, Scope::all(), DateWindow{cfg.start_date, cohort.end_date});
    write_file(dir / "municipal.json", to_json(municipal).dump(2) + "\n");
    write_file(dir / "municipal.csv", to_csv(municipal));
  }
  return s;
}

}  // namespace imz
