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

// imzctl: administrative command line for the immunization registry.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "imz/analytics.hpp"
#include "imz/central.hpp"
#include "imz/crypto.hpp"
#include "imz/error.hpp"
#include "imz/http.hpp"
#include "imz/identity.hpp"
#include "imz/schedule.hpp"
#include "imz/service.hpp"
#include "imz/simulator.hpp"

namespace {

using nlohmann::json;

int fail(const imz::Error& e) {
  std::cerr << "error: " << imz::error_code_name(e.code()) << ": " << e.what() << "\n";
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw imz::Error(imz::ErrorCode::InvalidConfig, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_serve(const std::string& config_path) {
  auto cfg = imz::load_service_config(config_path);
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto service = imz::build_service(cfg, true);
  imz::HttpServer server(*service);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::cerr << "imzctl: listening on " << cfg.listen_host << ":" << cfg.listen_port << "\n";
  bool ok = server.listen(cfg.listen_host, cfg.listen_port);
  if (!ok) {
    std::cerr << "imzctl: cannot listen on " << cfg.listen_host << ":" << cfg.listen_port
              << "\n";
    pthread_kill(waiter.native_handle(), SIGTERM);
  }
  waiter.join();
  service->shutdown();
  std::cerr << "imzctl: stopped; " << service->sms_queued() << " reminders queued\n";
  return ok ? 0 : 1;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  auto cfg = imz::load_sim_config(config_path);
  if (seed) cfg.seed = *seed;
  imz::SimOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  auto summary = imz::run_simulation(cfg, opts);
  std::cout << imz::to_json(summary).dump(2) << "\n";
  return summary.conservation_ok ? 0 : 1;
}

struct ReportArgs {
  std::string kind;
  std::string config;
  std::string log;
  std::string zone = "ALL";
  std::string from;
  std::string to;
  std::string date;
  std::string format = "json";
  std::string from_dose = "BCG-1";
  std::string to_dose = "MEASLES-1";
  std::int64_t expected_cohort = -1;
  std::string wastage;
  std::string schedule;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::string log_path = a.log;
  auto schedule = imz::default_schedule();
  auto wastage = imz::default_wastage_rates();
  if (!a.config.empty()) {
    auto cfg = imz::load_service_config(a.config);
    if (log_path.empty()) log_path = (cfg.data_dir / "central.log").string();
    if (!cfg.schedule_file.empty()) schedule = imz::load_schedule_file(cfg.schedule_file.string());
    if (!cfg.wastage_file.empty()) wastage = imz::load_wastage_rates_file(cfg.wastage_file.string());
  }
  if (!a.schedule.empty()) schedule = imz::load_schedule_file(a.schedule);
  if (!a.wastage.empty()) wastage = imz::load_wastage_rates_file(a.wastage);

  std::unique_ptr<imz::CentralState> state;
  if (log_path.empty()) {
    if (a.kind != "demand" || a.expected_cohort < 0) {
      throw imz::Error(imz::ErrorCode::InvalidRequest, "--config or --log is required");
    }
    state = std::make_unique<imz::CentralState>(schedule);
  } else {
    state = imz::CentralState::replay_log(read_file(log_path), schedule);
  }
  const auto& registry = state->registry();
  auto scope = imz::parse_scope(a.zone);
  auto day = [](const std::string& text, const char* what) {
    return imz::parse_date_or_throw(text, what);
  };
  imz::Date as_of = a.date.empty() ? imz::date_of(imz::wall_clock_now()) : day(a.date, "date");
  imz::DateWindow window{a.from.empty() ? imz::add_days(as_of, -729) : day(a.from, "from"),
                         a.to.empty() ? imz::add_days(as_of, -365) : day(a.to, "to")};
  auto dose = [](const std::string& text) {
    auto k = imz::parse_dose_key(text);
    if (!k) throw imz::Error(imz::ErrorCode::InvalidRequest, "bad dose '" + text + "'");
    return *k;
  };
  bool csv = a.format == "csv";
  std::string text;
  auto emit = [&](const auto& report) {
    text = csv ? imz::to_csv(report) : imz::to_json(report).dump(2) + "\n";
  };
  if (a.kind == "coverage") {
    emit(imz::coverage_report(registry, scope, window, schedule));
  } else if (a.kind == "dropout") {
    emit(imz::dropout_report(registry, scope, window, dose(a.from_dose), dose(a.to_dose)));
  } else if (a.kind == "demand") {
    std::int64_t cohort = a.expected_cohort;
    if (cohort < 0) {
      cohort = 0;
      registry.for_each_child([&](const imz::ChildRecord& c, const imz::DoseHistory&) {
        if (scope.contains(c.zone_id) && window.contains(c.date_of_birth)) ++cohort;
      });
    }
    emit(imz::demand_forecast(scope.label(), cohort, schedule, wastage, window));
  } else {
    if (a.from.empty() || a.to.empty()) {
      throw imz::Error(imz::ErrorCode::InvalidRequest, "municipal needs --from and --to");
    }
    emit(imz::municipal_report(registry, scope, window));
  }
  if (a.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream(a.out, std::ios::binary) << text;
  }
  return 0;
}

int cmd_schedule_validate(const std::string& path) {
  auto cfg = imz::load_schedule_file(path);
  std::cout << "OK " << cfg.entries().size() << " entries, fully immunized rule "
            << cfg.rule().doses.size() << " doses by day " << cfg.rule().cutoff_days << "\n";
  return 0;
}

int cmd_uid_check(const std::string& candidate) {
  bool ok = imz::validate_uid(candidate);
  std::cout << (ok ? "VALID" : "INVALID") << "\n";
  return ok ? 0 : 1;
}

int cmd_calibrate(const std::string& config_path, double target,
                  std::optional<std::uint64_t> seed) {
  auto cfg = imz::load_sim_config(config_path);
  if (seed) cfg.seed = *seed;
  auto r = imz::calibrate_quit_hazard(cfg, target);
  std::cout << json{{"target", target},
                    {"partial_quit_hazard", r.hazard},
                    {"measured_dropout", r.dropout},
                    {"iterations", r.iterations}}
                   .dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Immunization registry administration"};
  app.require_subcommand(1);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Service config JSON")->required();

  auto* simulate = app.add_subcommand("simulate", "Run the population simulator");
  std::string sim_config;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_out;
  simulate->add_option("--config", sim_config, "Simulation config JSON")->required();
  simulate->add_option("--seed", sim_seed, "Override the config seed");
  simulate->add_option("--out", sim_out, "Output directory");

  auto* report = app.add_subcommand("report", "Compute a report from the central log");
  ReportArgs ra;
  report->add_option("kind", ra.kind, "coverage | dropout | demand | municipal")
      ->required()
      ->check(CLI::IsMember({"coverage", "dropout", "demand", "municipal"}));
  report->add_option("--config", ra.config, "Service config JSON (locates the log)");
  report->add_option("--log", ra.log, "Central event log");
  report->add_option("--zone", ra.zone, "Zone id, comma list, or ALL");
  report->add_option("--from", ra.from, "Window start YYYY-MM-DD");
  report->add_option("--to", ra.to, "Window end YYYY-MM-DD");
  report->add_option("--date", ra.date, "Reference date for the default cohort");
  report->add_option("--format", ra.format)->check(CLI::IsMember({"json", "csv"}));
  report->add_option("--from-dose", ra.from_dose, "Dropout start dose");
  report->add_option("--to-dose", ra.to_dose, "Dropout end dose");
  report->add_option("--expected-cohort", ra.expected_cohort, "Demand cohort size");
  report->add_option("--wastage", ra.wastage, "vaccine,rate CSV");
  report->add_option("--schedule", ra.schedule, "Schedule JSON");
  report->add_option("--out", ra.out, "Write to a file instead of stdout");

  auto* schedule = app.add_subcommand("schedule", "Schedule tools");
  schedule->require_subcommand(1);
  auto* validate = schedule->add_subcommand("validate", "Check a schedule file");
  std::string schedule_file;
  validate->add_option("file", schedule_file)->required();

  auto* uid = app.add_subcommand("uid", "UID tools");
  uid->require_subcommand(1);
  auto* check = uid->add_subcommand("check", "Validate a 12-digit UID");
  std::string candidate;
  check->add_option("candidate", candidate)->required();

  auto* calibrate = app.add_subcommand("calibrate", "Fit partial_quit_hazard to a dropout");
  std::string cal_config;
  double cal_target = 0.327;
  std::optional<std::uint64_t> cal_seed;
  calibrate->add_option("--config", cal_config, "Simulation config JSON")->required();
  calibrate->add_option("--target", cal_target, "Dropout to reach");
  calibrate->add_option("--seed", cal_seed, "Override the config seed");

  auto* key = app.add_subcommand("key", "Center API key tools");
  key->require_subcommand(1);
  auto* hash = key->add_subcommand("hash", "Print the SHA-256 stored for a key");
  std::string key_text;
  hash->add_option("key", key_text)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(serve_config);
    if (*simulate) return cmd_simulate(sim_config, sim_seed, sim_out);
    if (*report) return cmd_report(ra);
    if (*validate) return cmd_schedule_validate(schedule_file);
    if (*check) return cmd_uid_check(candidate);
    if (*calibrate) return cmd_calibrate(cal_config, cal_target, cal_seed);
    if (*hash) {
      std::cout << imz::sha256_hex(key_text) << "\n";
      return 0;
    }
  } catch (const imz::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
