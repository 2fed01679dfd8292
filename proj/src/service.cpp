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

#include "imz/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "imz/crypto.hpp"
#include "imz/error.hpp"
#include "imz/json_util.hpp"

namespace imz {

using nlohmann::json;
namespace ju = json_util;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    auto j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) out.emplace_back(path.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

ServiceResponse json_response(int status, const json& body) {
  return ServiceResponse{status, "application/json", body.dump()};
}

json due_json(const DueDose& d) {
  return {{"vaccine", to_string(d.vaccine)},
          {"dose", d.dose},
          {"key", to_string(d.key())},
          {"due_date", format_date(d.due_date)},
          {"status", to_string(d.status)}};
}

json due_list_json(const std::vector<DueDose>& due) {
  json out = json::array();
  for (const auto& d : due) out.push_back(due_json(d));
  return out;
}

bool truthy(const std::string* v) {
  return v && (*v == "1" || *v == "true" || *v == "yes");
}

Date date_param(const ServiceRequest& req, std::string_view name, Date fallback) {
  auto* v = req.param(name);
  if (!v || v->empty()) return fallback;
  return parse_date_or_throw(*v, name);
}

std::optional<Date> optional_date_param(const ServiceRequest& req, std::string_view name) {
  auto* v = req.param(name);
  if (!v || v->empty()) return std::nullopt;
  return parse_date_or_throw(*v, name);
}

DoseKey dose_param(const ServiceRequest& req, std::string_view name, DoseKey fallback) {
  auto* v = req.param(name);
  if (!v || v->empty()) return fallback;
  auto key = parse_dose_key(*v);
  if (!key) {
    throw Error(ErrorCode::InvalidRequest,
                "parameter '" + std::string(name) + "' must look like BCG-1");
  }
  return *key;
}

Uid uid_from_path(const std::string& text) { return Uid::from_string(text); }

std::string generated_event_id(const std::string& center, const Uid& uid, const DoseKey& key,
                               Date date) {
  return center + ":" + uid.str() + ":" + to_string(key) + ":" + format_date(date);
}

GuardianRecord guardian_from_json(const json& g) {
  auto type = parse_guardian_type(ju::get_string_or(g, "type", "PARENT"));
  if (!type) {
    throw Error(ErrorCode::InvalidRequest,
                "field 'type' must be PARENT, GUARDIAN or ORPHANAGE");
  }
  return GuardianRecord{ju::get_uid(g, "uid"), ju::get_string(g, "name"),
                        ju::get_string_or(g, "mobile", ""), *type};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

const std::string* ServiceRequest::header(std::string_view name) const {
  auto want = lower(name);
  for (const auto& [k, v] : headers) {
    if (lower(k) == want) return &v;
  }
  return nullptr;
}

const std::string* ServiceRequest::param(std::string_view name) const {
  auto it = query.find(std::string(name));
  return it == query.end() ? nullptr : &it->second;
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Unauthenticated: return 401;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownChild:
    case ErrorCode::UnknownCenter: return 404;
    case ErrorCode::DuplicateRequestConflict:
    case ErrorCode::UidConflict:
    case ErrorCode::ConflictIdempotency: return 409;
    case ErrorCode::GuardianUnverified:
    case ErrorCode::UnknownDose:
    case ErrorCode::DateBeforeBirth:
    case ErrorCode::EmptyCohort:
    case ErrorCode::NoStarters:
    case ErrorCode::MissingMobile: return 422;
    case ErrorCode::QueueFull:
    case ErrorCode::TransportFailure: return 503;
    case ErrorCode::CorruptRecord:
    case ErrorCode::Internal: return 500;
    default: return 400;
  }
}

ServiceResponse error_response(ErrorCode code, const std::string& message) {
  return json_response(http_status(code),
                       {{"error", {{"code", error_code_name(code)}, {"message", message}}}});
}

ImmunizationService::ImmunizationService(ServiceOptions options)
    : clock_(std::move(options.clock)),
      max_sync_batch_(options.max_sync_batch),
      wastage_(std::move(options.wastage)),
      identity_(options.uid_seed),
      central_(std::make_unique<CentralState>(std::move(options.schedule), clock_,
                                              options.log_file)),
      gateway_(options.gateway ? std::move(options.gateway)
                               : std::make_unique<StubGateway>()) {
  dispatcher_ = std::make_unique<SmsDispatcher>(*gateway_, options.retry,
                                                options.sms_queue_bound, options.sleeper);
  // Children restored from the log keep their UIDs out of circulation.
  central_->registry().for_each_child(
      [&](const ChildRecord& c, const DoseHistory&) { identity_.reserve(c.uid); });
  if (options.background_sms) dispatcher_->start();
}

ImmunizationService::~ImmunizationService() { shutdown(); }

void ImmunizationService::shutdown() {
  if (dispatcher_) dispatcher_->stop();
}

std::size_t ImmunizationService::sms_queued() const { return sms_queued_.load(); }
std::size_t ImmunizationService::sms_dropped() const { return sms_dropped_.load(); }

void ImmunizationService::add_center(CenterRecord center, std::string_view api_key) {
  center.api_key_hash = sha256_hex(api_key);
  add_center_hashed(center);
}

void ImmunizationService::add_center_hashed(const CenterRecord& center) {
  std::lock_guard lock(write_mu_);
  central_->registry().upsert_center(center);
}

CenterRecord ImmunizationService::authenticate(std::string_view api_key) const {
  auto hash = sha256_hex(api_key);
  std::optional<CenterRecord> match;
  // Every stored hash is compared so timing does not depend on the match.
  for (const auto& c : central_->registry().centers()) {
    bool same = !c.api_key_hash.empty() && constant_time_equal(hash, c.api_key_hash);
    if (same && c.active) match = c;
  }
  if (!match) throw Error(ErrorCode::Unauthenticated, "unknown or inactive API key");
  return *match;
}

ServiceResponse ImmunizationService::handle(const ServiceRequest& req) {
  try {
    if (req.method == "GET" && req.path == "/healthz") {
      auto s = dispatcher_->stats();
      const auto& reg = central_->registry();
      return json_response(200, {{"status", "ok"},
                                 {"children", reg.child_count()},
                                 {"events", reg.event_count()},
                                 {"certificates", central_->certificates().size()},
                                 {"sms", {{"queued", sms_queued()},
                                          {"sent", s.sent},
                                          {"failed", s.failed},
                                          {"pending", s.pending}}}});
    }
    const std::string* key = req.header("X-Api-Key");
    std::string bearer;
    if (!key) {
      if (auto* auth = req.header("Authorization"); auth && auth->rfind("Bearer ", 0) == 0) {
        bearer = auth->substr(7);
        key = &bearer;
      }
    }
    if (!key || key->empty()) throw Error(ErrorCode::Unauthenticated, "missing API key");
    auto center = authenticate(*key);

    if (req.method != "POST") return route(req, center);

    std::lock_guard lock(write_mu_);
    auto* idem = req.header("Idempotency-Key");
    if (!idem || idem->empty()) return route(req, center);
    auto slot = center.center_id + "\n" + *idem;
    auto fingerprint = sha256_hex(req.method + "\n" + req.path + "\n" + req.body);
    if (auto it = idempotency_.find(slot); it != idempotency_.end()) {
      if (it->second.fingerprint != fingerprint) {
        throw Error(ErrorCode::ConflictIdempotency,
                    "Idempotency-Key '" + *idem + "' was used with a different request");
      }
      return it->second.response;
    }
    auto resp = route(req, center);
    if (resp.status < 300) idempotency_.emplace(slot, StoredResponse{fingerprint, resp});
    return resp;
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const json::exception& e) {
    return error_response(ErrorCode::InvalidRequest, e.what());
  } catch (const std::exception& e) {
    return error_response(ErrorCode::Internal, e.what());
  }
}

ServiceResponse ImmunizationService::route(const ServiceRequest& req,
                                           const CenterRecord& center) {
  auto seg = split_path(req.path);
  const auto& m = req.method;
  auto is = [&](std::initializer_list<std::string_view> parts) {
    if (seg.size() != parts.size()) return false;
    std::size_t i = 0;
    for (auto p : parts) {
      if (p != "*" && seg[i] != p) return false;
      ++i;
    }
    return true;
  };
  if (m == "POST" && is({"guardians", "verify"})) return post_guardian_verify(req);
  if (m == "POST" && is({"registrations"})) return post_registration(req, center);
  if (m == "POST" && is({"children", "*", "vaccinations"})) {
    return post_vaccinations(req, center, seg[1]);
  }
  if (m == "GET" && is({"children", "*", "history"})) return get_history(req, seg[1]);
  if (m == "GET" && is({"children", "*", "next-due"})) return get_next_due(req, seg[1]);
  if (m == "GET" && is({"children", "*", "certificate"})) return get_certificate(seg[1]);
  if (m == "POST" && is({"certificates", "verify"})) return post_certificate_verify(req);
  if (m == "GET" && is({"centers", "*", "due-list"})) return get_due_list(req, seg[1]);
  if (m == "GET" && is({"reports", "*"})) return get_report(req, seg[1]);
  if (m == "POST" && is({"sync"})) return post_sync(req, center);
  throw Error(ErrorCode::NotFound, "no route for " + m + " " + req.path);
}

ServiceResponse ImmunizationService::post_guardian_verify(const ServiceRequest& req) {
  auto body = ju::parse_body(req.body);
  auto result = identity_.verify_guardian(guardian_from_json(body));
  return json_response(200, {{"result", to_string(result)}});
}

ServiceResponse ImmunizationService::post_registration(const ServiceRequest& req,
                                                       const CenterRecord& center) {
  auto body = ju::parse_body(req.body);
  auto sex = parse_sex(ju::get_string(body, "sex"));
  if (!sex) throw Error(ErrorCode::InvalidRequest, "field 'sex' must be F, M or X");
  InfantRegistrationRequest r{ju::get_string(body, "request_id"),
                              ju::get_string(body, "child_name"),
                              ju::get_date(body, "date_of_birth"),
                              *sex,
                              ju::get_string_or(body, "place_of_birth", ""),
                              guardian_from_json(ju::require(body, "guardian")),
                              ju::get_string_or(body, "center_id", center.center_id)};
  if (r.center_id != center.center_id) {
    throw Error(ErrorCode::InvalidRequest, "center_id does not match the API key");
  }
  auto now = clock_();
  validate_request(r, date_of(now));
  auto& registry = central_->registry();
  auto uid = identity_.issue_infant_uid(r);
  if (auto existing = registry.find_child(uid)) {
    auto cert = central_->certificates().issue_birth_certificate(uid, existing->registered_center);
    return json_response(200, {{"uid", uid.str()},
                               {"child", to_json(*existing)},
                               {"certificate", to_json(cert)}});
  }
  std::string mobile = r.guardian.mobile;
  if (mobile.empty()) {
    if (auto person = identity_.find(r.guardian.uid)) mobile = person->mobile;
  }
  ChildRecord child{uid,   r.child_name, r.guardian.name,  mobile,
                    r.guardian.uid, r.date_of_birth, r.sex, r.place_of_birth,
                    center.zone_id, center.center_id, now};
  try {
    registry.register_child(child);
  } catch (...) {
    identity_.revoke(r.request_id);
    throw;
  }
  auto cert = central_->certificates().issue_birth_certificate(uid, center.center_id);
  return json_response(201, {{"uid", uid.str()},
                             {"child", to_json(child)},
                             {"certificate", to_json(cert)}});
}

ServiceResponse ImmunizationService::post_vaccinations(const ServiceRequest& req,
                                                       const CenterRecord& center,
                                                       const std::string& uid_text) {
  auto uid = uid_from_path(uid_text);
  auto& registry = central_->registry();
  auto child = registry.find_child(uid);
  if (!child) throw Error(ErrorCode::UnknownChild, "child " + uid.str() + " is not registered");
  auto body = ju::parse_body(req.body);
  const auto& doses = ju::require(body, "doses");
  if (!doses.is_array() || doses.empty()) {
    throw Error(ErrorCode::InvalidRequest, "field 'doses' must be a non-empty array");
  }
  auto now = clock_();
  std::vector<VaccinationEvent> events;
  std::set<DoseKey> keys;
  std::set<std::string> ids;
  for (const auto& d : doses) {
    auto vaccine = parse_vaccine(ju::get_string(d, "vaccine"));
    if (!vaccine) {
      throw Error(ErrorCode::UnknownDose,
                  "unknown vaccine '" + ju::get_string(d, "vaccine") + "'");
    }
    VaccinationEvent e{"", uid, *vaccine, static_cast<int>(ju::get_int(d, "dose")),
                       ju::get_date(d, "administered_date"), center.center_id,
                       ju::get_string_or(d, "batch_id", ""), now};
    e.event_id = ju::get_string_or(d, "event_id", "");
    if (e.event_id.empty()) {
      e.event_id = generated_event_id(center.center_id, uid, e.key(), e.administered_date);
    }
    if (!keys.insert(e.key()).second || !ids.insert(e.event_id).second) {
      throw Error(ErrorCode::InvalidRequest,
                  "dose " + to_string(e.key()) + " appears twice in one request");
    }
    registry.check_vaccination(e);
    events.push_back(std::move(e));
  }
  json results = json::array();
  std::vector<VaccinationEvent> accepted;
  for (const auto& e : events) {
    auto outcome = registry.record_vaccination(e);
    if (outcome == RecordOutcome::Accepted) accepted.push_back(e);
    results.push_back({{"event_id", e.event_id},
                       {"dose", to_string(e.key())},
                       {"outcome", to_string(outcome)}});
  }
  auto queued = notify_visits(accepted);
  auto history = registry.dose_history(uid);
  auto as_of = std::max(date_of(now), child->date_of_birth);
  return json_response(accepted.empty() ? 200 : 201,
                       {{"child_uid", uid.str()},
                        {"results", results},
                        {"next_due", due_list_json(next_due(child->date_of_birth, history,
                                                            as_of, schedule()))},
                        {"sms_queued", queued}});
}

ServiceResponse ImmunizationService::get_history(const ServiceRequest& req,
                                                 const std::string& uid_text) const {
  auto uid = uid_from_path(uid_text);
  auto h = central_->registry().vaccination_history(uid, truthy(req.param("include_superseded")));
  json events = json::array();
  for (const auto& entry : h.events) {
    auto j = to_json(entry.event);
    j["superseded"] = entry.superseded;
    events.push_back(std::move(j));
  }
  return json_response(200, {{"child", to_json(h.child)}, {"events", events}});
}

ServiceResponse ImmunizationService::get_next_due(const ServiceRequest& req,
                                                  const std::string& uid_text) const {
  auto uid = uid_from_path(uid_text);
  const auto& registry = central_->registry();
  auto child = registry.find_child(uid);
  if (!child) throw Error(ErrorCode::UnknownChild, "child " + uid.str() + " is not registered");
  auto as_of = date_param(req, "date", date_of(clock_()));
  auto history = registry.dose_history(uid);
  const auto& cfg = schedule();
  return json_response(
      200, {{"uid", uid.str()},
            {"as_of", format_date(as_of)},
            {"fully_immunized", is_fully_immunized(child->date_of_birth, history, cfg)},
            {"due", due_list_json(next_due(child->date_of_birth, history, as_of, cfg))},
            {"pending", due_list_json(pending_doses(child->date_of_birth, history, as_of, cfg))}});
}

ServiceResponse ImmunizationService::get_certificate(const std::string& uid_text) const {
  auto uid = uid_from_path(uid_text);
  auto cert = central_->certificates().find_by_child(uid);
  if (!cert) throw Error(ErrorCode::NotFound, "no certificate for child " + uid.str());
  return json_response(200, to_json(*cert));
}

ServiceResponse ImmunizationService::post_certificate_verify(const ServiceRequest& req) const {
  auto cert = certificate_from_json(ju::parse_body(req.body));
  auto status = central_->certificates().verify_certificate(cert);
  return json_response(200, {{"certificate_id", cert.certificate_id},
                             {"status", to_string(status)}});
}

ServiceResponse ImmunizationService::get_due_list(const ServiceRequest& req,
                                                  const std::string& center_id) const {
  auto date = date_param(req, "date", date_of(clock_()));
  json children = json::array();
  for (const auto& entry : central_->registry().due_list(center_id, date)) {
    children.push_back({{"uid", entry.child.uid.str()},
                        {"child_name", entry.child.child_name},
                        {"guardian_name", entry.child.guardian_name},
                        {"guardian_mobile", entry.child.guardian_mobile},
                        {"date_of_birth", format_date(entry.child.date_of_birth)},
                        {"due", due_list_json(entry.due)}});
  }
  return json_response(200, {{"center_id", center_id},
                             {"date", format_date(date)},
                             {"children", children}});
}

ServiceResponse ImmunizationService::get_report(const ServiceRequest& req,
                                                const std::string& kind) const {
  const auto& registry = central_->registry();
  auto* zone_text = req.param("zone");
  auto scope = parse_scope(zone_text ? *zone_text : "");
  bool csv = false;
  if (auto* f = req.param("format")) {
    if (*f == "csv") csv = true;
    else if (*f != "json") throw Error(ErrorCode::InvalidRequest, "format must be json or csv");
  }
  auto as_of = date_param(req, "date", date_of(clock_()));
  // Default cohort: children aged 12 to 23 months on `date`.
  DateWindow cohort{date_param(req, "from", add_days(as_of, -729)),
                    date_param(req, "to", add_days(as_of, -365))};
  auto emit = [&](const auto& report) {
    if (csv) return ServiceResponse{200, "text/csv", to_csv(report)};
    return json_response(200, to_json(report));
  };
  if (kind == "coverage") return emit(coverage_report(registry, scope, cohort, schedule()));
  if (kind == "dropout") {
    return emit(dropout_report(registry, scope, cohort,
                               dose_param(req, "from_dose", {Vaccine::BCG, 1}),
                               dose_param(req, "to_dose", {Vaccine::MEASLES, 1})));
  }
  if (kind == "demand") {
    auto from = optional_date_param(req, "from");
    auto to = optional_date_param(req, "to");
    std::optional<DateWindow> horizon;
    if (from && to) horizon = DateWindow{*from, *to};
    std::int64_t expected = 0;
    if (auto* n = req.param("expected_cohort")) {
      auto [p, ec] = std::from_chars(n->data(), n->data() + n->size(), expected);
      if (ec != std::errc{} || p != n->data() + n->size()) {
        throw Error(ErrorCode::InvalidRequest, "expected_cohort must be an integer");
      }
    } else if (horizon) {
      if (horizon->to < horizon->from) {
        throw Error(ErrorCode::InvalidRequest, "horizon ends before it starts");
      }
      registry.for_each_child([&](const ChildRecord& c, const DoseHistory&) {
        if (scope.contains(c.zone_id) && horizon->contains(c.date_of_birth)) ++expected;
      });
    } else {
      throw Error(ErrorCode::InvalidRequest,
                  "demand needs expected_cohort or a from/to birth window");
    }
    return emit(demand_forecast(scope.label(), expected, schedule(), wastage_, horizon));
  }
  if (kind == "municipal") {
    auto from = optional_date_param(req, "from");
    auto to = optional_date_param(req, "to");
    if (!from || !to) throw Error(ErrorCode::InvalidRequest, "municipal needs from and to");
    return emit(municipal_report(registry, scope, DateWindow{*from, *to}));
  }
  throw Error(ErrorCode::NotFound, "unknown report '" + kind + "'");
}

ServiceResponse ImmunizationService::post_sync(const ServiceRequest& req,
                                               const CenterRecord& center) {
  auto body = ju::parse_body(req.body);
  const auto& list = body.is_array() ? body : ju::require(body, "envelopes");
  if (!list.is_array()) throw Error(ErrorCode::InvalidRequest, "envelopes must be an array");
  if (list.size() > max_sync_batch_) {
    throw Error(ErrorCode::InvalidRequest,
                "batch of " + std::to_string(list.size()) + " exceeds the limit of " +
                    std::to_string(max_sync_batch_));
  }
  std::vector<SyncEnvelope> batch;
  batch.reserve(list.size());
  for (const auto& item : list) {
    auto env = envelope_from_json(item);
    if (env.center_id != center.center_id) {
      throw Error(ErrorCode::InvalidRequest,
                  "envelope from center '" + env.center_id + "' sent with another center's key");
    }
    batch.push_back(std::move(env));
  }
  auto outcome = central_->apply_sync_batch(batch);
  auto queued = notify_visits(outcome.accepted_events);
  auto j = to_json(outcome.result);
  j["sms_queued"] = queued;
  return json_response(200, j);
}

std::size_t ImmunizationService::notify_visits(const std::vector<VaccinationEvent>& accepted) {
  using VisitKey = std::tuple<std::string, std::string, long>;
  std::map<VisitKey, std::vector<VaccinationEvent>> visits;
  for (const auto& e : accepted) {
    visits[{e.child_uid.str(), e.center_id, e.administered_date.time_since_epoch().count()}]
        .push_back(e);
  }
  const auto& registry = central_->registry();
  std::size_t queued = 0;
  for (auto& [key, events] : visits) {
    if (notified_.count(key)) continue;
    auto child = registry.find_child(events.front().child_uid);
    if (!child || child->guardian_mobile.empty()) continue;
    std::sort(events.begin(), events.end(),
              [](const auto& a, const auto& b) { return a.key() < b.key(); });
    Date visit_day = events.front().administered_date;
    auto pending = pending_doses(child->date_of_birth, registry.dose_history(child->uid),
                                 visit_day, schedule());
    auto msg = compose_reminder(*child, events, pending, clock_());
    try {
      dispatcher_->enqueue(std::move(msg));
    } catch (const Error& e) {
      ++sms_dropped_;
      std::cerr << "imz: reminder for " << child->uid.str() << " dropped: " << e.what() << "\n";
      continue;
    }
    notified_.insert(key);
    ++queued;
  }
  sms_queued_ += queued;
  return queued;
}

SyncResult ServiceSyncTransport::push(const std::vector<SyncEnvelope>& batch) {
  json list = json::array();
  for (const auto& e : batch) list.push_back(to_json(e));
  ServiceRequest req{"POST", "/sync", {}, {{"X-Api-Key", api_key_}},
                     json{{"envelopes", list}}.dump()};
  auto resp = service_.handle(req);
  if (resp.status != 200) {
    throw Error(ErrorCode::TransportFailure,
                "sync returned HTTP " + std::to_string(resp.status) + ": " + resp.body);
  }
  return sync_result_from_json(json::parse(resp.body));
}

std::vector<CenterKey> load_center_keys(std::istream& in) {
  std::vector<CenterKey> out;
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
                   "center keys line " + std::to_string(lineno) + ": " + why);
    };
    if (cols.size() < 2 || cols.size() > 3) throw bad("expected center_id,key_sha256[,status]");
    auto hash = lower(cols[1]);
    bool hex = hash.size() == 64 && std::all_of(hash.begin(), hash.end(), [](char c) {
                 return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
               });
    if (!hex) throw bad("key_sha256 must be 64 hex digits");
    bool active = true;
    if (cols.size() == 3) {
      if (cols[2] == "INACTIVE") active = false;
      else if (cols[2] != "ACTIVE") throw bad("status must be ACTIVE or INACTIVE");
    }
    out.push_back(CenterKey{cols[0], hash, active});
  }
  return out;
}

ServiceConfig parse_service_config(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  ServiceConfig c;
  try {
    auto str = [&](const char* name) { return j.value(name, std::string()); };
    if (auto listen = str("listen"); !listen.empty()) {
      auto colon = listen.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::InvalidConfig, "listen must be host:port");
      }
      c.listen_host = listen.substr(0, colon);
      c.listen_port = std::stoi(listen.substr(colon + 1));
      if (c.listen_port < 0 || c.listen_port > 65535) {
        throw Error(ErrorCode::InvalidConfig, "listen port out of range");
      }
    }
    c.data_dir = resolve(base, str("data_dir"));
    c.schedule_file = resolve(base, str("schedule_file"));
    c.wastage_file = resolve(base, str("wastage_file"));
    c.center_registry = resolve(base, str("center_registry"));
    c.center_keys = resolve(base, str("center_keys"));
    c.identity_seed = resolve(base, str("identity_seed"));
    if (j.contains("sms")) {
      const auto& sms = j.at("sms");
      c.sms_gateway = sms.value("gateway", c.sms_gateway);
      c.sms_spool_dir = resolve(base, sms.value("spool_dir", std::string()));
    }
    if (c.sms_gateway != "spool" && c.sms_gateway != "stub") {
      throw Error(ErrorCode::InvalidConfig, "sms.gateway must be spool or stub");
    }
    if (j.contains("queues")) {
      const auto& q = j.at("queues");
      c.sms_queue_bound = q.value("sms", c.sms_queue_bound);
      c.max_sync_batch = q.value("sync_batch", c.max_sync_batch);
    }
    if (c.sms_queue_bound == 0 || c.max_sync_batch == 0) {
      throw Error(ErrorCode::InvalidConfig, "queue bounds must be positive");
    }
    c.uid_seed = j.value("uid_seed", c.uid_seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value: ") + e.what());
  }
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_service_config(j, path.parent_path());
}

std::unique_ptr<ImmunizationService> build_service(const ServiceConfig& cfg,
                                                   bool background_sms) {
  ServiceOptions o;
  if (!cfg.schedule_file.empty()) o.schedule = load_schedule_file(cfg.schedule_file.string());
  if (!cfg.wastage_file.empty()) o.wastage = load_wastage_rates_file(cfg.wastage_file.string());
  if (!cfg.data_dir.empty()) {
    std::filesystem::create_directories(cfg.data_dir);
    o.log_file = cfg.data_dir / "central.log";
  }
  o.uid_seed = cfg.uid_seed;
  if (cfg.sms_gateway == "spool") {
    auto dir = cfg.sms_spool_dir;
    if (dir.empty()) dir = (cfg.data_dir.empty() ? std::filesystem::path(".") : cfg.data_dir) / "sms";
    o.gateway = std::make_unique<FileSpoolGateway>(dir);
  } else {
    o.gateway = std::make_unique<StubGateway>();
  }
  o.sms_queue_bound = cfg.sms_queue_bound;
  o.max_sync_batch = cfg.max_sync_batch;
  o.background_sms = background_sms;
  auto svc = std::make_unique<ImmunizationService>(std::move(o));

  std::map<std::string, CenterKey> keys;
  if (!cfg.center_keys.empty()) {
    std::ifstream in(cfg.center_keys);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + cfg.center_keys.string());
    for (auto& k : load_center_keys(in)) keys[k.center_id] = k;
  }
  if (!cfg.center_registry.empty()) {
    std::ifstream in(cfg.center_registry);
    if (!in) {
      throw Error(ErrorCode::InvalidConfig, "cannot open " + cfg.center_registry.string());
    }
    for (auto center : load_center_registry(in)) {
      if (auto it = keys.find(center.center_id); it != keys.end()) {
        center.api_key_hash = it->second.key_sha256;
        center.active = it->second.active;
        keys.erase(it);
      }
      svc->add_center_hashed(center);
    }
  }
  if (!keys.empty()) {
    throw Error(ErrorCode::InvalidConfig,
                "key listed for unknown center '" + keys.begin()->first + "'");
  }
  if (!cfg.identity_seed.empty()) {
    std::ifstream in(cfg.identity_seed);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + cfg.identity_seed.string());
    for (auto& person : load_identity_seed(in)) svc->identity().add_person(std::move(person));
  }
  return svc;
}

}  // namespace imz
