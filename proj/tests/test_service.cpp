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
#include <set>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "imz/crypto.hpp"
#include "imz/error.hpp"
#include "imz/service.hpp"
#include "service_harness.hpp"

using namespace imz;
using fixtures::body;
using fixtures::error_code;
using fixtures::Harness;
using fixtures::kKeyA;
using fixtures::kKeyB;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("imz-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

json doses(std::initializer_list<json> list) { return json{{"doses", json(list)}}; }

}  // namespace

TEST(Status, ErrorCodeMapping) {
  EXPECT_EQ(http_status(ErrorCode::Unauthenticated), 401);
  EXPECT_EQ(http_status(ErrorCode::UnknownChild), 404);
  EXPECT_EQ(http_status(ErrorCode::ConflictIdempotency), 409);
  EXPECT_EQ(http_status(ErrorCode::UidConflict), 409);
  EXPECT_EQ(http_status(ErrorCode::GuardianUnverified), 422);
  EXPECT_EQ(http_status(ErrorCode::QueueFull), 503);
  EXPECT_EQ(http_status(ErrorCode::InvalidRequest), 400);
  EXPECT_EQ(http_status(ErrorCode::Internal), 500);
  for (int i = 0; i <= static_cast<int>(ErrorCode::Internal); ++i) {
    auto code = static_cast<ErrorCode>(i);
    EXPECT_EQ(parse_error_code(error_code_name(code)), code);
  }
  auto r = error_response(ErrorCode::NotFound, "nope");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(body(r)["error"]["code"], "NOT_FOUND");
  EXPECT_EQ(body(r)["error"]["message"], "nope");
}

TEST(Auth, HealthNeedsNoKey) {
  Harness h;
  auto r = h.call("GET", "/healthz", "", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(body(r)["status"], "ok");
}

TEST(Auth, MissingWrongAndInactiveKeys) {
  Harness h;
  auto missing = h.call("GET", "/centers/A/due-list", "", "");
  EXPECT_EQ(missing.status, 401);
  EXPECT_EQ(error_code(missing), "UNAUTHENTICATED");
  EXPECT_EQ(h.call("GET", "/centers/A/due-list", "", "key-wrong").status, 401);
  EXPECT_EQ(h.call("GET", "/centers/A/due-list", "", fixtures::kKeyOff).status, 401);
  EXPECT_EQ(h.call("GET", "/centers/A/due-list").status, 200);
}

TEST(Auth, BearerTokenAccepted) {
  Harness h;
  ServiceRequest r{"GET", "/centers/A/due-list", {}, {{"authorization", "Bearer " + kKeyA}}, ""};
  EXPECT_EQ(h.service->handle(r).status, 200);
  EXPECT_EQ(h.service->authenticate(kKeyB).center_id, "B");
}

TEST(Routing, UnknownRouteAndBadJson) {
  Harness h;
  EXPECT_EQ(h.call("GET", "/nowhere").status, 404);
  auto bad = h.call("POST", "/registrations", "{oops");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(error_code(bad), "INVALID_REQUEST");
}

TEST(GuardianVerify, Results) {
  Harness h;
  auto ask = [&](const std::string& uid, const std::string& name) {
    return body(h.call("POST", "/guardians/verify", json{{"uid", uid}, {"name", name}}.dump()))
        .at("result")
        .get<std::string>();
  };
  EXPECT_EQ(ask(fixtures::guardian_uid().str(), "ASHA devi"), "VERIFIED");
  EXPECT_EQ(ask(fixtures::guardian_uid().str(), "Rekha Devi"), "NAME_MISMATCH");
  EXPECT_EQ(ask(fixtures::make_uid(5).str(), "Asha Devi"), "UNKNOWN_UID");
  EXPECT_EQ(h.call("POST", "/guardians/verify", json{{"uid", "123"}, {"name", "x"}}.dump()).status, 400);
}

TEST(Registration, CreatesChildAndCertificate) {
  Harness h;
  auto r = h.call("POST", "/registrations", h.registration("r1", "2025-05-30").dump());
  ASSERT_EQ(r.status, 201) << r.body;
  auto j = body(r);
  auto uid = j.at("uid").get<std::string>();
  EXPECT_TRUE(validate_uid(uid));
  EXPECT_EQ(j["child"]["registered_center"], "A");
  EXPECT_EQ(j["child"]["zone_id"], "Z1");
  EXPECT_EQ(j["child"]["guardian_mobile"], "+919812345678");  // from the directory
  EXPECT_EQ(j["certificate"]["child_uid"], uid);
  EXPECT_EQ(j["certificate"]["issuing_center"], "A");

  auto again = h.call("POST", "/registrations", h.registration("r1", "2025-05-30").dump());
  EXPECT_EQ(again.status, 200);
  EXPECT_EQ(body(again)["uid"], uid);
  EXPECT_EQ(h.service->central().registry().child_count(), 1u);
}

TEST(Registration, Failures) {
  Harness h;
  auto reg = h.registration("r1", "2025-05-30");
  reg["guardian"]["name"] = "Rekha Devi";
  auto r = h.call("POST", "/registrations", reg.dump());
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(error_code(r), "GUARDIAN_UNVERIFIED");

  auto other = h.registration("r2", "2025-05-30", "B");
  EXPECT_EQ(h.call("POST", "/registrations", other.dump()).status, 400);

  auto future = h.registration("r3", "2025-06-02");
  EXPECT_EQ(h.call("POST", "/registrations", future.dump()).status, 400);

  auto changed = h.registration("r4", "2025-05-30");
  ASSERT_EQ(h.call("POST", "/registrations", changed.dump()).status, 201);
  changed["child_name"] = "Renamed";
  auto dup = h.call("POST", "/registrations", changed.dump());
  EXPECT_EQ(dup.status, 409);
  EXPECT_EQ(error_code(dup), "DUPLICATE_REQUEST_CONFLICT");
}

TEST(Registration, GuardianWithoutMobileStillRegisters) {
  Harness h;
  auto reg = h.registration("r1", "2025-05-30");
  reg["guardian"] = {{"uid", fixtures::guardian2_uid().str()}, {"name", "Ramesh Kumar"}};
  auto r = h.call("POST", "/registrations", reg.dump());
  ASSERT_EQ(r.status, 201);
  auto uid = body(r)["uid"].get<std::string>();
  auto v = h.call("POST", "/children/" + uid + "/vaccinations",
                  doses({Harness::dose("BCG", 1, "2025-05-30")}).dump());
  EXPECT_EQ(v.status, 201);
  EXPECT_EQ(body(v)["sms_queued"], 0);
}

TEST(Idempotency, ReplayAndConflict) {
  Harness h;
  auto payload = h.registration("r1", "2025-05-30").dump();
  auto first = h.call("POST", "/registrations", payload, kKeyA, "idem-1");
  ASSERT_EQ(first.status, 201);
  auto second = h.call("POST", "/registrations", payload, kKeyA, "idem-1");
  EXPECT_EQ(second.status, 201);
  EXPECT_EQ(second.body, first.body);

  auto different = h.registration("r2", "2025-05-30").dump();
  auto clash = h.call("POST", "/registrations", different, kKeyA, "idem-1");
  EXPECT_EQ(clash.status, 409);
  EXPECT_EQ(error_code(clash), "CONFLICT_IDEMPOTENCY");

  // Keys are scoped per center.
  auto b = h.call("POST", "/registrations", h.registration("r9", "2025-05-30", "B").dump(), kKeyB,
                  "idem-1");
  EXPECT_EQ(b.status, 201);
}

TEST(Idempotency, FailuresAreNotStored) {
  Harness h;
  auto reg = h.registration("r1", "2025-05-30");
  reg["guardian"]["name"] = "Nobody";
  EXPECT_EQ(h.call("POST", "/registrations", reg.dump(), kKeyA, "k").status, 422);
  EXPECT_EQ(h.call("POST", "/registrations", h.registration("r1", "2025-05-30").dump(), kKeyA, "k").status,
            201);
}

TEST(Vaccinations, AcceptDuplicateAndReminder) {
  Harness h;
  auto uid = h.register_child("r1", "2025-05-30");
  auto path = "/children/" + uid + "/vaccinations";
  auto payload = doses({Harness::dose("BCG", 1, "2025-05-30"), Harness::dose("OPV", 0, "2025-05-30"),
                        Harness::dose("HEPB", 1, "2025-05-30")})
                     .dump();
  auto r = h.call("POST", path, payload);
  ASSERT_EQ(r.status, 201) << r.body;
  auto j = body(r);
  ASSERT_EQ(j["results"].size(), 3u);
  for (const auto& x : j["results"]) EXPECT_EQ(x["outcome"], "ACCEPTED");
  EXPECT_EQ(j["sms_queued"], 1);
  EXPECT_EQ(j["results"][0]["event_id"], "A:" + uid + ":BCG-1:2025-05-30");

  auto again = h.call("POST", path, payload);
  EXPECT_EQ(again.status, 200);
  for (const auto& x : body(again)["results"]) EXPECT_EQ(x["outcome"], "DUPLICATE_IGNORED");
  EXPECT_EQ(body(again)["sms_queued"], 0);

  h.service->sms().drain();
  auto& stub = static_cast<StubGateway&>(h.service->gateway());
  auto sent = stub.delivered();
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(sent[0].body, "IMZ Baby Devi UID " + uid + ": given BCG-1,OPV-0,HEPB-1; next due 2025-07-11");
  EXPECT_EQ(sent[0].to, "+919812345678");
}

TEST(Vaccinations, RequestIsAtomic) {
  Harness h;
  auto uid = h.register_child("r1", "2025-05-30");
  auto path = "/children/" + uid + "/vaccinations";
  auto bad = h.call("POST", path,
                    doses({Harness::dose("BCG", 1, "2025-05-30"), Harness::dose("BCG", 9, "2025-05-30")})
                        .dump());
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(error_code(bad), "UNKNOWN_DOSE");
  EXPECT_EQ(h.service->central().registry().event_count(), 0u);

  auto early = h.call("POST", path, doses({Harness::dose("BCG", 1, "2025-05-01")}).dump());
  EXPECT_EQ(error_code(early), "DATE_BEFORE_BIRTH");
  auto twice = h.call("POST", path,
                      doses({Harness::dose("BCG", 1, "2025-05-30"), Harness::dose("BCG", 1, "2025-05-31")})
                          .dump());
  EXPECT_EQ(twice.status, 400);
  auto polio = h.call("POST", path, doses({Harness::dose("POLIO", 1, "2025-05-30")}).dump());
  EXPECT_EQ(error_code(polio), "UNKNOWN_DOSE");
  auto future = h.call("POST", path, doses({Harness::dose("BCG", 1, "2025-06-05")}).dump());
  EXPECT_EQ(future.status, 400);
  EXPECT_EQ(h.service->central().registry().event_count(), 0u);
}

TEST(Vaccinations, UnknownAndMalformedChild) {
  Harness h;
  auto unknown = h.call("POST", "/children/" + fixtures::make_uid(3).str() + "/vaccinations",
                        doses({Harness::dose("BCG", 1, "2025-05-30")}).dump());
  EXPECT_EQ(unknown.status, 404);
  EXPECT_EQ(error_code(unknown), "UNKNOWN_CHILD");
  auto bad = h.call("GET", "/children/12345/history");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(error_code(bad), "INVALID_UID");
}

TEST(History, RoundTripAndCrossCenter) {
  Harness h;
  auto uid = h.register_child("r1", "2025-05-30");
  auto path = "/children/" + uid + "/vaccinations";
  ASSERT_EQ(h.call("POST", path, doses({Harness::dose("BCG", 1, "2025-05-30")}).dump()).status, 201);
  h.now = fixtures::at("2025-07-12T10:00:00Z");
  auto at_b = h.call("POST", path, doses({Harness::dose("OPV", 1, "2025-07-12")}).dump(), kKeyB);
  ASSERT_EQ(at_b.status, 201) << at_b.body;
  // A later duplicate BCG-1 at B is kept only as superseded.
  auto dup = h.call("POST", path, doses({Harness::dose("BCG", 1, "2025-07-12")}).dump(), kKeyB);
  EXPECT_EQ(body(dup)["results"][0]["outcome"], "CONFLICT_RESOLVED");

  auto hist = body(h.call("GET", "/children/" + uid + "/history", "", kKeyB));
  ASSERT_EQ(hist["events"].size(), 2u);
  EXPECT_EQ(hist["events"][0]["center_id"], "A");
  EXPECT_EQ(hist["events"][0]["batch_id"], "LOT-7");
  EXPECT_EQ(hist["events"][0]["administered_date"], "2025-05-30");
  EXPECT_EQ(hist["events"][1]["center_id"], "B");
  EXPECT_EQ(hist["child"]["uid"], uid);
  auto all = body(h.call("GET", "/children/" + uid + "/history", "", kKeyA, "",
                         {{"include_superseded", "true"}}));
  EXPECT_EQ(all["events"].size(), 3u);

  auto direct = h.service->central().registry().vaccination_history(Uid::from_string(uid));
  EXPECT_EQ(to_json(direct.events[0].event), [&] {
    auto e = hist["events"][0];
    e.erase("superseded");
    return e;
  }());
}

TEST(NextDue, Endpoint) {
  Harness h;
  auto uid = h.register_child("r1", "2025-05-30");
  h.call("POST", "/children/" + uid + "/vaccinations",
         doses({Harness::dose("BCG", 1, "2025-05-30"), Harness::dose("OPV", 0, "2025-05-30"),
                Harness::dose("HEPB", 1, "2025-05-30")})
             .dump());
  auto r = body(h.call("GET", "/children/" + uid + "/next-due", "", kKeyA, "", {{"date", "2025-07-11"}}));
  EXPECT_EQ(r["as_of"], "2025-07-11");
  EXPECT_EQ(r["fully_immunized"], false);
  ASSERT_EQ(r["due"].size(), 3u);
  EXPECT_EQ(r["due"][0]["vaccine"], "OPV");
  EXPECT_EQ(r["due"][0]["due_date"], "2025-07-11");
  EXPECT_EQ(r["due"][0]["status"], "DUE");
  EXPECT_EQ(r["pending"].size(), 10u);
}

TEST(Certificates, FetchAndVerify) {
  Harness h;
  auto uid = h.register_child("r1", "2025-05-30");
  auto cert = h.call("GET", "/children/" + uid + "/certificate");
  ASSERT_EQ(cert.status, 200);
  auto doc = body(cert);
  EXPECT_EQ(body(h.call("POST", "/certificates/verify", doc.dump()))["status"], "VALID");
  doc["child_name"] = "Forged";
  EXPECT_EQ(body(h.call("POST", "/certificates/verify", doc.dump()))["status"], "HASH_MISMATCH");
  doc["certificate_id"] = "BC-X";
  EXPECT_EQ(body(h.call("POST", "/certificates/verify", doc.dump()))["status"], "UNKNOWN_CERTIFICATE");
  EXPECT_EQ(h.call("GET", "/children/" + fixtures::make_uid(8).str() + "/certificate").status, 404);
}

TEST(DueList, Endpoint) {
  Harness h;
  auto uid = h.register_child("r1", "2025-05-30");
  auto r = body(h.call("GET", "/centers/A/due-list", "", kKeyA, "", {{"date", "2025-05-30"}}));
  ASSERT_EQ(r["children"].size(), 1u);
  EXPECT_EQ(r["children"][0]["uid"], uid);
  EXPECT_EQ(r["children"][0]["due"].size(), 3u);
  EXPECT_TRUE(body(h.call("GET", "/centers/B/due-list", "", kKeyA, "", {{"date", "2025-05-30"}}))["children"].empty());
  EXPECT_EQ(h.call("GET", "/centers/NOPE/due-list").status, 404);
}

TEST(Reports, Endpoints) {
  Harness h;
  h.now = fixtures::at("2025-06-01T09:00:00Z");
  for (int i = 0; i < 4; ++i) h.register_child("r" + std::to_string(i), "2025-05-2" + std::to_string(i));
  auto cov = h.call("GET", "/reports/coverage", "", kKeyA, "",
                    {{"from", "2025-05-01"}, {"to", "2025-05-31"}, {"format", "csv"}});
  ASSERT_EQ(cov.status, 200) << cov.body;
  EXPECT_EQ(cov.content_type, "text/csv");
  EXPECT_NE(cov.body.find("ALL,2025-05-01,2025-05-31,4,0,0.000000"), std::string::npos) << cov.body;

  auto empty = h.call("GET", "/reports/coverage", "", kKeyA, "", {{"date", "2025-06-01"}});
  EXPECT_EQ(empty.status, 422);
  EXPECT_EQ(error_code(empty), "EMPTY_COHORT");

  auto drop = h.call("GET", "/reports/dropout", "", kKeyA, "", {{"from", "2025-05-01"}, {"to", "2025-05-31"}});
  EXPECT_EQ(error_code(drop), "NO_STARTERS");

  auto dem = body(h.call("GET", "/reports/demand", "", kKeyA, "", {{"zone", "Z1"}, {"expected_cohort", "1000"}}));
  EXPECT_EQ(dem["per_vaccine"]["BCG"]["doses_required"], 2565);
  auto counted = body(h.call("GET", "/reports/demand", "", kKeyA, "",
                             {{"from", "2025-05-01"}, {"to", "2025-05-31"}}));
  EXPECT_EQ(counted["expected_cohort"], 4);

  auto mun = h.call("GET", "/reports/municipal", "", kKeyA, "", {{"from", "2025-06-01"}, {"to", "2025-06-01"}});
  EXPECT_EQ(body(mun)["registrations"].size(), 4u);
  EXPECT_EQ(h.call("GET", "/reports/municipal").status, 400);
  EXPECT_EQ(h.call("GET", "/reports/unknown").status, 404);
  EXPECT_EQ(h.call("GET", "/reports/coverage", "", kKeyA, "", {{"format", "xml"}}).status, 400);
}

TEST(Sync, EndpointAppliesBatches) {
  Harness h;
  auto uid = h.register_child("r1", "2025-05-30");
  h.service->sms().drain();
  CenterNode node("B");
  auto ev = fixtures::make_event("B-1", Uid::from_string(uid), {Vaccine::BCG, 1},
                                 fixtures::day("2025-05-31"), "B");
  SyncEnvelope env{ev.event_id, "B", 0, EnvelopeKind::RecordVaccination, to_json(ev), ev.recorded_at};
  node.append_local(env);
  ServiceSyncTransport transport(*h.service, kKeyB);
  auto r = drain_outbox(node, transport);
  EXPECT_EQ(r.accepted, 1u);
  EXPECT_EQ(r.last_acked_seq, 1u);
  EXPECT_EQ(h.service->sms_queued(), 1u);

  // Same envelope again: no second reminder.
  env.center_seq = 1;
  auto again = transport.push({env});
  EXPECT_EQ(again.duplicates, 1u);
  EXPECT_EQ(h.service->sms_queued(), 1u);

  // Envelopes must come from the calling center.
  ServiceSyncTransport wrong(*h.service, kKeyA);
  auto e2 = env;
  e2.center_seq = 2;
  EXPECT_THROW(wrong.push({e2}), Error);
  auto raw = h.call("POST", "/sync", json::array({to_json(e2)}).dump(), kKeyA);
  EXPECT_EQ(raw.status, 400);
}

TEST(Sync, BatchLimit) {
  ServiceOptions o;
  o.max_sync_batch = 2;
  Harness h(std::move(o));
  json list = json::array();
  for (int i = 1; i <= 3; ++i) {
    SyncEnvelope e;
    e.event_id = "x" + std::to_string(i);
    e.center_id = "A";
    e.center_seq = static_cast<std::uint64_t>(i);
    e.occurred_at = h.now;
    list.push_back(to_json(e));
  }
  auto r = h.call("POST", "/sync", json{{"envelopes", list}}.dump());
  EXPECT_EQ(r.status, 400);
}

TEST(Concurrency, ParallelRegistrationsGetDistinctUids) {
  Harness h;
  std::vector<std::string> uids(40);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = t; i < 40; i += 4) {
        uids[i] = h.register_child("req-" + std::to_string(i % 30), "2025-05-30");
      }
    });
  }
  for (auto& th : threads) th.join();
  std::set<std::string> distinct(uids.begin(), uids.end());
  EXPECT_EQ(distinct.size(), 30u);
  EXPECT_FALSE(distinct.count(""));
  EXPECT_EQ(h.service->central().registry().child_count(), 30u);
}

TEST(Persistence, RestartReplaysLogAndKeepsUidsReserved) {
  auto dir = temp_dir("svc-restart");
  std::string uid, snapshot;
  {
    ServiceOptions o;
    o.log_file = dir / "central.log";
    o.uid_seed = 5;
    Harness h(std::move(o));
    uid = h.register_child("r1", "2025-05-30");
    h.call("POST", "/children/" + uid + "/vaccinations",
           doses({Harness::dose("BCG", 1, "2025-05-30")}).dump());
    snapshot = h.service->central().snapshot_bytes();
  }
  ServiceOptions o;
  o.log_file = dir / "central.log";
  o.uid_seed = 5;  // same seed would redraw the same first UID
  Harness h(std::move(o));
  EXPECT_EQ(h.service->central().snapshot_bytes(), snapshot);
  auto next = h.register_child("r2", "2025-05-30");
  EXPECT_NE(next, uid);
  EXPECT_EQ(h.service->central().registry().child_count(), 2u);
}

TEST(Config, CenterKeysFile) {
  std::istringstream in("# comment\ncenter_id,key_sha256,status\nA," + sha256_hex("k") +
                        "\nB," + sha256_hex("j") + ",INACTIVE\n");
  auto keys = load_center_keys(in);
  ASSERT_EQ(keys.size(), 2u);
  EXPECT_TRUE(keys[0].active);
  EXPECT_FALSE(keys[1].active);
  std::istringstream bad("A,abc\n");
  EXPECT_THROW(load_center_keys(bad), Error);
}

TEST(Config, ExampleConfigBuildsAService) {
  auto cfg = load_service_config(std::string(IMZ_DATA_DIR) + "/service.example.json");
  EXPECT_EQ(cfg.listen_host, "127.0.0.1");
  EXPECT_EQ(cfg.listen_port, 8080);
  EXPECT_TRUE(cfg.center_keys.is_absolute());
  auto dir = temp_dir("svc-config");
  cfg.data_dir = dir;
  cfg.sms_spool_dir = dir / "sms";
  auto svc = build_service(cfg, false);
  EXPECT_EQ(svc->central().registry().centers().size(), 4u);
  EXPECT_EQ(svc->authenticate("key-Z1-C1").center_id, "Z1-C1");
  EXPECT_THROW(svc->authenticate("key-Z2-C2"), Error);  // listed INACTIVE
  EXPECT_EQ(svc->identity().verify_guardian({Uid::from_string("234567890124"), "Asha Devi", "",
                                             GuardianType::Parent}),
            VerificationResult::Verified);
}

TEST(Config, Rejections) {
  auto expect_invalid = [](const json& j) {
    try {
      parse_service_config(j, "/tmp");
      ADD_FAILURE() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
  };
  expect_invalid(json::array());
  expect_invalid({{"listen", "localhost"}});
  expect_invalid({{"listen", "localhost:99999"}});
  expect_invalid({{"sms", {{"gateway", "carrier-pigeon"}}}});
  expect_invalid({{"queues", {{"sms", 0}}}});
}
