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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "imz/analytics.hpp"
#include "imz/central.hpp"
#include "imz/error.hpp"
#include "imz/identity.hpp"
#include "imz/notification.hpp"
#include "imz/sync.hpp"

namespace imz {

struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // looked up case-insensitively
  std::string body;

  const std::string* header(std::string_view name) const;
  const std::string* param(std::string_view name) const;
};

struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP status for each error code.
int http_status(ErrorCode code) noexcept;
/// `{"error":{"code":...,"message":...}}`
ServiceResponse error_response(ErrorCode code, const std::string& message);

struct ServiceOptions {
  ScheduleConfig schedule = default_schedule();
  WastageRates wastage = default_wastage_rates();
  Clock clock = wall_clock_now;
  /// Central event log; replayed on start when it already has records.
  std::optional<std::filesystem::path> log_file;
  std::uint64_t uid_seed = 0x1d5eedULL;
  /// Defaults to a StubGateway.
  std::unique_ptr<SmsGateway> gateway;
  RetryPolicy retry;
  Sleeper sleeper = thread_sleeper();
  std::size_t sms_queue_bound = 10'000;
  std::size_t max_sync_batch = 1'000;
  /// Deliver SMS on a worker thread. When false, call sms().drain().
  bool background_sms = false;
};

/// The central immunization service. handle() is safe to call from many
/// threads: reads run concurrently, mutating requests are serialized so each
/// one validates and applies as a unit.
class ImmunizationService {
 public:
  explicit ImmunizationService(ServiceOptions options);
  ~ImmunizationService();

  ImmunizationService(const ImmunizationService&) = delete;
  ImmunizationService& operator=(const ImmunizationService&) = delete;

  IdentityStore& identity() noexcept { return identity_; }
  CentralState& central() noexcept { return *central_; }
  SmsDispatcher& sms() noexcept { return *dispatcher_; }
  SmsGateway& gateway() noexcept { return *gateway_; }
  const ScheduleConfig& schedule() const noexcept { return central_->registry().schedule(); }

  /// Stores the center with the SHA-256 of `api_key`.
  void add_center(CenterRecord center, std::string_view api_key);
  /// Stores the center as given (api_key_hash already filled in).
  void add_center_hashed(const CenterRecord& center);

  /// Throws Error(Unauthenticated) for unknown keys and inactive centers.
  CenterRecord authenticate(std::string_view api_key) const;

  ServiceResponse handle(const ServiceRequest& request);

  /// Reminders handed to the dispatcher so far.
  std::size_t sms_queued() const;
  /// Reminders lost because the SMS queue was full.
  std::size_t sms_dropped() const;

  /// Delivers queued SMS and stops the worker.
  void shutdown();

 private:
  struct StoredResponse {
    std::string fingerprint;
    ServiceResponse response;
  };

  ServiceResponse route(const ServiceRequest& req, const CenterRecord& center);
  ServiceResponse post_guardian_verify(const ServiceRequest& req);
  ServiceResponse post_registration(const ServiceRequest& req, const CenterRecord& center);
  ServiceResponse post_vaccinations(const ServiceRequest& req, const CenterRecord& center,
                                    const std::string& uid_text);
  ServiceResponse get_history(const ServiceRequest& req, const std::string& uid_text) const;
  ServiceResponse get_next_due(const ServiceRequest& req, const std::string& uid_text) const;
  ServiceResponse get_certificate(const std::string& uid_text) const;
  ServiceResponse post_certificate_verify(const ServiceRequest& req) const;
  ServiceResponse get_due_list(const ServiceRequest& req, const std::string& center_id) const;
  ServiceResponse get_report(const ServiceRequest& req, const std::string& kind) const;
  ServiceResponse post_sync(const ServiceRequest& req, const CenterRecord& center);

  /// One reminder per visit (child, center, administered date) not yet
  /// notified. Returns how many were queued.
  std::size_t notify_visits(const std::vector<VaccinationEvent>& accepted);

  Clock clock_;
  std::size_t max_sync_batch_;
  WastageRates wastage_;
  IdentityStore identity_;
  std::unique_ptr<CentralState> central_;
  std::unique_ptr<SmsGateway> gateway_;
  std::unique_ptr<SmsDispatcher> dispatcher_;

  std::mutex write_mu_;
  std::map<std::string, StoredResponse> idempotency_;
  std::set<std::tuple<std::string, std::string, long>> notified_;
  std::atomic<std::size_t> sms_queued_{0};
  std::atomic<std::size_t> sms_dropped_{0};
};

/// Loopback transport for center nodes that talks to a service in-process,
/// through the same JSON request path as HTTP clients.
class ServiceSyncTransport : public SyncTransport {
 public:
  ServiceSyncTransport(ImmunizationService& service, std::string api_key)
      : service_(service), api_key_(std::move(api_key)) {}
  SyncResult push(const std::vector<SyncEnvelope>& batch) override;

 private:
  ImmunizationService& service_;
  std::string api_key_;
};

struct CenterKey {
  std::string center_id;
  std::string key_sha256;
  bool active = true;
};

/// Reads `center_id,key_sha256[,status]` lines where status is ACTIVE
/// (default) or INACTIVE. Throws Error(ParseError).
std::vector<CenterKey> load_center_keys(std::istream& in);

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::filesystem::path data_dir;
  std::filesystem::path schedule_file;
  std::filesystem::path wastage_file;
  std::filesystem::path center_registry;
  std::filesystem::path center_keys;
  std::filesystem::path identity_seed;
  std::string sms_gateway = "spool";  // spool | stub
  std::filesystem::path sms_spool_dir;
  std::size_t sms_queue_bound = 10'000;
  std::size_t max_sync_batch = 1'000;
  std::uint64_t uid_seed = 0x1d5eedULL;
};

/// Relative paths resolve against `base_dir`. Throws Error(InvalidConfig).
ServiceConfig parse_service_config(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);
ServiceConfig load_service_config(const std::filesystem::path& path);

/// Loads every file named by the config and seeds centers and identities.
std::unique_ptr<ImmunizationService> build_service(const ServiceConfig& cfg,
                                                   bool background_sms = true);

}  // namespace imz
