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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imz/certificates.hpp"
#include "imz/event_log.hpp"
#include "imz/registry.hpp"
#include "imz/sync.hpp"

namespace imz {

struct SyncApplyOutcome {
  SyncResult result;
  /// Events that became the active record for a known child in this batch;
  /// they drive the reminder messages.
  std::vector<VaccinationEvent> accepted_events;
};

/// Everything the central registry persists: the registry proper,
/// certificates, and sync acknowledgements, all sharing one event log.
class CentralState {
 public:
  /// With a log file, existing records are replayed before new appends.
  explicit CentralState(ScheduleConfig schedule, Clock clock = wall_clock_now,
                        const std::optional<std::filesystem::path>& log_file = {});

  CentralState(const CentralState&) = delete;
  CentralState& operator=(const CentralState&) = delete;

  Registry& registry() noexcept { return registry_; }
  const Registry& registry() const noexcept { return registry_; }
  CertificateStore& certificates() noexcept { return certificates_; }
  const CertificateStore& certificates() const noexcept { return certificates_; }
  SyncLedger& sync_ledger() noexcept { return ledger_; }
  const EventLog& log() const noexcept { return *log_; }

  /// Applies a single-center batch through the registry's idempotency rules.
  /// Per-envelope failures are counted as rejections, never thrown.
  /// Throws Error(InvalidRequest) if the batch mixes centers.
  SyncApplyOutcome apply_sync_batch(const std::vector<SyncEnvelope>& batch);

  nlohmann::json snapshot() const;
  /// Deterministic serialization of snapshot().
  std::string snapshot_bytes() const;

  /// Rebuilds state from a central log. Throws CorruptRecordError.
  static std::unique_ptr<CentralState> replay_log(std::string_view bytes,
                                                  ScheduleConfig schedule);

 private:
  void apply(const LogRecord& record);

  std::unique_ptr<EventLog> log_;
  Registry registry_;
  CertificateStore certificates_;
  SyncLedger ledger_;
};

/// In-process transport straight into a CentralState.
class LocalSyncTransport : public SyncTransport {
 public:
  explicit LocalSyncTransport(CentralState& central) : central_(central) {}
  SyncResult push(const std::vector<SyncEnvelope>& batch) override {
    return central_.apply_sync_batch(batch).result;
  }

 private:
  CentralState& central_;
};

}  // namespace imz
