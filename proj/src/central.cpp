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

#include "imz/central.hpp"

#include "imz/error.hpp"

namespace imz {

using nlohmann::json;

CentralState::CentralState(ScheduleConfig schedule, Clock clock,
                           const std::optional<std::filesystem::path>& log_file)
    : log_(log_file ? std::make_unique<EventLog>(*log_file) : std::make_unique<EventLog>()),
      registry_(std::move(schedule), log_.get(), clock),
      certificates_(registry_, log_.get(), clock),
      ledger_(log_.get(), clock) {
  if (log_->record_count() > 0) {
    for (const auto& record : EventLog::decode(log_->bytes())) apply(record);
  }
}

void CentralState::apply(const LogRecord& record) {
  if (registry_.apply_record(record)) return;
  if (certificates_.apply_record(record)) return;
  if (ledger_.apply_record(record)) return;
  throw CorruptRecordError(record.offset, "unknown record type '" + record.type + "'");
}

SyncApplyOutcome CentralState::apply_sync_batch(const std::vector<SyncEnvelope>& batch) {
  SyncApplyOutcome out;
  if (batch.empty()) return out;
  const std::string& center = batch.front().center_id;
  for (const auto& e : batch) {
    if (e.center_id != center) {
      throw Error(ErrorCode::InvalidRequest, "a sync batch must come from a single center");
    }
  }
  std::vector<std::uint64_t> seqs;
  seqs.reserve(batch.size());
  auto& r = out.result;
  for (const auto& env : batch) {
    auto reject = [&](std::string code, std::string message) {
      ++r.rejected;
      r.rejections.push_back(
          SyncRejection{env.event_id, env.center_seq, std::move(code), std::move(message)});
    };
    if (env.center_seq == 0) {
      reject("INVALID_REQUEST", "center_seq must be positive");
      continue;
    }
    seqs.push_back(env.center_seq);
    try {
      if (env.kind == EnvelopeKind::RegisterChild) {
        bool inserted = false;
        registry_.register_child(child_from_json(env.payload), &inserted);
        ++(inserted ? r.accepted : r.duplicates);
        continue;
      }
      auto event = event_from_json(env.payload);
      if (event.event_id != env.event_id) {
        reject("INVALID_REQUEST", "envelope event_id differs from payload event_id");
        continue;
      }
      switch (registry_.ingest_vaccination(event)) {
        case RecordOutcome::Accepted:
          ++r.accepted;
          out.accepted_events.push_back(std::move(event));
          break;
        case RecordOutcome::Parked: ++r.accepted; break;
        case RecordOutcome::DuplicateIgnored: ++r.duplicates; break;
        case RecordOutcome::ConflictResolved: ++r.conflicts; break;
      }
    } catch (const Error& err) {
      if (err.code() == ErrorCode::UidConflict) {
        ++r.conflicts;
        continue;
      }
      reject(std::string(error_code_name(err.code())), err.what());
    }
  }
  r.last_acked_seq = ledger_.mark(center, seqs);
  return out;
}

json CentralState::snapshot() const {
  auto j = registry_.snapshot();
  j["certificates"] = certificates_.snapshot();
  j["sync"] = ledger_.snapshot();
  return j;
}

std::string CentralState::snapshot_bytes() const { return snapshot().dump(2) + "\n"; }

std::unique_ptr<CentralState> CentralState::replay_log(std::string_view bytes,
                                                       ScheduleConfig schedule) {
  auto records = EventLog::decode(bytes);
  auto state = std::make_unique<CentralState>(std::move(schedule));
  for (const auto& record : records) state->apply(record);
  return state;
}

}  // namespace imz
