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
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "imz/event_log.hpp"
#include "imz/time.hpp"

namespace imz {

enum class EnvelopeKind { RegisterChild, RecordVaccination };
std::string_view to_string(EnvelopeKind k) noexcept;

/// One replicated change queued at a health-center node.
struct SyncEnvelope {
  std::string event_id;
  std::string center_id;
  std::uint64_t center_seq = 0;  // assigned by CenterNode::append_local
  EnvelopeKind kind = EnvelopeKind::RecordVaccination;
  nlohmann::json payload;  // ChildRecord or VaccinationEvent JSON
  Timestamp occurred_at;

  friend bool operator==(const SyncEnvelope&, const SyncEnvelope&) = default;
};

nlohmann::json to_json(const SyncEnvelope& e);
SyncEnvelope envelope_from_json(const nlohmann::json& j);

struct SyncRejection {
  std::string event_id;
  std::uint64_t center_seq = 0;
  std::string code;
  std::string message;
};

/// accepted + duplicates + conflicts + rejected == batch size.
struct SyncResult {
  std::size_t accepted = 0;
  std::size_t duplicates = 0;
  std::size_t conflicts = 0;
  std::size_t rejected = 0;
  std::uint64_t last_acked_seq = 0;
  std::vector<SyncRejection> rejections;

  std::size_t total() const { return accepted + duplicates + conflicts + rejected; }
};

nlohmann::json to_json(const SyncResult& r);
SyncResult sync_result_from_json(const nlohmann::json& j);

inline constexpr std::size_t kDefaultSyncBatch = 100;
inline constexpr std::size_t kDefaultOutboxCapacity = 10000;

/// Bounded local outbox of one health center.
class CenterNode {
 public:
  explicit CenterNode(std::string center_id,
                      std::size_t capacity = kDefaultOutboxCapacity);

  const std::string& center_id() const noexcept { return center_id_; }

  /// Queues the envelope under this node's center id and the next sequence
  /// number, which is returned. Throws Error(QueueFull).
  std::uint64_t append_local(SyncEnvelope envelope);

  /// Up to max_n queued envelopes with center_seq >= from_seq.
  std::vector<SyncEnvelope> outbox(std::uint64_t from_seq, std::size_t max_n) const;

  /// Records central's acknowledgement and prunes everything at or below it.
  /// Lower values than the current watermark are ignored.
  void acknowledge(std::uint64_t seq);

  std::uint64_t last_acked_seq() const;
  std::uint64_t last_seq() const;
  std::size_t pending() const;

 private:
  std::string center_id_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<SyncEnvelope> queue_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t acked_ = 0;
};

/// Destination of a push; implementations apply the batch at central.
class SyncTransport {
 public:
  virtual ~SyncTransport() = default;
  /// Throws Error(TransportFailure); the batch may have been partly applied.
  virtual SyncResult push(const std::vector<SyncEnvelope>& batch) = 0;
};

/// Sends up to max_n envelopes starting at from_seq and prunes what central
/// acknowledged. An empty outbox yields an empty result.
SyncResult push_batch(CenterNode& node, SyncTransport& central, std::uint64_t from_seq,
                      std::size_t max_n = kDefaultSyncBatch);

/// Pushes batches until the outbox is empty; returns the summed counts.
SyncResult drain_outbox(CenterNode& node, SyncTransport& central,
                        std::size_t batch_size = kDefaultSyncBatch);

/// Central-side record of which center sequence numbers have been applied.
/// The watermark per center is the largest seq with every seq <= it seen.
class SyncLedger {
 public:
  explicit SyncLedger(EventLog* log = nullptr, Clock clock = wall_clock_now);

  /// Marks a processed batch and returns the center's new watermark.
  std::uint64_t mark(const std::string& center_id, const std::vector<std::uint64_t>& seqs);
  std::uint64_t last_acked(const std::string& center_id) const;

  nlohmann::json snapshot() const;
  bool apply_record(const LogRecord& record);

 private:
  struct Progress {
    std::uint64_t watermark = 0;
    std::set<std::uint64_t> ahead;
  };
  std::uint64_t mark_locked(const std::string& center_id,
                            const std::vector<std::uint64_t>& seqs);

  EventLog* log_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, Progress> progress_;
};

}  // namespace imz
