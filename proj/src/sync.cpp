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

#include "imz/sync.hpp"

#include "imz/error.hpp"
#include "imz/json_util.hpp"

namespace imz {

using nlohmann::json;
namespace ju = json_util;

std::string_view to_string(EnvelopeKind k) noexcept {
  return k == EnvelopeKind::RegisterChild ? "REGISTER_CHILD" : "RECORD_VACCINATION";
}

json to_json(const SyncEnvelope& e) {
  return {{"event_id", e.event_id},
          {"center_id", e.center_id},
          {"center_seq", e.center_seq},
          {"kind", to_string(e.kind)},
          {"payload", e.payload},
          {"occurred_at", format_timestamp(e.occurred_at)}};
}

SyncEnvelope envelope_from_json(const json& j) {
  auto kind_text = ju::get_string(j, "kind");
  EnvelopeKind kind;
  if (kind_text == "REGISTER_CHILD") {
    kind = EnvelopeKind::RegisterChild;
  } else if (kind_text == "RECORD_VACCINATION") {
    kind = EnvelopeKind::RecordVaccination;
  } else {
    throw Error(ErrorCode::InvalidRequest, "unknown envelope kind '" + kind_text + "'");
  }
  auto seq = ju::get_int(j, "center_seq");
  if (seq < 0) throw Error(ErrorCode::InvalidRequest, "center_seq must be >= 0");
  return SyncEnvelope{ju::get_string(j, "event_id"),
                      ju::get_string(j, "center_id"),
                      static_cast<std::uint64_t>(seq),
                      kind,
                      ju::require(j, "payload"),
                      ju::get_timestamp(j, "occurred_at")};
}

json to_json(const SyncResult& r) {
  json rejections = json::array();
  for (const auto& x : r.rejections) {
    rejections.push_back({{"event_id", x.event_id},
                          {"center_seq", x.center_seq},
                          {"code", x.code},
                          {"message", x.message}});
  }
  return {{"accepted", r.accepted},         {"duplicates", r.duplicates},
          {"conflicts", r.conflicts},       {"rejected", r.rejected},
          {"last_acked_seq", r.last_acked_seq}, {"rejections", rejections}};
}

SyncResult sync_result_from_json(const json& j) {
  SyncResult r;
  r.accepted = static_cast<std::size_t>(ju::get_int(j, "accepted"));
  r.duplicates = static_cast<std::size_t>(ju::get_int(j, "duplicates"));
  r.conflicts = static_cast<std::size_t>(ju::get_int(j, "conflicts"));
  r.rejected = static_cast<std::size_t>(ju::get_int(j, "rejected"));
  r.last_acked_seq = static_cast<std::uint64_t>(ju::get_int(j, "last_acked_seq"));
  if (auto it = j.find("rejections"); it != j.end() && it->is_array()) {
    for (const auto& x : *it) {
      r.rejections.push_back(SyncRejection{
          ju::get_string(x, "event_id"), static_cast<std::uint64_t>(ju::get_int(x, "center_seq")),
          ju::get_string(x, "code"), ju::get_string_or(x, "message", "")});
    }
  }
  return r;
}

CenterNode::CenterNode(std::string center_id, std::size_t capacity)
    : center_id_(std::move(center_id)), capacity_(capacity) {}

std::uint64_t CenterNode::append_local(SyncEnvelope envelope) {
  std::lock_guard lock(mu_);
  if (queue_.size() >= capacity_) {
    throw Error(ErrorCode::QueueFull, "outbox of center '" + center_id_ + "' is full (" +
                                          std::to_string(capacity_) + " envelopes)");
  }
  envelope.center_id = center_id_;
  envelope.center_seq = next_seq_++;
  queue_.push_back(std::move(envelope));
  return queue_.back().center_seq;
}

std::vector<SyncEnvelope> CenterNode::outbox(std::uint64_t from_seq,
                                             std::size_t max_n) const {
  std::lock_guard lock(mu_);
  std::vector<SyncEnvelope> out;
  for (const auto& e : queue_) {
    if (out.size() >= max_n) break;
    if (e.center_seq >= from_seq) out.push_back(e);
  }
  return out;
}

void CenterNode::acknowledge(std::uint64_t seq) {
  std::lock_guard lock(mu_);
  if (seq <= acked_) return;
  acked_ = seq;
  while (!queue_.empty() && queue_.front().center_seq <= acked_) queue_.pop_front();
}

std::uint64_t CenterNode::last_acked_seq() const {
  std::lock_guard lock(mu_);
  return acked_;
}

std::uint64_t CenterNode::last_seq() const {
  std::lock_guard lock(mu_);
  return next_seq_ - 1;
}

std::size_t CenterNode::pending() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

SyncResult push_batch(CenterNode& node, SyncTransport& central, std::uint64_t from_seq,
                      std::size_t max_n) {
  auto batch = node.outbox(from_seq, max_n);
  if (batch.empty()) {
    SyncResult empty;
    empty.last_acked_seq = node.last_acked_seq();
    return empty;
  }
  auto result = central.push(batch);
  node.acknowledge(result.last_acked_seq);
  return result;
}

SyncResult drain_outbox(CenterNode& node, SyncTransport& central, std::size_t batch_size) {
  SyncResult total;
  total.last_acked_seq = node.last_acked_seq();
  std::uint64_t from = node.last_acked_seq() + 1;
  while (node.pending() > 0) {
    auto batch = node.outbox(from, batch_size);
    if (batch.empty()) break;
    auto r = central.push(batch);
    node.acknowledge(r.last_acked_seq);
    total.accepted += r.accepted;
    total.duplicates += r.duplicates;
    total.conflicts += r.conflicts;
    total.rejected += r.rejected;
    total.last_acked_seq = node.last_acked_seq();
    for (auto& x : r.rejections) total.rejections.push_back(std::move(x));
    from = batch.back().center_seq + 1;
  }
  return total;
}

SyncLedger::SyncLedger(EventLog* log, Clock clock) : log_(log), clock_(std::move(clock)) {}

std::uint64_t SyncLedger::mark_locked(const std::string& center_id,
                                      const std::vector<std::uint64_t>& seqs) {
  auto& p = progress_[center_id];
  for (auto s : seqs) {
    if (s > p.watermark) p.ahead.insert(s);
  }
  while (!p.ahead.empty() && *p.ahead.begin() == p.watermark + 1) {
    ++p.watermark;
    p.ahead.erase(p.ahead.begin());
  }
  while (!p.ahead.empty() && *p.ahead.begin() <= p.watermark) p.ahead.erase(p.ahead.begin());
  return p.watermark;
}

std::uint64_t SyncLedger::mark(const std::string& center_id,
                               const std::vector<std::uint64_t>& seqs) {
  std::lock_guard lock(mu_);
  auto w = mark_locked(center_id, seqs);
  if (log_ && !seqs.empty()) {
    log_->append("sync_acked", {{"center_id", center_id}, {"seqs", seqs}}, clock_());
  }
  return w;
}

std::uint64_t SyncLedger::last_acked(const std::string& center_id) const {
  std::lock_guard lock(mu_);
  auto it = progress_.find(center_id);
  return it == progress_.end() ? 0 : it->second.watermark;
}

json SyncLedger::snapshot() const {
  std::lock_guard lock(mu_);
  json out = json::object();
  for (const auto& [center, p] : progress_) {
    out[center] = {{"last_acked_seq", p.watermark},
                   {"ahead", std::vector<std::uint64_t>(p.ahead.begin(), p.ahead.end())}};
  }
  return out;
}

bool SyncLedger::apply_record(const LogRecord& record) {
  if (record.type != "sync_acked") return false;
  auto center = ju::get_string(record.payload, "center_id");
  auto seqs = ju::require(record.payload, "seqs").get<std::vector<std::uint64_t>>();
  std::lock_guard lock(mu_);
  mark_locked(center, seqs);
  return true;
}

}  // namespace imz
