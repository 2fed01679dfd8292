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

#include "imz/notification.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "imz/error.hpp"

namespace imz {

using nlohmann::json;

std::string_view to_string(SmsStatus s) noexcept {
  switch (s) {
    case SmsStatus::Pending: return "PENDING";
    case SmsStatus::Sent: return "SENT";
    case SmsStatus::Failed: return "FAILED";
  }
  return "PENDING";
}

json to_json(const SmsMessage& m) {
  json attempts = json::array();
  for (const auto& a : m.attempts) {
    attempts.push_back({{"number", a.number}, {"ok", a.ok}, {"error", a.error}});
  }
  return {{"to", m.to},
          {"body", m.body},
          {"child_uid", m.child_uid.str()},
          {"created_at", format_timestamp(m.created_at)},
          {"attempt_count", m.attempt_count},
          {"status", to_string(m.status)},
          {"attempts", attempts}};
}

namespace {

std::string render(std::string_view name, const ChildRecord& child,
                   const std::string& given_list, const std::string& tail) {
  std::string body = "IMZ ";
  body += name;
  body += " UID ";
  body += child.uid.str();
  body += ": given ";
  body += given_list;
  body += tail;
  return body;
}

// Cuts a UTF-8 string to at most n bytes without splitting a code point.
std::string_view utf8_prefix(std::string_view s, std::size_t n) {
  if (s.size() <= n) return s;
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  return s.substr(0, n);
}

}  // namespace

SmsMessage compose_reminder(const ChildRecord& child,
                            const std::vector<VaccinationEvent>& given,
                            const std::vector<DueDose>& due, Timestamp created_at) {
  if (child.guardian_mobile.empty()) {
    throw Error(ErrorCode::MissingMobile,
                "child " + child.uid.str() + " has no guardian mobile on record");
  }
  if (given.empty()) {
    throw Error(ErrorCode::InvalidRequest, "a reminder needs at least one given dose");
  }
  std::string given_list;
  for (const auto& e : given) {
    if (!given_list.empty()) given_list.push_back(',');
    given_list += to_string(e.key());
  }
  std::string tail = "; schedule complete";
  if (!due.empty()) {
    auto earliest = std::min_element(due.begin(), due.end(), [](const auto& a, const auto& b) {
      return a.due_date < b.due_date;
    });
    tail = "; next due " + format_date(earliest->due_date);
  }
  std::string body = render(child.child_name, child, given_list, tail);
  if (body.size() > kMaxSmsBody) {
    std::size_t excess = body.size() - kMaxSmsBody;
    std::size_t keep = child.child_name.size() > excess ? child.child_name.size() - excess : 0;
    body = render(utf8_prefix(child.child_name, keep), child, given_list, tail);
    if (body.size() > kMaxSmsBody) body.resize(kMaxSmsBody);
  }
  return SmsMessage{child.guardian_mobile, std::move(body), child.uid, created_at,
                    0, SmsStatus::Pending, {}};
}

bool StubGateway::send(const SmsMessage& msg) {
  std::lock_guard lock(mu_);
  ++calls_;
  if (always_fail_ || calls_ <= fail_first_) return false;
  delivered_.push_back(msg);
  return true;
}

int StubGateway::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<SmsMessage> StubGateway::delivered() const {
  std::lock_guard lock(mu_);
  return delivered_;
}

FileSpoolGateway::FileSpoolGateway(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

bool FileSpoolGateway::send(const SmsMessage& msg) {
  std::lock_guard lock(mu_);
  auto stem = format_timestamp_compact(msg.created_at) + "-" + msg.child_uid.str();
  auto path = dir_ / (stem + ".sms");
  for (int n = 2; std::filesystem::exists(path); ++n) {
    path = dir_ / (stem + "-" + std::to_string(n) + ".sms");
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << msg.body;
    if (!out.flush()) return false;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) return false;
  ++written_;
  return true;
}

std::size_t FileSpoolGateway::written() const {
  std::lock_guard lock(mu_);
  return written_;
}

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds{0};
  double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt - 2);
  ms = std::min(ms, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds{static_cast<long long>(ms)};
}

Sleeper thread_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Sleeper no_sleep() {
  return [](std::chrono::milliseconds) {};
}

SmsMessage dispatch(SmsMessage msg, SmsGateway& gateway, const RetryPolicy& policy,
                    const Sleeper& sleep) {
  if (msg.status != SmsStatus::Pending) {
    throw Error(ErrorCode::InvalidRequest, "only PENDING messages can be dispatched");
  }
  while (msg.attempt_count < policy.max_attempts) {
    int attempt = msg.attempt_count + 1;
    if (attempt > 1) sleep(policy.delay_before(attempt));
    bool ok = false;
    std::string error;
    try {
      ok = gateway.send(msg);
      if (!ok) error = "gateway rejected message";
    } catch (const std::exception& e) {
      error = e.what();
    }
    msg.attempt_count = attempt;
    msg.attempts.push_back(SmsAttempt{attempt, ok, error});
    if (ok) {
      msg.status = SmsStatus::Sent;
      return msg;
    }
  }
  msg.status = SmsStatus::Failed;
  return msg;
}

SmsDispatcher::SmsDispatcher(SmsGateway& gateway, RetryPolicy policy,
                             std::size_t queue_bound, Sleeper sleep)
    : gateway_(gateway), policy_(policy), bound_(queue_bound), sleep_(std::move(sleep)) {}

SmsDispatcher::~SmsDispatcher() { stop(); }

void SmsDispatcher::enqueue(SmsMessage msg) {
  {
    std::lock_guard lock(mu_);
    if (queue_.size() >= bound_) {
      throw Error(ErrorCode::QueueFull, "SMS queue is full");
    }
    queue_.push_back(std::move(msg));
  }
  cv_.notify_one();
}

bool SmsDispatcher::deliver_one(std::unique_lock<std::mutex>& lock) {
  if (queue_.empty()) return false;
  auto msg = std::move(queue_.front());
  queue_.pop_front();
  ++in_flight_;
  lock.unlock();
  auto result = dispatch(std::move(msg), gateway_, policy_, sleep_);
  lock.lock();
  --in_flight_;
  done_.push_back(std::move(result));
  return true;
}

void SmsDispatcher::run() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    while (deliver_one(lock)) {
    }
    idle_cv_.notify_all();
    if (stopping_ && queue_.empty()) return;
  }
}

void SmsDispatcher::start() {
  std::lock_guard lock(mu_);
  if (worker_.joinable()) return;
  stopping_ = false;
  worker_ = std::thread([this] { run(); });
}

void SmsDispatcher::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  drain();
}

std::size_t SmsDispatcher::drain() {
  std::unique_lock lock(mu_);
  std::size_t n = 0;
  while (deliver_one(lock)) ++n;
  return n;
}

SmsDispatcher::Stats SmsDispatcher::stats() const {
  std::lock_guard lock(mu_);
  Stats s;
  for (const auto& m : done_) {
    if (m.status == SmsStatus::Sent) ++s.sent;
    else if (m.status == SmsStatus::Failed) ++s.failed;
  }
  s.pending = queue_.size() + in_flight_;
  return s;
}

std::vector<SmsMessage> SmsDispatcher::completed() const {
  std::lock_guard lock(mu_);
  return done_;
}

}  // namespace imz
