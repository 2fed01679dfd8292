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

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "imz/registry.hpp"
#include "imz/schedule.hpp"

namespace imz {

inline constexpr std::size_t kMaxSmsBody = 320;

enum class SmsStatus { Pending, Sent, Failed };
std::string_view to_string(SmsStatus s) noexcept;

struct SmsAttempt {
  int number = 0;
  bool ok = false;
  std::string error;
};

struct SmsMessage {
  std::string to;
  std::string body;
  Uid child_uid;
  Timestamp created_at;
  int attempt_count = 0;
  SmsStatus status = SmsStatus::Pending;
  std::vector<SmsAttempt> attempts;
};

nlohmann::json to_json(const SmsMessage& m);

/// Renders the reminder sent after a vaccination visit:
///   `IMZ {child_name} UID {uid}: given {BCG-1,OPV-0}; next due {YYYY-MM-DD}`
/// or, with nothing pending, `...: given {list}; schedule complete`.
/// The next-due date is the earliest due_date in `due`. Bodies longer than
/// kMaxSmsBody have the child name shortened.
/// Throws Error(MissingMobile) or Error(InvalidRequest) when `given` is empty.
SmsMessage compose_reminder(const ChildRecord& child,
                            const std::vector<VaccinationEvent>& given,
                            const std::vector<DueDose>& due, Timestamp created_at);

class SmsGateway {
 public:
  virtual ~SmsGateway() = default;
  /// Returns false (or throws) when delivery failed and may be retried.
  virtual bool send(const SmsMessage& msg) = 0;
};

/// Scripted in-memory gateway for tests: fails the first `fail_first` calls
/// (every call when `always_fail`), succeeds afterwards.
class StubGateway : public SmsGateway {
 public:
  explicit StubGateway(int fail_first = 0, bool always_fail = false)
      : fail_first_(fail_first), always_fail_(always_fail) {}

  bool send(const SmsMessage& msg) override;

  int calls() const;
  std::vector<SmsMessage> delivered() const;

 private:
  mutable std::mutex mu_;
  int fail_first_;
  bool always_fail_;
  int calls_ = 0;
  std::vector<SmsMessage> delivered_;
};

/// Writes each message to `{created_at}-{uid}.sms` in a spool directory.
/// A `-N` suffix is appended if that name is already taken.
class FileSpoolGateway : public SmsGateway {
 public:
  explicit FileSpoolGateway(std::filesystem::path dir);

  bool send(const SmsMessage& msg) override;

  const std::filesystem::path& directory() const noexcept { return dir_; }
  std::size_t written() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::size_t written_ = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{60'000};

  /// Wait before attempt `attempt` (2-based; attempt 1 has no wait).
  std::chrono::milliseconds delay_before(int attempt) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper thread_sleeper();
Sleeper no_sleep();

/// Tries the gateway until success or max_attempts, backing off
/// exponentially between attempts. Every attempt is recorded on the message.
/// Throws Error(InvalidRequest) unless msg.status is PENDING.
SmsMessage dispatch(SmsMessage msg, SmsGateway& gateway, const RetryPolicy& policy = {},
                    const Sleeper& sleep = thread_sleeper());

/// Bounded queue drained by one worker. enqueue() is safe from any thread.
/// Without start(), messages are only delivered by explicit drain() calls.
class SmsDispatcher {
 public:
  struct Stats {
    std::size_t sent = 0;
    std::size_t failed = 0;
    std::size_t pending = 0;
  };

  SmsDispatcher(SmsGateway& gateway, RetryPolicy policy = {},
                std::size_t queue_bound = 10'000, Sleeper sleep = thread_sleeper());
  ~SmsDispatcher();

  SmsDispatcher(const SmsDispatcher&) = delete;
  SmsDispatcher& operator=(const SmsDispatcher&) = delete;

  /// Throws Error(QueueFull).
  void enqueue(SmsMessage msg);

  void start();
  /// Delivers everything still queued, then joins the worker.
  void stop();
  /// Delivers all queued messages on the calling thread; returns how many.
  std::size_t drain();

  Stats stats() const;
  std::vector<SmsMessage> completed() const;

 private:
  bool deliver_one(std::unique_lock<std::mutex>& lock);
  void run();

  SmsGateway& gateway_;
  RetryPolicy policy_;
  std::size_t bound_;
  Sleeper sleep_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<SmsMessage> queue_;
  std::vector<SmsMessage> done_;
  std::size_t in_flight_ = 0;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace imz
