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

#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "imz/time.hpp"

namespace imz {

struct LogRecord {
  std::string type;
  nlohmann::json payload;
  Timestamp recorded_at;
  std::size_t offset = 0;  // byte offset of the length prefix
};

/// Append-only record log. Each record is a 4-byte big-endian length followed
/// by a compact JSON envelope `{"type":..,"payload":..,"recorded_at":..}`.
///
/// Records are always kept in memory; when constructed with a path they are
/// also appended (and flushed) to that file.
class EventLog {
 public:
  EventLog() = default;
  /// Opens `file` for appending. Existing bytes are loaded but not re-applied;
  /// callers replay them through decode().
  explicit EventLog(const std::filesystem::path& file);
  ~EventLog();

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(std::string_view type, const nlohmann::json& payload,
              Timestamp recorded_at);

  std::string bytes() const;
  std::size_t record_count() const;

  static std::string encode(std::string_view type, const nlohmann::json& payload,
                            Timestamp recorded_at);
  /// Throws CorruptRecordError carrying the offset of the first bad record.
  static std::vector<LogRecord> decode(std::string_view bytes);

 private:
  mutable std::mutex mu_;
  std::string buffer_;
  std::size_t count_ = 0;
  std::FILE* file_ = nullptr;
};

}  // namespace imz
