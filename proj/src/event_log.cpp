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

#include "imz/event_log.hpp"

#include <fstream>
#include <sstream>

#include "imz/error.hpp"

namespace imz {

using nlohmann::json;

EventLog::EventLog(const std::filesystem::path& file) {
  if (std::filesystem::exists(file)) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    buffer_ = ss.str();
    count_ = decode(buffer_).size();
  }
  file_ = std::fopen(file.c_str(), "ab");
  if (!file_) {
    throw Error(ErrorCode::InvalidConfig, "cannot open event log " + file.string());
  }
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

std::string EventLog::encode(std::string_view type, const json& payload,
                             Timestamp recorded_at) {
  json envelope = {{"type", type},
                   {"payload", payload},
                   {"recorded_at", format_timestamp(recorded_at)}};
  std::string body = envelope.dump();
  auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(body.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += body;
  return out;
}

void EventLog::append(std::string_view type, const json& payload,
                      Timestamp recorded_at) {
  auto record = encode(type, payload, recorded_at);
  std::lock_guard lock(mu_);
  buffer_ += record;
  ++count_;
  if (file_) {
    std::fwrite(record.data(), 1, record.size(), file_);
    std::fflush(file_);
  }
}

std::string EventLog::bytes() const {
  std::lock_guard lock(mu_);
  return buffer_;
}

std::size_t EventLog::record_count() const {
  std::lock_guard lock(mu_);
  return count_;
}

std::vector<LogRecord> EventLog::decode(std::string_view bytes) {
  std::vector<LogRecord> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 4) throw CorruptRecordError(pos, "truncated length prefix");
    auto b = [&](std::size_t i) {
      return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i]));
    };
    std::uint32_t n = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
    if (bytes.size() - pos - 4 < n) throw CorruptRecordError(pos, "truncated record body");
    json envelope;
    try {
      envelope = json::parse(bytes.substr(pos + 4, n));
    } catch (const json::parse_error&) {
      throw CorruptRecordError(pos, "record body is not valid JSON");
    }
    if (!envelope.is_object() || !envelope.contains("type") ||
        !envelope["type"].is_string() || !envelope.contains("payload") ||
        !envelope.contains("recorded_at") || !envelope["recorded_at"].is_string()) {
      throw CorruptRecordError(pos, "record envelope is missing fields");
    }
    auto ts = parse_timestamp(envelope["recorded_at"].get<std::string>());
    if (!ts) throw CorruptRecordError(pos, "bad recorded_at");
    out.push_back(LogRecord{envelope["type"].get<std::string>(),
                            std::move(envelope["payload"]), *ts, pos});
    pos += 4 + n;
  }
  return out;
}

}  // namespace imz
