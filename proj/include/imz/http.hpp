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

#include <memory>
#include <string>

#include "imz/service.hpp"
#include "imz/sync.hpp"

namespace imz {

/// Serves an ImmunizationService over HTTP/1.1.
class HttpServer {
 public:
  explicit HttpServer(ImmunizationService& service);
  ~HttpServer();

  /// Binds and blocks until stop(). Returns false if the bind failed.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it without serving; follow with run().
  int bind_any_port(const std::string& host);
  /// Serves after bind_any_port(); blocks until stop().
  bool run();
  /// Stops accepting and lets in-flight requests finish.
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Pushes center batches to a remote service's POST /sync.
class HttpSyncTransport : public SyncTransport {
 public:
  HttpSyncTransport(std::string host, int port, std::string api_key);
  ~HttpSyncTransport() override;

  /// Network errors and 5xx replies throw Error(TransportFailure); other
  /// error replies throw with the code the server sent.
  SyncResult push(const std::vector<SyncEnvelope>& batch) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace imz
