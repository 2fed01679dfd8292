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

#include "imz/http.hpp"

#include <httplib.h>

#include "imz/error.hpp"

namespace imz {

using nlohmann::json;

struct HttpServer::Impl {
  ImmunizationService& service;
  httplib::Server server;

  explicit Impl(ImmunizationService& s) : service(s) {
    auto dispatch = [this](const httplib::Request& hreq, httplib::Response& hres) {
      ServiceRequest req;
      req.method = hreq.method;
      req.path = hreq.path;
      for (const auto& [k, v] : hreq.params) req.query[k] = v;
      for (const auto& [k, v] : hreq.headers) req.headers[k] = v;
      req.body = hreq.body;
      auto resp = service.handle(req);
      hres.status = resp.status;
      hres.set_content(resp.body, resp.content_type);
    };
    server.Get(R"(/.*)", dispatch);
    server.Post(R"(/.*)", dispatch);
  }
};

HttpServer::HttpServer(ImmunizationService& service)
    : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int HttpServer::bind_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

struct HttpSyncTransport::Impl {
  httplib::Client client;
  std::string api_key;

  Impl(const std::string& host, int port, std::string key)
      : client(host, port), api_key(std::move(key)) {}
};

HttpSyncTransport::HttpSyncTransport(std::string host, int port, std::string api_key)
    : impl_(std::make_unique<Impl>(host, port, std::move(api_key))) {}

HttpSyncTransport::~HttpSyncTransport() = default;

SyncResult HttpSyncTransport::push(const std::vector<SyncEnvelope>& batch) {
  json list = json::array();
  for (const auto& e : batch) list.push_back(to_json(e));
  httplib::Headers headers{{"X-Api-Key", impl_->api_key}};
  auto res = impl_->client.Post("/sync", headers, json{{"envelopes", list}}.dump(),
                                "application/json");
  if (!res) {
    throw Error(ErrorCode::TransportFailure,
                "sync request failed: " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw Error(ErrorCode::TransportFailure,
                "sync returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    auto code = ErrorCode::TransportFailure;
    std::string message = res->body;
    try {
      auto body = json::parse(res->body);
      if (auto parsed = parse_error_code(body.at("error").at("code").get<std::string>())) {
        code = *parsed;
      }
      message = body.at("error").at("message").get<std::string>();
    } catch (const json::exception&) {
    }
    throw Error(code, message);
  }
  try {
    return sync_result_from_json(json::parse(res->body));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TransportFailure, std::string("bad sync reply: ") + e.what());
  }
}

}  // namespace imz
