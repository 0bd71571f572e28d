// Copyright 2026 The Panoworld Authors
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

// HTTP + WebSocket front end for SessionHost.
//
//   GET /healthz          {"ok": true, "v": 1, "sessions": n}
//   GET /session          WebSocket upgrade, one protocol session per connection
//   GET /<path>           static files below static_root (index.html for "/")
//
// Each connection is served by its own thread, so a session waiting for a
// step never holds up another.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panoworld/protocol.hpp"

namespace panoworld {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  std::filesystem::path static_root;  // empty: no static files
  std::filesystem::path log_dir;      // set: each session's client messages go to <id>.jsonl
  HostOptions host;
};

class SessionServer {
 public:
  explicit SessionServer(ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds and starts accepting on a background thread. Throws IoError.
  void start();
  // Closes the listener and every open connection, then joins the threads.
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();
  unsigned short port() const;
  std::size_t sessions_started() const;
  // Replies recorded for a session id (empty if unknown).
  std::vector<nlohmann::json> recorded(const std::string& session_id) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct HttpResponse {
  int status = 0;
  std::string content_type;
  std::string body;
};

HttpResponse http_get(const std::string& host, unsigned short port, const std::string& target);

// Headless protocol client over a WebSocket connection.
class ProtocolClient {
 public:
  ProtocolClient(const std::string& host, unsigned short port, const std::string& target = "/session");
  ~ProtocolClient();
  ProtocolClient(const ProtocolClient&) = delete;
  ProtocolClient& operator=(const ProtocolClient&) = delete;

  void send(const nlohmann::json& msg);
  void send_text(const std::string& text);
  nlohmann::json receive();
  // Sends `msg` and reads replies up to and including the first of kind
  // `until`, or a non-fatal error.
  std::vector<nlohmann::json> request(const nlohmann::json& msg, std::string_view until = "state");
  void close();
  // Every message sent, in order (the replayable log).
  const std::vector<nlohmann::json>& sent() const { return sent_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<nlohmann::json> sent_;
};

}  // namespace panoworld
