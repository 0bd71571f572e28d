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

#include "panoworld/server.hpp"

#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "panoworld/errors.hpp"

namespace panoworld {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

// Maps a request target below `root`, refusing anything that climbs out.
std::optional<std::filesystem::path> static_path(const std::filesystem::path& root, std::string_view target) {
  if (root.empty()) return std::nullopt;
  std::string path(target.substr(0, target.find('?')));
  if (path.empty() || path.front() != '/') return std::nullopt;
  if (path == "/") path = "/index.html";
  const std::filesystem::path rel = std::filesystem::path(path).relative_path();
  for (const auto& part : rel) {
    if (part == ".." || part == ".") return std::nullopt;
  }
  const std::filesystem::path full = root / rel;
  if (!std::filesystem::is_regular_file(full)) return std::nullopt;
  return full;
}

}  // namespace

struct SessionServer::Impl {
  ServerOptions options;
  asio::io_context io;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread accept_thread;
  std::atomic<bool> stopping{false};
  std::atomic<unsigned short> bound_port{0};

  mutable std::mutex mu;
  std::condition_variable stopped_cv;
  bool stopped = false;
  std::vector<std::thread> connections;
  std::set<int> open_sockets;
  std::size_t next_id = 0;
  std::map<std::string, std::vector<json>> records;

  void accept_loop() {
    while (!stopping) {
      tcp::socket sock(io);
      beast::error_code ec;
      acceptor->accept(sock, ec);
      if (ec) {
        if (stopping) return;
        continue;
      }
      std::lock_guard lock(mu);
      open_sockets.insert(sock.native_handle());
      connections.emplace_back([this, s = std::move(sock)]() mutable { serve(std::move(s)); });
    }
  }

  void serve(tcp::socket sock) {
    const int fd = sock.native_handle();
    try {
      beast::flat_buffer buffer;
      http::request<http::string_body> req;
      http::read(sock, buffer, req);
      if (websocket::is_upgrade(req)) {
        if (req.target() == "/session") {
          serve_session(std::move(sock), req);
        } else {
          respond(sock, req, http::status::not_found, "text/plain", "not found\n");
        }
      } else {
        serve_http(sock, req);
      }
    } catch (const std::exception&) {
      // Connection dropped or shut down by stop().
    }
    std::lock_guard lock(mu);
    open_sockets.erase(fd);
  }

  static void respond(tcp::socket& sock, const http::request<http::string_body>& req, http::status status,
                      std::string_view type, std::string body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::server, "panoworld");
    res.set(http::field::content_type, std::string(type));
    res.keep_alive(false);
    res.body() = std::move(body);
    res.prepare_payload();
    http::write(sock, res);
    beast::error_code ec;
    sock.shutdown(tcp::socket::shutdown_send, ec);
  }

  void serve_http(tcp::socket& sock, const http::request<http::string_body>& req) {
    if (req.method() != http::verb::get) {
      respond(sock, req, http::status::method_not_allowed, "text/plain", "GET only\n");
      return;
    }
    const std::string target(req.target());
    if (target == "/healthz") {
      json j{{"ok", true}, {"v", kProtocolVersion}};
      {
        std::lock_guard lock(mu);
        j["sessions"] = next_id;
      }
      respond(sock, req, http::status::ok, "application/json", j.dump());
      return;
    }
    if (const auto path = static_path(options.static_root, target)) {
      std::ifstream in(*path, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      respond(sock, req, http::status::ok, mime_type(*path), body.str());
      return;
    }
    respond(sock, req, http::status::not_found, "text/plain", "not found\n");
  }

  void serve_session(tcp::socket sock, const http::request<http::string_body>& req) {
    websocket::stream<tcp::socket> ws(std::move(sock));
    ws.accept(req);
    std::string id;
    {
      std::lock_guard lock(mu);
      id = "s" + std::to_string(++next_id);
    }
    SessionHost host(id, options.host);
    std::ofstream log;
    if (!options.log_dir.empty()) {
      std::filesystem::create_directories(options.log_dir);
      log.open(options.log_dir / (id + ".jsonl"));
    }
    auto write = [&](const json& msg) {
      ws.text(true);
      ws.write(asio::buffer(msg.dump()));
    };
    bool read_only = false;
    while (!host.ended()) {
      beast::flat_buffer buffer;
      ws.read(buffer);
      const std::string text = beast::buffers_to_string(buffer.data());
      if (log.is_open()) log << text << "\n" << std::flush;
      json msg = json::parse(text, nullptr, false);
      std::vector<json> replies;
      if (!msg.is_discarded() && msg.is_object() && msg.value("kind", "") == "attach") {
        replies = attach(id, msg, host.initialized() || read_only);
        read_only = read_only || replies.empty() || replies.front().value("kind", "") != "error";
      } else if (read_only) {
        replies = {make_error(id, "attached sessions are read-only")};
      } else {
        replies = host.handle_text(text);
        std::lock_guard lock(mu);
        auto& rec = records[id];
        rec.insert(rec.end(), replies.begin(), replies.end());
      }
      for (const json& r : replies) write(r);
    }
    beast::error_code ec;
    ws.close(websocket::close_code::normal, ec);
  }

  // Read-only replay of a recorded session: its frame batches, then a state.
  std::vector<json> attach(const std::string& id, const json& msg, bool busy) {
    if (busy) return {make_error(id, "attach is only valid on a fresh connection")};
    const std::string target = msg.value("session_id", "");
    std::vector<json> out;
    std::lock_guard lock(mu);
    const auto it = records.find(target);
    if (it == records.end()) return {make_error(id, "unknown session '" + target + "'")};
    json last_state;
    for (const json& r : it->second) {
      if (r.value("kind", "") == "frame_batch") out.push_back(r);
      if (r.value("kind", "") == "state") last_state = r;
    }
    if (last_state.is_null()) last_state = {{"v", kProtocolVersion}, {"kind", "state"}, {"session_id", target}};
    last_state["read_only"] = true;
    out.push_back(last_state);
    return out;
  }
};

SessionServer::SessionServer(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
  Impl& m = *impl_;
  if (m.acceptor) throw ParameterError("server already started");
  try {
    const tcp::endpoint ep(asio::ip::make_address(m.options.address), m.options.port);
    m.acceptor = std::make_unique<tcp::acceptor>(m.io);
    m.acceptor->open(ep.protocol());
    m.acceptor->set_option(asio::socket_base::reuse_address(true));
    m.acceptor->bind(ep);
    m.acceptor->listen();
    m.bound_port = m.acceptor->local_endpoint().port();
  } catch (const std::exception& e) {
    m.acceptor.reset();
    throw IoError("cannot listen on " + m.options.address + ":" + std::to_string(m.options.port) + ": " +
                  e.what());
  }
  m.accept_thread = std::thread([&m] { m.accept_loop(); });
}

void SessionServer::stop() {
  Impl& m = *impl_;
  if (!m.acceptor || m.stopping.exchange(true)) return;
  ::shutdown(m.acceptor->native_handle(), SHUT_RDWR);
  if (m.accept_thread.joinable()) m.accept_thread.join();
  beast::error_code ec;
  m.acceptor->close(ec);
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(m.mu);
    for (int fd : m.open_sockets) ::shutdown(fd, SHUT_RDWR);
    threads.swap(m.connections);
  }
  for (std::thread& t : threads) t.join();
  std::lock_guard lock(m.mu);
  m.stopped = true;
  m.stopped_cv.notify_all();
}

void SessionServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->stopped_cv.wait(lock, [&] { return impl_->stopped; });
}

unsigned short SessionServer::port() const { return impl_->bound_port; }

std::size_t SessionServer::sessions_started() const {
  std::lock_guard lock(impl_->mu);
  return impl_->next_id;
}

std::vector<json> SessionServer::recorded(const std::string& session_id) const {
  std::lock_guard lock(impl_->mu);
  const auto it = impl_->records.find(session_id);
  return it == impl_->records.end() ? std::vector<json>{} : it->second;
}

// ---------------------------------------------------------------------------

HttpResponse http_get(const std::string& host, unsigned short port, const std::string& target) {
  try {
    asio::io_context io;
    tcp::resolver resolver(io);
    tcp::socket sock(io);
    asio::connect(sock, resolver.resolve(host, std::to_string(port)));
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, host);
    http::write(sock, req);
    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(sock, buffer, res);
    HttpResponse out;
    out.status = static_cast<int>(res.result_int());
    out.content_type = std::string(res[http::field::content_type]);
    out.body = std::move(res.body());
    beast::error_code ec;
    sock.shutdown(tcp::socket::shutdown_both, ec);
    return out;
  } catch (const std::exception& e) {
    throw IoError("GET " + target + " failed: " + e.what());
  }
}

struct ProtocolClient::Impl {
  asio::io_context io;
  websocket::stream<tcp::socket> ws{io};
  bool open = false;
};

ProtocolClient::ProtocolClient(const std::string& host, unsigned short port, const std::string& target)
    : impl_(std::make_unique<Impl>()) {
  try {
    tcp::resolver resolver(impl_->io);
    asio::connect(impl_->ws.next_layer(), resolver.resolve(host, std::to_string(port)));
    impl_->ws.handshake(host, target);
    impl_->open = true;
  } catch (const std::exception& e) {
    throw IoError("cannot open session at " + host + ":" + std::to_string(port) + target + ": " + e.what());
  }
}

ProtocolClient::~ProtocolClient() {
  try {
    close();
  } catch (...) {
  }
}

void ProtocolClient::send(const json& msg) {
  sent_.push_back(msg);
  send_text(msg.dump());
}

void ProtocolClient::send_text(const std::string& text) {
  try {
    impl_->ws.text(true);
    impl_->ws.write(asio::buffer(text));
  } catch (const std::exception& e) {
    throw IoError(std::string("send failed: ") + e.what());
  }
}

json ProtocolClient::receive() {
  try {
    beast::flat_buffer buffer;
    impl_->ws.read(buffer);
    return json::parse(beast::buffers_to_string(buffer.data()));
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("server sent malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    throw IoError(std::string("receive failed: ") + e.what());
  }
}

std::vector<json> ProtocolClient::request(const json& msg, std::string_view until) {
  send(msg);
  std::vector<json> out;
  for (;;) {
    json r = receive();
    const std::string kind = r.value("kind", "");
    const bool stop = kind == until || (kind == "error" && !r.value("fatal", false));
    out.push_back(std::move(r));
    if (stop) return out;
  }
}

void ProtocolClient::close() {
  if (!impl_->open) return;
  impl_->open = false;
  beast::error_code ec;
  impl_->ws.close(websocket::close_code::normal, ec);
}

}  // namespace panoworld
