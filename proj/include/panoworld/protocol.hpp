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

// Session protocol spoken over the /session WebSocket.
//
// Every message is a JSON text message with "v": 1 and a "kind". Frames
// travel inside frame_batch messages as base64-encoded PNG strings. Angles
// cross the wire in degrees.
//
// client -> server
//   init    {seed, dims: [W, H], mode: interactive|free|goal, goal?, frames_per_meter?}
//   action  {alpha_deg, d}
//   pilot   {steps}             heuristic (or goal) pilot proposes and runs steps
//   state   {}                  asks for a state message
//   bev     {height?, size?}    top-down map around the start pose
//   export  {}                  session archive
//   attach  {session_id}        read-only replay of a recorded session (server only)
//   end     {}
// server -> client
//   init, frame_batch {step, source, frames: [{index, png}]}, state, bev,
//   export, error {message, fatal}, end

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "panoworld/exploration.hpp"
#include "panoworld/transition.hpp"

namespace panoworld {

inline constexpr int kProtocolVersion = 1;

enum class MessageKind { kInit, kFrameBatch, kAction, kState, kError, kEnd, kPilot, kBev, kExport, kAttach };

std::string_view to_string(MessageKind kind);
MessageKind message_kind_from_string(std::string_view name);  // ProtocolError

// Checks "v" and "kind"; throws ProtocolError.
MessageKind validate_message(const nlohmann::json& msg);

// The single degrees -> radians conversion at the wire boundary.
Action action_from_wire(double alpha_deg, double d);
nlohmann::json action_to_wire(const Action& a);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);  // DecodeError

std::string encode_frame(const PanoramaImage& frame);  // base64 PNG
PanoramaImage decode_frame(std::string_view text);

nlohmann::json make_error(std::string_view session_id, std::string_view message, bool fatal = false);

// Session archive: session.json contents plus every PNG file, base64 encoded.
nlohmann::json export_archive(const ExplorationSession& session);
// Writes the archive as a directory readable by load_session.
void write_archive(const nlohmann::json& archive, const std::filesystem::path& dir);

struct HostOptions {
  Dims max_dims{2048, 1024};
  int max_steps = 1000;
  double frames_per_meter = 4.0;
  RenderOptions render;
};

// One protocol session. handle() consumes a client message and returns the
// replies in order. Steps run on a per-session worker that executes the
// interactive exploration loop; handle() feeds it and waits for the step.
class SessionHost {
 public:
  explicit SessionHost(std::string session_id, HostOptions options = {});
  ~SessionHost();
  SessionHost(const SessionHost&) = delete;
  SessionHost& operator=(const SessionHost&) = delete;

  std::vector<nlohmann::json> handle(const nlohmann::json& msg);
  // Parses `text` first; malformed JSON yields an error reply.
  std::vector<nlohmann::json> handle_text(std::string_view text);

  const std::string& id() const { return id_; }
  bool initialized() const { return model_ != nullptr; }
  bool ended() const { return ended_; }
  // Copy of the session so far (empty before init).
  ExplorationSession snapshot() const;
  // Every reply sent so far, in order.
  const std::vector<nlohmann::json>& transcript() const { return transcript_; }

 private:
  std::vector<nlohmann::json> dispatch(MessageKind kind, const nlohmann::json& msg);
  std::vector<nlohmann::json> on_init(const nlohmann::json& msg);
  std::vector<nlohmann::json> run_step(const Action& a, std::string_view source);
  std::vector<nlohmann::json> on_pilot(const nlohmann::json& msg);
  nlohmann::json on_bev(const nlohmann::json& msg) const;
  nlohmann::json state_message() const;
  std::vector<nlohmann::json> finish();

  std::string id_;
  HostOptions options_;
  std::shared_ptr<const SceneSpec> scene_;
  std::unique_ptr<WorldModel> model_;
  Instruction instruction_;
  TransitionConfig config_;
  ActionFeed feed_;
  std::thread worker_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  ExplorationSession mirror_;
  std::size_t steps_done_ = 0;
  bool worker_done_ = false;
  std::optional<std::string> worker_error_;

  std::vector<AgentPose> believed_;  // dead-reckoned poses, start first
  bool ended_ = false;
  bool goal_reached_ = false;
  std::vector<nlohmann::json> transcript_;
};

// Feeds a recorded client message log into a fresh host and returns every
// reply. With the ground-truth model the replies repeat the original ones.
std::vector<nlohmann::json> replay_log(const std::vector<nlohmann::json>& inbound,
                                       const HostOptions& options = {},
                                       const std::string& session_id = "replay");

// The frame_batch payloads of a reply stream (base64 PNGs in order).
std::vector<std::string> frames_of(const std::vector<nlohmann::json>& replies);

}  // namespace panoworld
