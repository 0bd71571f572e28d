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

#include "panoworld/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <boost/beast/core/detail/base64.hpp>

#include "panoworld/errors.hpp"
#include "panoworld/raster_io.hpp"

namespace panoworld {
namespace {

using nlohmann::json;
namespace b64 = boost::beast::detail::base64;

constexpr double kDegree = kPi / 180.0;

json message(MessageKind kind, std::string_view session_id) {
  return {{"v", kProtocolVersion}, {"kind", to_string(kind)}, {"session_id", session_id}};
}

template <typename T>
T field(const json& msg, const char* name) {
  try {
    return msg.at(name).get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("missing or invalid field '") + name + "'");
  }
}

template <typename T>
T field_or(const json& msg, const char* name, T fallback) {
  return msg.contains(name) ? field<T>(msg, name) : fallback;
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kInit: return "init";
    case MessageKind::kFrameBatch: return "frame_batch";
    case MessageKind::kAction: return "action";
    case MessageKind::kState: return "state";
    case MessageKind::kError: return "error";
    case MessageKind::kEnd: return "end";
    case MessageKind::kPilot: return "pilot";
    case MessageKind::kBev: return "bev";
    case MessageKind::kExport: return "export";
    case MessageKind::kAttach: return "attach";
  }
  return "error";
}

MessageKind message_kind_from_string(std::string_view name) {
  static constexpr MessageKind kAll[] = {
      MessageKind::kInit,  MessageKind::kFrameBatch, MessageKind::kAction, MessageKind::kState,
      MessageKind::kError, MessageKind::kEnd,        MessageKind::kPilot,  MessageKind::kBev,
      MessageKind::kExport, MessageKind::kAttach};
  for (MessageKind k : kAll) {
    if (to_string(k) == name) return k;
  }
  throw ProtocolError("unknown message kind '" + std::string(name) + "'");
}

MessageKind validate_message(const json& msg) {
  if (!msg.is_object()) throw ProtocolError("message must be a JSON object");
  if (!msg.contains("v") || !msg["v"].is_number_integer() || msg["v"].get<int>() != kProtocolVersion) {
    throw ProtocolError("unsupported or missing protocol version");
  }
  if (!msg.contains("kind") || !msg["kind"].is_string()) throw ProtocolError("missing message kind");
  return message_kind_from_string(msg["kind"].get<std::string>());
}

Action action_from_wire(double alpha_deg, double d) {
  if (!std::isfinite(alpha_deg)) throw ParameterError("alpha must be finite");
  return Action::normalized(alpha_deg * kDegree, d);
}

json action_to_wire(const Action& a) { return {{"alpha_deg", a.alpha / kDegree}, {"d", a.d}}; }

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  // The decoder stops at padding; at most two '=' may follow, completing a 4-char group.
  const std::string_view rest = text.substr(read);
  if (rest.size() > 2 || rest.find_first_not_of('=') != std::string_view::npos || text.size() % 4 != 0) {
    throw DecodeError("invalid base64 data");
  }
  out.resize(written);
  return out;
}

std::string encode_frame(const PanoramaImage& frame) { return base64_encode(encode_png(frame.raster())); }

PanoramaImage decode_frame(std::string_view text) { return PanoramaImage(decode_png(base64_decode(text))); }

json make_error(std::string_view session_id, std::string_view text, bool fatal) {
  json j = message(MessageKind::kError, session_id);
  j["message"] = text;
  j["fatal"] = fatal;
  return j;
}

json export_archive(const ExplorationSession& session) {
  json archive;
  archive["v"] = kProtocolVersion;
  archive["session"] = session_manifest(session);
  json files = json::object();
  files["x0.png"] = encode_frame(*session.x0);
  const json& steps = archive["session"]["steps"];
  for (std::size_t t = 0; t < session.steps.size(); ++t) {
    for (std::size_t k = 0; k < session.steps[t].frames.size(); ++k) {
      files[steps[t]["frames"][k].get<std::string>()] = encode_frame(*session.steps[t].frames[k]);
    }
  }
  archive["files"] = std::move(files);
  return archive;
}

void write_archive(const json& archive, const std::filesystem::path& dir) {
  if (archive.value("v", 0) != kProtocolVersion) throw DecodeError("unsupported archive version");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  try {
    for (const auto& [name, data] : archive.at("files").items()) {
      if (name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
        throw DecodeError("archive file name '" + name + "' is not a plain file name");
      }
      const std::vector<std::uint8_t> bytes = base64_decode(data.get<std::string>());
      std::ofstream out(dir / name, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw IoError("cannot write " + (dir / name).string());
    }
    std::ofstream out(dir / "session.json");
    out << archive.at("session").dump(2) << "\n";
    if (!out) throw IoError("cannot write " + (dir / "session.json").string());
  } catch (const json::exception& e) {
    throw DecodeError("malformed archive: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------

SessionHost::SessionHost(std::string session_id, HostOptions options)
    : id_(std::move(session_id)), options_(options) {}

SessionHost::~SessionHost() {
  feed_.close();
  if (worker_.joinable()) worker_.join();
}

ExplorationSession SessionHost::snapshot() const {
  std::lock_guard lock(mu_);
  return mirror_;
}

std::vector<json> SessionHost::handle_text(std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::exception&) {
    json err = make_error(id_, "malformed JSON");
    transcript_.push_back(err);
    return {err};
  }
  return handle(msg);
}

std::vector<json> SessionHost::handle(const json& msg) {
  std::vector<json> out;
  try {
    const MessageKind kind = validate_message(msg);
    out = dispatch(kind, msg);
  } catch (const Error& e) {
    out = {make_error(id_, e.what())};
  }
  transcript_.insert(transcript_.end(), out.begin(), out.end());
  return out;
}

std::vector<json> SessionHost::dispatch(MessageKind kind, const json& msg) {
  if (ended_) throw ProtocolError("session has ended");
  if (kind == MessageKind::kInit) return on_init(msg);
  if (!initialized()) throw ProtocolError("'" + std::string(to_string(kind)) + "' before init");
  switch (kind) {
    case MessageKind::kAction:
      return run_step(action_from_wire(field<double>(msg, "alpha_deg"), field<double>(msg, "d")), "user");
    case MessageKind::kPilot: return on_pilot(msg);
    case MessageKind::kState: return {state_message()};
    case MessageKind::kBev: return {on_bev(msg)};
    case MessageKind::kExport: {
      json j = message(MessageKind::kExport, id_);
      j["archive"] = export_archive(snapshot());
      return {j};
    }
    case MessageKind::kEnd: return finish();
    default:
      throw ProtocolError("clients may not send '" + std::string(to_string(kind)) + "'");
  }
}

std::vector<json> SessionHost::on_init(const json& msg) {
  if (initialized()) throw ProtocolError("session already initialized");
  const auto seed = field<std::uint64_t>(msg, "seed");
  const auto dims_v = field_or<std::vector<int>>(msg, "dims", {512, 256});
  if (dims_v.size() != 2) throw ProtocolError("dims must be [width, height]");
  const Dims dims{dims_v[0], dims_v[1]};
  validate_panorama_dims(dims);
  if (dims.width < PanoramaImage::kMinWidth || dims.width > options_.max_dims.width) {
    throw ParameterError("dims outside the supported range");
  }
  Instruction ins;
  ins.mode = explore_mode_from_string(field_or<std::string>(msg, "mode", "interactive"));
  ins.budget = options_.max_steps;
  ins.text = "protocol session";
  auto scene = std::make_shared<const SceneSpec>(scene_from_seed(seed));
  if (ins.mode == ExploreMode::kGoal) {
    ins.goal_object = field<std::string>(msg, "goal");
    scene->find(*ins.goal_object);
  }
  TransitionConfig cfg;
  cfg.frames_per_meter = field_or<double>(msg, "frames_per_meter", options_.frames_per_meter);
  cfg.validate();

  scene_ = scene;
  instruction_ = ins;
  config_ = cfg;
  const AgentPose start{};
  model_ = std::make_unique<GroundTruthModel>(scene_, start, dims, options_.render);
  const Frame x0 = std::make_shared<const PanoramaImage>(render_panorama(*scene_, start, dims, options_.render));
  mirror_.x0 = x0;
  mirror_.config = cfg;
  believed_ = {start};

  // The worker runs the interactive loop; pilot steps are fed through the same feed.
  SessionOptions so;
  so.instruction = ins;
  so.instruction.mode = ExploreMode::kInteractive;
  so.instruction.goal_object.reset();
  so.config = cfg;
  so.feed = &feed_;
  so.on_step = [this](const ExplorationSession& s) {
    std::lock_guard lock(mu_);
    mirror_.steps = s.steps;
    mirror_.provenance = s.provenance;
    steps_done_ = s.steps.size();
    cv_.notify_all();
  };
  worker_ = std::thread([this, x0, so] {
    RolloutResult r = run_session(*model_, x0, so);
    std::lock_guard lock(mu_);
    mirror_.steps = r.session.steps;
    mirror_.provenance = r.session.provenance;
    mirror_.done = true;
    worker_error_ = r.error;
    worker_done_ = true;
    cv_.notify_all();
  });

  json ack = message(MessageKind::kInit, id_);
  ack["seed"] = seed;
  ack["dims"] = {dims.width, dims.height};
  ack["mode"] = to_string(ins.mode);
  ack["frames_per_meter"] = cfg.frames_per_meter;
  ack["objects"] = json::array();
  for (const Primitive& p : scene_->objects) ack["objects"].push_back(p.id);
  if (ins.goal_object) ack["goal"] = *ins.goal_object;
  json batch = message(MessageKind::kFrameBatch, id_);
  batch["step"] = 0;
  batch["source"] = "init";
  batch["frames"] = json::array({{{"index", 0}, {"png", encode_frame(*x0)}}});
  return {ack, batch, state_message()};
}

std::vector<json> SessionHost::run_step(const Action& a, std::string_view source) {
  std::unique_lock lock(mu_);
  if (worker_done_) throw ProtocolError("session is no longer accepting actions");
  const std::size_t before = steps_done_;
  lock.unlock();
  if (!feed_.push(a)) throw ProtocolError("session is no longer accepting actions");
  lock.lock();
  cv_.wait(lock, [&] { return steps_done_ > before || worker_done_; });
  if (steps_done_ == before) {
    const std::string why = worker_error_.value_or("step budget exhausted");
    lock.unlock();
    return {make_error(id_, "step failed: " + why, true), state_message()};
  }
  const SessionStep step = mirror_.steps.back();
  const std::size_t index = steps_done_;
  lock.unlock();

  believed_.push_back(apply_action(believed_.back(), step.action));
  json batch = message(MessageKind::kFrameBatch, id_);
  batch["step"] = index;
  batch["source"] = source;
  batch["action"] = action_to_wire(step.action);
  batch["frames"] = json::array();
  for (std::size_t k = 0; k < step.frames.size(); ++k) {
    batch["frames"].push_back({{"index", k + 1}, {"png", encode_frame(*step.frames[k])}});
  }
  return {batch, state_message()};
}

std::vector<json> SessionHost::on_pilot(const json& msg) {
  const int steps = field_or<int>(msg, "steps", 1);
  if (steps < 1 || steps > 50) throw ParameterError("pilot steps must be in [1, 50]");
  std::vector<json> out;
  HeuristicPilot pilot;
  int scans = 0;
  for (int i = 0; i < steps && !goal_reached_; ++i) {
    const Frame latest = snapshot().latest();
    Action a;
    if (instruction_.mode == ExploreMode::kGoal) {
      try {
        const GoalDecision d = goal_policy_step(*latest, scene_->find(*instruction_.goal_object), make_probe(*model_));
        if (std::holds_alternative<GoalDone>(d)) {
          goal_reached_ = true;
          break;
        }
        a = std::get<Action>(d);
        scans = 0;
      } catch (const DetectionError&) {
        if (++scans > 8) throw;
        a = {kPi / 4.0, 0.0};
      }
    } else {
      const std::vector<Action> cands = default_candidates();
      std::vector<double> scores(cands.size(), 1.0);
      if (const auto probe = make_probe(*model_)) {
        for (std::size_t c = 0; c < cands.size(); ++c) scores[c] = probe->clearance_score(cands[c]);
      }
      a = pilot.propose(*latest, cands, scores);
    }
    std::vector<json> r = run_step(a, "pilot");
    const bool failed = r.front()["kind"] == "error";
    out.insert(out.end(), r.begin(), r.end());
    if (failed) return out;
  }
  if (out.empty() || goal_reached_) out.push_back(state_message());
  return out;
}

json SessionHost::on_bev(const json& msg) const {
  const double height = field_or<double>(msg, "height", 25.0);
  const int size = field_or<int>(msg, "size", 256);
  if (size < 16 || size > 2048) throw ParameterError("bev size must be in [16, 2048]");
  const AgentPose& origin = believed_.front();
  const PerspectiveImage img = render_bev(*scene_, origin, height, size);
  json j = message(MessageKind::kBev, id_);
  j["height"] = height;
  j["size"] = size;
  j["png"] = base64_encode(encode_png(img.raster));
  j["trajectory"] = json::array();
  for (const AgentPose& p : believed_) {
    const auto px = project_bev(origin, height, size, p.position);
    j["trajectory"].push_back(px ? json{px->u, px->v} : json(nullptr));
  }
  j["landmarks"] = json::array();
  for (const Primitive& p : scene_->objects) {
    const auto px = project_bev(origin, height, size, {p.center.x, p.center.y, 0.0});
    if (px) j["landmarks"].push_back({{"id", p.id}, {"u", px->u}, {"v", px->v}});
  }
  return j;
}

json SessionHost::state_message() const {
  json j = message(MessageKind::kState, id_);
  std::lock_guard lock(mu_);
  j["step"] = steps_done_;
  std::size_t frames = 1;
  for (const SessionStep& s : mirror_.steps) frames += s.frames.size();
  j["frames"] = frames;
  j["done"] = ended_ || worker_done_ || goal_reached_;
  j["mode"] = to_string(instruction_.mode);
  if (!believed_.empty()) j["pose"] = to_json(believed_.back());
  return j;
}

std::vector<json> SessionHost::finish() {
  feed_.close();
  if (worker_.joinable()) worker_.join();
  ended_ = true;
  json state = state_message();
  json end = message(MessageKind::kEnd, id_);
  end["steps"] = state["step"];
  return {state, end};
}

std::vector<json> replay_log(const std::vector<json>& inbound, const HostOptions& options,
                             const std::string& session_id) {
  SessionHost host(session_id, options);
  std::vector<json> out;
  for (const json& msg : inbound) {
    std::vector<json> r = host.handle(msg);
    out.insert(out.end(), r.begin(), r.end());
    if (host.ended()) break;
  }
  return out;
}

std::vector<std::string> frames_of(const std::vector<json>& replies) {
  std::vector<std::string> out;
  for (const json& r : replies) {
    if (r.value("kind", "") != "frame_batch") continue;
    for (const json& f : r.at("frames")) out.push_back(f.at("png").get<std::string>());
  }
  return out;
}

}  // namespace panoworld
