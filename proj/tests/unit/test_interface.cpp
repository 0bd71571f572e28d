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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "panoworld/errors.hpp"
#include "panoworld/image.hpp"
#include "panoworld/metrics.hpp"
#include "panoworld/protocol.hpp"
#include "panoworld/raster_io.hpp"
#include "panoworld/server.hpp"
#include "test_support.hpp"

using namespace panoworld;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json msg(std::string_view kind, json body = json::object()) {
  body["v"] = kProtocolVersion;
  body["kind"] = kind;
  return body;
}

json init_msg(std::uint64_t seed, int w = 128, int h = 64) {
  return msg("init", {{"seed", seed}, {"dims", {w, h}}});
}

json action_msg(double alpha_deg, double d) { return msg("action", {{"alpha_deg", alpha_deg}, {"d", d}}); }

std::vector<std::string> kinds(const std::vector<json>& replies) {
  std::vector<std::string> out;
  for (const json& r : replies) out.push_back(r.at("kind").get<std::string>());
  return out;
}

PanoramaImage decode(const std::string& b64) { return decode_frame(b64); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PANOWORLD_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Wire, Base64RoundTrip) {
  for (std::size_t n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> bytes(n);
    for (std::size_t i = 0; i < n; ++i) bytes[i] = static_cast<std::uint8_t>(i * 37 + 11);
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}), "TWFu");
  EXPECT_THROW(base64_decode("@@@@"), DecodeError);
}

TEST(Wire, ActionDegrees) {
  const Action a = action_from_wire(90.0, 1.5);
  EXPECT_NEAR(a.alpha, kHalfPi, 1e-12);
  EXPECT_EQ(a.d, 1.5);
  const json w = action_to_wire(a);
  EXPECT_NEAR(w["alpha_deg"].get<double>(), 90.0, 1e-9);
  EXPECT_THROW(action_from_wire(std::nan(""), 1.0), ParameterError);
}

TEST(Wire, MessageValidation) {
  EXPECT_EQ(validate_message(msg("action")), MessageKind::kAction);
  EXPECT_THROW(validate_message(json{{"v", 2}, {"kind", "init"}}), ProtocolError);
  EXPECT_THROW(validate_message(json{{"kind", "init"}}), ProtocolError);
  EXPECT_THROW(validate_message(msg("teleport")), ProtocolError);
  EXPECT_THROW(validate_message(json::array()), ProtocolError);
  for (MessageKind k : {MessageKind::kInit, MessageKind::kFrameBatch, MessageKind::kAction, MessageKind::kState,
                        MessageKind::kError, MessageKind::kEnd, MessageKind::kPilot, MessageKind::kBev,
                        MessageKind::kExport, MessageKind::kAttach}) {
    EXPECT_EQ(message_kind_from_string(to_string(k)), k);
  }
}

TEST(Host, InitActionsAndSteps) {
  SessionHost host("h1");
  const auto r0 = host.handle(init_msg(3));
  ASSERT_EQ(kinds(r0), (std::vector<std::string>{"init", "frame_batch", "state"}));
  EXPECT_EQ(r0[0]["session_id"], "h1");
  EXPECT_EQ(r0[0]["dims"], json({128, 64}));
  EXPECT_FALSE(r0[0]["objects"].empty());
  EXPECT_EQ(r0[1]["source"], "init");
  EXPECT_EQ(r0[2]["step"], 0);
  EXPECT_EQ(r0[2]["frames"], 1);
  for (int k = 1; k <= 3; ++k) {
    const auto r = host.handle(action_msg(30.0, 0.5));
    ASSERT_EQ(kinds(r), (std::vector<std::string>{"frame_batch", "state"}));
    EXPECT_EQ(r[0]["step"], k);
    EXPECT_EQ(r[0]["source"], "user");
    EXPECT_EQ(r[0]["frames"].size(), 2u);
    EXPECT_EQ(r[1]["step"], k);
  }
  EXPECT_EQ(host.snapshot().steps.size(), 3u);
}

TEST(Host, ErrorsLeaveStateUnchanged) {
  SessionHost host("h2");
  auto r = host.handle(action_msg(0, 1));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"error"});
  EXPECT_NE(r[0]["message"].get<std::string>().find("before init"), std::string::npos);
  EXPECT_FALSE(r[0]["fatal"].get<bool>());
  EXPECT_FALSE(host.initialized());

  r = host.handle_text("{not json");
  ASSERT_EQ(kinds(r), std::vector<std::string>{"error"});
  EXPECT_EQ(r[0]["message"], "malformed JSON");
  r = host.handle(json{{"v", 9}, {"kind", "init"}, {"seed", 1}});
  EXPECT_EQ(kinds(r), std::vector<std::string>{"error"});
  r = host.handle(msg("teleport"));
  EXPECT_EQ(kinds(r), std::vector<std::string>{"error"});
  EXPECT_FALSE(host.initialized());

  host.handle(init_msg(4));
  r = host.handle(init_msg(5));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"error"});
  r = host.handle(action_msg(0, -1));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"error"});
  r = host.handle(msg("frame_batch"));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"error"});
  r = host.handle(msg("state"));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"state"});
  EXPECT_EQ(r[0]["step"], 0);
}

TEST(Host, ForwardStepFrameCount) {
  SessionHost host("h3");
  host.handle(init_msg(6));
  const auto r = host.handle(action_msg(0.0, 2.0));
  ASSERT_EQ(r[0]["kind"], "frame_batch");
  ASSERT_EQ(r[0]["frames"].size(), 8u);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(r[0]["frames"][k]["index"], k + 1);
  EXPECT_EQ(r[1]["frames"], 9);
}

TEST(Host, QuarterTurnIsRoll) {
  SessionHost host("h4");
  const auto r0 = host.handle(init_msg(7));
  const PanoramaImage x0 = decode(r0[1]["frames"][0]["png"]);
  const auto r = host.handle(action_msg(90.0, 0.0));
  ASSERT_EQ(r[0]["frames"].size(), 1u);
  const PanoramaImage f = decode(r[0]["frames"][0]["png"]);
  EXPECT_GT(psnr(f, rotate_panorama_image(x0, {kHalfPi, 0.0})), 60.0);
}

TEST(Host, PilotAndBev) {
  SessionHost host("h5");
  host.handle(init_msg(8));
  auto r = host.handle(msg("pilot", {{"steps", 0}}));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"error"});
  r = host.handle(msg("pilot", {{"steps", 51}}));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"error"});
  r = host.handle(msg("pilot", {{"steps", 3}}));
  int batches = 0;
  for (const json& m : r) {
    if (m["kind"] == "frame_batch") {
      EXPECT_EQ(m["source"], "pilot");
      ++batches;
    }
  }
  EXPECT_EQ(batches, 3);
  EXPECT_EQ(r.back()["kind"], "state");
  EXPECT_EQ(r.back()["step"], 3);

  r = host.handle(msg("bev", {{"size", 64}}));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"bev"});
  const auto png = base64_decode(r[0]["png"].get<std::string>());
  const Image bev = decode_png(png);
  EXPECT_EQ(bev.width(), 64);
  EXPECT_EQ(bev.height(), 64);
  EXPECT_EQ(r[0]["trajectory"].size(), 4u);
  EXPECT_NEAR(r[0]["trajectory"][0][0].get<double>(), 32.0, 1e-9);
  EXPECT_NEAR(r[0]["trajectory"][0][1].get<double>(), 32.0, 1e-9);
  EXPECT_FALSE(r[0]["landmarks"].empty());
  EXPECT_EQ(kinds(host.handle(msg("bev", {{"size", 8}}))), std::vector<std::string>{"error"});
}

TEST(Host, ExportArchiveLoads) {
  SessionHost host("h6");
  host.handle(init_msg(9));
  host.handle(action_msg(45.0, 1.0));
  host.handle(action_msg(-20.0, 0.5));
  const auto r = host.handle(msg("export"));
  ASSERT_EQ(kinds(r), std::vector<std::string>{"export"});
  panoworld::testing::TempDir tmp("archive");
  write_archive(r[0]["archive"], tmp.path() / "s");
  const ExplorationSession loaded = load_session(tmp.path() / "s");
  const ExplorationSession live = host.snapshot();
  ASSERT_EQ(loaded.steps.size(), live.steps.size());
  EXPECT_EQ(*loaded.x0, decode(encode_frame(*live.x0)));
  for (std::size_t i = 0; i < live.steps.size(); ++i) {
    ASSERT_EQ(loaded.steps[i].frames.size(), live.steps[i].frames.size());
    for (std::size_t k = 0; k < live.steps[i].frames.size(); ++k) {
      EXPECT_EQ(*loaded.steps[i].frames[k], decode(encode_frame(*live.steps[i].frames[k])));
    }
    EXPECT_NEAR(loaded.steps[i].action.alpha, live.steps[i].action.alpha, 1e-12);
  }

  json bad = r[0]["archive"];
  bad["files"]["../escape.png"] = "AAAA";
  EXPECT_THROW(write_archive(bad, tmp.path() / "bad"), DecodeError);
  json bad2 = r[0]["archive"];
  bad2["files"]["sub/x.png"] = "AAAA";
  EXPECT_THROW(write_archive(bad2, tmp.path() / "bad2"), DecodeError);
  EXPECT_FALSE(fs::exists(tmp.path() / "escape.png"));
}

TEST(Host, EndThenErrors) {
  SessionHost host("h7");
  host.handle(init_msg(10));
  host.handle(action_msg(0, 0.5));
  const auto r = host.handle(msg("end"));
  ASSERT_EQ(kinds(r), (std::vector<std::string>{"state", "end"}));
  EXPECT_EQ(r[1]["steps"], 1);
  EXPECT_TRUE(r[0]["done"].get<bool>());
  EXPECT_TRUE(host.ended());
  for (const json& m : {action_msg(0, 1), msg("state"), init_msg(1)}) {
    const auto e = host.handle(m);
    ASSERT_EQ(kinds(e), std::vector<std::string>{"error"});
    EXPECT_EQ(e[0]["message"], "session has ended");
  }
}

TEST(Host, GoalModeInit) {
  SessionHost probe("p");
  const auto ack = probe.handle(init_msg(11))[0];
  const std::string goal = ack["objects"][0];
  SessionHost host("h8");
  json m = init_msg(11);
  m["mode"] = "goal";
  m["goal"] = goal;
  const auto r = host.handle(m);
  ASSERT_EQ(r[0]["kind"], "init");
  EXPECT_EQ(r[0]["goal"], goal);
  EXPECT_EQ(r[0]["mode"], "goal");
  SessionHost bad("h9");
  m["goal"] = "no-such-object";
  EXPECT_EQ(bad.handle(m)[0]["kind"], "error");
}

TEST(Host, ReplayReproducesFrames) {
  std::vector<json> inbound = {init_msg(12), action_msg(30, 1.0), msg("pilot", {{"steps", 2}}),
                               action_msg(-90, 0.0), msg("end")};
  std::vector<json> live;
  {
    SessionHost host("r");
    for (const json& m : inbound) {
      auto r = host.handle(m);
      live.insert(live.end(), r.begin(), r.end());
    }
  }
  const auto replayed = replay_log(inbound, {}, "r");
  ASSERT_FALSE(frames_of(live).empty());
  EXPECT_EQ(frames_of(replayed), frames_of(live));
  EXPECT_EQ(replayed, live);
}

TEST(Server, HealthAndStatic) {
  panoworld::testing::TempDir tmp("static");
  fs::create_directories(tmp.path() / "www" / "js");
  std::ofstream(tmp.path() / "www" / "index.html") << "<html>pano</html>";
  std::ofstream(tmp.path() / "www" / "js" / "app.js") << "let x = 1;";
  std::ofstream(tmp.path() / "secret.txt") << "secret";
  ServerOptions opts;
  opts.static_root = tmp.path() / "www";
  SessionServer srv(opts);
  srv.start();
  const unsigned short port = srv.port();
  ASSERT_NE(port, 0);

  HttpResponse h = http_get("127.0.0.1", port, "/healthz");
  EXPECT_EQ(h.status, 200);
  EXPECT_NE(h.content_type.find("application/json"), std::string::npos);
  const json hj = json::parse(h.body);
  EXPECT_EQ(hj["ok"], true);
  EXPECT_EQ(hj["v"], 1);

  h = http_get("127.0.0.1", port, "/");
  EXPECT_EQ(h.status, 200);
  EXPECT_EQ(h.body, "<html>pano</html>");
  EXPECT_NE(h.content_type.find("text/html"), std::string::npos);
  h = http_get("127.0.0.1", port, "/js/app.js");
  EXPECT_EQ(h.status, 200);
  EXPECT_EQ(h.body, "let x = 1;");
  EXPECT_EQ(http_get("127.0.0.1", port, "/../secret.txt").status, 404);
  EXPECT_EQ(http_get("127.0.0.1", port, "/js/../../secret.txt").status, 404);
  EXPECT_EQ(http_get("127.0.0.1", port, "/missing.html").status, 404);
  srv.stop();
}

TEST(Server, ConcurrentSessionsAreIsolated) {
  SessionServer srv(ServerOptions{});
  srv.start();
  const unsigned short port = srv.port();
  std::vector<std::string> frames[2];
  std::vector<json> logs[2];
  std::string ids[2];
  auto run = [&](int k) {
    ProtocolClient c("127.0.0.1", port);
    std::vector<json> replies = c.request(init_msg(100 + k));
    for (int i = 0; i < 3; ++i) {
      auto r = c.request(action_msg(40.0 * (k + 1), 0.5 + 0.25 * i));
      replies.insert(replies.end(), r.begin(), r.end());
    }
    auto r = c.request(msg("end"), "end");
    replies.insert(replies.end(), r.begin(), r.end());
    ids[k] = replies.front()["session_id"];
    frames[k] = frames_of(replies);
    logs[k] = c.sent();
    c.close();
  };
  std::thread a(run, 0);
  std::thread b(run, 1);
  a.join();
  b.join();
  EXPECT_NE(ids[0], ids[1]);
  EXPECT_EQ(srv.sessions_started(), 2u);
  for (int k = 0; k < 2; ++k) {
    ASSERT_FALSE(frames[k].empty());
    EXPECT_EQ(frames_of(replay_log(logs[k], {}, ids[k])), frames[k]) << "session " << k;
    EXPECT_EQ(frames_of(srv.recorded(ids[k])), frames[k]);
  }
  EXPECT_NE(frames[0].front(), frames[1].front());
  srv.stop();
}

TEST(Server, AttachIsReadOnlyAndLogsSessions) {
  panoworld::testing::TempDir tmp("logs");
  ServerOptions opts;
  opts.log_dir = tmp.path();
  SessionServer srv(opts);
  srv.start();
  std::string id;
  std::vector<std::string> live;
  {
    ProtocolClient c("127.0.0.1", srv.port());
    auto r = c.request(init_msg(21));
    id = r.front()["session_id"];
    auto s = c.request(action_msg(10, 0.5));
    r.insert(r.end(), s.begin(), s.end());
    live = frames_of(r);
    c.close();
  }
  ProtocolClient viewer("127.0.0.1", srv.port());
  const auto r = viewer.request(msg("attach", {{"session_id", id}}));
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r.back()["kind"], "state");
  EXPECT_TRUE(r.back()["read_only"].get<bool>());
  EXPECT_EQ(frames_of(r), live);
  const auto e = viewer.request(action_msg(0, 1));
  ASSERT_EQ(e.back()["kind"], "error");
  EXPECT_EQ(e.back()["message"], "attached sessions are read-only");
  viewer.close();

  ProtocolClient lost("127.0.0.1", srv.port());
  EXPECT_EQ(lost.request(msg("attach", {{"session_id", "nope"}})).back()["kind"], "error");
  lost.close();
  srv.stop();

  std::ifstream log(tmp.path() / (id + ".jsonl"));
  ASSERT_TRUE(log.good());
  std::string line;
  std::vector<json> lines;
  while (std::getline(log, line)) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0]["kind"], "init");
  EXPECT_EQ(lines[1]["kind"], "action");
}

TEST(Cli, ExitCodes) {
  panoworld::testing::TempDir tmp("cli");
  const std::string dir = tmp.path().string();
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("render --dims 64by32 --out " + dir + "/x.png"), 1);
  EXPECT_EQ(run_cli("render --dims 64x31 --out " + dir + "/x.png"), 2);
  EXPECT_EQ(run_cli("rotate --in " + dir + "/missing.png --out " + dir + "/y.png"), 2);
  ASSERT_EQ(run_cli("render --seed 3 --dims 256x128 --out " + dir + "/p.png"), 0);
  EXPECT_EQ(run_cli("convert --in " + dir + "/p.png --to cubemap --face-size 64 --check"), 0);
  EXPECT_EQ(run_cli("metric " + dir + "/p.png " + dir + "/p.png"), 0);
}

TEST(Cli, EvalIelcWritesReport) {
  panoworld::testing::TempDir tmp("ielc");
  ASSERT_EQ(run_cli("eval-ielc --preset ci --dims 32x16 --out " + tmp.path().string()), 0);
  std::ifstream csv(tmp.path() / "ielc.csv");
  ASSERT_TRUE(csv.good());
  std::stringstream ss;
  ss << csv.rdbuf();
  EXPECT_FALSE(ss.str().empty());
  const json j = json::parse(std::ifstream(tmp.path() / "ielc.json"));
  EXPECT_TRUE(j.is_object());
}
