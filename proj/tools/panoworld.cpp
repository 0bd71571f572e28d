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

// panoworld command line: rendering, conversions, datasets, exploration,
// evaluations and the session server.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <pthread.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "panoworld/errors.hpp"
#include "panoworld/exploration.hpp"
#include "panoworld/ielc.hpp"
#include "panoworld/image.hpp"
#include "panoworld/metrics.hpp"
#include "panoworld/policy.hpp"
#include "panoworld/raster_io.hpp"
#include "panoworld/server.hpp"
#include "panoworld/transition.hpp"
#include "panoworld/world.hpp"

namespace pw = panoworld;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = pw::kPi / 180.0;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

pw::Dims parse_dims(const std::string& s) {
  int w = 0;
  int h = 0;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof()) {
    throw UsageError("--dims expects WxH, got '" + s + "'");
  }
  return {w, h};
}

std::vector<double> parse_numbers(const std::string& s, char sep) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

pw::AgentPose parse_pose(const std::string& s) {
  if (s.empty()) return {};
  const auto v = parse_numbers(s, ',');
  if (v.size() != 3) throw UsageError("--pose expects x,y,heading_deg");
  return {{v[0], v[1], 0.0}, pw::wrap_longitude(v[2] * kDeg)};
}

// "alpha_deg:d,alpha_deg:d,..."
std::vector<pw::Action> parse_actions(const std::string& s) {
  std::vector<pw::Action> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto v = parse_numbers(item, ':');
    if (v.size() != 2) throw UsageError("actions are alpha_deg:d pairs, got '" + item + "'");
    out.push_back(pw::Action::normalized(v[0] * kDeg, v[1]));
  }
  return out;
}

pw::SceneSpec load_scene(const std::string& path, std::uint64_t seed) {
  if (path.empty()) return pw::scene_from_seed(seed);
  std::ifstream in(path);
  if (!in) throw pw::IoError("cannot open " + path);
  try {
    return pw::scene_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw pw::DecodeError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw pw::IoError("cannot write " + path.string());
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

struct Common {
  std::uint64_t seed = 0;
  std::string dims = "512x256";
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_dims = "512x256") {
  c.dims = default_dims;
  cmd->add_option("--seed", c.seed, "Scene or evaluation seed");
  cmd->add_option("--dims", c.dims, "Panorama size WxH")->capture_default_str();
  cmd->add_option("--out", c.out, "Output path");
}

std::string require_out(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  return c.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Procedural panoramic world exploration"};
  app.require_subcommand(1);

  // render
  Common render_c;
  std::string render_scene;
  std::string render_pose;
  int render_ss = 1;
  auto* render = app.add_subcommand("render", "Render a panorama of a scene");
  add_common(render, render_c);
  render->add_option("--scene", render_scene, "Scene JSON (default: generated from --seed)");
  render->add_option("--pose", render_pose, "x,y,heading_deg");
  render->add_option("--supersample", render_ss, "Samples per axis per pixel");

  // convert
  Common convert_c;
  std::string convert_in;
  std::string convert_to = "cubemap";
  int face_size = 256;
  bool convert_check = false;
  auto* convert = app.add_subcommand("convert", "Equirectangular <-> cubemap");
  add_common(convert, convert_c);
  convert->add_option("--in", convert_in, "Panorama PNG, or cubemap manifest/prefix")->required();
  convert->add_option("--to", convert_to, "cubemap | equirect")->check(CLI::IsMember({"cubemap", "equirect"}));
  convert->add_option("--face-size", face_size, "Cube face size");
  convert->add_flag("--check", convert_check, "Round trip and report PSNR (>= 30 dB required)");

  // rotate
  Common rotate_c;
  std::string rotate_in;
  double rot_yaw = 0.0;
  double rot_pitch = 0.0;
  std::string rot_mode = "rigid";
  auto* rotate = app.add_subcommand("rotate", "Rotate a panorama on the sphere");
  add_common(rotate, rotate_c);
  rotate->add_option("--in", rotate_in, "Panorama PNG")->required();
  rotate->add_option("--yaw-deg", rot_yaw, "Yaw in degrees");
  rotate->add_option("--pitch-deg", rot_pitch, "Pitch in degrees");
  rotate->add_option("--mode", rot_mode, "rigid | literal")->check(CLI::IsMember({"rigid", "literal"}));

  // perspective
  Common persp_c;
  std::string persp_in;
  double persp_yaw = 0.0;
  double persp_pitch = 0.0;
  double persp_fov = 90.0;
  int persp_w = 512;
  int persp_h = 512;
  auto* persp = app.add_subcommand("perspective", "Pinhole view from a panorama");
  add_common(persp, persp_c);
  persp->add_option("--in", persp_in, "Panorama PNG")->required();
  persp->add_option("--yaw-deg", persp_yaw, "Viewing yaw");
  persp->add_option("--pitch-deg", persp_pitch, "Viewing pitch");
  persp->add_option("--fov-deg", persp_fov, "Horizontal field of view");
  persp->add_option("--width", persp_w, "Output width");
  persp->add_option("--height", persp_h, "Output height");

  // bev
  Common bev_c;
  std::string bev_scene;
  std::string bev_pose;
  double bev_height = 25.0;
  int bev_size = 512;
  bool bev_ortho = false;
  auto* bev = app.add_subcommand("bev", "Top-down view of a scene");
  add_common(bev, bev_c);
  bev->add_option("--scene", bev_scene, "Scene JSON (default: generated from --seed)");
  bev->add_option("--pose", bev_pose, "x,y,heading_deg");
  bev->add_option("--height", bev_height, "Camera height above the pose");
  bev->add_option("--size", bev_size, "Image size");
  bev->add_flag("--orthographic", bev_ortho, "Orthographic instead of pinhole");

  // dataset
  Common data_c;
  int data_steps = 10;
  int data_face = 64;
  auto* dataset = app.add_subcommand("dataset", "Capture panoramas and cube faces along a random trajectory");
  add_common(dataset, data_c, "256x128");
  dataset->add_option("--steps", data_steps, "Trajectory length");
  dataset->add_option("--face-size", data_face, "Cube face size");

  // explore
  Common explore_c;
  std::string explore_mode = "scripted";
  std::string explore_actions;
  std::string explore_goal;
  int explore_budget = 20;
  double explore_fpm = 4.0;
  double explore_kappa = 0.0;
  auto* explore = app.add_subcommand("explore", "Run an exploration session and save it");
  add_common(explore, explore_c, "256x128");
  explore->add_option("--mode", explore_mode, "scripted | free | goal")
      ->check(CLI::IsMember({"scripted", "free", "goal"}));
  explore->add_option("--actions", explore_actions, "alpha_deg:d,... (scripted)");
  explore->add_option("--goal", explore_goal, "Goal object id (goal mode; default: a generated goal)");
  explore->add_option("--budget", explore_budget, "Step budget");
  explore->add_option("--fpm", explore_fpm, "Frames per meter");
  explore->add_option("--kappa", explore_kappa, "Degradation strength (0 = ground truth)");

  // eval-ielc
  Common ielc_c;
  std::string ielc_preset = "ci";
  auto* eval_ielc = app.add_subcommand("eval-ielc", "Closed-loop consistency evaluation");
  add_common(eval_ielc, ielc_c, "256x128");
  eval_ielc->add_option("--preset", ielc_preset, "ci | full")->check(CLI::IsMember({"ci", "full"}));

  // eval-policy
  Common policy_c;
  int policy_single = 500;
  int policy_multi = 200;
  std::string policy_kappas = "0";
  auto* eval_policy = app.add_subcommand("eval-policy", "Question answering with and without imagination");
  add_common(eval_policy, policy_c);
  eval_policy->add_option("--single", policy_single, "Single-agent scenarios");
  eval_policy->add_option("--multi", policy_multi, "Multi-agent scenarios");
  eval_policy->add_option("--kappas", policy_kappas, "Comma-separated degradation strengths");

  // serve
  Common serve_c;
  std::string serve_address = "127.0.0.1";
  unsigned short serve_port = 8080;
  std::string serve_static;
  std::string serve_logs;
  auto* serve = app.add_subcommand("serve", "Session server (WebSocket /session, /healthz, static files)");
  add_common(serve, serve_c);
  serve->add_option("--address", serve_address, "Bind address");
  serve->add_option("--port", serve_port, "Port (0 picks a free one)");
  serve->add_option("--static", serve_static, "Directory served at /");
  serve->add_option("--log-dir", serve_logs, "Write each session's client messages here");

  // metric
  Common metric_c;
  std::string metric_a;
  std::string metric_b;
  auto* metric = app.add_subcommand("metric", "MSE, PSNR and SSIM between two images");
  add_common(metric, metric_c);
  metric->add_option("a", metric_a, "First PNG")->required();
  metric->add_option("b", metric_b, "Second PNG")->required();

  // eval-session
  Common esession_c;
  std::string esession_in;
  auto* eval_session = app.add_subcommand("eval-session", "Summarize a saved session or exported archive");
  add_common(eval_session, esession_c);
  eval_session->add_option("--in", esession_in, "Session directory or archive JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (render->parsed()) {
      const pw::SceneSpec scene = load_scene(render_scene, render_c.seed);
      pw::RenderOptions ro;
      ro.supersample = render_ss;
      const auto pano = pw::render_panorama(scene, parse_pose(render_pose), parse_dims(render_c.dims), ro);
      pw::save_raster(pano.raster(), require_out(render_c));
    } else if (convert->parsed()) {
      if (convert_to == "cubemap") {
        const pw::PanoramaImage pano = pw::load_panorama(convert_in);
        const pw::CubeMapImage cm = pw::equirect_to_cubemap(pano, face_size);
        if (!convert_c.out.empty()) pw::save_cubemap(cm, convert_c.out);
        if (convert_check) {
          const double p = pw::psnr(pano, pw::cubemap_to_equirect(cm, pano.dims()));
          print_json({{"roundtrip_psnr", p}, {"pass", p >= 30.0}});
          if (p < 30.0) return 2;
        }
      } else {
        const pw::CubeMapImage cm = pw::load_cubemap(convert_in);
        const auto pano = pw::cubemap_to_equirect(cm, parse_dims(convert_c.dims));
        pw::save_raster(pano.raster(), require_out(convert_c));
      }
    } else if (rotate->parsed()) {
      const pw::PanoramaImage pano = pw::load_panorama(rotate_in);
      pw::RotationSpec rot;
      rot.dphi = rot_yaw * kDeg;
      rot.dtheta = rot_pitch * kDeg;
      rot.mode = pw::rotation_mode_from_string(rot_mode);
      pw::save_raster(pw::rotate_panorama_image(pano, rot).raster(), require_out(rotate_c));
    } else if (persp->parsed()) {
      const pw::PanoramaImage pano = pw::load_panorama(persp_in);
      const auto view =
          pw::extract_perspective(pano, persp_yaw * kDeg, persp_pitch * kDeg, persp_fov * kDeg, persp_w, persp_h);
      pw::save_raster(view.raster, require_out(persp_c));
    } else if (bev->parsed()) {
      const pw::SceneSpec scene = load_scene(bev_scene, bev_c.seed);
      pw::BevOptions bo;
      bo.orthographic = bev_ortho;
      pw::save_raster(pw::render_bev(scene, parse_pose(bev_pose), bev_height, bev_size, bo).raster,
                      require_out(bev_c));
    } else if (dataset->parsed()) {
      const pw::SceneSpec scene = pw::scene_from_seed(data_c.seed);
      pw::Rng rng(data_c.seed + 17);
      std::vector<pw::AgentPose> poses{{}};
      for (int tries = 0; static_cast<int>(poses.size()) <= data_steps && tries < 100 * data_steps; ++tries) {
        const pw::Action a = pw::sample_action(rng, {-pw::kPi / 2, pw::kPi / 2, 0.5, 2.0});
        if (!pw::path_blocked(scene, poses.back(), a)) poses.push_back(pw::apply_action(poses.back(), a));
      }
      pw::DatasetOptions opts;
      opts.dims = parse_dims(data_c.dims);
      opts.face_size = data_face;
      const auto manifest = pw::capture_trajectory_dataset(scene, poses, require_out(data_c), opts);
      print_json({{"steps", manifest.poses.size()}, {"dir", data_c.out}});
    } else if (explore->parsed()) {
      const pw::Dims dims = parse_dims(explore_c.dims);
      std::shared_ptr<const pw::SceneSpec> scene;
      pw::AgentPose start;
      pw::Instruction ins;
      ins.budget = explore_budget;
      if (explore_mode == "goal") {
        ins.mode = pw::ExploreMode::kGoal;
        if (explore_goal.empty()) {
          const pw::GoalScenario g = pw::make_goal_scenario(explore_c.seed);
          scene = g.scene;
          start = g.start;
          ins.goal_object = g.goal;
        } else {
          scene = std::make_shared<const pw::SceneSpec>(pw::scene_from_seed(explore_c.seed));
          ins.goal_object = explore_goal;
        }
      } else {
        scene = std::make_shared<const pw::SceneSpec>(pw::scene_from_seed(explore_c.seed));
        ins.mode = explore_mode == "free" ? pw::ExploreMode::kFree : pw::ExploreMode::kInteractive;
      }
      std::unique_ptr<pw::WorldModel> model = std::make_unique<pw::GroundTruthModel>(scene, start, dims);
      if (explore_kappa > 0.0) {
        model = std::make_unique<pw::DegradedModel>(std::move(model), explore_kappa, explore_c.seed + 1);
      }
      const pw::Frame x0 = std::make_shared<const pw::PanoramaImage>(pw::render_panorama(*scene, start, dims));
      pw::SessionOptions so;
      so.instruction = ins;
      so.config.frames_per_meter = explore_fpm;
      pw::ActionFeed feed;
      if (ins.mode == pw::ExploreMode::kInteractive) {
        for (const pw::Action& a : parse_actions(explore_actions)) feed.push(a);
        feed.close();
        so.feed = &feed;
      }
      const pw::RolloutResult r = pw::run_session(*model, x0, so);
      if (!explore_c.out.empty()) pw::save_session(r.session, explore_c.out);
      json summary{{"steps", r.session.steps.size()},
                   {"frames", r.session.frame_count()},
                   {"provenance", r.session.provenance}};
      if (r.error) summary["error"] = *r.error;
      print_json(summary);
      if (r.error) return 2;
    } else if (eval_ielc->parsed()) {
      pw::IelcPreset preset = pw::ielc_preset(ielc_preset, ielc_c.seed);
      preset.config.dims = parse_dims(ielc_c.dims);
      const pw::IelcReport report = pw::evaluate_ielc(preset.scenes, preset.loops, preset.config);
      const fs::path out = require_out(ielc_c);
      write_text(out / "ielc.csv", report.to_csv());
      write_text(out / "ielc.json", report.to_json(preset.config).dump(2) + "\n");
      std::cout << report.to_csv();
    } else if (eval_policy->parsed()) {
      pw::PolicyEvalConfig cfg;
      cfg.first_seed = policy_c.seed;
      cfg.single_agent = policy_single;
      cfg.multi_agent = policy_multi;
      cfg.kappas = parse_numbers(policy_kappas, ',');
      cfg.eqa.dims = parse_dims(policy_c.dims);
      const pw::PolicyReport report = pw::evaluate_policies(cfg);
      const fs::path out = require_out(policy_c);
      write_text(out / "policy.csv", report.to_csv());
      write_text(out / "policy.json", report.to_json().dump(2) + "\n");
      std::cout << report.to_csv();
    } else if (serve->parsed()) {
      pw::ServerOptions so;
      so.address = serve_address;
      so.port = serve_port;
      so.static_root = serve_static;
      so.log_dir = serve_logs;
      pw::SessionServer server(so);
      server.start();
      std::cout << "listening on " << serve_address << ":" << server.port() << std::endl;
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
    } else if (metric->parsed()) {
      const pw::Image a = pw::load_raster(metric_a);
      const pw::Image b = pw::load_raster(metric_b);
      print_json({{"mse", pw::mse(a, b)}, {"psnr", pw::psnr(a, b)}, {"ssim", pw::ssim(a, b)}});
    } else if (eval_session->parsed()) {
      fs::path dir = esession_in;
      if (fs::is_regular_file(dir)) {
        std::ifstream in(dir);
        json archive = json::parse(in);
        if (archive.contains("archive")) archive = archive["archive"];
        dir = esession_c.out.empty() ? fs::temp_directory_path() / ("panoworld_session_" + std::to_string(::getpid()))
                                     : fs::path(esession_c.out);
        pw::write_archive(archive, dir);
      }
      const pw::ExplorationSession s = pw::load_session(dir);
      pw::AgentPose net;
      for (const pw::SessionStep& st : s.steps) net = pw::apply_action(net, st.action);
      json summary{{"steps", s.steps.size()},
                   {"frames", s.frame_count()},
                   {"done", s.done},
                   {"net_pose", pw::to_json(net)},
                   {"x0_vs_last_mse", pw::mse(*s.x0, *s.latest())},
                   {"max_seam_delta", 0.0}};
      double seam = pw::seam_delta(*s.x0);
      for (const pw::SessionStep& st : s.steps) {
        for (const pw::Frame& f : st.frames) seam = std::max(seam, pw::seam_delta(*f));
      }
      summary["max_seam_delta"] = seam;
      print_json(summary);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help() << std::flush;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
