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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "panoworld/exploration.hpp"
#include "panoworld/geometry.hpp"
#include "panoworld/ielc.hpp"
#include "panoworld/image.hpp"
#include "panoworld/metrics.hpp"
#include "panoworld/policy.hpp"
#include "panoworld/protocol.hpp"
#include "panoworld/random.hpp"
#include "panoworld/server.hpp"
#include "panoworld/transition.hpp"
#include "panoworld/world.hpp"

using namespace panoworld;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Image random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (float& s : img.mutable_samples()) s = static_cast<float>(rng.uniform());
  return img;
}

Image perturbed(const Image& a, double amp, std::uint64_t seed) {
  Rng rng(seed);
  Image b = a;
  for (float& s : b.mutable_samples())
    s = static_cast<float>(std::clamp(s + amp * (rng.uniform() - 0.5), 0.0, 1.0));
  return b;
}

double shade_of(const Vec3& n) {
  const Vec3 l{0.4, 0.25, 0.88};
  const double len = norm(l);
  return 0.6 + 0.4 * (0.5 + 0.5 * dot(n, Vec3{l.x / len, l.y / len, l.z / len}));
}

// ---------------------------------------------------------------------------

Outcome coordinates() {
  double worst_rt = 0.0;
  for (Dims dims : {Dims{64, 32}, Dims{1024, 512}}) {
    for (int j = 0; j < dims.height; ++j) {
      for (int i = 0; i < dims.width; ++i) {
        const PixelCoord p{i + 0.5, j + 0.5};
        const PixelCoord q = sphere_to_pixel(pixel_to_sphere(p, dims), dims);
        worst_rt = std::max({worst_rt, std::abs(q.u - p.u), std::abs(q.v - p.v)});
      }
    }
  }
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> lon(-kPi, kPi), lat(-1.5, 1.5), big(-10.0, 10.0);
  double worst_lit = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const SphericalCoord c{lon(gen), lat(gen), 1.0};
    const RotationSpec rot{big(gen), big(gen), RotationMode::kLiteral};
    const SphericalCoord out = rotate_spherical(c, rot);
    const double phi = c.phi + rot.dphi - kTwoPi * std::floor((c.phi + rot.dphi + kPi) / kTwoPi);
    const double theta = c.theta + rot.dtheta - kPi * std::floor((c.theta + rot.dtheta + kHalfPi) / kPi);
    worst_lit = std::max({worst_lit, std::abs(std::remainder(out.phi - phi, kTwoPi)), std::abs(out.theta - theta)});
  }
  return {worst_rt <= 1e-9 && worst_lit <= 1e-9,
          fmt("round trip max err %.2e, literal max err %.2e", worst_rt, worst_lit)};
}

Outcome yaw_exactness() {
  const PanoramaImage img(random_image(256, 128, 11));
  const int w = img.width();
  int mismatches = 0;
  for (int k : {-300, -129, -1, 0, 1, 7, 128, 255, 256, 513}) {
    const PanoramaImage out = rotate_panorama_image(img, {k * kTwoPi / w, 0.0});
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < w; ++x) mismatches += !(out.pixel(x, y) == img.pixel(((x + k) % w + w) % w, y));
  }
  const double step = kTwoPi / w;
  bool group = true;
  for (auto [a, b] : {std::pair{3, -11}, std::pair{100, 200}, std::pair{-77, 77}}) {
    group &= rotate_panorama_image(rotate_panorama_image(img, {a * step, 0}), {b * step, 0}) ==
             rotate_panorama_image(img, {(a + b) * step, 0});
  }
  return {mismatches == 0 && group, fmt("%d mismatched pixels, group law %s", mismatches, group ? "holds" : "broken")};
}

AgentPose free_pose(const SceneSpec& s, Rng& rng) {
  for (;;) {
    const AgentPose p{{rng.uniform(-12, 12), rng.uniform(-12, 12), 0.0}, rng.uniform(-kPi, kPi)};
    bool clear = true;
    for (const Primitive& o : s.objects) clear &= footprint_distance(o, p.position.x, p.position.y) > 0.5;
    if (clear) return p;
  }
}

Outcome commutation() {
  const Dims dims{1024, 512};
  RenderOptions ro;
  ro.supersample = 2;
  double worst = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SceneSpec s = scene_from_seed(1000 + seed);
    Rng rng(seed);
    for (int k = 0; k < 20; ++k) {
      const AgentPose pose = free_pose(s, rng);
      const double alpha = rng.uniform(-kPi, kPi);
      const PanoramaImage base = render_panorama(s, pose, dims, ro);
      AgentPose turned = pose;
      turned.heading = wrap_longitude(pose.heading + alpha);
      const double p = psnr(render_panorama(s, turned, dims, ro), rotate_panorama_image(base, {alpha, 0.0}));
      worst = std::min(worst, p);
      sum += p;
      ++n;
    }
  }
  return {worst >= 40.0, fmt("min PSNR %.2f dB, mean %.2f dB over %d poses", worst, sum / n, n)};
}

Outcome cubemap() {
  const Dims dims{1024, 512};
  double worst_psnr = std::numeric_limits<double>::infinity();
  double worst_seam = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SceneSpec s = scene_from_seed(2000 + seed);
    Rng rng(seed + 50);
    const PanoramaImage pano = render_panorama(s, free_pose(s, rng), dims);
    worst_psnr = std::min(worst_psnr, psnr(pano, cubemap_to_equirect(equirect_to_cubemap(pano, 512), dims)));
    worst_seam = std::max(worst_seam, seam_delta(pano));
  }
  return {worst_psnr >= 30.0 && worst_seam <= 2.0 / 255.0,
          fmt("min round-trip PSNR %.2f dB, max seam delta %.2f/255", worst_psnr, worst_seam * 255.0)};
}

Outcome ielc() {
  const IelcPreset preset = ielc_preset("ci");
  const IelcReport r = evaluate_ielc(preset.scenes, preset.loops, preset.config);
  double gt_max = 0.0;
  int used = 0;
  for (const IelcRecord& rec : r.records) {
    if (rec.kappa == 0.0 && !rec.blocked) {
      gt_max = std::max(gt_max, rec.mse);
      ++used;
    }
  }
  std::vector<double> lengths;
  for (const LoopSpec& l : preset.loops) lengths.push_back(l.length);
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  const std::vector<double>& kappas = preset.config.kappas;
  bool in_kappa = true;
  bool in_length = true;
  for (double len : lengths) {
    for (std::size_t i = 1; i < kappas.size(); ++i) {
      const auto a = r.cell(kappas[i - 1], len);
      const auto b = r.cell(kappas[i], len);
      in_kappa &= a && b && a->count > 0 && b->mean_mse > a->mean_mse;
    }
  }
  for (double k : kappas) {
    if (k == 0.0) continue;
    for (std::size_t i = 1; i < lengths.size(); ++i) {
      const auto a = r.cell(k, lengths[i - 1]);
      const auto b = r.cell(k, lengths[i]);
      in_length &= a && b && b->count > 0 && b->mean_mse > a->mean_mse;
    }
  }
  return {used == static_cast<int>(preset.loops.size()) && gt_max <= 0.01 && in_kappa && in_length,
          fmt("%d loops, max ground-truth MSE %.2e, increasing in kappa: %s, in length: %s", used, gt_max,
              in_kappa ? "yes" : "no", in_length ? "yes" : "no")};
}

double brute_mse(const Image& a, const Image& b) {
  double s = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const Rgb d = a.pixel(x, y) - b.pixel(x, y);
      s += d.r * d.r + d.g * d.g + d.b * d.b;
    }
  return s / (3.0 * a.width() * a.height());
}

double channel(const Rgb& c, int k) { return k == 0 ? c.r : (k == 1 ? c.g : c.b); }

double brute_ssim(const Image& a, const Image& b) {
  constexpr int win = 11;
  double w[win][win];
  double wsum = 0;
  for (int j = 0; j < win; ++j)
    for (int i = 0; i < win; ++i) wsum += w[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  int count = 0;
  for (int k = 0; k < 3; ++k)
    for (int oy = 0; oy + win <= a.height(); ++oy)
      for (int ox = 0; ox + win <= a.width(); ++ox) {
        double ma = 0, mb = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            ma += w[j][i] / wsum * channel(a.pixel(ox + i, oy + j), k);
            mb += w[j][i] / wsum * channel(b.pixel(ox + i, oy + j), k);
          }
        double va = 0, vb = 0, cov = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            const double da = channel(a.pixel(ox + i, oy + j), k) - ma;
            const double db = channel(b.pixel(ox + i, oy + j), k) - mb;
            va += w[j][i] / wsum * da * da;
            vb += w[j][i] / wsum * db * db;
            cov += w[j][i] / wsum * da * db;
          }
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

Outcome metric_oracles() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image a = random_image(32, 32, 10 + seed);
    for (double amp : {0.05, 0.3, 1.0}) {
      const Image b = perturbed(a, amp, 20 + seed);
      const double m = brute_mse(a, b);
      worst = std::max({worst, std::abs(mse(a, b) - m), std::abs(psnr(a, b) - 10.0 * std::log10(1.0 / m)),
                        std::abs(ssim(a, b) - brute_ssim(a, b))});
    }
  }
  const Image a = random_image(32, 32, 99);
  const bool ident = ssim(a, a) == 1.0 && mse(a, a) == 0.0 && std::isinf(psnr(a, a));
  return {worst <= 1e-9 && ident, fmt("max deviation %.2e, identity %s", worst, ident ? "exact" : "inexact")};
}

// Centroid of the exact-shade top face of `p` nearest its projection; empty
// when that component is smaller than 90% of the unoccluded top (partly hidden).
std::optional<PixelCoord> top_centroid(const PerspectiveImage& bev, const Primitive& p, double cam_z,
                                       const PixelCoord& hint) {
  const int size = bev.raster.width();
  const Rgb top = p.color * shade_of({0, 0, 1});
  std::vector<int> label(static_cast<std::size_t>(size) * size, -1);
  auto match = [&](int x, int y) {
    const Rgb c = bev.raster.pixel(x, y);
    return std::abs(c.r - top.r) < 1e-6 && std::abs(c.g - top.g) < 1e-6 && std::abs(c.b - top.b) < 1e-6;
  };
  struct Comp {
    double sx = 0, sy = 0;
    int n = 0;
  };
  std::vector<Comp> comps;
  std::vector<int> stack;
  for (int y0 = 0; y0 < size; ++y0)
    for (int x0 = 0; x0 < size; ++x0) {
      if (label[y0 * size + x0] >= 0 || !match(x0, y0)) continue;
      const int id = static_cast<int>(comps.size());
      comps.emplace_back();
      label[y0 * size + x0] = id;
      stack.push_back(y0 * size + x0);
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int x = i % size, y = i / size;
        comps[id].sx += x + 0.5;
        comps[id].sy += y + 0.5;
        ++comps[id].n;
        for (auto [dx, dy] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= size || ny >= size) continue;
          if (label[ny * size + nx] >= 0 || !match(nx, ny)) continue;
          label[ny * size + nx] = id;
          stack.push_back(ny * size + nx);
        }
      }
    }
  const Comp* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Comp& c : comps) {
    const double d = std::hypot(c.sx / c.n - hint.u, c.sy / c.n - hint.v);
    if (d < best_d) {
      best_d = d;
      best = &c;
    }
  }
  if (best == nullptr) return std::nullopt;
  const double scale = (size / 2.0) / (cam_z - p.top());
  const double area = (p.shape == Shape::kBox ? 4.0 * p.size.x * p.size.y : kPi * p.size.x * p.size.x) * scale * scale;
  if (best->n < 0.9 * area) return std::nullopt;
  return PixelCoord{best->sx / best->n, best->sy / best->n};
}

Outcome bev_geometry() {
  const int size = 512;
  const double height = 25.0;
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneSpec s = scene_from_seed(3000 + seed);
    if (s.max_object_top() >= height) return {false, fmt("scene %llu taller than the camera", (unsigned long long)seed)};
    Rng rng(seed + 7);
    const AgentPose pose = free_pose(s, rng);
    const PerspectiveImage bev = render_bev(s, pose, height, size);
    for (const Primitive& p : s.objects) {
      if (p.shape == Shape::kSphere) continue;
      const auto proj = project_bev(pose, height, size, {p.center.x, p.center.y, p.top()});
      if (!proj || proj->u < 0 || proj->v < 0 || proj->u > size || proj->v > size) continue;
      const auto c = top_centroid(bev, p, pose.position.z + height, *proj);
      if (!c) continue;
      worst = std::max(worst, std::hypot(c->u - proj->u, c->v - proj->v));
      ++checked;
    }
  }
  return {checked >= 20 && worst <= 2.0, fmt("%d landmarks in 20 scenes, max offset %.3f px", checked, worst)};
}

Outcome goal_navigation() {
  int reached = 0;
  int max_steps = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const GoalScenario g = make_goal_scenario(seed);
    const Dims dims{256, 128};
    GroundTruthModel model(g.scene, g.start, dims);
    SessionOptions opt;
    opt.instruction.mode = ExploreMode::kGoal;
    opt.instruction.goal_object = g.goal;
    opt.instruction.budget = 20;
    const RolloutResult r =
        run_session(model, std::make_shared<const PanoramaImage>(render_panorama(*g.scene, g.start, dims)), opt);
    const AgentPose end = *model.true_pose();
    const double dist = footprint_distance(g.scene->find(g.goal), end.position.x, end.position.y);
    const int steps = static_cast<int>(r.session.steps.size());
    if (r.session.provenance.value("reached", false) && dist <= 1.0 + 1e-6 && steps <= 20) {
      ++reached;
      max_steps = std::max(max_steps, steps);
    }
  }
  return {reached >= 45, fmt("%d/50 reached (%.0f%%), at most %d steps", reached, 2.0 * reached, max_steps)};
}

Outcome policies() {
  PolicyEvalConfig cfg;
  cfg.single_agent = 500;
  cfg.multi_agent = 200;
  const PolicyReport r = evaluate_policies(cfg);
  auto acc = [&](const char* pop, const char* pol, const char* model) {
    const auto a = r.find(pop, pol, model);
    return a ? a->accuracy() : -1.0;
  };
  const double random = acc("single", "random", "none");
  const double base = acc("single", "base", "none");
  const double imagine = acc("single", "imagine", "ground_truth");
  const double multi = acc("multi", "multi_agent", "ground_truth");
  const double multi_base = acc("multi", "base", "none");
  const double multi_imagine = acc("multi", "imagine", "ground_truth");
  const bool pass = std::abs(random - 0.25) <= 0.05 && base >= 0.0 && base <= 0.60 && imagine >= 0.95 &&
                    multi >= 0.90 && imagine >= base && multi_imagine >= multi_base && multi >= multi_base;
  return {pass, fmt("single: random %.1f%%, base %.1f%%, imagine %.1f%%; multi: base %.1f%%, imagine %.1f%%, "
                    "multi_agent %.1f%%",
                    100 * random, 100 * base, 100 * imagine, 100 * multi_base, 100 * multi_imagine, 100 * multi)};
}

Outcome determinism() {
  auto ielc_run = [] {
    IelcPreset p = ielc_preset("ci", 5);
    p.config.dims = {64, 32};
    p.config.kappas = {0.0, 0.1};
    p.loops.resize(10);
    const IelcReport r = evaluate_ielc(p.scenes, p.loops, p.config);
    return r.to_csv() + r.to_json(p.config).dump();
  };
  auto policy_run = [] {
    PolicyEvalConfig cfg;
    cfg.first_seed = 40;
    cfg.single_agent = 6;
    cfg.multi_agent = 3;
    cfg.kappas = {0.0, 0.1};
    cfg.eqa.dims = {256, 128};
    const PolicyReport r = evaluate_policies(cfg);
    return r.to_csv() + r.to_json().dump();
  };
  const bool ielc_same = ielc_run() == ielc_run();
  const bool policy_same = policy_run() == policy_run();
  return {ielc_same && policy_same, fmt("consistency report %s, policy report %s", ielc_same ? "identical" : "differs",
                                        policy_same ? "identical" : "differs")};
}

json wire(std::string_view kind, json body = json::object()) {
  body["v"] = kProtocolVersion;
  body["kind"] = kind;
  return body;
}

Outcome session_protocol() {
  SessionServer srv(ServerOptions{});
  srv.start();
  const unsigned short port = srv.port();
  std::vector<std::string> frames[2];
  std::vector<json> logs[2];
  std::string ids[2];
  std::string errors[2];
  auto run = [&](int k) {
    try {
      ProtocolClient c("127.0.0.1", port);
      std::vector<json> replies = c.request(wire("init", {{"seed", 500 + k}, {"dims", {256, 128}}}));
      for (int i = 0; i < 4; ++i) {
        auto r = c.request(wire("action", {{"alpha_deg", 35.0 * (k + 1) - 10.0 * i}, {"d", 0.5 + 0.25 * i}}));
        replies.insert(replies.end(), r.begin(), r.end());
      }
      auto r = c.request(wire("pilot", {{"steps", 2}}));
      replies.insert(replies.end(), r.begin(), r.end());
      r = c.request(wire("end"), "end");
      replies.insert(replies.end(), r.begin(), r.end());
      ids[k] = replies.front().at("session_id");
      frames[k] = frames_of(replies);
      logs[k] = c.sent();
      c.close();
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  std::thread a(run, 0);
  std::thread b(run, 1);
  a.join();
  b.join();
  srv.stop();
  if (!errors[0].empty() || !errors[1].empty()) return {false, "client error: " + errors[0] + errors[1]};
  bool replay_ok = true;
  for (int k = 0; k < 2; ++k) replay_ok &= !frames[k].empty() && frames_of(replay_log(logs[k], {}, ids[k])) == frames[k];
  // Each concurrent stream already equals a solo replay of its own log.
  const bool isolated = ids[0] != ids[1] && frames[0].front() != frames[1].front();
  return {replay_ok && isolated, fmt("%zu + %zu frames, replay %s, sessions %s", frames[0].size(), frames[1].size(),
                                     replay_ok ? "identical" : "differs", isolated ? "isolated" : "mixed")};
}

struct Criterion {
  const char* name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"coordinate conformance", 1.0, coordinates},
      {"yaw exactness", 1.0, yaw_exactness},
      {"render/rotate commutation", 120.0, commutation},
      {"cubemap round trip", 0.0, cubemap},
      {"closed-loop consistency", 600.0, ielc},
      {"metric oracles", 0.0, metric_oracles},
      {"BEV geometry", 0.0, bev_geometry},
      {"goal navigation", 0.0, goal_navigation},
      {"policy accuracy", 900.0, policies},
      {"determinism", 0.0, determinism},
      {"session protocol", 0.0, session_protocol},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string detail = o.detail + fmt("; %.2f s", secs);
    if (c.limit_s > 0.0 && secs >= c.limit_s) {
      o.pass = false;
      detail += fmt(" (limit %.0f s)", c.limit_s);
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
