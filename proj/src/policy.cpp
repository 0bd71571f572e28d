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

#include "panoworld/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "panoworld/errors.hpp"
#include "panoworld/perception.hpp"
#include "panoworld/random.hpp"

namespace panoworld {
namespace {

constexpr Shape kShapes[] = {Shape::kBox, Shape::kSphere, Shape::kCylinder};
constexpr int kMaxAttempts = 200;

std::string color_name(int palette_index) {
  return std::string(palette()[static_cast<std::size_t>(palette_index)].name);
}

std::string_view color_of(const Primitive& p) {
  for (const PaletteColor& c : palette()) {
    if (p.has_tag(c.name)) return c.name;
  }
  return {};
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(rng.integer(0, i))]);
  }
}

Shape other_shape(Shape s, Rng& rng) {
  std::vector<Shape> rest;
  for (Shape t : kShapes) {
    if (t != s) rest.push_back(t);
  }
  return rest[static_cast<std::size_t>(rng.integer(0, 1))];
}

Vec3 random_size(Shape shape, Rng& rng) {
  switch (shape) {
    case Shape::kBox:
      return {rng.uniform(0.35, 0.55), rng.uniform(0.35, 0.55), rng.uniform(0.35, 0.6)};
    case Shape::kSphere: {
      const double r = rng.uniform(0.35, 0.6);
      return {r, r, r};
    }
    case Shape::kCylinder: {
      const double r = rng.uniform(0.3, 0.5);
      return {r, r, rng.uniform(0.4, 0.7)};
    }
  }
  return {};
}

Primitive make_object(std::string id, Shape shape, std::string_view color, Vec3 xy, Vec3 size) {
  Primitive p;
  p.id = std::move(id);
  p.shape = shape;
  p.size = size;
  p.center = {xy.x, xy.y, size.z};
  p.color = palette_color(color).rgb;
  p.tags = {std::string(to_string(shape)), std::string(color)};
  return p;
}

bool separated(const Primitive& a, const Primitive& b, double gap) {
  return std::hypot(a.center.x - b.center.x, a.center.y - b.center.y) >=
         a.footprint_radius() + b.footprint_radius() + gap;
}

Vec3 to_start_frame(const AgentPose& start, const Vec3& p) {
  const double dx = p.x - start.position.x;
  const double dy = p.y - start.position.y;
  const double c = std::cos(start.heading);
  const double s = std::sin(start.heading);
  return {c * dx + s * dy, -s * dx + c * dy, 0.0};
}

AgentPose compose(const AgentPose& start, const AgentPose& rel) {
  const double c = std::cos(start.heading);
  const double s = std::sin(start.heading);
  AgentPose out;
  out.position = {start.position.x + c * rel.position.x - s * rel.position.y,
                  start.position.y + s * rel.position.x + c * rel.position.y, start.position.z};
  out.heading = wrap_longitude(start.heading + rel.heading);
  return out;
}

double circular_mean(const std::vector<double>& angles) {
  double sx = 0.0;
  double sy = 0.0;
  for (double a : angles) {
    sx += std::cos(a);
    sy += std::sin(a);
  }
  return std::atan2(sy, sx);
}

// Points on the primitive's outline used to re-project it for audits.
std::vector<Vec3> outline_points(const Primitive& p) {
  std::vector<Vec3> pts = visibility_samples(p);
  if (p.shape == Shape::kBox) {
    for (double sx : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) pts.push_back(p.center + Vec3{sx * p.size.x, sy * p.size.y, 0.0});
    }
  } else {
    for (int k = 0; k < 16; ++k) {
      const double a = kTwoPi * k / 16.0;
      pts.push_back(p.center + Vec3{p.size.x * std::cos(a), p.size.y * std::sin(a), 0.0});
    }
  }
  return pts;
}

std::string model_label(double kappa) {
  if (kappa == 0.0) return "ground_truth";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "degraded_k%g", kappa);
  return buf;
}

std::unique_ptr<WorldModel> make_model(const EqaScenario& s, const EqaConfig& cfg,
                                       const GroundTruthModel** gt_out) {
  auto gt = std::make_unique<GroundTruthModel>(s.scene, s.start, cfg.dims);
  *gt_out = gt.get();
  if (cfg.kappa == 0.0) return gt;
  return std::make_unique<DegradedModel>(std::move(gt), cfg.kappa, cfg.noise_seed ^ s.seed);
}

// Landmark center in the start frame, from its nearest visible surface.
std::optional<Vec3> locate_landmark(const PanoramaImage& x0, const Primitive& landmark) {
  try {
    const GoalEstimate est = estimate_goal(x0, landmark);
    const double depth = std::min(landmark.size.x, landmark.size.y);
    const double r = est.distance + depth;
    return Vec3{r * std::cos(est.bearing), r * std::sin(est.bearing), 0.0};
  } catch (const DetectionError&) {
    return std::nullopt;
  }
}

std::vector<AgentPose> frame_poses_of(const EqaScenario& s, const GroundTruthModel& gt) {
  std::vector<AgentPose> out{s.start};
  out.insert(out.end(), gt.trace().begin(), gt.trace().end());
  return out;
}

}  // namespace

std::string ObjectLabel::text() const { return color + " " + std::string(to_string(shape)); }

nlohmann::json to_json(const EqaScenario& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["scene"] = to_json(*s.scene);
  j["start"] = to_json(s.start);
  j["landmark"] = s.landmark;
  j["target"] = s.target;
  j["question"] = s.question;
  j["options"] = nlohmann::json::array();
  for (const ObjectLabel& o : s.options) j["options"].push_back(o.text());
  j["answer"] = s.answer;
  j["agents"] = nlohmann::json::array();
  for (const AgentPose& a : s.agents) j["agents"].push_back(to_json(a));
  j["asked_agent"] = s.asked_agent;
  return j;
}

AgentPose agent_world_pose(const EqaScenario& s, std::size_t k) {
  if (k >= s.agents.size()) throw LookupError("no agent " + std::to_string(k));
  return compose(s.start, s.agents[k]);
}

EqaScenario generate_scenario(std::uint64_t seed, int agents) {
  if (agents < 0 || agents > 5) throw ParameterError("agents must be in [0, 5]");
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 0x51ed27u + static_cast<std::uint64_t>(agents));
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double psi = rng.integer(0, 3) * kHalfPi;
    const AgentPose start{{0.0, 0.0, 0.0}, wrap_longitude(psi + rng.uniform(-0.35, 0.35))};
    const double dw = rng.uniform(4.5, 6.5);
    const Vec3 axis{std::cos(psi), std::sin(psi), 0.0};
    const Vec3 lateral{-axis.y, axis.x, 0.0};
    const double half_len = rng.uniform(1.8, 2.3);
    const double half_depth = rng.uniform(0.25, 0.3);
    const double half_height = rng.uniform(1.2, 1.5);
    const bool along_x = std::abs(axis.x) > 0.5;
    const Vec3 wall_size = along_x ? Vec3{half_depth, half_len, half_height}
                                   : Vec3{half_len, half_depth, half_height};
    const Vec3 center = axis * dw;

    // Colors: landmark reserved, then target, two distractor colors, clutter from the rest.
    std::vector<std::string> colors;
    for (const PaletteColor& c : palette()) {
      if (c.name != kLandmarkColor) colors.emplace_back(c.name);
    }
    shuffle(colors, rng);
    const std::string target_color = colors[0];
    const std::vector<std::string> clutter_colors(colors.begin() + 3, colors.end());

    SceneSpec scene;
    scene.seed = seed;
    scene.objects.push_back(make_object("landmark", Shape::kBox, kLandmarkColor, center, wall_size));
    const Shape target_shape = kShapes[rng.integer(0, 2)];
    const Vec3 target_xy = axis * (dw + rng.uniform(1.4, 2.0)) + lateral * rng.uniform(-0.5, 0.5);
    scene.objects.push_back(
        make_object("target", target_shape, target_color, target_xy, random_size(target_shape, rng)));

    const double rho = dw;
    const int clutter = rng.integer(2, 6);
    for (int i = 0, tries = 0; i < clutter && tries < 500; ++tries) {
      const Shape sh = kShapes[rng.integer(0, 2)];
      const std::string& col =
          clutter_colors[static_cast<std::size_t>(rng.integer(0, static_cast<int>(clutter_colors.size()) - 1))];
      const double half = 0.5 * scene.extent - 2.0;
      Primitive p = make_object("obj_" + std::to_string(i), sh, col,
                                {rng.uniform(-half, half), rng.uniform(-half, half), 0.0},
                                random_size(sh, rng));
      if (footprint_distance(p, center.x, center.y) < rho + 1.5) continue;
      const bool ok = std::all_of(scene.objects.begin(), scene.objects.end(),
                                  [&](const Primitive& q) { return separated(p, q, 0.5); });
      if (!ok) continue;
      scene.objects.push_back(std::move(p));
      ++i;
    }
    try {
      scene.validate();
    } catch (const SpecError&) {
      continue;
    }

    EqaScenario s;
    s.seed = seed;
    s.scene = std::make_shared<const SceneSpec>(std::move(scene));
    s.start = start;
    s.landmark = "landmark";
    s.target = "target";

    if (agents > 0) {
      std::vector<double> angles{kPi / 3.0, kHalfPi, 2.0 * kPi / 3.0, 5.0 * kPi / 6.0, kPi};
      shuffle(angles, rng);
      const double psi_start = std::atan2(-center.y, -center.x);
      std::vector<int> seeing;
      for (int k = 0; k < agents; ++k) {
        const double a = psi_start + angles[static_cast<std::size_t>(k)];
        const Vec3 pos = center + Vec3{rho * std::cos(a), rho * std::sin(a), 0.0};
        const double facing = std::atan2(center.y - pos.y, center.x - pos.x) + rng.uniform(-0.2, 0.2);
        const AgentPose world{pos, wrap_longitude(facing)};
        s.agents.push_back({to_start_frame(start, pos), wrap_longitude(world.heading - start.heading)});
        if (is_visible(*s.scene, world, s.target).visible) seeing.push_back(k);
      }
      if (seeing.empty()) continue;
      s.asked_agent = seeing[static_cast<std::size_t>(rng.integer(0, static_cast<int>(seeing.size()) - 1))];
    }

    const Shape d_shape = other_shape(target_shape, rng);
    s.options = {{target_color, target_shape},
                 {target_color, d_shape},
                 {colors[1], target_shape},
                 {colors[2], other_shape(target_shape, rng)}};
    std::vector<int> order{0, 1, 2, 3};
    shuffle(order, rng);
    std::vector<ObjectLabel> shuffled;
    for (int i = 0; i < 4; ++i) {
      shuffled.push_back(s.options[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
      if (order[static_cast<std::size_t>(i)] == 0) s.answer = i;
    }
    s.options = std::move(shuffled);
    s.question = agents > 0 ? "What does agent " + std::to_string(s.asked_agent + 1) +
                                  " see behind the lime wall?"
                            : "What is behind the lime wall?";
    if (!verify_certificate(s)) continue;
    return s;
  }
  throw GenerationError("no question scenario found for seed " + std::to_string(seed));
}

bool verify_certificate(const EqaScenario& s) {
  const SceneSpec& scene = *s.scene;
  if (is_visible(scene, s.start, s.target).visible) return false;
  if (!s.agents.empty()) {
    if (s.asked_agent < 0 || s.asked_agent >= static_cast<int>(s.agents.size())) return false;
    return is_visible(scene, agent_world_pose(s, static_cast<std::size_t>(s.asked_agent)), s.target).visible;
  }
  const Primitive& wall = scene.find(s.landmark);
  const std::vector<Action> orbit = orbit_actions(s.start, wall.center.x, wall.center.y, 6, kPi);
  AgentPose p = s.start;
  int seen = 0;
  for (const Action& a : orbit) {
    if (path_blocked(scene, p, a)) return false;
    p = apply_action(p, a);
    if (is_visible(scene, p, s.target).visible) ++seen;
  }
  return seen >= 2;
}

std::optional<Shape> classify_shape(const Image& img, const std::vector<int>& pixels,
                                    const ShapeRule& rule) {
  const int w = img.width();
  const int h = img.height();
  std::vector<char> in(static_cast<std::size_t>(w) * h, 0);
  for (int i : pixels) in[static_cast<std::size_t>(i)] = 1;
  auto member = [&](int x, int y) {
    if (y < 0 || y >= h) return false;
    x = (x % w + w) % w;
    return in[static_cast<std::size_t>(y) * w + x] != 0;
  };
  auto differs = [&](int x0, int y0, int x1, int y1) {
    const Rgb a = img.pixel(x0, y0);
    const Rgb b = img.pixel((x1 % w + w) % w, y1);
    return std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)}) >
           rule.flat_tolerance;
  };
  int interior = 0;
  int h_vary = 0;
  int v_vary = 0;
  for (int i : pixels) {
    const int x = i % w;
    const int y = i / w;
    if (!member(x - 1, y) || !member(x + 1, y) || !member(x, y - 1) || !member(x, y + 1)) continue;
    ++interior;
    if (differs(x, y, x + 1, y)) ++h_vary;
    if (differs(x, y, x, y + 1)) ++v_vary;
  }
  if (interior < rule.min_interior) return std::nullopt;
  const double hv = static_cast<double>(h_vary) / interior;
  const double vv = static_cast<double>(v_vary) / interior;
  if (vv >= rule.vary_fraction) return Shape::kSphere;
  if (hv >= rule.vary_fraction) return Shape::kCylinder;
  return Shape::kBox;
}

std::vector<Evidence> detect_objects(const Observation& obs, int min_area) {
  if (obs.image == nullptr) throw ParameterError("observation without an image");
  const Image& img = *obs.image;
  std::vector<Evidence> out;
  for (const Component& c : segment_colors(img, obs.panorama, min_area)) {
    Evidence e;
    e.frame = obs.frame;
    e.color = color_name(c.color);
    e.shape = classify_shape(img, c.pixels);
    e.area = c.area;
    if (obs.panorama) {
      e.bearing = component_bearing(c, {img.width(), img.height()});
    } else {
      std::vector<double> angles;
      angles.reserve(c.pixels.size());
      for (int i : c.pixels) {
        const Dir3 d = perspective_ray(i % img.width() + 0.5, i / img.width() + 0.5, img.width(),
                                       img.height(), obs.hfov, 0.0, 0.0);
        angles.push_back(std::atan2(d.y, d.x));
      }
      e.bearing = circular_mean(angles);
    }
    out.push_back(std::move(e));
  }
  return out;
}

Decision ColorShapeReasoner::decide(std::span<const Observation> observations, const std::string&,
                                    std::span<const ObjectLabel> options) const {
  if (options.empty()) throw ParameterError("a question needs options");
  Decision d;
  for (const Observation& obs : observations) {
    auto ev = detect_objects(obs);
    d.evidence.insert(d.evidence.end(), ev.begin(), ev.end());
  }
  std::vector<double> score(options.size(), 0.0);
  for (const Evidence& e : d.evidence) {
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (e.color != options[i].color) continue;
      score[i] += e.area * (e.shape == options[i].shape ? 2.0 : 1.0);
    }
  }
  const auto best = std::max_element(score.begin(), score.end());
  if (*best <= 0.0) {
    d.fallback = true;
    d.choice = 0;
  } else {
    d.choice = static_cast<int>(best - score.begin());
  }
  return d;
}

PerspectiveImage initial_view(const EqaScenario& s, const EqaConfig& cfg) {
  return render_perspective(*s.scene, s.start, 0.0, 0.0, kHalfPi, cfg.base_view_size,
                            cfg.base_view_size);
}

Decision decide_random(const EqaScenario& s, std::uint64_t seed) {
  Rng rng(seed ^ (s.seed * 0xbf58476d1ce4e5b9ULL));
  Decision d;
  d.choice = rng.integer(0, static_cast<int>(s.options.size()) - 1);
  return d;
}

Decision decide_base(const Reasoner& r, const EqaScenario& s, const EqaConfig& cfg) {
  const PerspectiveImage i0 = initial_view(s, cfg);
  const Observation obs{&i0.raster, false, i0.hfov, 0};
  return r.decide(std::span(&obs, 1), s.question, s.options);
}

ImaginationTrace decide_imagine(const Reasoner& r, const EqaScenario& s, const EqaConfig& cfg,
                                int budget) {
  ImaginationTrace t;
  t.frame_poses = {s.start};
  const Frame x0 = std::make_shared<const PanoramaImage>(render_panorama(*s.scene, s.start, cfg.dims));
  const auto center = budget > 0 ? locate_landmark(*x0, s.scene->find(s.landmark)) : std::nullopt;
  if (!center) {
    t.decision = decide_base(r, s, cfg);
    t.decision.exploration_failed = budget > 0;
    return t;
  }
  const GroundTruthModel* gt = nullptr;
  auto model = make_model(s, cfg, &gt);
  std::vector<Action> actions =
      orbit_actions(AgentPose{}, center->x, center->y, cfg.orbit_chords, cfg.orbit_sweep);
  if (static_cast<int>(actions.size()) > budget) actions.resize(static_cast<std::size_t>(budget));
  RolloutResult run = rollout(*model, x0, actions, cfg.transition, {{"policy", "imagine"}});
  t.sessions.push_back(std::move(run.session));
  t.frame_poses = frame_poses_of(s, *gt);

  const PerspectiveImage i0 = initial_view(s, cfg);
  const ExplorationSession& session = t.sessions.front();
  std::vector<Observation> obs{{&i0.raster, false, i0.hfov, 0}, {&session.x0->raster(), true, kHalfPi, 0}};
  int k = 0;
  for (const SessionStep& st : session.steps) {
    for (const Frame& f : st.frames) obs.push_back({&f->raster(), true, kHalfPi, ++k});
  }
  t.decision = r.decide(obs, s.question, s.options);
  t.decision.exploration_failed = run.error.has_value();
  return t;
}

namespace {

// Walks a fresh session from the start to `goal` (start frame). Returns false
// when no free path or the budget runs out; the session keeps the prefix.
bool walk_to(WorldModel& model, ExplorationSession& session, const std::optional<Vec3>& center,
             const AgentPose& goal, int budget) {
  std::vector<Vec3> waypoints;
  if (center) {
    const double rho = std::hypot(center->x, center->y);
    const double a0 = std::atan2(-center->y, -center->x);
    const double a1 = std::atan2(goal.position.y - center->y, goal.position.x - center->x);
    const double sweep = wrap_longitude(a1 - a0);
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) / (kPi / 6.0))));
    for (int i = 1; i < n; ++i) {
      const double a = a0 + sweep * i / n;
      waypoints.push_back(*center + Vec3{rho * std::cos(a), rho * std::sin(a), 0.0});
    }
  }
  waypoints.push_back(goal.position);

  AgentPose believed{};
  auto run = [&](const Action& a) {
    if (static_cast<int>(session.steps.size()) >= budget) throw GenerationError("step budget exhausted");
    advance(session, model, a);
    believed = apply_action(believed, a);
  };
  auto leg_to = [](const AgentPose& from, const Vec3& to) {
    const double dx = to.x - from.position.x;
    const double dy = to.y - from.position.y;
    return Action::normalized(wrap_longitude(std::atan2(dy, dx) - from.heading), std::hypot(dx, dy));
  };
  try {
    for (const Vec3& wp : waypoints) {
      const Action direct = leg_to(believed, wp);
      const auto probe = make_probe(model);
      if (!probe || !probe->blocked(direct)) {
        run(direct);
        continue;
      }
      // Two-leg detour through a point beside the direct segment.
      bool done = false;
      const Vec3 mid = (believed.position + wp) * 0.5;
      const double nx = -std::sin(believed.heading + direct.alpha);
      const double ny = std::cos(believed.heading + direct.alpha);
      for (double off : {1.0, -1.0, 2.0, -2.0, 3.0, -3.0}) {
        const Action first = leg_to(believed, mid + Vec3{nx * off, ny * off, 0.0});
        const Action second = leg_to(apply_action(believed, first), wp);
        if (probe->blocked(first) || path_blocked(*probe->scene, apply_action(probe->pose, first), second)) {
          continue;
        }
        run(first);
        run(second);
        done = true;
        break;
      }
      if (!done) return false;
    }
    run(Action::normalized(wrap_longitude(goal.heading - believed.heading), 0.0));
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace

ImaginationTrace decide_multi_agent(const Reasoner& r, const EqaScenario& s, const EqaConfig& cfg,
                                    int budget) {
  if (s.agents.empty()) return decide_imagine(r, s, cfg, budget);
  const Frame x0 = std::make_shared<const PanoramaImage>(render_panorama(*s.scene, s.start, cfg.dims));
  const auto center = locate_landmark(*x0, s.scene->find(s.landmark));
  ImaginationTrace t;
  t.frame_poses = {s.start};
  std::vector<std::pair<int, Frame>> views;  // (agent, vantage view)
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    const GroundTruthModel* gt = nullptr;
    auto model = make_model(s, cfg, &gt);
    ExplorationSession session;
    session.x0 = x0;
    session.config = cfg.transition;
    session.provenance = {{"policy", "multi_agent"}, {"agent", k}, {"agent_poses_known", true}};
    const bool reached = walk_to(*model, session, center, s.agents[k], budget);
    session.done = reached;
    t.frame_poses.push_back(*model->true_pose());
    if (reached) {
      views.emplace_back(static_cast<int>(k), session.latest());
    } else {
      t.failed_agents.push_back(static_cast<int>(k));
    }
    t.sessions.push_back(std::move(session));
  }
  // The asked agent's view first, then the other vantages (aggregated evidence).
  std::stable_partition(views.begin(), views.end(), [&](const auto& v) { return v.first == s.asked_agent; });
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < views.size(); ++i) {
    obs.push_back({&views[i].second->raster(), true, kHalfPi, views[i].first + 1});
  }
  t.decision = r.decide(obs, s.question, s.options);
  t.decision.exploration_failed = !t.failed_agents.empty();
  return t;
}

bool audit_evidence(const EqaScenario& s, const ImaginationTrace& trace, double tolerance) {
  for (const Evidence& e : trace.decision.evidence) {
    if (e.frame < 0 || e.frame >= static_cast<int>(trace.frame_poses.size())) return false;
    const AgentPose& pose = trace.frame_poses[static_cast<std::size_t>(e.frame)];
    bool matched = false;
    for (const Primitive& p : s.scene->objects) {
      if (color_of(p) != e.color) continue;
      // Angles are taken around the direction to the center, so the
      // interval never straddles the +-pi cut.
      const double c = std::atan2(p.center.y - pose.position.y, p.center.x - pose.position.x);
      double lo = 0.0;
      double hi = 0.0;
      for (const Vec3& q : outline_points(p)) {
        const double rel = wrap_longitude(std::atan2(q.y - pose.position.y, q.x - pose.position.x) - c);
        lo = std::min(lo, rel);
        hi = std::max(hi, rel);
      }
      const double at = wrap_longitude(e.bearing + pose.heading - c);
      if (at >= lo - tolerance && at <= hi + tolerance) {
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

std::optional<PolicyAccuracy> PolicyReport::find(std::string_view population, std::string_view policy,
                                                 std::string_view model) const {
  for (const PolicyAccuracy& a : table) {
    if (a.population == population && a.policy == policy && a.model == model) return a;
  }
  return std::nullopt;
}

std::string PolicyReport::to_csv() const {
  std::string out = "population,policy,model,total,correct,accuracy\n";
  for (const PolicyAccuracy& a : table) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", a.accuracy());
    out += a.population + "," + a.policy + "," + a.model + "," + std::to_string(a.total) + "," +
           std::to_string(a.correct) + "," + buf + "\n";
  }
  return out;
}

nlohmann::json PolicyReport::to_json() const {
  nlohmann::json j;
  j["v"] = 1;
  j["table"] = nlohmann::json::array();
  for (const PolicyAccuracy& a : table) {
    j["table"].push_back({{"population", a.population}, {"policy", a.policy}, {"model", a.model},
                          {"total", a.total}, {"correct", a.correct}, {"accuracy", a.accuracy()}});
  }
  j["records"] = nlohmann::json::array();
  for (const PolicyRecord& r : records) {
    j["records"].push_back({{"seed", r.seed}, {"agents", r.agents}, {"answer", r.answer},
                            {"policy", r.policy}, {"model", r.model}, {"choice", r.choice},
                            {"correct", r.correct}, {"fallback", r.fallback}});
  }
  return j;
}

PolicyReport evaluate_policies(const PolicyEvalConfig& cfg) {
  if (cfg.single_agent < 0 || cfg.multi_agent < 0) throw ParameterError("population sizes must be >= 0");
  if (cfg.kappas.empty()) throw ParameterError("need at least one kappa");
  PolicyReport report;
  std::map<std::tuple<std::string, std::string, std::string>, PolicyAccuracy> acc;
  const ColorShapeReasoner reasoner;
  auto record = [&](const std::string& population, const EqaScenario& s, const std::string& policy,
                    const std::string& model, const Decision& d) {
    PolicyRecord r{s.seed, static_cast<int>(s.agents.size()), s.answer, policy, model,
                   d.choice, d.choice == s.answer, d.fallback};
    PolicyAccuracy& a = acc[{population, policy, model}];
    a.population = population;
    a.policy = policy;
    a.model = model;
    ++a.total;
    if (r.correct) ++a.correct;
    report.records.push_back(std::move(r));
  };
  auto run_population = [&](const std::string& population, std::uint64_t first, int count, bool multi) {
    for (int i = 0; i < count; ++i) {
      const std::uint64_t seed = first + static_cast<std::uint64_t>(i);
      const EqaScenario s = generate_scenario(seed, multi ? 1 + i % 3 : 0);
      record(population, s, "random", "none", decide_random(s, cfg.eqa.noise_seed));
      record(population, s, "base", "none", decide_base(reasoner, s, cfg.eqa));
      for (double kappa : cfg.kappas) {
        EqaConfig eqa = cfg.eqa;
        eqa.kappa = kappa;
        record(population, s, "imagine", model_label(kappa), decide_imagine(reasoner, s, eqa).decision);
        if (multi) {
          record(population, s, "multi_agent", model_label(kappa),
                 decide_multi_agent(reasoner, s, eqa).decision);
        }
      }
    }
  };
  run_population("single", cfg.first_seed, cfg.single_agent, false);
  run_population("multi", cfg.first_seed + 1000000, cfg.multi_agent, true);
  for (auto& [key, a] : acc) report.table.push_back(a);
  return report;
}

}  // namespace panoworld
