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

#include "panoworld/exploration.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "panoworld/errors.hpp"
#include "panoworld/perception.hpp"

namespace panoworld {
namespace {

constexpr std::array<double, 9> kLadder = {0.3, 0.45, 0.6, 0.8, 1.0, 1.25, 1.5, 2.0, 3.0};

// Longest travel in [0, d] along heading + alpha that stays unblocked.
double clip_travel(const Probe& probe, double alpha, double d) {
  if (!probe.blocked({alpha, d})) return d;
  double lo = 0.0;
  double hi = d;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (probe.blocked({alpha, mid})) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

double sphere_distance_from_depression(double depression, double r, double eye) {
  auto depression_at = [&](double D) {
    return std::atan2(eye - r, D) + std::asin(std::min(1.0, r / std::hypot(D, eye - r)));
  };
  double lo = r;
  double hi = 1e4;
  if (depression >= depression_at(lo)) return 0.0;
  if (depression <= depression_at(hi)) return hi - r;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (depression_at(mid) > depression) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi) - r;
}

}  // namespace

std::string_view to_string(ExploreMode mode) {
  switch (mode) {
    case ExploreMode::kInteractive: return "interactive";
    case ExploreMode::kFree: return "free";
    case ExploreMode::kGoal: return "goal";
  }
  return "interactive";
}

ExploreMode explore_mode_from_string(std::string_view name) {
  if (name == "interactive") return ExploreMode::kInteractive;
  if (name == "free") return ExploreMode::kFree;
  if (name == "goal") return ExploreMode::kGoal;
  throw ParameterError("unknown exploration mode '" + std::string(name) + "'");
}

void Instruction::validate() const {
  if (budget < 1) throw ParameterError("instruction budget must be at least 1");
  if (mode == ExploreMode::kGoal && (!goal_object || goal_object->empty())) {
    throw ParameterError("goal mode needs a goal object");
  }
}

nlohmann::json to_json(const Instruction& ins) {
  return {{"mode", to_string(ins.mode)},
          {"goal_object", ins.goal_object ? nlohmann::json(*ins.goal_object) : nlohmann::json(nullptr)},
          {"text", ins.text},
          {"budget", ins.budget}};
}

Instruction instruction_from_json(const nlohmann::json& j) {
  Instruction ins;
  try {
    ins.mode = explore_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("goal_object") && !j.at("goal_object").is_null()) {
      ins.goal_object = j.at("goal_object").get<std::string>();
    }
    ins.text = j.value("text", std::string());
    ins.budget = j.value("budget", ins.budget);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed instruction: ") + e.what());
  }
  ins.validate();
  return ins;
}

bool ActionFeed::push(const Action& a) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return false;
    queue_.push_back(a);
  }
  cv_.notify_one();
  return true;
}

std::optional<Action> ActionFeed::pop() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  const Action a = queue_.front();
  queue_.pop_front();
  return a;
}

void ActionFeed::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool ActionFeed::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::span<const double> clearance_ladder() { return kLadder; }

double Probe::clearance_score(const Action& a) const {
  double score = 0.0;
  for (double r : kLadder) {
    if (path_blocked(*scene, pose, a, r)) break;
    score = r;
  }
  return score;
}

std::optional<Probe> make_probe(const WorldModel& model) {
  const SceneSpec* scene = model.scene();
  const auto pose = model.true_pose();
  if (scene == nullptr || !pose) return std::nullopt;
  return Probe{scene, *pose};
}

std::vector<Action> default_candidates() {
  std::vector<Action> out;
  for (int k = 0; k < 8; ++k) {
    for (double d : {1.0, 2.0, 4.0}) out.push_back(Action::normalized(k * kPi / 4.0, d));
  }
  return out;
}

Action HeuristicPilot::propose(const PanoramaImage&, std::span<const Action> candidates,
                               std::span<const double> scores) {
  if (candidates.empty()) throw ParameterError("pilot needs at least one candidate");
  if (scores.size() != candidates.size()) throw ParameterError("one score per candidate required");
  const bool all_blocked = std::all_of(scores.begin(), scores.end(), [](double s) { return s <= 0.0; });
  if (all_blocked) {
    double dmin = candidates[0].d;
    for (const Action& c : candidates) dmin = std::min(dmin, c.d);
    const Action back = Action::normalized(kPi, dmin);
    for (const Action& c : candidates) {
      if (std::abs(wrap_longitude(c.alpha - back.alpha)) < 1e-12 && c.d == dmin) return c;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const Action& a = candidates[i];
    const Action& b = candidates[best];
    if (scores[i] != scores[best]) {
      if (scores[i] > scores[best]) best = i;
      continue;
    }
    if (std::abs(a.alpha) != std::abs(b.alpha)) {
      if (std::abs(a.alpha) < std::abs(b.alpha)) best = i;
      continue;
    }
    if (a.d < b.d) best = i;
  }
  return candidates[best];
}

GoalEstimate estimate_goal(const PanoramaImage& view, const Primitive& goal, double eye_height) {
  const auto color = classify_color(goal.color);
  if (!color) throw DetectionError("goal color is not a detectable palette color");
  const auto comps = segment_colors(view.raster(), true);
  const Component* found = nullptr;
  for (const Component& c : comps) {
    if (c.color == *color) {
      found = &c;
      break;
    }
  }
  if (found == nullptr) throw DetectionError("goal '" + goal.id + "' not detected in view");
  GoalEstimate est;
  est.area = found->area;
  est.bearing = component_bearing(*found, view.dims());
  const double v = found->max_y + 0.5;
  const double depression = -(kHalfPi - kPi * v / view.height());
  if (depression <= 1e-6) {
    est.distance = 1e4;
  } else if (goal.shape == Shape::kSphere) {
    est.distance = sphere_distance_from_depression(depression, goal.size.x, eye_height);
  } else {
    est.distance = eye_height / std::tan(depression);
  }
  return est;
}

GoalDecision goal_policy_step(const PanoramaImage& latest, const Primitive& goal,
                              const std::optional<Probe>& probe, const GoalPolicyOptions& o) {
  const GoalEstimate est = estimate_goal(latest, goal);
  if (est.distance <= o.stop_distance) return GoalDone{};
  const double alpha = est.bearing;
  const double want = std::min(est.distance - o.stop_distance, o.max_step);
  if (!probe) return Action::normalized(alpha, want);
  const double d = clip_travel(*probe, alpha, want);
  if (d >= std::min(o.min_progress, want)) return Action::normalized(alpha, d);
  // Direct path blocked: sidestep around the obstacle.
  Action best = Action::normalized(alpha, d);
  for (double deg : {20.0, 40.0, 60.0, 80.0}) {
    for (double sign : {1.0, -1.0}) {
      const double theta = deg * kPi / 180.0;
      const double a = alpha + sign * theta;
      const double len = std::min(1.5, est.distance * std::cos(theta));
      const double got = clip_travel(*probe, a, len);
      if (got >= o.min_progress) return Action::normalized(a, got);
      if (got > best.d) best = Action::normalized(a, got);
    }
  }
  return best;
}

RolloutResult run_session(WorldModel& model, Frame x0, const SessionOptions& o) {
  o.instruction.validate();
  o.config.validate();
  RolloutResult result;
  ExplorationSession& s = result.session;
  s.x0 = std::move(x0);
  s.config = o.config;
  s.provenance["model"] = model.kind();
  s.provenance["instruction"] = to_json(o.instruction);
  if (const SceneSpec* scene = model.scene()) s.provenance["scene_seed"] = scene->seed;

  auto run = [&](const Action& a) {
    advance(s, model, a);
    if (o.on_step) o.on_step(s);
  };

  HeuristicPilot default_pilot;
  const Primitive* goal = nullptr;
  if (o.instruction.mode == ExploreMode::kGoal) {
    const SceneSpec* scene = model.scene();
    if (scene == nullptr) throw ParameterError("goal mode needs a model that exposes its scene");
    goal = &scene->find(*o.instruction.goal_object);
    s.provenance["uses_known_object_size"] = true;
  }
  if (o.instruction.mode == ExploreMode::kFree) s.provenance["pilot_uses_scene_probe"] = true;
  if (o.instruction.mode == ExploreMode::kInteractive && o.feed == nullptr) {
    throw ParameterError("interactive mode needs an action feed");
  }

  try {
    int scans = 0;
    while (static_cast<int>(s.steps.size()) < o.instruction.budget) {
      switch (o.instruction.mode) {
        case ExploreMode::kInteractive: {
          const auto a = o.feed->pop();
          if (!a) {
            s.provenance["feed_closed"] = true;
            s.done = true;
            return result;
          }
          run(*a);
          break;
        }
        case ExploreMode::kFree: {
          const std::vector<Action> cands = default_candidates();
          std::vector<double> scores(cands.size(), 1.0);
          if (const auto probe = make_probe(model)) {
            for (std::size_t i = 0; i < cands.size(); ++i) scores[i] = probe->clearance_score(cands[i]);
          }
          Pilot& pilot = o.pilot != nullptr ? *o.pilot : default_pilot;
          run(pilot.propose(*s.latest(), cands, scores));
          break;
        }
        case ExploreMode::kGoal: {
          GoalDecision decision;
          try {
            decision = goal_policy_step(*s.latest(), *goal, make_probe(model), o.goal);
          } catch (const DetectionError&) {
            if (scans >= o.max_scan_turns) throw;
            ++scans;
            run({kPi / 4.0, 0.0});
            break;
          }
          scans = 0;
          if (std::holds_alternative<GoalDone>(decision)) {
            s.provenance["reached"] = true;
            s.done = true;
            return result;
          }
          run(std::get<Action>(decision));
          break;
        }
      }
    }
    if (o.instruction.mode == ExploreMode::kGoal) {
      // Budget spent: one last look decides whether the goal was reached.
      bool reached = false;
      try {
        reached = std::holds_alternative<GoalDone>(goal_policy_step(*s.latest(), *goal, std::nullopt, o.goal));
      } catch (const DetectionError&) {
      }
      s.provenance["reached"] = reached;
    }
  } catch (const Error& e) {
    result.error = e.what();
  }
  s.done = true;
  return result;
}

GoalScenario make_goal_scenario(std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto scene = std::make_shared<const SceneSpec>(scene_from_seed(rng.next()));
    const AgentPose start{{0.0, 0.0, 0.0}, wrap_longitude(rng.uniform(-kPi, kPi))};
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < scene->objects.size(); ++i) {
      const Primitive& p = scene->objects[i];
      const bool unique = std::none_of(scene->objects.begin(), scene->objects.end(), [&](const Primitive& q) {
        return &q != &p && q.color == p.color;
      });
      if (unique && is_visible(*scene, start, p.id).visible) eligible.push_back(i);
    }
    if (eligible.empty()) continue;
    const std::size_t pick = eligible[static_cast<std::size_t>(rng.integer(0, static_cast<int>(eligible.size()) - 1))];
    return {scene, start, scene->objects[pick].id};
  }
  throw GenerationError("no goal scenario found for seed " + std::to_string(seed));
}

std::vector<Action> orbit_actions(const AgentPose& start, double cx, double cy, int chords,
                                  double sweep) {
  if (chords < 1) throw ParameterError("orbit needs at least one chord");
  const double rho = std::hypot(start.position.x - cx, start.position.y - cy);
  if (!(rho > 0.0)) throw ParameterError("orbit start must differ from its center");
  const double psi = std::atan2(start.position.y - cy, start.position.x - cx);
  const double step = sweep / chords;
  const double chord = 2.0 * rho * std::sin(0.5 * std::abs(step));
  std::vector<Action> out;
  const double side = step >= 0.0 ? kHalfPi : -kHalfPi;
  out.push_back(Action::normalized(psi + side + 0.5 * step - start.heading, chord));
  for (int i = 1; i < chords; ++i) out.push_back(Action::normalized(step, chord));
  return out;
}

}  // namespace panoworld
