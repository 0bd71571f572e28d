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

// Exploration modes: interactive (action feed), pilot-driven free
// exploration and goal-driven navigation.

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "panoworld/transition.hpp"
#include "panoworld/world.hpp"

namespace panoworld {

enum class ExploreMode { kInteractive, kFree, kGoal };

std::string_view to_string(ExploreMode mode);
ExploreMode explore_mode_from_string(std::string_view name);

struct Instruction {
  ExploreMode mode = ExploreMode::kInteractive;
  std::optional<std::string> goal_object;  // object id
  std::string text;
  int budget = 20;  // maximum number of steps

  void validate() const;  // ParameterError
};

nlohmann::json to_json(const Instruction& ins);
Instruction instruction_from_json(const nlohmann::json& j);

// Thread-safe blocking handoff between a producer (UI, CLI) and the session
// loop.
class ActionFeed {
 public:
  // False once the feed is closed.
  bool push(const Action& a);
  // Blocks until an action arrives; nothing once closed and drained.
  std::optional<Action> pop();
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Action> queue_;
  bool closed_ = false;
};

// Scene introspection at the model's hidden pose.
struct Probe {
  const SceneSpec* scene = nullptr;
  AgentPose pose;

  bool blocked(const Action& a) const { return path_blocked(*scene, pose, a); }
  // Largest radius of the inflation ladder that keeps the path free, 0 when
  // blocked at the agent radius.
  double clearance_score(const Action& a) const;
};

std::optional<Probe> make_probe(const WorldModel& model);

// Radii tried by Probe::clearance_score, ascending, starting at the agent radius.
std::span<const double> clearance_ladder();

class Pilot {
 public:
  virtual ~Pilot() = default;
  // Returns one of `candidates`. `scores[i]` rates candidate i (larger is
  // safer); all scores are equal when no probe is available.
  virtual Action propose(const PanoramaImage& latest, std::span<const Action> candidates,
                         std::span<const double> scores) = 0;
};

// 8 headings (multiples of pi/4) x d in {1, 2, 4} m.
std::vector<Action> default_candidates();

// Maximizes the score; ties go to the smallest |alpha|, then the smallest d,
// then candidate order. When every score is 0 it turns around: (pi, min d).
class HeuristicPilot : public Pilot {
 public:
  Action propose(const PanoramaImage& latest, std::span<const Action> candidates,
                 std::span<const double> scores) override;
};

struct GoalEstimate {
  double bearing = 0.0;   // panorama longitude, radians
  double distance = 0.0;  // horizontal distance to the nearest visible surface, meters
  int area = 0;
};

// Finds the largest palette-colored component matching `goal` and estimates
// its bearing and distance from the lowest pixel row, using the known size
// of the goal. Throws DetectionError when the goal color is not in view.
GoalEstimate estimate_goal(const PanoramaImage& view, const Primitive& goal,
                           double eye_height = kEyeHeight);

struct GoalDone {};
using GoalDecision = std::variant<Action, GoalDone>;

struct GoalPolicyOptions {
  double stop_distance = 1.0;
  double max_step = 4.0;
  double min_progress = 0.25;  // shorter clipped steps trigger a sidestep
};

// One goal-driven decision: done within stop_distance, else head for the
// goal, clipped to the longest unblocked travel when a probe is available.
// Throws DetectionError when the goal is not in view.
GoalDecision goal_policy_step(const PanoramaImage& latest, const Primitive& goal,
                              const std::optional<Probe>& probe, const GoalPolicyOptions& options = {});

struct SessionOptions {
  Instruction instruction;
  TransitionConfig config;
  Pilot* pilot = nullptr;      // free mode; HeuristicPilot when null
  ActionFeed* feed = nullptr;  // interactive mode
  GoalPolicyOptions goal;
  int max_scan_turns = 8;
  // Called after every executed step with the session so far.
  std::function<void(const ExplorationSession&)> on_step;
};

// Runs one session in the instruction's mode. Errors end the session early
// and are reported alongside the completed prefix.
RolloutResult run_session(WorldModel& model, Frame x0, const SessionOptions& options);

struct GoalScenario {
  std::shared_ptr<const SceneSpec> scene;
  AgentPose start;
  std::string goal;  // object id
};

// Random scene with a goal that is visible from the start and is the only
// object of its color. Deterministic in `seed`.
GoalScenario make_goal_scenario(std::uint64_t seed);

// Chords of a counter-clockwise circle around (cx, cy) through the start
// position, `chords` steps covering `sweep` radians.
std::vector<Action> orbit_actions(const AgentPose& start, double cx, double cy, int chords,
                                  double sweep);

}  // namespace panoworld
