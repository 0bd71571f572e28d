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

// Embodied question answering on procedurally generated occlusion scenes:
// a base policy that answers from the initial view, and policies that first
// explore with a world model and answer from the imagined views.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panoworld/exploration.hpp"
#include "panoworld/transition.hpp"
#include "panoworld/world.hpp"

namespace panoworld {

// Reserved palette color of the landmark wall; never used for options or clutter.
inline constexpr std::string_view kLandmarkColor = "lime";

struct ObjectLabel {
  std::string color;  // palette name
  Shape shape = Shape::kBox;

  std::string text() const;
  friend bool operator==(const ObjectLabel&, const ObjectLabel&) = default;
};

struct EqaScenario {
  std::uint64_t seed = 0;
  std::shared_ptr<const SceneSpec> scene;
  AgentPose start;
  std::string landmark;  // object id of the occluding wall
  std::string target;    // object id hidden behind it
  std::string question;
  std::vector<ObjectLabel> options;  // exactly 4
  int answer = 0;
  // Other agents, in the start pose's frame (x forward, y left); empty for
  // single-agent scenarios. `asked_agent` indexes the agent the question is about.
  std::vector<AgentPose> agents;
  int asked_agent = -1;
};

nlohmann::json to_json(const EqaScenario& s);

// Deterministic in (seed, agents). Certificate: the target is not visible
// from the start; it is visible from at least two counter-clockwise orbit
// waypoints around the landmark (single agent) or from the asked agent's
// pose (agents > 0). Throws GenerationError if sampling is exhausted.
EqaScenario generate_scenario(std::uint64_t seed, int agents = 0);

// Re-checks the certificate from scratch.
bool verify_certificate(const EqaScenario& s);

// World pose of agent k (relative pose composed with the start pose).
AgentPose agent_world_pose(const EqaScenario& s, std::size_t k);

// Rendered view handed to a reasoner.
struct Observation {
  const Image* image = nullptr;
  bool panorama = true;
  double hfov = kHalfPi;  // perspective views only, looking along the heading
  int frame = 0;          // 0 = initial view, k = k-th imagined frame
};

struct Evidence {
  int frame = 0;
  std::string color;
  std::optional<Shape> shape;  // unknown for thin or tiny components
  double bearing = 0.0;        // radians, relative to the view's heading
  int area = 0;
};

struct Decision {
  int choice = 0;
  std::vector<Evidence> evidence;
  bool fallback = false;  // nothing relevant seen; option 0 chosen
  bool exploration_failed = false;
};

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual Decision decide(std::span<const Observation> observations, const std::string& question,
                          std::span<const ObjectLabel> options) const = 0;
};

// Classifies palette-colored components by hue and their shape by shading
// flatness, then scores option i by the summed area of components whose
// color matches, doubled when the shape matches too.
class ColorShapeReasoner : public Reasoner {
 public:
  Decision decide(std::span<const Observation> observations, const std::string& question,
                  std::span<const ObjectLabel> options) const override;
};

struct ShapeRule {
  double flat_tolerance = 0.004;
  double vary_fraction = 0.3;
  int min_interior = 6;
};

// Shape from the shading of a component's interior pixels: a box is flat in
// both directions, a vertical cylinder varies only horizontally and a
// sphere varies in both.
std::optional<Shape> classify_shape(const Image& img, const std::vector<int>& pixels,
                                    const ShapeRule& rule = {});

// Evidence from one observation, in component order.
std::vector<Evidence> detect_objects(const Observation& obs, int min_area = 6);

struct EqaConfig {
  Dims dims{512, 256};
  TransitionConfig transition{0.3, 1, 10000, RotationMode::kRigid};
  int base_view_size = 256;  // square front view, 90 degree field of view
  int orbit_chords = 6;
  double orbit_sweep = kPi;
  double kappa = 0.0;          // > 0 wraps the ground-truth model in a degraded model
  std::uint64_t noise_seed = 7;
};

// The initial front view i0.
PerspectiveImage initial_view(const EqaScenario& s, const EqaConfig& cfg);

Decision decide_random(const EqaScenario& s, std::uint64_t seed);
Decision decide_base(const Reasoner& r, const EqaScenario& s, const EqaConfig& cfg);

struct ImaginationTrace {
  Decision decision;
  // One session for decide_imagine; one per agent for decide_multi_agent.
  std::vector<ExplorationSession> sessions;
  // True pose of every frame an evidence item can point at (Evidence::frame).
  std::vector<AgentPose> frame_poses;
  std::vector<int> failed_agents;
};

// Estimates the landmark from x0, orbits it with the world model and
// answers from x0 plus every imagined frame. budget = 0, or a landmark that
// cannot be located, falls back to decide_base (flagged on failure).
ImaginationTrace decide_imagine(const Reasoner& r, const EqaScenario& s, const EqaConfig& cfg,
                                int budget = 20);

// For every agent, a fresh session from x0 walks to the agent's pose
// (waypoints around the landmark, two-leg detours when a leg is blocked) and
// keeps the view there. The reasoner gets every reached vantage, the asked
// agent's first; Evidence::frame is agent index + 1. Without agents this is
// decide_imagine.
ImaginationTrace decide_multi_agent(const Reasoner& r, const EqaScenario& s, const EqaConfig& cfg,
                                    int budget = 40);

// Every detection lies within tolerance of some object of its color, as seen
// from the frame's true pose.
bool audit_evidence(const EqaScenario& s, const ImaginationTrace& trace,
                    double tolerance = 5.0 * kPi / 180.0);

struct PolicyRecord {
  std::uint64_t seed = 0;
  int agents = 0;
  int answer = 0;
  std::string policy;
  std::string model;
  int choice = 0;
  bool correct = false;
  bool fallback = false;
};

struct PolicyAccuracy {
  std::string population;
  std::string policy;
  std::string model;
  int total = 0;
  int correct = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct PolicyReport {
  std::vector<PolicyRecord> records;
  std::vector<PolicyAccuracy> table;

  std::optional<PolicyAccuracy> find(std::string_view population, std::string_view policy,
                                     std::string_view model = "ground_truth") const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct PolicyEvalConfig {
  std::uint64_t first_seed = 0;
  int single_agent = 500;  // scenarios in the single-agent population
  int multi_agent = 200;   // scenarios with 1..3 agents
  std::vector<double> kappas{0.0};
  EqaConfig eqa;
};

// Populations "single" and "multi"; policies "random" and "base" (model
// "none"), "imagine" and, on "multi", "multi_agent" (one model label per
// kappa: "ground_truth" or "degraded_k<kappa>").
PolicyReport evaluate_policies(const PolicyEvalConfig& cfg);

}  // namespace panoworld
