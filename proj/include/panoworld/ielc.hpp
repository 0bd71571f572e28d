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

// Closed-loop exploration consistency: drive a world model around a loop
// that returns to the start pose and compare the last frame with x0.
//
// The reported error is pixel MSE on [0, 1] RGB. It stands in for MSE in a
// learned latent space, which needs an encoder this project does not ship.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panoworld/random.hpp"
#include "panoworld/transition.hpp"

namespace panoworld {

enum class LoopShape { kOutBack, kPolygon };

struct LoopSpec {
  LoopShape shape = LoopShape::kOutBack;
  int sides = 2;           // 2 for out-and-back, n for a regular n-gon
  double length = 0.0;     // total travel L, meters
  double side = 0.0;       // travel per leg
  double initial_turn = 0.0;
  bool clockwise = false;  // polygons only
  std::vector<Action> actions;

  // "out_back" or "ngon<n>".
  std::string shape_name() const;
};

// [(t, L/2), (pi, L/2), closing turn].
LoopSpec make_out_back(double length, double initial_turn = 0.0);
// (t, L/n), then n - 1 legs turning by +-2pi/n, then the closing turn.
LoopSpec make_polygon(int sides, double length, double initial_turn = 0.0, bool clockwise = false);

// `count` loops; loop i has length lengths[i * lengths.size() / count], a
// random shape among out-and-back and 3-, 4- and 6-gons, a random initial
// turn and orientation.
std::vector<LoopSpec> sample_loops(Rng& rng, std::span<const double> lengths, int count);

// Net pose change of executing `actions` from `start` (exact pose algebra).
AgentPose execute_actions(const AgentPose& start, std::span<const Action> actions);

// True when some leg of the loop from `start` is blocked.
bool loop_blocked(const SceneSpec& scene, const AgentPose& start, const LoopSpec& loop);

using ModelFactory = std::function<std::unique_ptr<WorldModel>(
    std::shared_ptr<const SceneSpec> scene, const AgentPose& start, double kappa, std::uint64_t seed)>;

// Ground-truth model, wrapped in a degraded model when kappa > 0.
ModelFactory default_model_factory(Dims dims, RenderOptions render = {});

struct IelcConfig {
  Dims dims{256, 128};
  RenderOptions render;
  TransitionConfig transition;
  std::vector<double> kappas{0.0};
  std::uint64_t noise_seed = 1;
};

struct IelcRecord {
  std::size_t loop = 0;
  std::uint64_t scene_seed = 0;
  std::string shape;
  double length = 0.0;
  double kappa = 0.0;
  bool blocked = false;
  double mse = 0.0;  // 0 for blocked loops
  std::size_t frames = 0;
};

struct IelcCell {
  double kappa = 0.0;
  double length = 0.0;
  std::string shape;  // "all" for the per-length aggregate
  int count = 0;
  int discarded = 0;
  double mean_mse = 0.0;
};

struct IelcReport {
  std::vector<IelcRecord> records;
  std::vector<IelcCell> cells;  // per (kappa, length, shape), then per (kappa, length) "all"

  std::optional<IelcCell> cell(double kappa, double length, std::string_view shape = "all") const;
  std::string to_csv() const;
  nlohmann::json to_json(const IelcConfig& cfg) const;
};

// Loop i runs on scenes[i % scenes.size()] from the origin with heading 0.
// Blocked loops are recorded and left out of the means.
IelcReport evaluate_ielc(std::span<const std::shared_ptr<const SceneSpec>> scenes,
                         std::span<const LoopSpec> loops, const IelcConfig& cfg,
                         const ModelFactory& factory = {});

struct IelcPreset {
  std::string name;
  std::vector<std::shared_ptr<const SceneSpec>> scenes;
  std::vector<LoopSpec> loops;
  IelcConfig config;
};

// "ci": 50 loops, L in {2, 4, ..., 20}, five scenes whose objects stay at
// least 10.5 m from the start so no loop is blocked, kappa in {0, 0.1, 0.2}.
// "full": 1000 loops over twenty unrestricted scenes (blocked loops discarded).
IelcPreset ielc_preset(std::string_view name, std::uint64_t seed = 0);

}  // namespace panoworld
