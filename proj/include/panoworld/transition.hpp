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

// World initialization and action-conditioned world transition over a
// pluggable world model.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panoworld/image.hpp"
#include "panoworld/random.hpp"
#include "panoworld/world.hpp"

namespace panoworld {

using Frame = std::shared_ptr<const PanoramaImage>;
using FrameSequence = std::vector<Frame>;

struct TransitionConfig {
  double frames_per_meter = 4.0;
  int min_frames = 1;
  int max_frames = 10000;
  RotationMode rotation_mode = RotationMode::kRigid;

  // S = max(min_frames, round(frames_per_meter * d)); ConfigError past max_frames.
  int frame_count(double d) const;
  void validate() const;  // ConfigError
};

nlohmann::json to_json(const TransitionConfig& cfg);
TransitionConfig transition_config_from_json(const nlohmann::json& j);

class WorldModel {
 public:
  virtual ~WorldModel() = default;

  // Produces exactly `frames` panoramas of forward travel, the last one being
  // the view after the move. `rotated_latest` is the latest frame already
  // turned by action.alpha.
  virtual FrameSequence generate(const PanoramaImage& rotated_latest, const Action& action,
                                 int frames) = 0;

  virtual std::string kind() const = 0;

  // Introspection used by probes, pilots and audits. Models without a hidden
  // state return nothing.
  virtual std::optional<AgentPose> true_pose() const { return std::nullopt; }
  virtual const SceneSpec* scene() const { return nullptr; }
};

// Renders every frame from the scene at the interpolated true pose.
class GroundTruthModel : public WorldModel {
 public:
  GroundTruthModel(std::shared_ptr<const SceneSpec> scene, AgentPose start, Dims dims,
                   RenderOptions render = {});

  FrameSequence generate(const PanoramaImage& rotated_latest, const Action& action,
                         int frames) override;
  std::string kind() const override { return "ground_truth"; }
  std::optional<AgentPose> true_pose() const override { return pose_; }
  const SceneSpec* scene() const override { return scene_.get(); }

  Dims dims() const { return dims_; }
  const RenderOptions& render_options() const { return render_; }
  // Pose of every frame generated so far, in order.
  const std::vector<AgentPose>& trace() const { return trace_; }

 private:
  std::shared_ptr<const SceneSpec> scene_;
  AgentPose pose_;
  Dims dims_;
  RenderOptions render_;
  std::vector<AgentPose> trace_;
};

// Blur growing with the frame counter plus additive noise, emulating
// compounding generation error. kappa = 0 passes the inner frames through.
class DegradedModel : public WorldModel {
 public:
  DegradedModel(std::unique_ptr<WorldModel> inner, double kappa, std::uint64_t seed);

  FrameSequence generate(const PanoramaImage& rotated_latest, const Action& action,
                         int frames) override;
  std::string kind() const override { return "degraded"; }
  std::optional<AgentPose> true_pose() const override { return inner_->true_pose(); }
  const SceneSpec* scene() const override { return inner_->scene(); }

  double kappa() const { return kappa_; }
  long frames_emitted() const { return counter_; }

 private:
  std::unique_ptr<WorldModel> inner_;
  double kappa_;
  Rng rng_;
  long counter_ = 0;
};

// Gaussian blur with sigma = kappa * step_index (horizontal wrap, vertical
// clamp, kernel radius ceil(3 sigma) capped at W/2 and H), then noise with
// standard deviation kappa / 10, clamped to [0, 1].
PanoramaImage degrade_frame(const PanoramaImage& frame, long step_index, double kappa, Rng& rng);

// Separable Gaussian blur used by degrade_frame.
PanoramaImage gaussian_blur(const PanoramaImage& frame, double sigma);

// x0 rendered from the start pose. When i0 is given, the pinhole view of x0
// with i0's field of view must match it at PSNR >= min_psnr, else
// ConsistencyError.
PanoramaImage initialize_world(const SceneSpec& scene, const AgentPose& start, Dims dims,
                               const RenderOptions& render = {},
                               const PerspectiveImage* i0 = nullptr, double min_psnr = 40.0);

struct ActionRanges {
  double alpha_min = -kPi;
  double alpha_max = kPi;
  double d_min = 0.5;
  double d_max = 4.0;
};

// alpha uniform in [alpha_min, alpha_max), d uniform in [d_min, d_max].
Action sample_action(Rng& rng, const ActionRanges& ranges = {});

// Rotates `latest` by alpha, then asks the model for S(d) frames.
FrameSequence step(WorldModel& model, const PanoramaImage& latest, const Action& action,
                   const TransitionConfig& cfg);

struct SessionStep {
  Action action;
  FrameSequence frames;
  std::optional<AgentPose> true_pose;  // after the step, when the model exposes it
};

struct ExplorationSession {
  Frame x0;
  std::vector<SessionStep> steps;
  TransitionConfig config;
  nlohmann::json provenance = nlohmann::json::object();
  bool done = false;

  // x0 when no step has run, otherwise the last frame of the last step.
  const Frame& latest() const;
  std::size_t frame_count() const;
};

struct RolloutResult {
  ExplorationSession session;
  std::optional<std::string> error;  // set when a step failed; session holds the completed prefix
};

// Executes one step and appends it; the conditioning view is session.latest().
void advance(ExplorationSession& session, WorldModel& model, const Action& action);

RolloutResult rollout(WorldModel& model, Frame x0, const std::vector<Action>& actions,
                      const TransitionConfig& cfg, nlohmann::json provenance = nlohmann::json::object());

// Contents of session.json: config, provenance, actions, true poses and the
// frame file names (x0.png, step_%04d_frame_%03d.png).
nlohmann::json session_manifest(const ExplorationSession& session);

// Directory layout: session.json plus x0.png and step_%04d_frame_%03d.png.
void save_session(const ExplorationSession& session, const std::filesystem::path& dir);
ExplorationSession load_session(const std::filesystem::path& dir);

}  // namespace panoworld
