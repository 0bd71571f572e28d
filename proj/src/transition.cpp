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

#include "panoworld/transition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "panoworld/errors.hpp"
#include "panoworld/metrics.hpp"
#include "panoworld/raster_io.hpp"
#include "parallel.hpp"

namespace panoworld {
namespace {

std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

std::string frame_name(std::size_t step, std::size_t frame) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "step_%04zu_frame_%03zu.png", step, frame);
  return buf;
}

}  // namespace

int TransitionConfig::frame_count(double d) const {
  validate();
  if (!std::isfinite(d) || d < 0.0) throw ParameterError("travel distance must be finite and >= 0");
  const double s = std::max<double>(min_frames, std::round(frames_per_meter * d));
  if (s > max_frames) {
    throw ConfigError("action needs " + std::to_string(static_cast<long long>(s)) +
                      " frames, above the limit of " + std::to_string(max_frames));
  }
  return static_cast<int>(s);
}

void TransitionConfig::validate() const {
  if (!(frames_per_meter > 0.0) || !std::isfinite(frames_per_meter)) {
    throw ConfigError("frames_per_meter must be positive");
  }
  if (min_frames < 1) throw ConfigError("min_frames must be at least 1");
  if (max_frames < min_frames) throw ConfigError("max_frames must be >= min_frames");
}

nlohmann::json to_json(const TransitionConfig& cfg) {
  return {{"frames_per_meter", cfg.frames_per_meter},
          {"min_frames", cfg.min_frames},
          {"max_frames", cfg.max_frames},
          {"rotation_mode", to_string(cfg.rotation_mode)}};
}

TransitionConfig transition_config_from_json(const nlohmann::json& j) {
  TransitionConfig cfg;
  try {
    cfg.frames_per_meter = j.value("frames_per_meter", cfg.frames_per_meter);
    cfg.min_frames = j.value("min_frames", cfg.min_frames);
    cfg.max_frames = j.value("max_frames", cfg.max_frames);
    if (j.contains("rotation_mode")) {
      cfg.rotation_mode = rotation_mode_from_string(j.at("rotation_mode").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed transition config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

GroundTruthModel::GroundTruthModel(std::shared_ptr<const SceneSpec> scene, AgentPose start,
                                   Dims dims, RenderOptions render)
    : scene_(std::move(scene)), pose_(start), dims_(dims), render_(render) {
  if (!scene_) throw ParameterError("ground-truth model needs a scene");
  validate_panorama_dims(dims_);
  pose_.heading = wrap_longitude(pose_.heading);
}

FrameSequence GroundTruthModel::generate(const PanoramaImage&, const Action& action, int frames) {
  if (frames < 1) throw ParameterError("frame count must be positive");
  const AgentPose start{pose_.position, wrap_longitude(pose_.heading + action.alpha)};
  FrameSequence out;
  out.reserve(frames);
  for (int k = 1; k <= frames; ++k) {
    const AgentPose p = apply_action(start, {0.0, action.d * k / frames});
    out.push_back(std::make_shared<const PanoramaImage>(render_panorama(*scene_, p, dims_, render_)));
    trace_.push_back(p);
  }
  // The final pose is computed in one piece so composing actions stays exact.
  pose_ = apply_action(pose_, action);
  return out;
}

DegradedModel::DegradedModel(std::unique_ptr<WorldModel> inner, double kappa, std::uint64_t seed)
    : inner_(std::move(inner)), kappa_(kappa), rng_(seed) {
  if (!inner_) throw ParameterError("degraded model needs an inner model");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ParameterError("kappa must be >= 0");
}

FrameSequence DegradedModel::generate(const PanoramaImage& rotated_latest, const Action& action,
                                      int frames) {
  FrameSequence inner = inner_->generate(rotated_latest, action, frames);
  if (kappa_ == 0.0) {
    counter_ += static_cast<long>(inner.size());
    return inner;
  }
  FrameSequence out;
  out.reserve(inner.size());
  for (const Frame& f : inner) {
    out.push_back(std::make_shared<const PanoramaImage>(degrade_frame(*f, ++counter_, kappa_, rng_)));
  }
  return out;
}

PanoramaImage gaussian_blur(const PanoramaImage& frame, double sigma) {
  if (!(sigma > 0.0)) return frame;
  const int w = frame.width();
  const int h = frame.height();
  const int rx = std::min(static_cast<int>(std::ceil(3.0 * sigma)), w / 2);
  const int ry = std::min(static_cast<int>(std::ceil(3.0 * sigma)), h);
  const std::vector<double> kx = gaussian_kernel(sigma, rx);
  const std::vector<double> ky = gaussian_kernel(sigma, ry);
  std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
  parallel_rows(h, [&](int y) {
    const float* row = frame.raster().row(y);
    double* dst = &tmp[static_cast<std::size_t>(y) * w * 3];
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int i = -rx; i <= rx; ++i) {
        int xs = (x + i) % w;
        if (xs < 0) xs += w;
        const double k = kx[i + rx];
        acc[0] += k * row[xs * 3];
        acc[1] += k * row[xs * 3 + 1];
        acc[2] += k * row[xs * 3 + 2];
      }
      dst[x * 3] = acc[0];
      dst[x * 3 + 1] = acc[1];
      dst[x * 3 + 2] = acc[2];
    }
  });
  PanoramaImage out(frame.dims());
  parallel_rows(h, [&](int y) {
    float* dst = out.raster().row(y);
    for (int i = 0; i < w * 3; ++i) {
      double acc = 0.0;
      for (int j = -ry; j <= ry; ++j) {
        const int ys = std::clamp(y + j, 0, h - 1);
        acc += ky[j + ry] * tmp[static_cast<std::size_t>(ys) * w * 3 + i];
      }
      dst[i] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  });
  return out;
}

PanoramaImage degrade_frame(const PanoramaImage& frame, long step_index, double kappa, Rng& rng) {
  if (!(kappa >= 0.0)) throw ParameterError("kappa must be >= 0");
  if (kappa == 0.0) return frame;
  PanoramaImage out = gaussian_blur(frame, kappa * static_cast<double>(step_index));
  const double sd = kappa / 10.0;
  for (float& s : out.raster().mutable_samples()) {
    s = static_cast<float>(std::clamp(s + sd * rng.normal(), 0.0, 1.0));
  }
  return out;
}

PanoramaImage initialize_world(const SceneSpec& scene, const AgentPose& start, Dims dims,
                               const RenderOptions& render, const PerspectiveImage* i0,
                               double min_psnr) {
  PanoramaImage x0 = render_panorama(scene, start, dims, render);
  if (i0 != nullptr) {
    const PerspectiveImage view =
        extract_perspective(x0, 0.0, 0.0, i0->hfov, i0->raster.width(), i0->raster.height());
    const double p = psnr(view.raster, i0->raster);
    if (p < min_psnr) {
      throw ConsistencyError("initial view disagrees with the scene render (PSNR " +
                             std::to_string(p) + " dB)");
    }
  }
  return x0;
}

Action sample_action(Rng& rng, const ActionRanges& r) {
  if (!(r.alpha_min <= r.alpha_max) || !(r.d_min <= r.d_max) || r.d_min < 0.0) {
    throw ParameterError("empty or invalid action ranges");
  }
  const double alpha = r.alpha_min == r.alpha_max ? r.alpha_min : rng.uniform(r.alpha_min, r.alpha_max);
  const double d = r.d_min == r.d_max ? r.d_min : rng.uniform(r.d_min, r.d_max);
  return Action::normalized(alpha, d);
}

FrameSequence step(WorldModel& model, const PanoramaImage& latest, const Action& action,
                   const TransitionConfig& cfg) {
  const Action a = Action::normalized(action.alpha, action.d);
  const int s = cfg.frame_count(a.d);
  const PanoramaImage rotated = rotate_panorama_image(latest, {a.alpha, 0.0, cfg.rotation_mode});
  FrameSequence frames = model.generate(rotated, a, s);
  if (static_cast<int>(frames.size()) != s) {
    throw GenerationError("world model returned " + std::to_string(frames.size()) +
                          " frames, expected " + std::to_string(s));
  }
  for (const Frame& f : frames) {
    if (!f || f->dims() != latest.dims()) throw GenerationError("world model returned a malformed frame");
  }
  return frames;
}

const Frame& ExplorationSession::latest() const {
  return steps.empty() ? x0 : steps.back().frames.back();
}

std::size_t ExplorationSession::frame_count() const {
  std::size_t n = 0;
  for (const SessionStep& s : steps) n += s.frames.size();
  return n;
}

void advance(ExplorationSession& session, WorldModel& model, const Action& action) {
  if (!session.x0) throw ParameterError("session has no initial frame");
  const Action a = Action::normalized(action.alpha, action.d);
  FrameSequence frames = step(model, *session.latest(), a, session.config);
  session.steps.push_back({a, std::move(frames), model.true_pose()});
}

RolloutResult rollout(WorldModel& model, Frame x0, const std::vector<Action>& actions,
                      const TransitionConfig& cfg, nlohmann::json provenance) {
  RolloutResult result;
  result.session.x0 = std::move(x0);
  result.session.config = cfg;
  result.session.provenance = std::move(provenance);
  result.session.provenance["model"] = model.kind();
  for (const Action& a : actions) {
    try {
      advance(result.session, model, a);
    } catch (const Error& e) {
      result.error = e.what();
      break;
    }
  }
  result.session.done = true;
  return result;
}

nlohmann::json session_manifest(const ExplorationSession& session) {
  if (!session.x0) throw ParameterError("session has no initial frame");
  nlohmann::json j;
  j["v"] = 1;
  j["config"] = to_json(session.config);
  j["provenance"] = session.provenance;
  j["dims"] = {session.x0->width(), session.x0->height()};
  j["x0"] = "x0.png";
  j["done"] = session.done;
  j["steps"] = nlohmann::json::array();
  for (std::size_t t = 0; t < session.steps.size(); ++t) {
    const SessionStep& s = session.steps[t];
    nlohmann::json st;
    st["index"] = t + 1;
    st["action"] = {{"alpha", s.action.alpha}, {"d", s.action.d}};
    st["frames"] = nlohmann::json::array();
    for (std::size_t k = 0; k < s.frames.size(); ++k) st["frames"].push_back(frame_name(t + 1, k + 1));
    st["true_pose"] = s.true_pose ? to_json(*s.true_pose) : nlohmann::json(nullptr);
    j["steps"].push_back(std::move(st));
  }
  return j;
}

void save_session(const ExplorationSession& session, const std::filesystem::path& dir) {
  const nlohmann::json j = session_manifest(session);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_raster(session.x0->raster(), dir / "x0.png");
  for (std::size_t t = 0; t < session.steps.size(); ++t) {
    const SessionStep& s = session.steps[t];
    for (std::size_t k = 0; k < s.frames.size(); ++k) {
      save_raster(s.frames[k]->raster(), dir / j["steps"][t]["frames"][k].get<std::string>());
    }
  }
  std::ofstream out(dir / "session.json");
  if (!out) throw IoError("cannot write " + (dir / "session.json").string());
  out << j.dump(2) << "\n";
}

ExplorationSession load_session(const std::filesystem::path& dir) {
  std::ifstream in(dir / "session.json");
  if (!in) throw IoError("cannot open " + (dir / "session.json").string());
  ExplorationSession s;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("v", 0) != 1) throw DecodeError("unsupported session version");
    s.config = transition_config_from_json(j.at("config"));
    s.provenance = j.value("provenance", nlohmann::json::object());
    s.done = j.value("done", false);
    s.x0 = std::make_shared<const PanoramaImage>(load_panorama(dir / j.at("x0").get<std::string>()));
    for (const auto& st : j.at("steps")) {
      SessionStep step;
      step.action = {st.at("action").at("alpha").get<double>(), st.at("action").at("d").get<double>()};
      for (const auto& name : st.at("frames")) {
        step.frames.push_back(
            std::make_shared<const PanoramaImage>(load_panorama(dir / name.get<std::string>())));
      }
      if (st.contains("true_pose") && !st.at("true_pose").is_null()) {
        step.true_pose = pose_from_json(st.at("true_pose"));
      }
      s.steps.push_back(std::move(step));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("malformed session.json: " + std::string(e.what()));
  }
  return s;
}

}  // namespace panoworld
