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

#include "panoworld/ielc.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "panoworld/errors.hpp"
#include "panoworld/metrics.hpp"

namespace panoworld {
namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Action closing_turn(std::span<const Action> actions) {
  double net = 0.0;
  for (const Action& a : actions) net += a.alpha;
  return Action::normalized(-net, 0.0);
}

}  // namespace

std::string LoopSpec::shape_name() const {
  return shape == LoopShape::kOutBack ? "out_back" : "ngon" + std::to_string(sides);
}

LoopSpec make_out_back(double length, double initial_turn) {
  if (!(length > 0.0)) throw ParameterError("loop length must be positive");
  LoopSpec l;
  l.shape = LoopShape::kOutBack;
  l.sides = 2;
  l.length = length;
  l.side = 0.5 * length;
  l.initial_turn = initial_turn;
  l.actions = {Action::normalized(initial_turn, l.side), Action::normalized(kPi, l.side)};
  l.actions.push_back(closing_turn(l.actions));
  return l;
}

LoopSpec make_polygon(int sides, double length, double initial_turn, bool clockwise) {
  if (sides < 3) throw ParameterError("a polygon loop needs at least 3 sides");
  if (!(length > 0.0)) throw ParameterError("loop length must be positive");
  LoopSpec l;
  l.shape = LoopShape::kPolygon;
  l.sides = sides;
  l.length = length;
  l.side = length / sides;
  l.initial_turn = initial_turn;
  l.clockwise = clockwise;
  const double turn = (clockwise ? -kTwoPi : kTwoPi) / sides;
  l.actions.push_back(Action::normalized(initial_turn, l.side));
  for (int i = 1; i < sides; ++i) l.actions.push_back(Action::normalized(turn, l.side));
  l.actions.push_back(closing_turn(l.actions));
  return l;
}

std::vector<LoopSpec> sample_loops(Rng& rng, std::span<const double> lengths, int count) {
  if (count < 1) throw ParameterError("loop count must be at least 1");
  if (lengths.empty()) throw ParameterError("need at least one loop length");
  std::vector<LoopSpec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double L = lengths[static_cast<std::size_t>(i) * lengths.size() / count];
    const int kind = rng.integer(0, 3);
    const double turn = rng.uniform(-kPi, kPi);
    const bool cw = rng.chance(0.5);
    static constexpr int kSides[] = {0, 3, 4, 6};
    out.push_back(kind == 0 ? make_out_back(L, turn) : make_polygon(kSides[kind], L, turn, cw));
  }
  return out;
}

AgentPose execute_actions(const AgentPose& start, std::span<const Action> actions) {
  AgentPose p = start;
  for (const Action& a : actions) p = apply_action(p, a);
  return p;
}

bool loop_blocked(const SceneSpec& scene, const AgentPose& start, const LoopSpec& loop) {
  AgentPose p = start;
  for (const Action& a : loop.actions) {
    if (path_blocked(scene, p, a)) return true;
    p = apply_action(p, a);
  }
  return false;
}

ModelFactory default_model_factory(Dims dims, RenderOptions render) {
  return [dims, render](std::shared_ptr<const SceneSpec> scene, const AgentPose& start, double kappa,
                        std::uint64_t seed) -> std::unique_ptr<WorldModel> {
    auto gt = std::make_unique<GroundTruthModel>(std::move(scene), start, dims, render);
    if (kappa == 0.0) return gt;
    return std::make_unique<DegradedModel>(std::move(gt), kappa, seed);
  };
}

std::optional<IelcCell> IelcReport::cell(double kappa, double length, std::string_view shape) const {
  for (const IelcCell& c : cells) {
    if (c.kappa == kappa && c.length == length && c.shape == shape) return c;
  }
  return std::nullopt;
}

std::string IelcReport::to_csv() const {
  std::string out =
      "# metric: pixel MSE on [0,1] RGB between x0 and the final frame (substitutes latent MSE)\n"
      "kappa,length,shape,count,discarded,mean_mse\n";
  for (const IelcCell& c : cells) {
    out += format_number(c.kappa) + "," + format_number(c.length) + "," + c.shape + "," +
           std::to_string(c.count) + "," + std::to_string(c.discarded) + "," +
           format_number(c.mean_mse) + "\n";
  }
  return out;
}

nlohmann::json IelcReport::to_json(const IelcConfig& cfg) const {
  nlohmann::json j;
  j["v"] = 1;
  j["metric"] = "pixel_mse";
  j["note"] = "pixel MSE on [0,1] RGB substitutes MSE in a learned latent space";
  j["config"] = {{"dims", {cfg.dims.width, cfg.dims.height}},
                 {"supersample", cfg.render.supersample},
                 {"transition", panoworld::to_json(cfg.transition)},
                 {"kappas", cfg.kappas},
                 {"noise_seed", cfg.noise_seed}};
  j["cells"] = nlohmann::json::array();
  for (const IelcCell& c : cells) {
    j["cells"].push_back({{"kappa", c.kappa}, {"length", c.length}, {"shape", c.shape},
                          {"count", c.count}, {"discarded", c.discarded}, {"mean_mse", c.mean_mse}});
  }
  j["records"] = nlohmann::json::array();
  for (const IelcRecord& r : records) {
    j["records"].push_back({{"loop", r.loop}, {"scene_seed", r.scene_seed}, {"shape", r.shape},
                            {"length", r.length}, {"kappa", r.kappa}, {"blocked", r.blocked},
                            {"mse", r.mse}, {"frames", r.frames}});
  }
  return j;
}

IelcReport evaluate_ielc(std::span<const std::shared_ptr<const SceneSpec>> scenes,
                         std::span<const LoopSpec> loops, const IelcConfig& cfg,
                         const ModelFactory& factory_in) {
  if (scenes.empty()) throw ParameterError("IELC needs at least one scene");
  const ModelFactory factory = factory_in ? factory_in : default_model_factory(cfg.dims, cfg.render);
  const AgentPose start{};
  IelcReport report;
  std::map<std::tuple<double, double, std::string>, IelcCell> grid;
  std::map<std::pair<double, double>, IelcCell> by_length;
  for (double kappa : cfg.kappas) {
    for (std::size_t i = 0; i < loops.size(); ++i) {
      const LoopSpec& loop = loops[i];
      const auto& scene = scenes[i % scenes.size()];
      IelcRecord rec{i, scene->seed, loop.shape_name(), loop.length, kappa, false, 0.0, 0};
      IelcCell& cell = grid[{kappa, loop.length, rec.shape}];
      IelcCell& all = by_length[{kappa, loop.length}];
      if (loop_blocked(*scene, start, loop)) {
        rec.blocked = true;
        ++cell.discarded;
        ++all.discarded;
        report.records.push_back(rec);
        continue;
      }
      const Frame x0 = std::make_shared<const PanoramaImage>(
          render_panorama(*scene, start, cfg.dims, cfg.render));
      auto model = factory(scene, start, kappa, cfg.noise_seed + i);
      RolloutResult r = rollout(*model, x0, loop.actions, cfg.transition);
      if (r.error) throw GenerationError("loop " + std::to_string(i) + ": " + *r.error);
      rec.mse = mse(*x0, *r.session.latest());
      rec.frames = r.session.frame_count();
      cell.mean_mse += rec.mse;
      ++cell.count;
      all.mean_mse += rec.mse;
      ++all.count;
      report.records.push_back(rec);
    }
  }
  for (auto& [key, c] : grid) {
    c.kappa = std::get<0>(key);
    c.length = std::get<1>(key);
    c.shape = std::get<2>(key);
    if (c.count > 0) c.mean_mse /= c.count;
    report.cells.push_back(c);
  }
  for (auto& [key, c] : by_length) {
    c.kappa = key.first;
    c.length = key.second;
    c.shape = "all";
    if (c.count > 0) c.mean_mse /= c.count;
    report.cells.push_back(c);
  }
  return report;
}

IelcPreset ielc_preset(std::string_view name, std::uint64_t seed) {
  IelcPreset p;
  p.name = std::string(name);
  std::vector<double> lengths;
  for (int L = 2; L <= 20; L += 2) lengths.push_back(L);
  p.config.kappas = {0.0, 0.1, 0.2};
  p.config.noise_seed = seed + 1;
  Rng rng(seed);
  if (name == "ci") {
    GeneratorLimits limits;
    limits.clear_radius = 10.5;
    for (std::uint64_t s = 0; s < 5; ++s) {
      p.scenes.push_back(std::make_shared<const SceneSpec>(scene_from_seed(seed * 1000 + s, limits)));
    }
    p.loops = sample_loops(rng, lengths, 50);
  } else if (name == "full") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      p.scenes.push_back(std::make_shared<const SceneSpec>(scene_from_seed(seed * 1000 + s)));
    }
    p.loops = sample_loops(rng, lengths, 1000);
  } else {
    throw ParameterError("unknown IELC preset '" + std::string(name) + "'");
  }
  return p;
}

}  // namespace panoworld
