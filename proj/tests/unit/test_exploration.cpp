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

#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "panoworld/errors.hpp"
#include "panoworld/exploration.hpp"
#include "panoworld/perception.hpp"

namespace panoworld {
namespace {

SceneSpec with_object(Shape shape, Vec3 center, Vec3 size, std::string_view color = "red") {
  SceneSpec s;
  s.objects.push_back({"goal", shape, center, size, palette_color(color).rgb, {}});
  s.validate();
  return s;
}

TEST(Perception, ClassifiesShadedPaletteColors) {
  const auto pal = palette();
  for (std::size_t i = 0; i < pal.size(); ++i) {
    for (double shade : {0.6, 0.8, 1.0}) {
      const auto c = classify_color(pal[i].rgb * shade);
      ASSERT_TRUE(c) << pal[i].name;
      EXPECT_EQ(*c, static_cast<int>(i)) << pal[i].name;
    }
  }
  EXPECT_FALSE(classify_color({0.5, 0.5, 0.5}));
  EXPECT_FALSE(classify_color({0.05, 0.0, 0.0}));
  EXPECT_FALSE(classify_color({0.85, 0.90, 0.97}));  // sky
}

TEST(Perception, SegmentsAcrossTheSeam) {
  Image img(32, 16, Rgb{0.5, 0.5, 0.5});
  for (int y = 5; y < 8; ++y)
    for (int x : {30, 31, 0, 1}) img.set_pixel(x, y, palette_color("red").rgb);
  for (int y = 2; y < 4; ++y)
    for (int x = 10; x < 15; ++x) img.set_pixel(x, y, palette_color("blue").rgb);
  const auto wrapped = segment_colors(img, true);
  ASSERT_EQ(wrapped.size(), 2u);
  EXPECT_EQ(wrapped[0].area, 12);
  EXPECT_EQ(wrapped[0].color, 0);
  EXPECT_EQ(wrapped[0].min_y, 5);
  EXPECT_EQ(wrapped[0].max_y, 7);
  EXPECT_EQ(wrapped[1].area, 10);
  EXPECT_NEAR(std::abs(component_bearing(wrapped[0], {32, 16})), kPi, 1e-12);
  EXPECT_NEAR(component_bearing(wrapped[1], {32, 16}), kTwoPi * 12.5 / 32 - kPi, 1e-12);
  const auto flat = segment_colors(img, false);
  ASSERT_EQ(flat.size(), 3u);
  EXPECT_EQ(flat[1].area, 6);
  EXPECT_EQ(segment_colors(img, false, 7).size(), 1u);
}

TEST(ActionFeed, OrderCloseAndBlocking) {
  ActionFeed feed;
  EXPECT_TRUE(feed.push({1, 1}));
  EXPECT_TRUE(feed.push({2, 2}));
  EXPECT_EQ(feed.pop()->alpha, 1);
  std::thread producer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    feed.push({3, 3});
    feed.close();
  });
  EXPECT_EQ(feed.pop()->alpha, 2);
  EXPECT_EQ(feed.pop()->alpha, 3);
  EXPECT_FALSE(feed.pop());
  producer.join();
  EXPECT_TRUE(feed.closed());
  EXPECT_FALSE(feed.push({4, 4}));
}

TEST(Pilot, TieRules) {
  HeuristicPilot pilot;
  const PanoramaImage img(Dims{16, 8});
  const std::vector<Action> c = {{0.5, 2}, {-0.5, 1}, {0.25, 4}, {0.25, 1}, {kPi, 1}};
  EXPECT_EQ(pilot.propose(img, c, std::vector<double>{1, 1, 1, 1, 1}), (Action{0.25, 1}));
  EXPECT_EQ(pilot.propose(img, c, std::vector<double>{1, 2, 1, 1, 1}), (Action{-0.5, 1}));
  EXPECT_EQ(pilot.propose(img, c, std::vector<double>{1, 1, 3, 1, 1}), (Action{0.25, 4}));
  EXPECT_EQ(pilot.propose(img, c, std::vector<double>{0, 0, 0, 0, 0}), (Action{kPi, 1}));
  const std::vector<Action> sym = {{0.5, 1}, {-0.5, 1}};
  EXPECT_EQ(pilot.propose(img, sym, std::vector<double>{1, 1}), sym[0]);
  EXPECT_THROW(pilot.propose(img, c, std::vector<double>{1}), ParameterError);
  EXPECT_EQ(default_candidates().size(), 24u);
}

TEST(Probe, ClearanceLadder) {
  const auto s = std::make_shared<const SceneSpec>(with_object(Shape::kBox, {5, 0, 1}, {1, 1, 1}));
  GroundTruthModel model(s, {}, {16, 8});
  const auto probe = make_probe(model);
  ASSERT_TRUE(probe);
  EXPECT_EQ(probe->clearance_score({0, 5}), 0.0);
  EXPECT_EQ(probe->clearance_score({0, 3.3}), 0.6);
  EXPECT_EQ(probe->clearance_score({kPi, 3}), 3.0);
  EXPECT_EQ(clearance_ladder().front(), kAgentRadius);
}

TEST(GoalEstimate, BoxAndSphereDistances) {
  const Dims dims{1024, 512};
  const SceneSpec box = with_object(Shape::kBox, {5, 0, 0.5}, {1, 1, 0.5});
  const GoalEstimate eb = estimate_goal(render_panorama(box, {}, dims), box.objects[0]);
  EXPECT_NEAR(eb.distance, 4.0, 0.1);
  EXPECT_NEAR(eb.bearing, 0.0, 0.01);
  const SceneSpec ball = with_object(Shape::kSphere, {0, -6, 1}, {1, 1, 1}, "azure");
  const GoalEstimate es = estimate_goal(render_panorama(ball, {}, dims), ball.objects[0]);
  EXPECT_NEAR(es.distance, 5.0, 0.15);
  EXPECT_NEAR(es.bearing, -kHalfPi, 0.01);
  const SceneSpec empty;
  EXPECT_THROW(estimate_goal(render_panorama(empty, {}, dims), box.objects[0]), DetectionError);
}

TEST(GoalPolicy, StopsNearAndClipsAtObstacles) {
  const SceneSpec box = with_object(Shape::kBox, {1.3, 0, 0.5}, {0.5, 0.5, 0.5});
  const PanoramaImage view = render_panorama(box, {}, {512, 256});
  EXPECT_TRUE(std::holds_alternative<GoalDone>(goal_policy_step(view, box.objects[0], std::nullopt)));
  const SceneSpec far = with_object(Shape::kBox, {8.0, 0, 0.5}, {0.5, 0.5, 0.5});
  const GoalDecision d = goal_policy_step(render_panorama(far, {}, {512, 256}), far.objects[0], std::nullopt);
  ASSERT_TRUE(std::holds_alternative<Action>(d));
  EXPECT_NEAR(std::get<Action>(d).d, 4.0, 1e-12);
}

TEST(Session, InteractiveConsumesFeed) {
  const auto s = std::make_shared<const SceneSpec>(scene_from_seed(2));
  GroundTruthModel model(s, {}, {32, 16});
  ActionFeed feed;
  feed.push({0.3, 0.0});
  feed.push({0.0, 0.5});
  feed.close();
  SessionOptions opt;
  opt.feed = &feed;
  int calls = 0;
  opt.on_step = [&](const ExplorationSession& sess) { EXPECT_EQ(sess.steps.size(), ++calls); };
  const RolloutResult r = run_session(model, std::make_shared<const PanoramaImage>(Dims{32, 16}), opt);
  EXPECT_FALSE(r.error);
  EXPECT_EQ(r.session.steps.size(), 2u);
  EXPECT_EQ(calls, 2);
  EXPECT_TRUE(r.session.provenance["feed_closed"].get<bool>());
  SessionOptions nofeed;
  EXPECT_THROW(run_session(model, r.session.x0, nofeed), ParameterError);
}

TEST(Session, FreeModeNeverCollides) {
  const auto s = std::make_shared<const SceneSpec>(scene_from_seed(5));
  GroundTruthModel model(s, {}, {32, 16});
  SessionOptions opt;
  opt.instruction.mode = ExploreMode::kFree;
  opt.instruction.budget = 12;
  const RolloutResult r = run_session(model, std::make_shared<const PanoramaImage>(Dims{32, 16}), opt);
  EXPECT_FALSE(r.error);
  ASSERT_EQ(r.session.steps.size(), 12u);
  for (const AgentPose& p : model.trace())
    for (const Primitive& o : s->objects) EXPECT_GE(footprint_distance(o, p.position.x, p.position.y), kAgentRadius);
}

TEST(Session, GoalModeReachesTarget) {
  int reached = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GoalScenario g = make_goal_scenario(seed);
    const Dims dims{256, 128};
    GroundTruthModel model(g.scene, g.start, dims);
    SessionOptions opt;
    opt.instruction.mode = ExploreMode::kGoal;
    opt.instruction.goal_object = g.goal;
    const RolloutResult r = run_session(
        model, std::make_shared<const PanoramaImage>(render_panorama(*g.scene, g.start, dims)), opt);
    const AgentPose end = *model.true_pose();
    const double dist = footprint_distance(g.scene->find(g.goal), end.position.x, end.position.y);
    if (r.session.provenance.value("reached", false) && dist <= 1.0 + 1e-6) ++reached;
  }
  EXPECT_GE(reached, 4);
  SessionOptions bad;
  bad.instruction.mode = ExploreMode::kGoal;
  EXPECT_THROW(bad.instruction.validate(), ParameterError);
}

TEST(GoalScenario, DeterministicWithUniqueVisibleGoal) {
  const GoalScenario a = make_goal_scenario(3);
  const GoalScenario b = make_goal_scenario(3);
  EXPECT_EQ(*a.scene, *b.scene);
  EXPECT_EQ(a.goal, b.goal);
  EXPECT_TRUE(is_visible(*a.scene, a.start, a.goal).visible);
  const Rgb c = a.scene->find(a.goal).color;
  int same = 0;
  for (const Primitive& p : a.scene->objects) same += p.color == c;
  EXPECT_EQ(same, 1);
}

TEST(Orbit, WaypointsStayOnCircle) {
  const AgentPose start{{3, 1, 0}, 0.7};
  const double cx = 5, cy = 2, rho = std::hypot(2, 1);
  for (double sweep : {kPi, -kHalfPi}) {
    const auto acts = orbit_actions(start, cx, cy, 6, sweep);
    ASSERT_EQ(acts.size(), 6u);
    AgentPose p = start;
    for (const Action& a : acts) {
      p = apply_action(p, a);
      EXPECT_NEAR(std::hypot(p.position.x - cx, p.position.y - cy), rho, 1e-9);
    }
    const double psi = std::atan2(1 - cy, 3 - cx);
    EXPECT_NEAR(std::remainder(std::atan2(p.position.y - cy, p.position.x - cx) - psi - sweep, kTwoPi), 0, 1e-9);
  }
  EXPECT_THROW(orbit_actions(start, 3, 1, 6, kPi), ParameterError);
  EXPECT_THROW(orbit_actions(start, cx, cy, 0, kPi), ParameterError);
}

TEST(InstructionJson, RoundTrip) {
  Instruction ins{ExploreMode::kGoal, std::string("obj_3"), "go to the red box", 12};
  const Instruction back = instruction_from_json(to_json(ins));
  EXPECT_EQ(back.mode, ExploreMode::kGoal);
  EXPECT_EQ(back.goal_object, ins.goal_object);
  EXPECT_EQ(back.text, ins.text);
  EXPECT_EQ(back.budget, 12);
  EXPECT_THROW(instruction_from_json({{"mode", "wander"}}), ParameterError);
  EXPECT_THROW(instruction_from_json({{"mode", "free"}, {"budget", 0}}), ParameterError);
  EXPECT_EQ(explore_mode_from_string(to_string(ExploreMode::kFree)), ExploreMode::kFree);
}

}  // namespace
}  // namespace panoworld
