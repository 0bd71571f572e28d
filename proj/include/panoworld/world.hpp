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

// Deterministic procedural world made of analytic primitives, and the ray
// caster that renders it into panoramas.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panoworld/geometry.hpp"
#include "panoworld/image.hpp"

namespace panoworld {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);

enum class Shape { kBox, kSphere, kCylinder };

std::string_view to_string(Shape shape);
Shape shape_from_string(std::string_view name);

// `size` holds half extents for boxes, (r, r, r) for spheres and
// (r, r, half_height) for vertical cylinders.
struct Primitive {
  std::string id;
  Shape shape = Shape::kBox;
  Vec3 center;
  Vec3 size;
  Rgb color;
  std::vector<std::string> tags;

  double bottom() const { return center.z - size.z; }
  double top() const { return center.z + size.z; }
  // Radius of the smallest vertical-axis disk covering the footprint.
  double footprint_radius() const;
  bool has_tag(std::string_view tag) const;

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

struct SkySpec {
  Rgb zenith{0.62, 0.75, 0.95};
  Rgb horizon{0.85, 0.90, 0.97};

  friend bool operator==(const SkySpec&, const SkySpec&) = default;
};

// Checkerboard on z = 0. When a ray's ground footprint grows past
// fade_start cells the pattern blends toward the mean color, reaching it at
// fade_end cells (a cheap stand-in for texture filtering).
struct GroundSpec {
  Rgb color_a{0.36, 0.36, 0.36};
  Rgb color_b{0.50, 0.50, 0.50};
  double cell = 1.0;
  double fade_start = 0.2;
  double fade_end = 0.5;

  Rgb mean() const { return (color_a + color_b) * 0.5; }
  friend bool operator==(const GroundSpec&, const GroundSpec&) = default;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  double extent = 40.0;  // side of the square ground area holding objects
  std::vector<Primitive> objects;
  SkySpec sky;
  GroundSpec ground;

  // Throws SpecError on overlaps, out-of-extent objects, duplicate ids,
  // non-positive sizes or colors outside [0, 1].
  void validate() const;
  const Primitive& find(std::string_view id) const;  // LookupError
  std::optional<std::size_t> index_of(std::string_view id) const;
  double max_object_top() const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

// Pose on the ground plane; the eye sits eye_height above position.z.
struct AgentPose {
  Vec3 position;
  double heading = 0.0;  // radians, normalized to [-pi, pi)

  friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

// Turn by alpha (counter-clockwise, radians), then travel d meters forward.
struct Action {
  double alpha = 0.0;
  double d = 0.0;

  // Throws ParameterError for non-finite alpha or negative/non-finite d.
  static Action normalized(double alpha, double d);
  friend bool operator==(const Action&, const Action&) = default;
};

inline constexpr double kEyeHeight = 1.6;
inline constexpr double kAgentRadius = 0.3;

// Pose after executing `a`: heading += alpha, then position += d * (cos h, sin h, 0).
AgentPose apply_action(const AgentPose& pose, const Action& a);

// Panorama direction (panorama frame) to world direction for a heading.
Vec3 world_direction(const Dir3& pano_dir, double heading);

// ---------------------------------------------------------------------------
// Scene construction and serialization

struct GeneratorLimits {
  int min_objects = 5;
  int max_objects = 30;
  double clear_radius = 2.5;  // free disk around the origin
  double gap = 0.5;           // minimum footprint separation
};

SceneSpec scene_from_seed(std::uint64_t seed, const GeneratorLimits& limits = {});
SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneSpec& scene);
nlohmann::json to_json(const AgentPose& pose);
AgentPose pose_from_json(const nlohmann::json& j);

// Named saturated palette used by the generator and the detectors.
struct PaletteColor {
  std::string_view name;
  Rgb rgb;
};
std::span<const PaletteColor> palette();
const PaletteColor& palette_color(std::string_view name);  // LookupError

// ---------------------------------------------------------------------------
// Rendering

struct Hit {
  Rgb color;
  double distance = 0.0;  // +inf for sky
  std::optional<std::size_t> object;  // index into SceneSpec::objects
  bool ground = false;
};

// `spread` is the angular size of the ray's pixel in radians; it only
// affects ground filtering. Zero gives the raw checkerboard.
Hit ray_cast(const SceneSpec& scene, const Vec3& origin, const Vec3& dir, double spread = 0.0);

struct RenderOptions {
  int supersample = 1;  // samples per axis per pixel
  double eye_height = kEyeHeight;
};

PanoramaImage render_panorama(const SceneSpec& scene, const AgentPose& pose, Dims dims,
                              const RenderOptions& options = {});

// Pinhole render straight from the scene (no panorama in between).
PerspectiveImage render_perspective(const SceneSpec& scene, const AgentPose& pose, double yaw,
                                    double pitch, double hfov, int width, int height,
                                    const RenderOptions& options = {});

struct Visibility {
  bool visible = false;
  double bearing = 0.0;  // panorama longitude of the first unoccluded ray
};

// Visible iff a ray from the eye to the object's center or to one of nine
// fixed surface samples reaches the object first.
Visibility is_visible(const SceneSpec& scene, const AgentPose& pose, std::string_view object_id,
                      double eye_height = kEyeHeight);

// Sample points used by is_visible (center first).
std::vector<Vec3> visibility_samples(const Primitive& p);

// Horizontal clearance between the travel segment of `action` and the
// nearest primitive footprint (+inf in an empty scene).
double path_clearance(const SceneSpec& scene, const AgentPose& pose, const Action& action);

bool path_blocked(const SceneSpec& scene, const AgentPose& pose, const Action& action,
                  double radius = kAgentRadius);

// Distance from a ground point to the footprint of `p` (0 inside).
double footprint_distance(const Primitive& p, double x, double y);

struct BevOptions {
  bool orthographic = false;
  int supersample = 1;
};

// Top-down view from `height` meters above the pose, image up = heading.
PerspectiveImage render_bev(const SceneSpec& scene, const AgentPose& pose, double height, int size,
                            const BevOptions& options = {});

// Pixel position (continuous, pixel centers at +0.5) of a world point in the
// perspective BEV image.
std::optional<PixelCoord> project_bev(const AgentPose& pose, double height, int size,
                                      const Vec3& point);

// ---------------------------------------------------------------------------
// Datasets

struct DatasetOptions {
  Dims dims{256, 128};
  int face_size = 64;
  RenderOptions render;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  Dims dims;
  int face_size = 0;
  std::vector<AgentPose> poses;
  std::vector<Action> actions;  // actions[i] moves pose i to pose i + 1
  std::optional<int> blocked_at;
  nlohmann::json json;
};

DatasetManifest capture_trajectory_dataset(const SceneSpec& scene,
                                           std::span<const AgentPose> trajectory,
                                           const std::filesystem::path& out_dir,
                                           const DatasetOptions& options = {});

DatasetManifest load_dataset_manifest(const std::filesystem::path& dir);

// Structural validation of manifest.json and the files it references.
// Returns human-readable problems; empty means valid.
std::vector<std::string> validate_dataset(const std::filesystem::path& dir);

}  // namespace panoworld
