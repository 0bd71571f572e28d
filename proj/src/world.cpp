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

#include "panoworld/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "panoworld/errors.hpp"
#include "panoworld/random.hpp"
#include "panoworld/raster_io.hpp"
#include "parallel.hpp"

namespace panoworld {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHitEpsilon = 1e-9;

const Vec3 kLight = [] {
  const Vec3 l{0.4, 0.25, 0.88};
  const double n = std::sqrt(l.x * l.x + l.y * l.y + l.z * l.z);
  return Vec3{l.x / n, l.y / n, l.z / n};
}();

Rgb hsv(double hue_deg, double s, double v) {
  const double h = hue_deg / 60.0;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  Rgb rgb;
  switch (static_cast<int>(h) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return {rgb.r + m, rgb.g + m, rgb.b + m};
}

const std::array<PaletteColor, 11> kPalette = {{
    {"red", hsv(0, 0.85, 0.9)},
    {"orange", hsv(30, 0.85, 0.9)},
    {"yellow", hsv(60, 0.85, 0.9)},
    {"lime", hsv(90, 0.85, 0.9)},
    {"green", hsv(130, 0.85, 0.9)},
    {"cyan", hsv(175, 0.85, 0.9)},
    {"azure", hsv(210, 0.85, 0.9)},
    {"blue", hsv(240, 0.85, 0.9)},
    {"purple", hsv(275, 0.85, 0.9)},
    {"magenta", hsv(310, 0.85, 0.9)},
    {"pink", hsv(340, 0.85, 0.9)},
}};

double shade(const Vec3& normal) { return 0.6 + 0.4 * (0.5 + 0.5 * dot(normal, kLight)); }

struct Intersection {
  double t = kInf;
  Vec3 normal;
};

Intersection intersect_box(const Primitive& p, const Vec3& o, const Vec3& d) {
  const double lo[3] = {p.center.x - p.size.x, p.center.y - p.size.y, p.center.z - p.size.z};
  const double hi[3] = {p.center.x + p.size.x, p.center.y + p.size.y, p.center.z + p.size.z};
  const double org[3] = {o.x, o.y, o.z};
  const double dir[3] = {d.x, d.y, d.z};
  double t_near = -kInf;
  double t_far = kInf;
  int axis = -1;
  double sign = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (org[a] < lo[a] || org[a] > hi[a]) return {};
      continue;
    }
    double t0 = (lo[a] - org[a]) / dir[a];
    double t1 = (hi[a] - org[a]) / dir[a];
    double s = -1.0;  // entering through the low face
    if (t0 > t1) {
      std::swap(t0, t1);
      s = 1.0;
    }
    if (t0 > t_near) {
      t_near = t0;
      axis = a;
      sign = s;
    }
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return {};
  }
  if (axis < 0 || t_near <= kHitEpsilon) return {};
  Vec3 n;
  (axis == 0 ? n.x : axis == 1 ? n.y : n.z) = sign;
  return {t_near, n};
}

Intersection intersect_sphere(const Primitive& p, const Vec3& o, const Vec3& d) {
  const Vec3 oc = o - p.center;
  const double r = p.size.x;
  const double b = dot(oc, d);
  const double c = dot(oc, oc) - r * r;
  const double disc = b * b - c;
  if (disc < 0.0) return {};
  const double t = -b - std::sqrt(disc);
  if (t <= kHitEpsilon) return {};
  const Vec3 hit = o + d * t;
  return {t, (hit - p.center) * (1.0 / r)};
}

Intersection intersect_cylinder(const Primitive& p, const Vec3& o, const Vec3& d) {
  const double r = p.size.x;
  const double z0 = p.bottom();
  const double z1 = p.top();
  Intersection best;
  // Side wall.
  const double ox = o.x - p.center.x;
  const double oy = o.y - p.center.y;
  const double a = d.x * d.x + d.y * d.y;
  if (a > 0.0) {
    const double b = ox * d.x + oy * d.y;
    const double c = ox * ox + oy * oy - r * r;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / a;
      const double z = o.z + t * d.z;
      if (t > kHitEpsilon && z >= z0 && z <= z1) {
        best = {t, {(ox + t * d.x) / r, (oy + t * d.y) / r, 0.0}};
      }
    }
  }
  // Caps.
  if (d.z != 0.0) {
    for (const double zc : {z0, z1}) {
      const double t = (zc - o.z) / d.z;
      if (t <= kHitEpsilon || t >= best.t) continue;
      const double x = ox + t * d.x;
      const double y = oy + t * d.y;
      if (x * x + y * y <= r * r) best = {t, {0.0, 0.0, zc == z1 ? 1.0 : -1.0}};
    }
  }
  return best;
}

Intersection intersect(const Primitive& p, const Vec3& o, const Vec3& d) {
  switch (p.shape) {
    case Shape::kBox: return intersect_box(p, o, d);
    case Shape::kSphere: return intersect_sphere(p, o, d);
    case Shape::kCylinder: return intersect_cylinder(p, o, d);
  }
  return {};
}

// Ray caster for a fixed origin. Each object is wrapped in a cone of
// directions from the origin so most rays skip the exact intersection.
class EyeCaster {
 public:
  EyeCaster(const SceneSpec& scene, const Vec3& origin) : scene_(scene), origin_(origin) {
    cones_.reserve(scene.objects.size());
    for (const Primitive& p : scene.objects) {
      const Vec3 rel = p.center - origin;
      const double dist = norm(rel);
      const double radius = norm(p.size) * 1.0001 + 1e-9;
      Cone c;
      if (dist > radius) {
        c.axis = rel * (1.0 / dist);
        const double sin_a = radius / dist;
        c.cos_half = std::sqrt(std::max(0.0, 1.0 - sin_a * sin_a)) - 1e-12;
      } else {
        c.cos_half = -2.0;  // origin inside the bound: always test
      }
      cones_.push_back(c);
    }
  }

  Hit cast(const Vec3& dir, double spread) const;

 private:
  struct Cone {
    Vec3 axis;
    double cos_half = -2.0;
  };
  const SceneSpec& scene_;
  Vec3 origin_;
  std::vector<Cone> cones_;
};

Rgb sky_color(const SkySpec& sky, double dz) {
  const double t = std::clamp(dz, 0.0, 1.0);
  return sky.horizon * (1.0 - t) + sky.zenith * t;
}

Rgb ground_color(const GroundSpec& g, double x, double y, double footprint) {
  const long long cx = static_cast<long long>(std::floor(x / g.cell));
  const long long cy = static_cast<long long>(std::floor(y / g.cell));
  const Rgb base = ((cx + cy) & 1LL) == 0 ? g.color_a : g.color_b;
  if (footprint <= 0.0) return base;
  const double rel = footprint / g.cell;
  const double w = std::clamp((rel - g.fade_start) / (g.fade_end - g.fade_start), 0.0, 1.0);
  return base * (1.0 - w) + g.mean() * w;
}

// Averages shade(x0 + (a + 0.5)/k, y0 + (b + 0.5)/k) over a k x k grid.
template <typename Fn>
Rgb supersampled(int k, double x0, double y0, Fn&& shade_at) {
  if (k <= 1) return shade_at(x0 + 0.5, y0 + 0.5);
  Rgb sum;
  for (int b = 0; b < k; ++b) {
    for (int a = 0; a < k; ++a) sum = sum + shade_at(x0 + (a + 0.5) / k, y0 + (b + 0.5) / k);
  }
  return sum * (1.0 / (k * k));
}

void check_supersample(int k) {
  if (k < 1 || k > 16) throw ParameterError("supersample must lie in [1, 16]");
}

nlohmann::json rgb_json(const Rgb& c) { return nlohmann::json::array({c.r, c.g, c.b}); }

Rgb rgb_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw SpecError("color must be [r, g, b]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

bool color_ok(const Rgb& c) {
  auto in = [](double v) { return v >= 0.0 && v <= 1.0; };
  return in(c.r) && in(c.g) && in(c.b);
}

double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

// Liang-Barsky test of segment a-b against an axis-aligned rectangle.
bool segment_hits_rect(double ax, double ay, double bx, double by, double x0, double y0,
                       double x1, double y1) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = bx - ax;
  const double dy = by - ay;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {ax - x0, x1 - ax, ay - y0, y1 - ay};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
  }
  return true;
}

double segment_footprint_distance(const Primitive& p, double ax, double ay, double bx, double by) {
  if (p.shape == Shape::kBox) {
    const double x0 = p.center.x - p.size.x;
    const double x1 = p.center.x + p.size.x;
    const double y0 = p.center.y - p.size.y;
    const double y1 = p.center.y + p.size.y;
    if (segment_hits_rect(ax, ay, bx, by, x0, y0, x1, y1)) return 0.0;
    double best = std::min(footprint_distance(p, ax, ay), footprint_distance(p, bx, by));
    for (const double cx : {x0, x1}) {
      for (const double cy : {y0, y1}) {
        best = std::min(best, point_segment_distance(cx, cy, ax, ay, bx, by));
      }
    }
    return best;
  }
  const double r = p.size.x;
  return std::max(0.0, point_segment_distance(p.center.x, p.center.y, ax, ay, bx, by) - r);
}

// Horizontal gap between two footprints (0 when they touch or overlap).
double footprint_gap(const Primitive& a, const Primitive& b) {
  if (a.shape == Shape::kBox && b.shape == Shape::kBox) {
    const double dx = std::max(0.0, std::abs(a.center.x - b.center.x) - a.size.x - b.size.x);
    const double dy = std::max(0.0, std::abs(a.center.y - b.center.y) - a.size.y - b.size.y);
    return std::hypot(dx, dy);
  }
  if (a.shape == Shape::kBox) return footprint_gap(b, a);
  return std::max(0.0, footprint_distance(b, a.center.x, a.center.y) - a.size.x);
}

bool overlaps(const Primitive& a, const Primitive& b) {
  const bool z_overlap = a.bottom() < b.top() && b.bottom() < a.top();
  if (!z_overlap) return false;
  if (a.shape == Shape::kBox && b.shape == Shape::kBox) {
    return std::abs(a.center.x - b.center.x) < a.size.x + b.size.x &&
           std::abs(a.center.y - b.center.y) < a.size.y + b.size.y;
  }
  if (a.shape == Shape::kBox) return overlaps(b, a);
  return footprint_distance(b, a.center.x, a.center.y) < a.size.x;
}

Primitive random_primitive(Rng& rng, int index, double extent) {
  Primitive p;
  char id[16];
  std::snprintf(id, sizeof(id), "obj_%02d", index);
  p.id = id;
  p.shape = static_cast<Shape>(rng.integer(0, 2));
  switch (p.shape) {
    case Shape::kBox:
      p.size = {rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5)};
      break;
    case Shape::kSphere: {
      const double r = rng.uniform(0.3, 1.2);
      p.size = {r, r, r};
      break;
    }
    case Shape::kCylinder: {
      const double r = rng.uniform(0.3, 1.0);
      p.size = {r, r, rng.uniform(0.4, 1.5)};
      break;
    }
  }
  const double margin = p.footprint_radius();
  const double half = 0.5 * extent - margin;
  p.center = {rng.uniform(-half, half), rng.uniform(-half, half), p.size.z};
  const PaletteColor& c = kPalette[static_cast<std::size_t>(rng.integer(0, kPalette.size() - 1))];
  p.color = c.rgb;
  p.tags = {std::string(to_string(p.shape)), std::string(c.name)};
  return p;
}

std::string step_dir_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "step_%04d", i);
  return buf;
}

nlohmann::json action_json(const Action& a) { return {{"alpha", a.alpha}, {"d", a.d}}; }

}  // namespace

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::kBox: return "box";
    case Shape::kSphere: return "sphere";
    case Shape::kCylinder: return "cylinder";
  }
  return "box";
}

Shape shape_from_string(std::string_view name) {
  if (name == "box") return Shape::kBox;
  if (name == "sphere") return Shape::kSphere;
  if (name == "cylinder") return Shape::kCylinder;
  throw SpecError("unknown shape '" + std::string(name) + "'");
}

double Primitive::footprint_radius() const {
  return shape == Shape::kBox ? std::hypot(size.x, size.y) : size.x;
}

bool Primitive::has_tag(std::string_view tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

void SceneSpec::validate() const {
  if (!(extent > 0.0)) throw SpecError("extent must be positive");
  if (!color_ok(sky.zenith) || !color_ok(sky.horizon) || !color_ok(ground.color_a) ||
      !color_ok(ground.color_b)) {
    throw SpecError("sky and ground colors must lie in [0, 1]");
  }
  if (!(ground.cell > 0.0)) throw SpecError("ground cell must be positive");
  std::set<std::string> ids;
  const double half = 0.5 * extent;
  for (const Primitive& p : objects) {
    if (!ids.insert(p.id).second) throw SpecError("duplicate object id '" + p.id + "'");
    if (!(p.size.x > 0.0 && p.size.y > 0.0 && p.size.z > 0.0)) {
      throw SpecError("object '" + p.id + "' must have positive size");
    }
    if (!color_ok(p.color)) throw SpecError("object '" + p.id + "' color outside [0, 1]");
    if (p.bottom() < -1e-9) throw SpecError("object '" + p.id + "' extends below the ground");
    const double m = p.shape == Shape::kBox ? 0.0 : p.size.x;
    const double ex = p.shape == Shape::kBox ? p.size.x : m;
    const double ey = p.shape == Shape::kBox ? p.size.y : m;
    if (std::abs(p.center.x) + ex > half + 1e-9 || std::abs(p.center.y) + ey > half + 1e-9) {
      throw SpecError("object '" + p.id + "' lies outside the scene extent");
    }
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (overlaps(objects[i], objects[j])) {
        throw SpecError("objects '" + objects[i].id + "' and '" + objects[j].id + "' overlap");
      }
    }
  }
}

const Primitive& SceneSpec::find(std::string_view id) const {
  const auto idx = index_of(id);
  if (!idx) throw LookupError("unknown object id '" + std::string(id) + "'");
  return objects[*idx];
}

std::optional<std::size_t> SceneSpec::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].id == id) return i;
  }
  return std::nullopt;
}

double SceneSpec::max_object_top() const {
  double top = 0.0;
  for (const Primitive& p : objects) top = std::max(top, p.top());
  return top;
}

Action Action::normalized(double alpha, double d) {
  if (!std::isfinite(alpha)) throw ParameterError("action alpha must be finite");
  if (!std::isfinite(d) || d < 0.0) throw ParameterError("action distance must be finite and >= 0");
  return {wrap_longitude(alpha), d};
}

AgentPose apply_action(const AgentPose& pose, const Action& a) {
  AgentPose out = pose;
  out.heading = wrap_longitude(pose.heading + a.alpha);
  out.position.x += a.d * std::cos(out.heading);
  out.position.y += a.d * std::sin(out.heading);
  return out;
}

Vec3 world_direction(const Dir3& d, double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * d.x - s * d.y, s * d.x + c * d.y, d.z};
}

SceneSpec scene_from_seed(std::uint64_t seed, const GeneratorLimits& limits) {
  if (limits.min_objects < 0 || limits.max_objects < limits.min_objects) {
    throw ParameterError("invalid object count limits");
  }
  SceneSpec scene;
  scene.seed = seed;
  Rng rng(seed);
  const int count = rng.integer(limits.min_objects, limits.max_objects);
  constexpr int kMaxAttempts = 20000;
  for (int attempt = 0; attempt < kMaxAttempts && static_cast<int>(scene.objects.size()) < count;
       ++attempt) {
    Primitive p = random_primitive(rng, static_cast<int>(scene.objects.size()), scene.extent);
    if (footprint_distance(p, 0.0, 0.0) < limits.clear_radius) continue;
    bool ok = true;
    for (const Primitive& q : scene.objects) {
      if (footprint_gap(p, q) < limits.gap) {
        ok = false;
        break;
      }
    }
    if (ok) scene.objects.push_back(std::move(p));
  }
  if (static_cast<int>(scene.objects.size()) < count) {
    throw SpecError("could not place " + std::to_string(count) + " objects");
  }
  scene.validate();
  return scene;
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw SpecError("scene must be a JSON object");
    if (!j.contains("objects")) {
      return scene_from_seed(j.value("seed", std::uint64_t{0}));
    }
    SceneSpec scene;
    scene.seed = j.value("seed", std::uint64_t{0});
    scene.extent = j.value("extent", scene.extent);
    if (j.contains("sky")) {
      const auto& s = j.at("sky");
      if (s.contains("zenith")) scene.sky.zenith = rgb_from_json(s.at("zenith"));
      if (s.contains("horizon")) scene.sky.horizon = rgb_from_json(s.at("horizon"));
    }
    if (j.contains("ground")) {
      const auto& g = j.at("ground");
      if (g.contains("color_a")) scene.ground.color_a = rgb_from_json(g.at("color_a"));
      if (g.contains("color_b")) scene.ground.color_b = rgb_from_json(g.at("color_b"));
      scene.ground.cell = g.value("cell", scene.ground.cell);
      scene.ground.fade_start = g.value("fade_start", scene.ground.fade_start);
      scene.ground.fade_end = g.value("fade_end", scene.ground.fade_end);
    }
    for (const auto& o : j.at("objects")) {
      Primitive p;
      p.id = o.at("id").get<std::string>();
      p.shape = shape_from_string(o.at("shape").get<std::string>());
      const auto& c = o.at("center");
      p.center = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
      std::vector<double> size = o.at("size").get<std::vector<double>>();
      if (p.shape == Shape::kSphere && size.size() == 1) size = {size[0], size[0], size[0]};
      if (p.shape == Shape::kCylinder && size.size() == 2) size = {size[0], size[0], size[1]};
      if (size.size() != 3) throw SpecError("object '" + p.id + "' has a malformed size");
      p.size = {size[0], size[1], size[2]};
      if (p.shape == Shape::kSphere && !(size[0] == size[1] && size[1] == size[2])) {
        throw SpecError("sphere '" + p.id + "' needs equal size components");
      }
      if (p.shape == Shape::kCylinder && size[0] != size[1]) {
        throw SpecError("cylinder '" + p.id + "' needs equal radial components");
      }
      p.color = rgb_from_json(o.at("color"));
      p.tags = o.value("tags", std::vector<std::string>{});
      scene.objects.push_back(std::move(p));
    }
    scene.validate();
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed scene JSON: ") + e.what());
  }
}

nlohmann::json to_json(const SceneSpec& scene) {
  nlohmann::json j;
  j["seed"] = scene.seed;
  j["extent"] = scene.extent;
  j["sky"] = {{"zenith", rgb_json(scene.sky.zenith)}, {"horizon", rgb_json(scene.sky.horizon)}};
  j["ground"] = {{"color_a", rgb_json(scene.ground.color_a)},
                 {"color_b", rgb_json(scene.ground.color_b)},
                 {"cell", scene.ground.cell},
                 {"fade_start", scene.ground.fade_start},
                 {"fade_end", scene.ground.fade_end}};
  j["objects"] = nlohmann::json::array();
  for (const Primitive& p : scene.objects) {
    j["objects"].push_back({{"id", p.id},
                            {"shape", to_string(p.shape)},
                            {"center", {p.center.x, p.center.y, p.center.z}},
                            {"size", {p.size.x, p.size.y, p.size.z}},
                            {"color", rgb_json(p.color)},
                            {"tags", p.tags}});
  }
  return j;
}

nlohmann::json to_json(const AgentPose& pose) {
  return {{"x", pose.position.x}, {"y", pose.position.y}, {"z", pose.position.z},
          {"heading", pose.heading}};
}

AgentPose pose_from_json(const nlohmann::json& j) {
  try {
    AgentPose p;
    p.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)};
    p.heading = j.value("heading", 0.0);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed pose JSON: ") + e.what());
  }
}

std::span<const PaletteColor> palette() { return kPalette; }

const PaletteColor& palette_color(std::string_view name) {
  for (const PaletteColor& c : kPalette) {
    if (c.name == name) return c;
  }
  throw LookupError("unknown palette color '" + std::string(name) + "'");
}

namespace {

template <typename Filter>
Hit cast_filtered(const SceneSpec& scene, const Vec3& origin, const Vec3& dir, double spread,
                  Filter&& candidate) {
  Hit hit;
  hit.distance = kInf;
  Intersection best;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (!candidate(i)) continue;
    const Intersection is = intersect(scene.objects[i], origin, dir);
    if (is.t < best.t) {
      best = is;
      hit.object = i;
    }
  }
  double t_ground = kInf;
  if (dir.z < 0.0 && origin.z > 0.0) t_ground = -origin.z / dir.z;
  if (t_ground < best.t) {
    hit.object.reset();
    hit.ground = true;
    hit.distance = t_ground;
    const double footprint = t_ground * spread / std::max(-dir.z, 1e-9);
    hit.color = ground_color(scene.ground, origin.x + t_ground * dir.x,
                             origin.y + t_ground * dir.y, footprint);
    return hit;
  }
  if (hit.object) {
    hit.distance = best.t;
    hit.color = scene.objects[*hit.object].color * shade(best.normal);
    return hit;
  }
  hit.color = sky_color(scene.sky, dir.z);
  return hit;
}

Hit EyeCaster::cast(const Vec3& dir, double spread) const {
  return cast_filtered(scene_, origin_, dir, spread,
                       [&](std::size_t i) { return dot(dir, cones_[i].axis) >= cones_[i].cos_half; });
}

}  // namespace

Hit ray_cast(const SceneSpec& scene, const Vec3& origin, const Vec3& dir, double spread) {
  return cast_filtered(scene, origin, dir, spread, [](std::size_t) { return true; });
}

PanoramaImage render_panorama(const SceneSpec& scene, const AgentPose& pose, Dims dims,
                              const RenderOptions& options) {
  check_supersample(options.supersample);
  PanoramaImage out(dims);
  const Vec3 eye = pose.position + Vec3{0.0, 0.0, options.eye_height};
  const int k = options.supersample;
  const double spread = kTwoPi / dims.width / k;
  const EyeCaster caster(scene, eye);
  parallel_rows(dims.height, [&](int y) {
    for (int x = 0; x < dims.width; ++x) {
      const Rgb c = supersampled(k, x, y, [&](double u, double v) {
        const SphericalCoord s = pixel_to_sphere({u, v}, dims);
        const Vec3 d = world_direction(sphere_to_dir3(s), pose.heading);
        return caster.cast(d, spread).color;
      });
      out.raster().set_pixel(x, y, c);
    }
  });
  return out;
}

PerspectiveImage render_perspective(const SceneSpec& scene, const AgentPose& pose, double yaw,
                                    double pitch, double hfov, int width, int height,
                                    const RenderOptions& options) {
  if (!(hfov > 0.0 && hfov < kPi)) throw ParameterError("hfov must lie in (0, pi)");
  if (width < 1 || height < 1) throw DimensionError("perspective size must be positive");
  check_supersample(options.supersample);
  PerspectiveImage out{Image(width, height), hfov, yaw, pitch};
  const Vec3 eye = pose.position + Vec3{0.0, 0.0, options.eye_height};
  const int k = options.supersample;
  const double spread = 2.0 * std::tan(0.5 * hfov) / width / k;
  const EyeCaster caster(scene, eye);
  parallel_rows(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      const Rgb c = supersampled(k, x, y, [&](double u, double v) {
        const Dir3 d = perspective_ray(u, v, width, height, hfov, yaw, pitch);
        return caster.cast(world_direction(d, pose.heading), spread).color;
      });
      out.raster.set_pixel(x, y, c);
    }
  });
  return out;
}

std::vector<Vec3> visibility_samples(const Primitive& p) {
  std::vector<Vec3> out;
  out.reserve(10);
  out.push_back(p.center);
  // Keep the jittered points inside the solid for every shape.
  double fx = 0.8;
  double fz = 0.8;
  if (p.shape == Shape::kSphere) {
    fx = 0.45;
    fz = 0.45;
  } else if (p.shape == Shape::kCylinder) {
    fx = 0.55;
  }
  for (const double sx : {-1.0, 1.0}) {
    for (const double sy : {-1.0, 1.0}) {
      for (const double sz : {-1.0, 1.0}) {
        out.push_back(p.center + Vec3{sx * fx * p.size.x, sy * fx * p.size.y, sz * fz * p.size.z});
      }
    }
  }
  out.push_back(p.center + Vec3{0.0, 0.0, 0.95 * p.size.z});
  return out;
}

Visibility is_visible(const SceneSpec& scene, const AgentPose& pose, std::string_view object_id,
                      double eye_height) {
  const auto idx = scene.index_of(object_id);
  if (!idx) throw LookupError("unknown object id '" + std::string(object_id) + "'");
  const Vec3 eye = pose.position + Vec3{0.0, 0.0, eye_height};
  for (const Vec3& target : visibility_samples(scene.objects[*idx])) {
    const Vec3 delta = target - eye;
    const double n = norm(delta);
    if (n == 0.0) continue;
    const Vec3 d = delta * (1.0 / n);
    const Hit hit = ray_cast(scene, eye, d);
    if (hit.object == idx) {
      return {true, wrap_longitude(std::atan2(d.y, d.x) - pose.heading)};
    }
  }
  return {};
}

double footprint_distance(const Primitive& p, double x, double y) {
  if (p.shape == Shape::kBox) {
    const double dx = std::max(0.0, std::abs(x - p.center.x) - p.size.x);
    const double dy = std::max(0.0, std::abs(y - p.center.y) - p.size.y);
    return std::hypot(dx, dy);
  }
  return std::max(0.0, std::hypot(x - p.center.x, y - p.center.y) - p.size.x);
}

double path_clearance(const SceneSpec& scene, const AgentPose& pose, const Action& action) {
  const AgentPose end = apply_action(pose, action);
  double best = kInf;
  for (const Primitive& p : scene.objects) {
    best = std::min(best, segment_footprint_distance(p, pose.position.x, pose.position.y,
                                                     end.position.x, end.position.y));
  }
  return best;
}

bool path_blocked(const SceneSpec& scene, const AgentPose& pose, const Action& action,
                  double radius) {
  if (!(action.d > 0.0)) return false;
  return path_clearance(scene, pose, action) < radius;
}

PerspectiveImage render_bev(const SceneSpec& scene, const AgentPose& pose, double height, int size,
                            const BevOptions& options) {
  if (!(height > 0.0)) throw ParameterError("BEV height must be positive");
  if (size < 1) throw DimensionError("BEV size must be positive");
  check_supersample(options.supersample);
  const Vec3 cam = pose.position + Vec3{0.0, 0.0, height};
  if (cam.z <= scene.max_object_top()) {
    throw ParameterError("BEV camera must sit above the tallest object");
  }
  PerspectiveImage out{Image(size, size), kHalfPi, 0.0, -kHalfPi};
  const int k = options.supersample;
  const double spread = 2.0 / size / k;
  const FaceAxes& axes = face_axes(CubeFace::kDown);
  const EyeCaster caster(scene, cam);
  parallel_rows(size, [&](int y) {
    for (int x = 0; x < size; ++x) {
      const Rgb c = supersampled(k, x, y, [&](double u, double v) {
        if (options.orthographic) {
          const double a = (2.0 * u / size - 1.0) * cam.z;
          const double b = (2.0 * v / size - 1.0) * cam.z;
          const Dir3 off{a * axes.right.x + b * axes.down.x, a * axes.right.y + b * axes.down.y, 0.0};
          const Vec3 o = cam + world_direction(off, pose.heading);
          return ray_cast(scene, o, {0.0, 0.0, -1.0}, spread * cam.z / o.z).color;
        }
        const Dir3 d = face_pixel_to_dir3(CubeFace::kDown, u, v, size);
        return caster.cast(world_direction(d, pose.heading), spread).color;
      });
      out.raster.set_pixel(x, y, c);
    }
  });
  return out;
}

std::optional<PixelCoord> project_bev(const AgentPose& pose, double height, int size,
                                      const Vec3& point) {
  const Vec3 cam = pose.position + Vec3{0.0, 0.0, height};
  const Vec3 rel = point - cam;
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  const Vec3 local{c * rel.x + s * rel.y, -s * rel.x + c * rel.y, rel.z};
  const FaceAxes& axes = face_axes(CubeFace::kDown);
  const double depth = local.x * axes.normal.x + local.y * axes.normal.y + local.z * axes.normal.z;
  if (depth <= 0.0) return std::nullopt;
  const double a = (local.x * axes.right.x + local.y * axes.right.y + local.z * axes.right.z) / depth;
  const double b = (local.x * axes.down.x + local.y * axes.down.y + local.z * axes.down.z) / depth;
  return PixelCoord{0.5 * (a + 1.0) * size, 0.5 * (b + 1.0) * size};
}

DatasetManifest capture_trajectory_dataset(const SceneSpec& scene,
                                           std::span<const AgentPose> trajectory,
                                           const std::filesystem::path& out_dir,
                                           const DatasetOptions& options) {
  validate_panorama_dims(options.dims);
  if (options.face_size < CubeMapImage::kMinFaceSize) {
    throw DimensionError("cube face size must be at least 4");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.seed = scene.seed;
  m.dims = options.dims;
  m.face_size = options.face_size;

  // Derive the action between consecutive poses and stop at the first
  // inconsistent or blocked transition.
  std::vector<AgentPose> poses;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    AgentPose p = trajectory[i];
    p.heading = wrap_longitude(p.heading);
    if (i > 0) {
      const AgentPose& prev = poses.back();
      const Action a{wrap_longitude(p.heading - prev.heading),
                     std::hypot(p.position.x - prev.position.x, p.position.y - prev.position.y)};
      const AgentPose predicted = apply_action(prev, a);
      if (std::hypot(predicted.position.x - p.position.x, predicted.position.y - p.position.y) > 1e-6 ||
          p.position.z != prev.position.z) {
        throw ParameterError("trajectory step " + std::to_string(i) +
                             " does not move along its own heading");
      }
      if (path_blocked(scene, prev, a)) {
        m.blocked_at = static_cast<int>(i);
        break;
      }
      m.actions.push_back(a);
    }
    poses.push_back(p);
  }
  m.poses = poses;

  nlohmann::json j;
  j["v"] = 1;
  j["seed"] = scene.seed;
  j["dims"] = {options.dims.width, options.dims.height};
  j["face_size"] = options.face_size;
  j["eye_height"] = options.render.eye_height;
  j["scene"] = to_json(scene);
  j["steps"] = nlohmann::json::array();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string dir = step_dir_name(static_cast<int>(i));
    std::filesystem::create_directories(out_dir / dir, ec);
    if (ec) throw IoError("cannot create " + (out_dir / dir).string());
    save_raster(render_panorama(scene, poses[i], options.dims, options.render).raster(),
                out_dir / dir / "pano.png");
    nlohmann::json faces;
    const Vec3 eye = poses[i].position + Vec3{0.0, 0.0, options.render.eye_height};
    const int fs = options.face_size;
    for (CubeFace f : kAllFaces) {
      Image face(fs, fs);
      const double spread = 2.0 / fs;
      const EyeCaster caster(scene, eye);
      parallel_rows(fs, [&](int y) {
        for (int x = 0; x < fs; ++x) {
          const Dir3 d = face_pixel_to_dir3(f, x + 0.5, y + 0.5, fs);
          face.set_pixel(x, y, caster.cast(world_direction(d, poses[i].heading), spread).color);
        }
      });
      const std::string name = "cube_" + std::string(to_string(f)) + ".png";
      save_raster(face, out_dir / dir / name);
      faces[std::string(to_string(f))] = dir + "/" + name;
    }
    j["steps"].push_back({{"index", i}, {"pose", to_json(poses[i])}, {"pano", dir + "/pano.png"},
                          {"faces", faces}});
  }
  j["actions"] = nlohmann::json::array();
  for (const Action& a : m.actions) j["actions"].push_back(action_json(a));
  j["blocked_at"] = m.blocked_at ? nlohmann::json(*m.blocked_at) : nlohmann::json(nullptr);
  j["counts"] = {{"steps", poses.size()}, {"actions", m.actions.size()}};

  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (out_dir / "manifest.json").string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("short write to manifest.json");
  m.json = std::move(j);
  return m;
}

DatasetManifest load_dataset_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  DatasetManifest m;
  try {
    m.json = nlohmann::json::parse(in);
    const auto& j = m.json;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dims = {j.at("dims").at(0).get<int>(), j.at("dims").at(1).get<int>()};
    m.face_size = j.at("face_size").get<int>();
    for (const auto& s : j.at("steps")) m.poses.push_back(pose_from_json(s.at("pose")));
    for (const auto& a : j.at("actions")) {
      m.actions.push_back({a.at("alpha").get<double>(), a.at("d").get<double>()});
    }
    if (!j.at("blocked_at").is_null()) m.blocked_at = j.at("blocked_at").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("malformed dataset manifest: " + std::string(e.what()));
  }
  return m;
}

std::vector<std::string> validate_dataset(const std::filesystem::path& dir) {
  std::vector<std::string> problems;
  nlohmann::json j;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) return {"manifest.json missing"};
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      return {std::string("manifest.json is not JSON: ") + e.what()};
    }
  }
  auto require = [&](const char* key, auto pred, const char* what) {
    if (!j.contains(key) || !pred(j[key])) {
      problems.push_back(std::string("field '") + key + "' must be " + what);
      return false;
    }
    return true;
  };
  require("v", [](const auto& v) { return v.is_number_integer() && v == 1; }, "1");
  require("seed", [](const auto& v) { return v.is_number_unsigned() || v.is_number_integer(); }, "an integer");
  const bool dims_ok = require("dims", [](const auto& v) {
    return v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer() &&
           v[0].template get<int>() == 2 * v[1].template get<int>() && v[1].template get<int>() >= 1;
  }, "[2H, H]");
  const bool face_ok = require("face_size", [](const auto& v) {
    return v.is_number_integer() && v.template get<int>() >= CubeMapImage::kMinFaceSize;
  }, "an integer >= 4");
  const bool steps_ok = require("steps", [](const auto& v) { return v.is_array(); }, "an array");
  const bool actions_ok = require("actions", [](const auto& v) { return v.is_array(); }, "an array");
  require("blocked_at", [](const auto& v) { return v.is_null() || v.is_number_integer(); }, "null or an integer");
  if (!steps_ok || !actions_ok) return problems;

  const auto& steps = j["steps"];
  const auto& actions = j["actions"];
  if (!steps.empty() && actions.size() + 1 != steps.size()) {
    problems.push_back("expected one action fewer than steps");
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = actions[i];
    if (!a.is_object() || !a.contains("alpha") || !a.contains("d") || !a["alpha"].is_number() ||
        !a["d"].is_number() || a["d"].get<double>() < 0.0) {
      problems.push_back("action " + std::to_string(i) + " is malformed");
    }
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const std::string tag = "step " + std::to_string(i);
    if (!s.is_object() || s.value("index", -1) != static_cast<int>(i)) {
      problems.push_back(tag + " has a wrong index");
      continue;
    }
    if (!s.contains("pose") || !s["pose"].is_object() || !s["pose"].contains("x") ||
        !s["pose"].contains("y") || !s["pose"].contains("heading")) {
      problems.push_back(tag + " has a malformed pose");
    } else {
      const double h = s["pose"]["heading"].get<double>();
      if (!(h >= -kPi && h < kPi)) problems.push_back(tag + " heading outside [-pi, pi)");
    }
    auto check_image = [&](const nlohmann::json& name, int w, int h, const std::string& what) {
      if (!name.is_string()) {
        problems.push_back(tag + " " + what + " path missing");
        return;
      }
      try {
        const Image img = load_raster(dir / name.get<std::string>());
        if (img.width() != w || img.height() != h) {
          problems.push_back(tag + " " + what + " has the wrong size");
        }
      } catch (const Error& e) {
        problems.push_back(tag + " " + what + ": " + e.what());
      }
    };
    if (dims_ok) {
      check_image(s.value("pano", nlohmann::json()), j["dims"][0].get<int>(), j["dims"][1].get<int>(),
                  "pano");
    }
    if (!s.contains("faces") || !s["faces"].is_object()) {
      problems.push_back(tag + " faces missing");
    } else if (face_ok) {
      const int fs = j["face_size"].get<int>();
      for (CubeFace f : kAllFaces) {
        const std::string key(to_string(f));
        check_image(s["faces"].value(key, nlohmann::json()), fs, fs, "face " + key);
      }
    }
  }
  return problems;
}

}  // namespace panoworld
