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

#include "panoworld/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "panoworld/errors.hpp"

namespace panoworld {
namespace {

// Latitudes this close to a pole are snapped onto it.
constexpr double kPoleSnap = 1e-12;

double dot(const Dir3& a, const Dir3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Dir3 yaw_dir(const Dir3& d, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * d.x - s * d.y, s * d.x + c * d.y, d.z};
}

// Rotation about +y by -pitch: positive pitch lifts points in front (+x).
Dir3 pitch_dir(const Dir3& d, double pitch) {
  const double c = std::cos(pitch);
  const double s = std::sin(pitch);
  return {c * d.x - s * d.z, d.y, s * d.x + c * d.z};
}

}  // namespace

void validate_panorama_dims(Dims dims) {
  if (dims.height < 1 || dims.width != 2 * dims.height) {
    throw DimensionError("panorama dimensions must satisfy W = 2H > 0, got " +
                         std::to_string(dims.width) + "x" + std::to_string(dims.height));
  }
}

double wrap_longitude(double phi) {
  double w = std::fmod(phi + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= kPi;
  if (w >= kPi) w = -kPi;
  return w;
}

double wrap_latitude(double theta) {
  double w = std::fmod(theta + kHalfPi, kPi);
  if (w < 0.0) w += kPi;
  w -= kHalfPi;
  if (w >= kHalfPi) w = -kHalfPi;
  return w;
}

SphericalCoord SphericalCoord::normalized(double phi, double theta, double r) {
  if (!std::isfinite(phi) || !std::isfinite(theta)) {
    throw DegenerateInputError("non-finite spherical coordinate");
  }
  if (!(r > 0.0)) throw RangeError("radial distance must be positive");
  SphericalCoord c{wrap_longitude(phi), std::clamp(theta, -kHalfPi, kHalfPi), r};
  if (kHalfPi - std::abs(c.theta) <= kPoleSnap) {
    c.theta = std::copysign(kHalfPi, c.theta);
    c.phi = 0.0;
  }
  return c;
}

std::string_view to_string(RotationMode mode) {
  return mode == RotationMode::kRigid ? "rigid" : "literal";
}

RotationMode rotation_mode_from_string(std::string_view name) {
  if (name == "rigid") return RotationMode::kRigid;
  if (name == "literal") return RotationMode::kLiteral;
  throw ParameterError("unknown rotation mode '" + std::string(name) + "'");
}

RotationSpec RotationSpec::inverse() const {
  if (mode == RotationMode::kLiteral || is_pure_yaw()) {
    return RotationSpec{-dphi, -dtheta, mode, false};
  }
  RotationSpec inv = *this;
  inv.inverted = !inverted;
  return inv;
}

PixelCoord sphere_to_pixel(const SphericalCoord& c, Dims dims) {
  validate_panorama_dims(dims);
  const double w = dims.width;
  const double h = dims.height;
  return {w / kTwoPi * (c.phi + kPi), h / kPi * (kHalfPi - c.theta)};
}

PixelCoord sphere_to_pixel(const SphericalCoord& c, int width, int height) {
  return sphere_to_pixel(c, Dims{width, height});
}

SphericalCoord pixel_to_sphere(const PixelCoord& p, Dims dims) {
  validate_panorama_dims(dims);
  const double w = dims.width;
  const double h = dims.height;
  if (!(p.u >= 0.0 && p.u < w && p.v >= 0.0 && p.v <= h)) {
    throw RangeError("pixel (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                     ") outside panorama " + std::to_string(dims.width) + "x" +
                     std::to_string(dims.height));
  }
  // Poles keep the column's longitude here so that the mapping stays the
  // exact inverse of sphere_to_pixel.
  SphericalCoord c;
  c.phi = kTwoPi * p.u / w - kPi;
  if (c.phi >= kPi) c.phi = -kPi;
  c.theta = std::clamp(kHalfPi - kPi * p.v / h, -kHalfPi, kHalfPi);
  return c;
}

SphericalCoord pixel_to_sphere(const PixelCoord& p, int width, int height) {
  return pixel_to_sphere(p, Dims{width, height});
}

Dir3 rotate_dir3(const Dir3& d, double yaw, double pitch) {
  return yaw_dir(pitch_dir(d, pitch), yaw);
}

SphericalCoord rotate_spherical(const SphericalCoord& c, const RotationSpec& rot) {
  if (!std::isfinite(rot.dphi) || !std::isfinite(rot.dtheta)) {
    throw ParameterError("rotation angles must be finite");
  }
  const double sign = rot.inverted ? -1.0 : 1.0;
  if (rot.mode == RotationMode::kLiteral || rot.is_pure_yaw()) {
    const double phi = c.phi + sign * rot.dphi;
    const double theta = rot.dtheta == 0.0 ? c.theta : wrap_latitude(c.theta + sign * rot.dtheta);
    return SphericalCoord::normalized(phi, theta, c.r);
  }
  const Dir3 d = sphere_to_dir3(c);
  const Dir3 out = rot.inverted ? pitch_dir(yaw_dir(d, -rot.dphi), -rot.dtheta)
                                : rotate_dir3(d, rot.dphi, rot.dtheta);
  SphericalCoord result = dir3_to_sphere(out);
  result.r = c.r;
  return result;
}

PixelCoord rotate_pixel(const PixelCoord& p, const RotationSpec& rot, Dims dims) {
  return sphere_to_pixel(rotate_spherical(pixel_to_sphere(p, dims), rot), dims);
}

Dir3 sphere_to_dir3(const SphericalCoord& c) {
  const double ct = std::cos(c.theta);
  return {ct * std::cos(c.phi), ct * std::sin(c.phi), std::sin(c.theta)};
}

SphericalCoord dir3_to_sphere(const Dir3& d) {
  const double norm = std::sqrt(dot(d, d));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateInputError("cannot convert a zero or non-finite vector to a direction");
  }
  const double horizontal = std::hypot(d.x, d.y);
  const double theta = std::atan2(d.z, horizontal);
  const double phi = horizontal == 0.0 ? 0.0 : std::atan2(d.y, d.x);
  return SphericalCoord::normalized(phi, theta, norm);
}

double angular_distance(const SphericalCoord& a, const SphericalCoord& b) {
  const Dir3 u = sphere_to_dir3(a);
  const Dir3 v = sphere_to_dir3(b);
  const Dir3 cross{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
  return std::atan2(std::sqrt(dot(cross, cross)), dot(u, v));
}

// ---------------------------------------------------------------------------
// Cubemap

std::string_view to_string(CubeFace face) {
  switch (face) {
    case CubeFace::kFront: return "front";
    case CubeFace::kBack: return "back";
    case CubeFace::kLeft: return "left";
    case CubeFace::kRight: return "right";
    case CubeFace::kUp: return "up";
    case CubeFace::kDown: return "down";
  }
  return "?";
}

CubeFace cube_face_from_string(std::string_view name) {
  for (CubeFace f : kAllFaces) {
    if (to_string(f) == name) return f;
  }
  throw ParameterError("unknown cube face '" + std::string(name) + "'");
}

const FaceAxes& face_axes(CubeFace face) {
  // Equatorial faces stay upright; up/down share the front face's "right".
  static const std::array<FaceAxes, 6> kAxes = {{
      {{1, 0, 0}, {0, -1, 0}, {0, 0, -1}},   // front
      {{-1, 0, 0}, {0, 1, 0}, {0, 0, -1}},   // back
      {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},    // left
      {{0, -1, 0}, {-1, 0, 0}, {0, 0, -1}},  // right
      {{0, 0, 1}, {0, -1, 0}, {1, 0, 0}},    // up
      {{0, 0, -1}, {0, -1, 0}, {-1, 0, 0}},  // down
  }};
  return kAxes[static_cast<int>(face)];
}

FaceCoord dir3_to_face(const Dir3& d, int face_size) {
  if (face_size < 1) throw DimensionError("face size must be positive");
  const double ax = std::abs(d.x);
  const double ay = std::abs(d.y);
  const double az = std::abs(d.z);
  CubeFace face;
  if (ax >= ay && ax >= az) {
    if (ax == 0.0) throw DegenerateInputError("zero direction has no cube face");
    face = d.x > 0 ? CubeFace::kFront : CubeFace::kBack;
  } else if (ay >= az) {
    face = d.y > 0 ? CubeFace::kLeft : CubeFace::kRight;
  } else {
    face = d.z > 0 ? CubeFace::kUp : CubeFace::kDown;
  }
  const FaceAxes& axes = face_axes(face);
  const double depth = dot(d, axes.normal);
  const double a = dot(d, axes.right) / depth;
  const double b = dot(d, axes.down) / depth;
  const double size = face_size;
  const double upper = std::nextafter(size, 0.0);
  return {face, std::clamp((a + 1.0) * 0.5 * size, 0.0, upper),
          std::clamp((b + 1.0) * 0.5 * size, 0.0, upper)};
}

Dir3 face_pixel_to_dir3(CubeFace face, double face_u, double face_v, int face_size) {
  if (face_size < 1) throw DimensionError("face size must be positive");
  const FaceAxes& axes = face_axes(face);
  const double a = 2.0 * face_u / face_size - 1.0;
  const double b = 2.0 * face_v / face_size - 1.0;
  Dir3 d{axes.normal.x + a * axes.right.x + b * axes.down.x,
         axes.normal.y + a * axes.right.y + b * axes.down.y,
         axes.normal.z + a * axes.right.z + b * axes.down.z};
  const double n = std::sqrt(dot(d, d));
  return {d.x / n, d.y / n, d.z / n};
}

}  // namespace panoworld
