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

// Coordinate mathematics for equirectangular panoramas: spherical <-> pixel
// transforms, sphere rotations and the cubemap direction mapping.
//
// Conventions
//   * longitude phi in [-pi, pi), latitude theta in [-pi/2, pi/2];
//     at the poles phi is defined as 0.
//   * pixel u = W/(2pi) (phi + pi), v = H/pi (pi/2 - theta); integer pixel
//     (i, j) has its center at (i + 0.5, j + 0.5).
//   * unit vectors: x = cos(theta)cos(phi), y = cos(theta)sin(phi),
//     z = sin(theta).

#include <array>
#include <numbers>
#include <string_view>

namespace panoworld {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHalfPi = 0.5 * std::numbers::pi;

struct Dims {
  int width = 0;
  int height = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

// Throws DimensionError unless width == 2 * height and height >= 1.
void validate_panorama_dims(Dims dims);

struct SphericalCoord {
  double phi = 0.0;
  double theta = 0.0;
  double r = 1.0;

  // Wraps phi into [-pi, pi), clamps theta and zeroes phi at the poles.
  static SphericalCoord normalized(double phi, double theta, double r = 1.0);
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

struct Dir3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

enum class RotationMode {
  // (phi + dphi mod 2pi, theta + dtheta mod pi), the formula applied literally.
  kLiteral,
  // A proper SO(3) rotation: pitch by dtheta about y, then yaw by dphi about z.
  kRigid,
};

std::string_view to_string(RotationMode mode);
RotationMode rotation_mode_from_string(std::string_view name);

struct RotationSpec {
  double dphi = 0.0;
  double dtheta = 0.0;
  RotationMode mode = RotationMode::kRigid;
  // Set on the result of inverse() for rigid rotations, whose inverse is not
  // expressible as another (yaw, pitch) pair.
  bool inverted = false;

  bool is_pure_yaw() const { return dtheta == 0.0; }
  RotationSpec inverse() const;
};

double wrap_longitude(double phi);
double wrap_latitude(double theta);

PixelCoord sphere_to_pixel(const SphericalCoord& c, Dims dims);
PixelCoord sphere_to_pixel(const SphericalCoord& c, int width, int height);
SphericalCoord pixel_to_sphere(const PixelCoord& p, Dims dims);
SphericalCoord pixel_to_sphere(const PixelCoord& p, int width, int height);

SphericalCoord rotate_spherical(const SphericalCoord& c, const RotationSpec& rot);
PixelCoord rotate_pixel(const PixelCoord& p, const RotationSpec& rot, Dims dims);

Dir3 sphere_to_dir3(const SphericalCoord& c);
SphericalCoord dir3_to_sphere(const Dir3& d);

// Rotates a direction the same way rotate_spherical does in rigid mode.
Dir3 rotate_dir3(const Dir3& d, double yaw, double pitch);

// Great-circle distance between two directions.
double angular_distance(const SphericalCoord& a, const SphericalCoord& b);

// ---------------------------------------------------------------------------
// Cubemap

enum class CubeFace { kFront = 0, kBack, kLeft, kRight, kUp, kDown };

inline constexpr std::array<CubeFace, 6> kAllFaces = {
    CubeFace::kFront, CubeFace::kBack, CubeFace::kLeft,
    CubeFace::kRight, CubeFace::kUp,   CubeFace::kDown};

std::string_view to_string(CubeFace face);
CubeFace cube_face_from_string(std::string_view name);

struct FaceAxes {
  Dir3 normal;
  Dir3 right;  // direction of increasing face_u
  Dir3 down;   // direction of increasing face_v
};

const FaceAxes& face_axes(CubeFace face);

struct FaceCoord {
  CubeFace face = CubeFace::kFront;
  double u = 0.0;  // in [0, face_size)
  double v = 0.0;  // in [0, face_size)
};

FaceCoord dir3_to_face(const Dir3& d, int face_size = 1);
Dir3 face_pixel_to_dir3(CubeFace face, double face_u, double face_v, int face_size);

}  // namespace panoworld
