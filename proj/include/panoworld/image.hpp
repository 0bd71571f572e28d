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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "panoworld/geometry.hpp"

namespace panoworld {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend Rgb operator+(Rgb a, Rgb b) { return {a.r + b.r, a.g + b.g, a.b + b.b}; }
  friend Rgb operator-(Rgb a, Rgb b) { return {a.r - b.r, a.g - b.g, a.b - b.b}; }
  friend Rgb operator*(Rgb a, double s) { return {a.r * s, a.g * s, a.b * s}; }
  friend Rgb operator*(double s, Rgb a) { return a * s; }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major RGB raster with samples in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, Rgb fill = {});
  // Takes ownership of `data`; throws RangeError on out-of-range samples.
  Image(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t sample_count() const { return data_.size(); }

  Rgb pixel(int x, int y) const {
    const float* p = &data_[index(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set_pixel(int x, int y, Rgb c);

  float* row(int y) { return &data_[index(0, y)]; }
  const float* row(int y) const { return &data_[index(0, y)]; }
  std::span<const float> samples() const { return data_; }
  std::span<float> mutable_samples() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Equirectangular panorama: W = 2H, W >= 8.
class PanoramaImage {
 public:
  static constexpr int kMinWidth = 8;

  PanoramaImage() = default;
  explicit PanoramaImage(Dims dims, Rgb fill = {});
  // Throws DimensionError when the raster does not have panorama proportions.
  explicit PanoramaImage(Image raster);

  int width() const { return raster_.width(); }
  int height() const { return raster_.height(); }
  Dims dims() const { return {width(), height()}; }
  const Image& raster() const { return raster_; }
  Image& raster() { return raster_; }
  Rgb pixel(int x, int y) const { return raster_.pixel(x, y); }

  friend bool operator==(const PanoramaImage&, const PanoramaImage&) = default;

 private:
  Image raster_;
};

struct PerspectiveImage {
  Image raster;
  double hfov = kHalfPi;  // horizontal field of view, in (0, pi)
  double yaw = 0.0;
  double pitch = 0.0;
};

struct CubeMapImage {
  static constexpr int kMinFaceSize = 4;

  int face_size = 0;
  std::array<Image, 6> faces;

  const Image& face(CubeFace f) const { return faces[static_cast<int>(f)]; }
  Image& face(CubeFace f) { return faces[static_cast<int>(f)]; }
  // Throws DimensionError if faces are missing, non-square or mismatched.
  void validate() const;
};

// Bilinear sample with horizontal wrap-around and vertical clamp to
// [0.5, H - 0.5].
Rgb sample_bilinear(const PanoramaImage& img, const PixelCoord& p);

// Bilinear sample of a plain raster, clamped at every border.
Rgb sample_clamped(const Image& img, double u, double v);

// Output pixel (i, j) pulls from rotate_pixel((i + 0.5, j + 0.5), rot), so the
// result is the view after turning the viewing direction by rot. Yaws by a
// whole number of columns are exact column rolls.
PanoramaImage rotate_panorama_image(const PanoramaImage& img, const RotationSpec& rot);

CubeMapImage equirect_to_cubemap(const PanoramaImage& img, int face_size);
PanoramaImage cubemap_to_equirect(const CubeMapImage& cm, Dims dims);

// Pinhole camera at the sphere center looking along (yaw, pitch).
PerspectiveImage extract_perspective(const PanoramaImage& img, double yaw, double pitch,
                                     double hfov, int out_width, int out_height);

// Direction of the ray through continuous pixel (x, y) of a pinhole camera,
// in the panorama's frame.
Dir3 perspective_ray(double x, double y, int width, int height, double hfov, double yaw,
                     double pitch);

// Largest per-channel difference between bilinear samples just left and just
// right of the u = 0 seam, over all rows.
double seam_delta(const PanoramaImage& img, double epsilon = 1e-3);

double mean_intensity(const Image& img);

}  // namespace panoworld
