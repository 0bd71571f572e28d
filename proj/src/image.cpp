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

#include "panoworld/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "panoworld/errors.hpp"
#include "parallel.hpp"

namespace panoworld {
namespace {

float to_sample(double x) { return static_cast<float>(std::clamp(x, 0.0, 1.0)); }

std::string dims_string(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

}  // namespace

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw DimensionError("image must be non-empty, got " + dims_string(width, height));
  data_.resize(static_cast<std::size_t>(width) * height * kChannels);
  const float c[3] = {to_sample(fill.r), to_sample(fill.g), to_sample(fill.b)};
  for (std::size_t i = 0; i < data_.size(); i += kChannels) {
    data_[i] = c[0];
    data_[i + 1] = c[1];
    data_[i + 2] = c[2];
  }
}

Image::Image(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) throw DimensionError("image must be non-empty, got " + dims_string(width, height));
  if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw DimensionError("sample count does not match " + dims_string(width, height));
  }
  for (float s : data_) {
    if (!(s >= 0.0f && s <= 1.0f)) throw RangeError("image samples must lie in [0, 1]");
  }
}

void Image::set_pixel(int x, int y, Rgb c) {
  float* p = &data_[index(x, y)];
  p[0] = to_sample(c.r);
  p[1] = to_sample(c.g);
  p[2] = to_sample(c.b);
}

PanoramaImage::PanoramaImage(Dims dims, Rgb fill) {
  validate_panorama_dims(dims);
  if (dims.width < kMinWidth) throw DimensionError("panorama width must be at least 8");
  raster_ = Image(dims.width, dims.height, fill);
}

PanoramaImage::PanoramaImage(Image raster) : raster_(std::move(raster)) {
  validate_panorama_dims({raster_.width(), raster_.height()});
  if (raster_.width() < kMinWidth) throw DimensionError("panorama width must be at least 8");
}

void CubeMapImage::validate() const {
  if (face_size < kMinFaceSize) throw DimensionError("cube face size must be at least 4");
  for (const Image& f : faces) {
    if (f.width() != face_size || f.height() != face_size) {
      throw DimensionError("cube faces must all be " + dims_string(face_size, face_size));
    }
  }
}

Rgb sample_bilinear(const PanoramaImage& img, const PixelCoord& p) {
  const Image& r = img.raster();
  const int w = r.width();
  const int h = r.height();
  const double x = p.u - 0.5;
  const double y = std::clamp(p.v, 0.5, h - 0.5) - 0.5;
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double tx = x - fx0;
  const double ty = y - fy0;
  int x0 = static_cast<int>(std::fmod(fx0, static_cast<double>(w)));
  if (x0 < 0) x0 += w;
  const int x1 = x0 + 1 == w ? 0 : x0 + 1;
  const int y0 = static_cast<int>(fy0);
  const int y1 = std::min(y0 + 1, h - 1);
  const Rgb a = r.pixel(x0, y0);
  const Rgb b = r.pixel(x1, y0);
  const Rgb c = r.pixel(x0, y1);
  const Rgb d = r.pixel(x1, y1);
  return (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (c * (1.0 - tx) + d * tx) * ty;
}

Rgb sample_clamped(const Image& img, double u, double v) {
  const int w = img.width();
  const int h = img.height();
  const double x = std::clamp(u, 0.5, w - 0.5) - 0.5;
  const double y = std::clamp(v, 0.5, h - 0.5) - 0.5;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double tx = x - x0;
  const double ty = y - y0;
  return (img.pixel(x0, y0) * (1.0 - tx) + img.pixel(x1, y0) * tx) * (1.0 - ty) +
         (img.pixel(x0, y1) * (1.0 - tx) + img.pixel(x1, y1) * tx) * ty;
}

PanoramaImage rotate_panorama_image(const PanoramaImage& img, const RotationSpec& rot) {
  const int w = img.width();
  const int h = img.height();
  if (rot.is_pure_yaw()) {
    const double yaw = rot.inverted ? -rot.dphi : rot.dphi;
    const double shift = yaw * w / kTwoPi;
    const double whole = std::round(shift);
    if (std::abs(shift - whole) < 1e-9) {
      int k = static_cast<int>(std::fmod(whole, static_cast<double>(w)));
      if (k < 0) k += w;
      PanoramaImage out = img;
      for (int y = 0; y < h; ++y) {
        const float* src = img.raster().row(y);
        float* dst = out.raster().row(y);
        // Output column i shows source column i + k.
        std::copy(src + static_cast<std::size_t>(k) * 3, src + static_cast<std::size_t>(w) * 3, dst);
        std::copy(src, src + static_cast<std::size_t>(k) * 3, dst + static_cast<std::size_t>(w - k) * 3);
      }
      return out;
    }
  }
  PanoramaImage out(img.dims());
  const Dims dims = img.dims();
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const PixelCoord src = rotate_pixel({x + 0.5, y + 0.5}, rot, dims);
      out.raster().set_pixel(x, y, sample_bilinear(img, src));
    }
  });
  return out;
}

CubeMapImage equirect_to_cubemap(const PanoramaImage& img, int face_size) {
  if (face_size < CubeMapImage::kMinFaceSize) throw DimensionError("cube face size must be at least 4");
  CubeMapImage cm;
  cm.face_size = face_size;
  const Dims dims = img.dims();
  for (CubeFace f : kAllFaces) {
    Image face(face_size, face_size);
    parallel_rows(face_size, [&](int y) {
      for (int x = 0; x < face_size; ++x) {
        const Dir3 d = face_pixel_to_dir3(f, x + 0.5, y + 0.5, face_size);
        const PixelCoord p = sphere_to_pixel(dir3_to_sphere(d), dims);
        face.set_pixel(x, y, sample_bilinear(img, p));
      }
    });
    cm.face(f) = std::move(face);
  }
  return cm;
}

PanoramaImage cubemap_to_equirect(const CubeMapImage& cm, Dims dims) {
  cm.validate();
  PanoramaImage out(dims);
  parallel_rows(dims.height, [&](int y) {
    for (int x = 0; x < dims.width; ++x) {
      const SphericalCoord s = pixel_to_sphere({x + 0.5, y + 0.5}, dims);
      const FaceCoord fc = dir3_to_face(sphere_to_dir3(s), cm.face_size);
      out.raster().set_pixel(x, y, sample_clamped(cm.face(fc.face), fc.u, fc.v));
    }
  });
  return out;
}

Dir3 perspective_ray(double x, double y, int width, int height, double hfov, double yaw,
                     double pitch) {
  const double focal = 0.5 * width / std::tan(0.5 * hfov);
  const double a = (x - 0.5 * width) / focal;
  const double b = (y - 0.5 * height) / focal;
  // Same camera basis as the front cube face: right = -y, down = -z.
  const Dir3 cam{1.0, -a, -b};
  const double n = std::sqrt(cam.x * cam.x + cam.y * cam.y + cam.z * cam.z);
  return rotate_dir3({cam.x / n, cam.y / n, cam.z / n}, yaw, pitch);
}

PerspectiveImage extract_perspective(const PanoramaImage& img, double yaw, double pitch,
                                     double hfov, int out_width, int out_height) {
  if (!(hfov > 0.0 && hfov < kPi)) throw ParameterError("hfov must lie in (0, pi)");
  if (out_width < 1 || out_height < 1) throw DimensionError("perspective size must be positive");
  PerspectiveImage out{Image(out_width, out_height), hfov, yaw, pitch};
  const Dims dims = img.dims();
  parallel_rows(out_height, [&](int y) {
    for (int x = 0; x < out_width; ++x) {
      const Dir3 d = perspective_ray(x + 0.5, y + 0.5, out_width, out_height, hfov, yaw, pitch);
      out.raster.set_pixel(x, y, sample_bilinear(img, sphere_to_pixel(dir3_to_sphere(d), dims)));
    }
  });
  return out;
}

double seam_delta(const PanoramaImage& img, double epsilon) {
  double worst = 0.0;
  const double w = img.width();
  for (int y = 0; y < img.height(); ++y) {
    const Rgb left = sample_bilinear(img, {w - epsilon, y + 0.5});
    const Rgb right = sample_bilinear(img, {epsilon, y + 0.5});
    const Rgb d = left - right;
    worst = std::max({worst, std::abs(d.r), std::abs(d.g), std::abs(d.b)});
  }
  return worst;
}

double mean_intensity(const Image& img) {
  double sum = 0.0;
  for (float s : img.samples()) sum += s;
  return img.empty() ? 0.0 : sum / static_cast<double>(img.sample_count());
}

}  // namespace panoworld
