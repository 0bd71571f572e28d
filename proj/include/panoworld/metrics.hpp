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

// Image fidelity metrics on [0, 1] rasters.

#include <limits>

#include "panoworld/image.hpp"

namespace panoworld {

// Returned by psnr for identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// Mean of squared sample differences; DimensionError on size mismatch.
double mse(const Image& a, const Image& b);
double mse(const PanoramaImage& a, const PanoramaImage& b);

// 10 log10(1 / MSE); kPsnrIdentical when MSE is 0.
double psnr(const Image& a, const Image& b);
double psnr(const PanoramaImage& a, const PanoramaImage& b);
double psnr_from_mse(double mse_value);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Gaussian-windowed SSIM averaged over all fully contained windows and over
// channels. DimensionError when a side is shorter than the window.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});
double ssim(const PanoramaImage& a, const PanoramaImage& b, const SsimParams& params = {});

}  // namespace panoworld
