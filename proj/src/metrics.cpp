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

#include "panoworld/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "panoworld/errors.hpp"

namespace panoworld {
namespace {

void require_same_dims(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.empty()) {
    throw DimensionError("images must be non-empty and equally sized, got " +
                         std::to_string(a.width()) + "x" + std::to_string(a.height()) + " and " +
                         std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

// Horizontal then vertical valid-mode correlation with a 1D kernel.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_dims(a, b);
  const auto sa = a.samples();
  const auto sb = b.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = static_cast<double>(sa[i]) - sb[i];
    sum += d * d;
  }
  return sum / static_cast<double>(sa.size());
}

double mse(const PanoramaImage& a, const PanoramaImage& b) { return mse(a.raster(), b.raster()); }

double psnr_from_mse(double m) {
  if (m == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / m);
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }
double psnr(const PanoramaImage& a, const PanoramaImage& b) { return psnr(a.raster(), b.raster()); }

double ssim(const Image& a, const Image& b, const SsimParams& p) {
  require_same_dims(a, b);
  if (p.window < 1 || p.window % 2 == 0) throw ParameterError("SSIM window must be odd and positive");
  if (a.width() < p.window || a.height() < p.window) {
    throw DimensionError("SSIM needs images of at least " + std::to_string(p.window) + " pixels per side");
  }
  const int w = a.width();
  const int h = a.height();
  const int r = p.window / 2;
  std::vector<double> k(p.window);
  double ksum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (p.sigma * p.sigma));
    ksum += k[i + r];
  }
  for (double& v : k) v /= ksum;
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  const std::size_t n = static_cast<std::size_t>(w) * h;
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xa(n), xb(n), aa(n), bb(n), ab(n);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      xa[i] = a.samples()[i * 3 + c];
      xb[i] = b.samples()[i * 3 + c];
      aa[i] = xa[i] * xa[i];
      bb[i] = xb[i] * xb[i];
      ab[i] = xa[i] * xb[i];
    }
    const auto ma = filter_valid(xa, w, h, k);
    const auto mb = filter_valid(xb, w, h, k);
    const auto eaa = filter_valid(aa, w, h, k);
    const auto ebb = filter_valid(bb, w, h, k);
    const auto eab = filter_valid(ab, w, h, k);
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double va = eaa[i] - ma[i] * ma[i];
      const double vb = ebb[i] - mb[i] * mb[i];
      const double cov = eab[i] - ma[i] * mb[i];
      const double num = (2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2);
      const double den = (ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2);
      total += num / den;
    }
    count += ma.size();
  }
  return total / static_cast<double>(count);
}

double ssim(const PanoramaImage& a, const PanoramaImage& b, const SsimParams& p) {
  return ssim(a.raster(), b.raster(), p);
}

}  // namespace panoworld
