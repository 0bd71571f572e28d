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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "panoworld/errors.hpp"
#include "panoworld/metrics.hpp"
#include "test_support.hpp"

namespace panoworld {
namespace {

using testing::random_image;

double brute_mse(const Image& a, const Image& b) {
  double s = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const Rgb d = a.pixel(x, y) - b.pixel(x, y);
      s += d.r * d.r + d.g * d.g + d.b * d.b;
    }
  return s / (3.0 * a.width() * a.height());
}

double channel(const Rgb& c, int k) { return k == 0 ? c.r : (k == 1 ? c.g : c.b); }

// Direct 2D windowed SSIM with a two-pass variance.
double brute_ssim(const Image& a, const Image& b) {
  const int win = 11;
  const double sigma = 1.5;
  double wsum = 0;
  double w[11][11];
  for (int j = 0; j < win; ++j)
    for (int i = 0; i < win; ++i) {
      w[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * sigma * sigma));
      wsum += w[j][i];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  int count = 0;
  for (int k = 0; k < 3; ++k)
    for (int oy = 0; oy + win <= a.height(); ++oy)
      for (int ox = 0; ox + win <= a.width(); ++ox) {
        double ma = 0, mb = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            ma += w[j][i] / wsum * channel(a.pixel(ox + i, oy + j), k);
            mb += w[j][i] / wsum * channel(b.pixel(ox + i, oy + j), k);
          }
        double va = 0, vb = 0, cov = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            const double da = channel(a.pixel(ox + i, oy + j), k) - ma;
            const double db = channel(b.pixel(ox + i, oy + j), k) - mb;
            va += w[j][i] / wsum * da * da;
            vb += w[j][i] / wsum * db * db;
            cov += w[j][i] / wsum * da * db;
          }
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

// b = a plus small deterministic noise, clamped.
Image perturbed(const Image& a, double amp, std::uint64_t seed) {
  Rng rng(seed);
  Image b = a;
  for (float& s : b.mutable_samples())
    s = static_cast<float>(std::clamp(s + amp * (rng.uniform() - 0.5), 0.0, 1.0));
  return b;
}

TEST(Mse, MatchesBruteForce) {
  const Image a = random_image(32, 32, 1);
  const Image b = random_image(32, 32, 2);
  EXPECT_NEAR(mse(a, b), brute_mse(a, b), 1e-12);
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_EQ(mse(Image(4, 4, Rgb{0, 0, 0}), Image(4, 4, Rgb{1, 1, 1})), 1.0);
}

TEST(Psnr, MatchesDefinition) {
  const Image a = random_image(32, 32, 3);
  const Image b = perturbed(a, 0.1, 4);
  EXPECT_NEAR(psnr(a, b), 10 * std::log10(1.0 / brute_mse(a, b)), 1e-9);
  EXPECT_EQ(psnr(a, a), kPsnrIdentical);
  EXPECT_NEAR(psnr_from_mse(0.01), 20.0, 1e-12);
}

TEST(Ssim, MatchesBruteForce) {
  const Image a = random_image(32, 32, 5);
  for (double amp : {0.05, 0.3, 1.0}) {
    const Image b = perturbed(a, amp, 6);
    EXPECT_NEAR(ssim(a, b), brute_ssim(a, b), 1e-9) << amp;
  }
  const Image c = random_image(32, 32, 7);
  EXPECT_NEAR(ssim(a, c), brute_ssim(a, c), 1e-9);
}

TEST(Ssim, IdenticalIsOneAndSymmetric) {
  const Image a = random_image(40, 24, 8);
  EXPECT_EQ(ssim(a, a), 1.0);
  const Image flat(16, 16, Rgb{0.3, 0.3, 0.3});
  EXPECT_EQ(ssim(flat, flat), 1.0);
  const Image b = perturbed(a, 0.2, 9);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-14);
  EXPECT_LT(ssim(a, b), 1.0);
  EXPECT_LT(ssim(a, perturbed(a, 0.6, 9)), ssim(a, b));
}

TEST(Metrics, Errors) {
  EXPECT_THROW(mse(Image(4, 4), Image(4, 5)), DimensionError);
  EXPECT_THROW(psnr(Image(4, 4), Image(5, 4)), DimensionError);
  EXPECT_THROW(ssim(Image(10, 10), Image(10, 10)), DimensionError);
  SsimParams even;
  even.window = 4;
  EXPECT_THROW(ssim(Image(16, 16), Image(16, 16), even), ParameterError);
  EXPECT_THROW(mse(Image(), Image()), DimensionError);
}

}  // namespace
}  // namespace panoworld
