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

#include "panoworld/perception.hpp"

#include <algorithm>
#include <cmath>

#include "panoworld/world.hpp"

namespace panoworld {
namespace {

double hue_deg(const Rgb& c, double mx, double mn) {
  const double d = mx - mn;
  double h = 0.0;
  if (mx == c.r) {
    h = std::fmod((c.g - c.b) / d, 6.0);
  } else if (mx == c.g) {
    h = (c.b - c.r) / d + 2.0;
  } else {
    h = (c.r - c.g) / d + 4.0;
  }
  h *= 60.0;
  return h < 0.0 ? h + 360.0 : h;
}

std::vector<double> palette_hues() {
  std::vector<double> out;
  for (const PaletteColor& p : palette()) {
    const double mx = std::max({p.rgb.r, p.rgb.g, p.rgb.b});
    const double mn = std::min({p.rgb.r, p.rgb.g, p.rgb.b});
    out.push_back(hue_deg(p.rgb, mx, mn));
  }
  return out;
}

}  // namespace

std::optional<int> classify_color(const Rgb& c, const ColorRule& rule) {
  static const std::vector<double> hues = palette_hues();
  const double mx = std::max({c.r, c.g, c.b});
  const double mn = std::min({c.r, c.g, c.b});
  if (mx < rule.min_value || mx <= 0.0) return std::nullopt;
  if ((mx - mn) / mx < rule.min_saturation) return std::nullopt;
  const double h = hue_deg(c, mx, mn);
  int best = -1;
  double best_err = 1e9;
  for (std::size_t i = 0; i < hues.size(); ++i) {
    double e = std::abs(h - hues[i]);
    e = std::min(e, 360.0 - e);
    if (e < best_err) {
      best_err = e;
      best = static_cast<int>(i);
    }
  }
  if (best_err > rule.max_hue_error_deg) return std::nullopt;
  return best;
}

std::vector<Component> segment_colors(const Image& img, bool wrap, int min_area,
                                      const ColorRule& rule) {
  const int w = img.width();
  const int h = img.height();
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (auto c = classify_color(img.pixel(x, y), rule)) label[static_cast<std::size_t>(y) * w + x] = *c;
    }
  }
  std::vector<char> seen(label.size(), 0);
  std::vector<Component> out;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(label.size()); ++start) {
    if (label[start] < 0 || seen[start]) continue;
    Component comp;
    comp.color = label[start];
    comp.min_y = h;
    comp.max_y = -1;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      comp.pixels.push_back(p);
      const int x = p % w;
      const int y = p / w;
      comp.min_y = std::min(comp.min_y, y);
      comp.max_y = std::max(comp.max_y, y);
      auto visit = [&](int nx, int ny) {
        if (ny < 0 || ny >= h) return;
        if (nx < 0 || nx >= w) {
          if (!wrap) return;
          nx = (nx + w) % w;
        }
        const int q = ny * w + nx;
        if (!seen[q] && label[q] == comp.color) {
          seen[q] = 1;
          stack.push_back(q);
        }
      };
      visit(x - 1, y);
      visit(x + 1, y);
      visit(x, y - 1);
      visit(x, y + 1);
    }
    comp.area = static_cast<int>(comp.pixels.size());
    std::sort(comp.pixels.begin(), comp.pixels.end());
    if (comp.area >= min_area) out.push_back(std::move(comp));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Component& a, const Component& b) { return a.area > b.area; });
  return out;
}

double component_bearing(const Component& c, Dims dims) {
  double sx = 0.0;
  double sy = 0.0;
  for (int p : c.pixels) {
    const double u = p % dims.width + 0.5;
    const double phi = kTwoPi * u / dims.width - kPi;
    sx += std::cos(phi);
    sy += std::sin(phi);
  }
  return wrap_longitude(std::atan2(sy, sx));
}

}  // namespace panoworld
