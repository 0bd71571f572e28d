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

// Palette-color segmentation of rendered views.

#include <optional>
#include <vector>

#include "panoworld/image.hpp"

namespace panoworld {

struct ColorRule {
  double min_saturation = 0.5;
  double min_value = 0.15;
  double max_hue_error_deg = 10.0;
};

// Index into palette() of the color whose hue is nearest to `c`, if `c` is
// saturated and bright enough and the hue is within the tolerance.
std::optional<int> classify_color(const Rgb& c, const ColorRule& rule = {});

struct Component {
  int color = -1;  // palette index
  int area = 0;
  std::vector<int> pixels;  // y * width + x
  int min_y = 0;
  int max_y = 0;
};

// 4-connected components of equally classified pixels. With `wrap` the
// left and right borders are adjacent (panoramas). Components smaller than
// min_area are dropped. Output is sorted by descending area, then by first
// pixel index.
std::vector<Component> segment_colors(const Image& img, bool wrap, int min_area = 4,
                                      const ColorRule& rule = {});

// Circular mean of the longitudes of the component's pixel centers.
double component_bearing(const Component& c, Dims dims);

}  // namespace panoworld
