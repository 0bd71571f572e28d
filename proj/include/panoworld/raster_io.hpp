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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "panoworld/image.hpp"

namespace panoworld {

// 8-bit RGB PNG I/O. Samples are quantized as round(255 x) on write and
// divided by 255 on read.
Image load_raster(const std::filesystem::path& path);
void save_raster(const Image& img, const std::filesystem::path& path);

// Throws DimensionError if the file is not a valid panorama (W = 2H, W >= 8).
PanoramaImage load_panorama(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> bytes);

// Writes <prefix>_front.png ... <prefix>_down.png plus <prefix>.json naming
// face_size and the face files.
void save_cubemap(const CubeMapImage& cm, const std::filesystem::path& prefix);
// Accepts either the manifest path (<prefix>.json) or the bare prefix.
CubeMapImage load_cubemap(const std::filesystem::path& manifest_or_prefix);

}  // namespace panoworld
