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

#include "panoworld/raster_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

#include "panoworld/errors.hpp"

namespace panoworld {
namespace {

struct ReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
  char message[256];
};

void png_read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* s = static_cast<ReadState*>(png_get_io_ptr(png));
  if (s->offset + n > s->size) png_error(png, "unexpected end of data");
  std::memcpy(out, s->data + s->offset, n);
  s->offset += n;
}

void png_error_callback(png_structp png, png_const_charp msg) {
  auto* s = static_cast<ReadState*>(png_get_error_ptr(png));
  std::snprintf(s->message, sizeof(s->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_callback(png_structp, png_const_charp) {}

// Plain C-style decoder: nothing with a destructor lives across setjmp.
bool decode_rgb8(ReadState* s, std::uint8_t** out, png_uint_32* out_w, png_uint_32* out_h) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, s, png_error_callback,
                                           png_warning_callback);
  if (png == nullptr) {
    std::snprintf(s->message, sizeof(s->message), "cannot allocate decoder");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  std::uint8_t* volatile buffer = nullptr;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    std::free(buffer);
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    return false;
  }
  png_set_read_fn(png, s, png_read_callback);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<std::size_t>(w) * 3) png_error(png, "unsupported pixel layout");
  buffer = static_cast<std::uint8_t*>(std::malloc(rowbytes * h));
  if (buffer == nullptr) png_error(png, "out of memory");
  for (int pass = 0; pass < passes; ++pass) {
    for (png_uint_32 y = 0; y < h; ++y) png_read_row(png, buffer + y * rowbytes, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  *out = buffer;
  *out_w = w;
  *out_h = h;
  return true;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::filesystem::path face_path(const std::filesystem::path& prefix, CubeFace f) {
  return prefix.string() + "_" + std::string(to_string(f)) + ".png";
}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
  ReadState state{bytes.data(), bytes.size(), 0, {0}};
  std::uint8_t* buffer = nullptr;
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  if (!decode_rgb8(&state, &buffer, &w, &h)) {
    throw DecodeError("PNG decode error at byte " + std::to_string(state.offset) + ": " +
                      state.message);
  }
  std::vector<float> data(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = buffer[i] / 255.0f;
  std::free(buffer);
  return Image(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> pixels(img.sample_count());
  const auto samples = img.samples();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * samples[i]));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Image load_raster(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_png(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

void save_raster(const Image& img, const std::filesystem::path& path) {
  write_file(path, encode_png(img));
}

PanoramaImage load_panorama(const std::filesystem::path& path) {
  return PanoramaImage(load_raster(path));
}

void save_cubemap(const CubeMapImage& cm, const std::filesystem::path& prefix) {
  cm.validate();
  nlohmann::json manifest;
  manifest["v"] = 1;
  manifest["face_size"] = cm.face_size;
  for (CubeFace f : kAllFaces) {
    const auto path = face_path(prefix, f);
    save_raster(cm.face(f), path);
    manifest["faces"][std::string(to_string(f))] = path.filename().string();
  }
  std::ofstream out(prefix.string() + ".json");
  if (!out) throw IoError("cannot write " + prefix.string() + ".json");
  out << manifest.dump(2) << "\n";
}

CubeMapImage load_cubemap(const std::filesystem::path& manifest_or_prefix) {
  std::filesystem::path manifest_path = manifest_or_prefix;
  if (manifest_path.extension() != ".json") manifest_path += ".json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(manifest_path.string() + ": " + e.what());
  }
  CubeMapImage cm;
  cm.face_size = manifest.at("face_size").get<int>();
  const auto dir = manifest_path.parent_path();
  for (CubeFace f : kAllFaces) {
    const auto name = manifest.at("faces").at(std::string(to_string(f))).get<std::string>();
    cm.face(f) = load_raster(dir / name);
  }
  cm.validate();
  return cm;
}

}  // namespace panoworld
