// Copyright 2026 The bowreid Authors.
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace bowreid {

/// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3) {}

  std::uint8_t* pixel(int y, int x) {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int y, int x) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  bool empty() const { return height <= 0 || width <= 0; }
};

/// Decodes JPEG, PNG or binary PPM by extension. Errors carry the path.
RgbImage read_image(const std::filesystem::path& path);

void write_ppm(const RgbImage& img, const std::filesystem::path& path);

}  // namespace bowreid
