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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "bowreid/image.hpp"

namespace bowreid {

enum class DescriptorKind { kColorNames, kHueSat };

inline constexpr std::size_t kCnDim = 11;
inline constexpr std::size_t kHsDim = 20;
inline constexpr int kHsHueBins = 5;
inline constexpr int kHsSatBins = 4;

std::size_t descriptor_dim(DescriptorKind kind);
std::string_view to_string(DescriptorKind kind);
DescriptorKind parse_descriptor_kind(std::string_view s);

/// Color-name posteriors for each 32x32x32 RGB bin.
class CnTable {
 public:
  static constexpr std::size_t kRows = 32768;

  /// Reads 32768 rows of 11 floats. Rows with 14 columns (RGB prefix
  /// followed by 11 probabilities) are accepted too.
  static CnTable load(const std::filesystem::path& path);

  /// Deterministic one-hot table: each RGB bin maps to the nearest of 11
  /// anchor colors (black, blue, brown, grey, green, orange, pink, purple,
  /// red, white, yellow).
  static CnTable synthetic();

  static std::size_t index_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return (r >> 3) + 32u * (g >> 3) + 1024u * (b >> 3);
  }

  std::span<const double, kCnDim> row(std::size_t index) const {
    return std::span<const double, kCnDim>(values_.data() + index * kCnDim, kCnDim);
  }

  void save(const std::filesystem::path& path) const;

 private:
  explicit CnTable(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

std::span<const double, kCnDim> pixel_color_names(std::uint8_t r, std::uint8_t g,
                                                  std::uint8_t b, const CnTable& table);

struct NormalizeOptions {
  int height = 128;
  int width = 64;  // 48 for VIPeR-shaped inputs
};

/// Bilinear resize (pixel-center aligned) to the canonical pedestrian size.
RgbImage normalize_image(const RgbImage& raw, const NormalizeOptions& opts = {});

struct PatchWindow {
  int row = 0;  // grid row
  int col = 0;  // grid column
  int top = 0;
  int left = 0;
  int size = 0;
  int center_x = 0;
  int center_y = 0;
};

/// Dense non-overlapping tiling, row-major. Requires size == step and both
/// image dimensions divisible by step.
std::vector<PatchWindow> sample_patches(const RgbImage& img, int size, int step);

/// l1-normalize then take the elementwise square root. Zero stays zero.
std::vector<double> root_normalize(std::span<const double> v);

/// Mean of the per-pixel root-normalized color-name vectors.
std::array<double, kCnDim> patch_cn_descriptor(const RgbImage& img, const PatchWindow& w,
                                               const CnTable& table);

/// Joint 5-hue x 4-saturation histogram, root-normalized. Bin index is
/// hue_bin * 4 + sat_bin.
std::array<double, kHsDim> patch_hs_descriptor(const RgbImage& img, const PatchWindow& w);

/// HS bin of a single pixel.
int hs_bin(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct MaskParams {
  double mu_x = 0.0;  // offset from the image center, normalized units
  double mu_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
};

/// Background-suppression weight of a point. Coordinates are normalized so
/// that the image half-width and half-height map to 1.
double gaussian_weight(double x, double y, int height, int width, const MaskParams& params);

struct PatchGrid {
  int rows = 0;
  int cols = 0;
  int height = 0;  // source image height, used for stripe assignment
  int width = 0;
  std::size_t dim = 0;
  std::vector<double> descriptors;  // rows * cols * dim
  std::vector<PatchWindow> patches;
  std::vector<double> weights;  // Gaussian mask value per patch

  std::size_t size() const { return patches.size(); }
  std::span<const double> descriptor(std::size_t i) const {
    return {descriptors.data() + i * dim, dim};
  }
};

struct GridOptions {
  DescriptorKind kind = DescriptorKind::kColorNames;
  int patch_size = 4;
  int patch_step = 4;
  MaskParams mask;
};

/// `table` may be null for the HS descriptor.
PatchGrid extract_patch_grid(const RgbImage& img, const GridOptions& opts,
                             const CnTable* table);

}  // namespace bowreid
