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

#include "bowreid/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "bowreid/error.hpp"

namespace bowreid {

std::size_t descriptor_dim(DescriptorKind kind) {
  return kind == DescriptorKind::kColorNames ? kCnDim : kHsDim;
}

std::string_view to_string(DescriptorKind kind) {
  return kind == DescriptorKind::kColorNames ? "cn" : "hs";
}

DescriptorKind parse_descriptor_kind(std::string_view s) {
  if (s == "cn") return DescriptorKind::kColorNames;
  if (s == "hs") return DescriptorKind::kHueSat;
  throw ConfigError("unknown descriptor '" + std::string(s) + "'");
}

CnTable CnTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CN table " + path.string());
  std::vector<double> values;
  values.reserve(kRows * kCnDim);
  std::string line;
  std::size_t row = 0;
  std::vector<double> fields;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    fields.clear();
    double v;
    while (ls >> v) fields.push_back(v);
    if (fields.empty()) continue;
    if (row == kRows) throw DataError(path.string() + ": more than 32768 rows");
    std::size_t offset = 0;
    if (fields.size() == kCnDim + 3) {
      offset = 3;
    } else if (fields.size() != kCnDim) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " values, expected 11");
    }
    double sum = 0.0;
    for (std::size_t j = offset; j < fields.size(); ++j) {
      if (!(fields[j] >= 0.0)) {
        throw DataError(path.string() + ": negative entry in row " + std::to_string(row));
      }
      sum += fields[j];
      values.push_back(fields[j]);
    }
    if (std::abs(sum - 1.0) > 1e-4) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " sums to " +
                      std::to_string(sum));
    }
    ++row;
  }
  if (row != kRows) {
    throw DataError(path.string() + ": expected 32768 rows, found " + std::to_string(row));
  }
  return CnTable(std::move(values));
}

CnTable CnTable::synthetic() {
  static constexpr std::array<std::array<int, 3>, kCnDim> kAnchors = {{
      {0, 0, 0},        // black
      {0, 0, 255},      // blue
      {150, 75, 0},     // brown
      {128, 128, 128},  // grey
      {0, 200, 0},      // green
      {255, 165, 0},    // orange
      {255, 192, 203},  // pink
      {128, 0, 128},    // purple
      {255, 0, 0},      // red
      {255, 255, 255},  // white
      {255, 255, 0},    // yellow
  }};
  std::vector<double> values(kRows * kCnDim, 0.0);
  for (int b = 0; b < 32; ++b) {
    for (int g = 0; g < 32; ++g) {
      for (int r = 0; r < 32; ++r) {
        const int rgb[3] = {r * 8 + 4, g * 8 + 4, b * 8 + 4};
        std::size_t best = 0;
        int best_d = std::numeric_limits<int>::max();
        for (std::size_t a = 0; a < kCnDim; ++a) {
          int d = 0;
          for (int c = 0; c < 3; ++c) {
            int diff = rgb[c] - kAnchors[a][c];
            d += diff * diff;
          }
          if (d < best_d) {
            best_d = d;
            best = a;
          }
        }
        std::size_t idx = static_cast<std::size_t>(r) + 32u * g + 1024u * b;
        values[idx * kCnDim + best] = 1.0;
      }
    }
  }
  return CnTable(std::move(values));
}

void CnTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < kRows; ++i) {
    for (std::size_t j = 0; j < kCnDim; ++j) {
      out << (j ? " " : "") << values_[i * kCnDim + j];
    }
    out << '\n';
  }
}

std::span<const double, kCnDim> pixel_color_names(std::uint8_t r, std::uint8_t g,
                                                  std::uint8_t b, const CnTable& table) {
  return table.row(CnTable::index_of(r, g, b));
}

RgbImage normalize_image(const RgbImage& raw, const NormalizeOptions& opts) {
  if (raw.empty() || raw.rgb.size() != static_cast<std::size_t>(raw.height) * raw.width * 3) {
    throw DataError("cannot normalize an empty image");
  }
  if (opts.height <= 0 || opts.width <= 0) throw ConfigError("normalized size must be positive");
  if (raw.height == opts.height && raw.width == opts.width) return raw;

  RgbImage out(opts.height, opts.width);
  const double sy = static_cast<double>(raw.height) / opts.height;
  const double sx = static_cast<double>(raw.width) / opts.width;
  for (int y = 0; y < opts.height; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, raw.height - 1.0);
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, raw.height - 1);
    double wy = fy - y0;
    for (int x = 0; x < opts.width; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, raw.width - 1.0);
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, raw.width - 1);
      double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        double top = raw.pixel(y0, x0)[c] * (1 - wx) + raw.pixel(y0, x1)[c] * wx;
        double bot = raw.pixel(y1, x0)[c] * (1 - wx) + raw.pixel(y1, x1)[c] * wx;
        double v = top * (1 - wy) + bot * wy;
        out.pixel(y, x)[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

std::vector<PatchWindow> sample_patches(const RgbImage& img, int size, int step) {
  if (size <= 0 || step <= 0) throw ConfigError("patch size and step must be positive");
  if (size != step) throw ConfigError("patch size must equal the sampling step");
  if (img.height % step != 0 || img.width % step != 0) {
    throw DataError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                    " is not divisible by patch step " + std::to_string(step));
  }
  const int rows = img.height / step;
  const int cols = img.width / step;
  std::vector<PatchWindow> out;
  out.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      PatchWindow w;
      w.row = r;
      w.col = c;
      w.top = r * step;
      w.left = c * step;
      w.size = size;
      w.center_y = w.top + size / 2;
      w.center_x = w.left + size / 2;
      out.push_back(w);
    }
  }
  return out;
}

std::vector<double> root_normalize(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) {
    if (x < 0.0) throw DataError("root_normalize: negative entry");
    sum += x;
  }
  std::vector<double> out(v.size(), 0.0);
  if (sum == 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::sqrt(v[i] / sum);
  return out;
}

std::array<double, kCnDim> patch_cn_descriptor(const RgbImage& img, const PatchWindow& w,
                                               const CnTable& table) {
  std::array<double, kCnDim> acc{};
  for (int y = w.top; y < w.top + w.size; ++y) {
    for (int x = w.left; x < w.left + w.size; ++x) {
      const std::uint8_t* p = img.pixel(y, x);
      auto rooted = root_normalize(pixel_color_names(p[0], p[1], p[2], table));
      for (std::size_t j = 0; j < kCnDim; ++j) acc[j] += rooted[j];
    }
  }
  const double n = static_cast<double>(w.size) * w.size;
  for (double& a : acc) a /= n;
  return acc;
}

int hs_bin(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const int chroma = mx - mn;
  double hue = 0.0;
  if (chroma > 0) {
    if (mx == r) {
      hue = 60.0 * (static_cast<double>(g - b) / chroma);
      if (hue < 0) hue += 360.0;
    } else if (mx == g) {
      hue = 60.0 * (static_cast<double>(b - r) / chroma + 2.0);
    } else {
      hue = 60.0 * (static_cast<double>(r - g) / chroma + 4.0);
    }
  }
  const double sat = mx == 0 ? 0.0 : static_cast<double>(chroma) / mx;
  int hb = std::min(static_cast<int>(hue / (360.0 / kHsHueBins)), kHsHueBins - 1);
  int sb = std::min(static_cast<int>(sat * kHsSatBins), kHsSatBins - 1);
  return hb * kHsSatBins + sb;
}

std::array<double, kHsDim> patch_hs_descriptor(const RgbImage& img, const PatchWindow& w) {
  std::array<double, kHsDim> hist{};
  for (int y = w.top; y < w.top + w.size; ++y) {
    for (int x = w.left; x < w.left + w.size; ++x) {
      const std::uint8_t* p = img.pixel(y, x);
      hist[hs_bin(p[0], p[1], p[2])] += 1.0;
    }
  }
  auto rooted = root_normalize(hist);
  std::array<double, kHsDim> out;
  std::copy(rooted.begin(), rooted.end(), out.begin());
  return out;
}

double gaussian_weight(double x, double y, int height, int width, const MaskParams& params) {
  const double hx = width / 2.0;
  const double hy = height / 2.0;
  const double nx = (x - hx) / hx - params.mu_x;
  const double ny = (y - hy) / hy - params.mu_y;
  return std::exp(-(nx * nx / (2 * params.sigma_x * params.sigma_x) +
                    ny * ny / (2 * params.sigma_y * params.sigma_y)));
}

PatchGrid extract_patch_grid(const RgbImage& img, const GridOptions& opts,
                             const CnTable* table) {
  if (opts.kind == DescriptorKind::kColorNames && table == nullptr) {
    throw ConfigError("the CN descriptor needs a color-name table");
  }
  if (!(opts.mask.sigma_x > 0) || !(opts.mask.sigma_y > 0)) {
    throw ConfigError("mask sigmas must be positive");
  }
  PatchGrid grid;
  grid.patches = sample_patches(img, opts.patch_size, opts.patch_step);
  grid.rows = img.height / opts.patch_step;
  grid.cols = img.width / opts.patch_step;
  grid.height = img.height;
  grid.width = img.width;
  grid.dim = descriptor_dim(opts.kind);
  grid.descriptors.resize(grid.patches.size() * grid.dim);
  grid.weights.resize(grid.patches.size());
  for (std::size_t i = 0; i < grid.patches.size(); ++i) {
    const auto& w = grid.patches[i];
    double* dst = grid.descriptors.data() + i * grid.dim;
    if (opts.kind == DescriptorKind::kColorNames) {
      auto d = patch_cn_descriptor(img, w, *table);
      std::copy(d.begin(), d.end(), dst);
    } else {
      auto d = patch_hs_descriptor(img, w);
      std::copy(d.begin(), d.end(), dst);
    }
    grid.weights[i] = gaussian_weight(w.center_x, w.center_y, img.height, img.width, opts.mask);
  }
  return grid;
}

}  // namespace bowreid
