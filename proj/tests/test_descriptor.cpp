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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "bowreid/descriptor.hpp"
#include "bowreid/error.hpp"
#include "oracles/naive_embedding.hpp"
#include "oracles/toy_data.hpp"

namespace bowreid {
namespace {

RgbImage solid(int h, int w, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.pixel(y, x)[0] = r;
      img.pixel(y, x)[1] = g;
      img.pixel(y, x)[2] = b;
    }
  }
  return img;
}

TEST(NormalizeImage, Downscale) {
  auto out = normalize_image(testing::make_person_image(1, 1, 256, 128));
  EXPECT_EQ(out.height, 128);
  EXPECT_EQ(out.width, 64);
}

TEST(NormalizeImage, IdentityAtTargetSize) {
  auto in = testing::make_person_image(2, 3);
  auto out = normalize_image(in);
  EXPECT_EQ(out.rgb, in.rgb);
}

TEST(NormalizeImage, OddInput) {
  auto out = normalize_image(testing::make_person_image(3, 3, 100, 37));
  EXPECT_EQ(out.height, 128);
  EXPECT_EQ(out.width, 64);
  auto narrow = normalize_image(testing::make_person_image(3, 3, 100, 37), {128, 48});
  EXPECT_EQ(narrow.width, 48);
}

TEST(NormalizeImage, ZeroArea) { EXPECT_THROW(normalize_image(RgbImage(0, 5)), DataError); }

TEST(NormalizeImage, ConstantStaysConstant) {
  auto out = normalize_image(solid(77, 31, 10, 200, 30));
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      ASSERT_EQ(out.pixel(y, x)[1], 200);
    }
  }
}

TEST(SamplePatches, Counts) {
  EXPECT_EQ(sample_patches(RgbImage(128, 64), 4, 4).size(), 512u);
  EXPECT_EQ(sample_patches(RgbImage(128, 48), 4, 4).size(), 384u);
}

TEST(SamplePatches, ToyCenters) {
  auto p = sample_patches(RgbImage(8, 8), 4, 4);
  ASSERT_EQ(p.size(), 4u);
  std::vector<std::pair<int, int>> centers;
  for (const auto& w : p) centers.emplace_back(w.center_y, w.center_x);
  EXPECT_EQ(centers, (std::vector<std::pair<int, int>>{{2, 2}, {2, 6}, {6, 2}, {6, 6}}));
}

TEST(SamplePatches, Indivisible) {
  EXPECT_THROW(sample_patches(RgbImage(10, 8), 4, 4), DataError);
  EXPECT_THROW(sample_patches(RgbImage(8, 8), 4, 2), ConfigError);
}

TEST(SamplePatches, TilesExactly) {
  for (auto [h, w] : {std::pair{128, 64}, std::pair{128, 48}, std::pair{12, 20}}) {
    std::vector<int> cover(static_cast<std::size_t>(h * w), 0);
    for (const auto& p : sample_patches(RgbImage(h, w), 4, 4)) {
      for (int y = p.top; y < p.top + p.size; ++y) {
        for (int x = p.left; x < p.left + p.size; ++x) ++cover[static_cast<std::size_t>(y * w + x)];
      }
    }
    for (int c : cover) ASSERT_EQ(c, 1);
  }
}

TEST(ColorNames, IndexFormula) {
  EXPECT_EQ(CnTable::index_of(0, 0, 0), 0u);
  EXPECT_EQ(CnTable::index_of(255, 255, 255), 32767u);
  EXPECT_EQ(CnTable::index_of(8, 0, 0), CnTable::index_of(15, 0, 0));
  EXPECT_EQ(CnTable::index_of(0, 8, 0), 32u);
  EXPECT_EQ(CnTable::index_of(0, 0, 8), 1024u);
}

TEST(ColorNames, ConstantWithinBin) {
  auto table = CnTable::synthetic();
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> d(0, 31);
  std::uniform_int_distribution<int> off(0, 7);
  for (int t = 0; t < 500; ++t) {
    int r = d(rng) * 8, g = d(rng) * 8, b = d(rng) * 8;
    auto a = pixel_color_names(r, g, b, table);
    auto c = pixel_color_names(r + off(rng), g + off(rng), b + off(rng), table);
    for (std::size_t i = 0; i < kCnDim; ++i) ASSERT_EQ(a[i], c[i]);
  }
}

TEST(ColorNames, SyntheticMatchesIndependentRebuild) {
  auto table = CnTable::synthetic();
  for (std::size_t idx = 0; idx < CnTable::kRows; idx += 37) {
    auto row = table.row(idx);
    auto expect = testing::naive_synthetic_cn_row(static_cast<int>(idx % 32) * 8,
                                                 static_cast<int>(idx / 32 % 32) * 8,
                                                 static_cast<int>(idx / 1024) * 8);
    for (std::size_t i = 0; i < kCnDim; ++i) ASSERT_EQ(row[i], expect[i]) << idx;
  }
}

TEST(ColorNames, TableFileRoundTrip) {
  testing::TempDir dir("cn");
  auto table = CnTable::synthetic();
  table.save(dir.path() / "cn.txt");
  auto loaded = CnTable::load(dir.path() / "cn.txt");
  for (std::size_t idx = 0; idx < CnTable::kRows; idx += 101) {
    for (std::size_t i = 0; i < kCnDim; ++i) ASSERT_EQ(loaded.row(idx)[i], table.row(idx)[i]);
  }
  std::ofstream(dir.path() / "bad.txt") << "0.5 0.5\n";
  EXPECT_THROW(CnTable::load(dir.path() / "bad.txt"), DataError);
}

TEST(RootNormalize, Examples) {
  auto a = root_normalize(std::vector<double>{1, 0, 0});
  EXPECT_EQ(a, (std::vector<double>{1, 0, 0}));
  auto b = root_normalize(std::vector<double>{2, 2});
  EXPECT_NEAR(b[0], 0.70710678118, 1e-10);
  EXPECT_NEAR(b[1], 0.70710678118, 1e-10);
  auto c = root_normalize(std::vector<double>{3, 1});
  EXPECT_NEAR(c[0], 0.86602540378, 1e-10);
  EXPECT_NEAR(c[1], 0.5, 1e-12);
  EXPECT_THROW(root_normalize(std::vector<double>{1, -1}), DataError);
  EXPECT_EQ(root_normalize(std::vector<double>{0, 0}), (std::vector<double>{0, 0}));
}

TEST(PatchCn, UniformPatch) {
  auto table = CnTable::synthetic();
  auto img = solid(4, 4, 250, 10, 10);
  auto d = patch_cn_descriptor(img, sample_patches(img, 4, 4)[0], table);
  auto row = table.row(CnTable::index_of(250, 10, 10));
  auto expect = root_normalize(std::vector<double>(row.begin(), row.end()));
  for (std::size_t i = 0; i < kCnDim; ++i) EXPECT_DOUBLE_EQ(d[i], expect[i]);
}

TEST(PatchCn, HalfHalf) {
  auto table = CnTable::synthetic();
  auto img = solid(4, 4, 250, 10, 10);
  for (int y = 0; y < 4; ++y) {
    for (int x = 2; x < 4; ++x) img.pixel(y, x)[2] = 250;
  }
  auto d = patch_cn_descriptor(img, sample_patches(img, 4, 4)[0], table);
  auto r1 = table.row(CnTable::index_of(250, 10, 10));
  auto r2 = table.row(CnTable::index_of(250, 10, 250));
  for (std::size_t i = 0; i < kCnDim; ++i) EXPECT_DOUBLE_EQ(d[i], 0.5 * r1[i] + 0.5 * r2[i]);
}

// Soft table so per-pixel root normalization matters.
CnTable soft_table(testing::TempDir& dir) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  {
    std::ofstream out(dir.path() / "soft.txt");
    out.precision(17);
    for (std::size_t r = 0; r < CnTable::kRows; ++r) {
      std::array<double, kCnDim> v{};
      double s = 0;
      for (auto& x : v) s += (x = u(rng));
      for (std::size_t i = 0; i < kCnDim; ++i) out << v[i] / s << (i + 1 < kCnDim ? ' ' : '\n');
    }
  }
  return CnTable::load(dir.path() / "soft.txt");
}

TEST(PatchCn, RandomPatchMatchesPixelLoop) {
  testing::TempDir dir("soft");
  auto table = soft_table(dir);
  auto img = testing::make_person_image(9, 9);
  std::mt19937 rng(5);
  auto patches = sample_patches(img, 4, 4);
  for (int t = 0; t < 40; ++t) {
    const auto& w = patches[rng() % patches.size()];
    auto d = patch_cn_descriptor(img, w, table);
    std::array<double, kCnDim> expect{};
    for (int y = w.top; y < w.top + 4; ++y) {
      for (int x = w.left; x < w.left + 4; ++x) {
        const auto* p = img.pixel(y, x);
        auto row = table.row(CnTable::index_of(p[0], p[1], p[2]));
        double l1 = 0;
        for (double v : row) l1 += v;
        for (std::size_t i = 0; i < kCnDim; ++i) expect[i] += std::sqrt(row[i] / l1) / 16.0;
      }
    }
    for (std::size_t i = 0; i < kCnDim; ++i) ASSERT_NEAR(d[i], expect[i], 1e-12);
    double n2 = 0;
    for (double v : d) {
      ASSERT_GE(v, 0.0);
      n2 += v * v;
    }
    ASSERT_LE(std::sqrt(n2), 1.0 + 1e-12);
  }
}

TEST(PatchHs, SaturatedRed) {
  auto img = solid(4, 4, 255, 0, 0);
  auto d = patch_hs_descriptor(img, sample_patches(img, 4, 4)[0]);
  EXPECT_EQ(hs_bin(255, 0, 0), 3);
  for (std::size_t i = 0; i < kHsDim; ++i) EXPECT_EQ(d[i], i == 3 ? 1.0 : 0.0);
}

TEST(PatchHs, GrayGoesToLowestSaturation) {
  auto img = solid(4, 4, 90, 90, 90);
  auto d = patch_hs_descriptor(img, sample_patches(img, 4, 4)[0]);
  double low = 0;
  for (int h = 0; h < kHsHueBins; ++h) low += d[static_cast<std::size_t>(h * kHsSatBins)];
  EXPECT_DOUBLE_EQ(low, 1.0);
}

TEST(PatchHs, RedAndCyan) {
  auto img = solid(4, 4, 255, 0, 0);
  for (int y = 2; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      img.pixel(y, x)[0] = 0;
      img.pixel(y, x)[1] = 255;
      img.pixel(y, x)[2] = 255;
    }
  }
  auto d = patch_hs_descriptor(img, sample_patches(img, 4, 4)[0]);
  // cyan: hue 180 -> bin 2, saturation 1 -> bin 3
  EXPECT_EQ(hs_bin(0, 255, 255), 2 * 4 + 3);
  EXPECT_NEAR(d[3], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(d[11], std::sqrt(0.5), 1e-12);
}

TEST(GaussianWeight, Examples) {
  MaskParams p;
  EXPECT_DOUBLE_EQ(gaussian_weight(32, 64, 128, 64, p), 1.0);
  EXPECT_NEAR(gaussian_weight(0, 0, 128, 64, p), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(gaussian_weight(0, 64, 128, 64, p), std::exp(-0.5), 1e-12);
}

TEST(GaussianWeight, PeakAndSymmetry) {
  MaskParams p;
  const int h = 128, w = 64;
  for (int y = 0; y <= h; y += 3) {
    for (int x = 0; x <= w; x += 5) {
      double g = gaussian_weight(x, y, h, w, p);
      ASSERT_GT(g, 0.0);
      if (x != w / 2 || y != h / 2) ASSERT_LT(g, 1.0);
      ASSERT_NEAR(g, gaussian_weight(w - x, y, h, w, p), 1e-15);
      ASSERT_NEAR(g, gaussian_weight(x, h - y, h, w, p), 1e-15);
    }
  }
}

TEST(PatchGrid, WeightsAndLayout) {
  auto table = CnTable::synthetic();
  auto img = testing::make_person_image(4, 4);
  GridOptions opts;
  auto grid = extract_patch_grid(img, opts, &table);
  EXPECT_EQ(grid.rows, 32);
  EXPECT_EQ(grid.cols, 16);
  EXPECT_EQ(grid.size(), 512u);
  EXPECT_EQ(grid.dim, kCnDim);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& w = grid.patches[i];
    EXPECT_DOUBLE_EQ(grid.weights[i], gaussian_weight(w.center_x, w.center_y, 128, 64, {}));
  }
  opts.kind = DescriptorKind::kHueSat;
  EXPECT_EQ(extract_patch_grid(img, opts, nullptr).dim, kHsDim);
}

}  // namespace
}  // namespace bowreid
