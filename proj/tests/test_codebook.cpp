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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "bowreid/codebook.hpp"
#include "bowreid/error.hpp"
#include "oracles/toy_data.hpp"

namespace bowreid {
namespace {

struct Blobs {
  std::vector<double> points;
  std::vector<int> label;
  std::vector<std::vector<double>> centers;
};

Blobs make_blobs(std::size_t k, std::size_t dim, std::size_t per, double spread,
                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  Blobs b;
  for (std::size_t c = 0; c < k; ++c) {
    // axis-aligned corners of a lattice: pairwise distance >= 10 * spread * 10
    std::vector<double> center(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) center[j] = 100.0 * spread * static_cast<double>((c >> j) & 1u);
    center[0] += 100.0 * spread * static_cast<double>(c >> dim);
    b.centers.push_back(center);
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t j = 0; j < dim; ++j) b.points.push_back(center[j] + n(rng));
      b.label.push_back(static_cast<int>(c));
    }
  }
  return b;
}

TEST(TrainCodebook, SquareCorners) {
  const std::vector<double> pts = {0, 0, 0, 1, 4, 0, 4, 1};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cb = train_codebook(pts, 2, {.k = 2, .seed = seed});
    std::vector<std::pair<double, double>> c = {{cb.centroids[0], cb.centroids[1]},
                                                {cb.centroids[2], cb.centroids[3]}};
    std::sort(c.begin(), c.end());
    const bool short_axis = c[0] == std::make_pair(0.0, 0.5) && c[1] == std::make_pair(4.0, 0.5);
    const bool long_axis = c[0] == std::make_pair(2.0, 0.0) && c[1] == std::make_pair(2.0, 1.0);
    EXPECT_TRUE(short_axis || long_axis);
    EXPECT_DOUBLE_EQ(cb.meta.objective, short_axis ? 1.0 : 16.0);
  }
}

TEST(TrainCodebook, KEqualsN) {
  std::vector<double> pts = {0.5, 0.25, 3, 1, -2, 7, 9, 9};
  auto cb = train_codebook(pts, 2, {.k = 4, .seed = 3});
  EXPECT_EQ(cb.meta.objective, 0.0);
  std::vector<std::vector<double>> got, want;
  for (std::size_t i = 0; i < 4; ++i) {
    got.emplace_back(cb.centroid(i).begin(), cb.centroid(i).end());
    want.emplace_back(pts.begin() + 2 * i, pts.begin() + 2 * i + 2);
  }
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(got, want);
}

TEST(TrainCodebook, DegenerateInputs) {
  std::vector<double> same(20, 0.3);
  EXPECT_THROW(train_codebook(same, 2, {.k = 2}), DataError);
  EXPECT_THROW(train_codebook(std::vector<double>{1, 2}, 2, {.k = 2}), DataError);
  EXPECT_THROW(train_codebook(std::vector<double>{1, NAN, 3, 4}, 2, {.k = 1}), DataError);
  EXPECT_THROW(train_codebook(std::vector<double>{1, 2}, 2, {.k = 0}), ConfigError);
}

TEST(TrainCodebook, ObjectiveNonIncreasing) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pts(3000 * 11);
  for (auto& x : pts) x = u(rng);
  auto cb = train_codebook(pts, 11, {.k = 30, .seed = 2, .max_iter = 50, .tol = 0.0});
  const auto& h = cb.meta.objective_history;
  ASSERT_GE(h.size(), 2u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] * (1 + 1e-12)) << i;
  EXPECT_EQ(cb.meta.iterations, h.size());
}

TEST(TrainCodebook, Deterministic) {
  auto blobs = make_blobs(6, 3, 50, 0.01, 4);
  auto a = train_codebook(blobs.points, 3, {.k = 6, .seed = 99});
  auto b = train_codebook(blobs.points, 3, {.k = 6, .seed = 99});
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.meta.objective_history, b.meta.objective_history);
  for (double v : a.centroids) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
}

TEST(TrainCodebook, CentroidsDistinct) {
  auto blobs = make_blobs(10, 4, 30, 0.02, 12);
  auto cb = train_codebook(blobs.points, 4, {.k = 10, .seed = 1});
  for (std::size_t i = 0; i < cb.k; ++i) {
    for (std::size_t j = i + 1; j < cb.k; ++j) {
      EXPECT_FALSE(std::equal(cb.centroid(i).begin(), cb.centroid(i).end(),
                              cb.centroid(j).begin()));
    }
  }
}

TEST(TrainCodebook, RecoversSeparatedBlobs) {
  const double spread = 0.05;
  auto blobs = make_blobs(8, 3, 200, spread, 21);
  auto cb = train_codebook(blobs.points, 3, {.k = 8, .seed = 5});
  std::map<int, std::map<std::uint32_t, int>> votes;
  for (std::size_t i = 0; i < blobs.label.size(); ++i) {
    auto w = assign_words(std::span(blobs.points).subspan(i * 3, 3), cb, 1);
    ++votes[blobs.label[i]][w.word_ids[0]];
  }
  std::size_t agree = 0;
  std::set<std::uint32_t> used;
  for (auto& [label, m] : votes) {
    auto best = std::max_element(m.begin(), m.end(),
                                 [](auto& a, auto& b) { return a.second < b.second; });
    agree += static_cast<std::size_t>(best->second);
    used.insert(best->first);
  }
  EXPECT_EQ(used.size(), 8u);
  EXPECT_GE(static_cast<double>(agree) / blobs.label.size(), 0.99);
  for (std::size_t c = 0; c < 8; ++c) {
    double best = 1e300;
    for (std::size_t i = 0; i < cb.k; ++i) {
      double d = 0;
      for (std::size_t j = 0; j < 3; ++j) d += std::pow(cb.centroid(i)[j] - blobs.centers[c][j], 2);
      best = std::min(best, std::sqrt(d));
    }
    EXPECT_LT(best, 3 * spread);
  }
}

Codebook random_codebook(std::uint32_t k, std::uint32_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Codebook cb;
  cb.k = k;
  cb.dim = dim;
  cb.centroids.resize(static_cast<std::size_t>(k) * dim);
  for (auto& v : cb.centroids) v = u(rng);
  return cb;
}

TEST(AssignWords, ExactCentroid) {
  auto cb = random_codebook(10, 5, 1);
  auto w = assign_words(cb.centroid(7), cb, 1);
  EXPECT_EQ(w.word_ids, std::vector<std::uint32_t>{7});
  EXPECT_EQ(w.distances, std::vector<double>{0.0});
}

TEST(AssignWords, MaEqualsKListsEverything) {
  auto cb = random_codebook(10, 5, 2);
  std::vector<double> d(5, 0.5);
  auto w = assign_words(d, cb, 10);
  auto ids = w.word_ids;
  std::sort(ids.begin(), ids.end());
  std::vector<std::uint32_t> all(10);
  std::iota(all.begin(), all.end(), 0u);
  EXPECT_EQ(ids, all);
  EXPECT_TRUE(std::is_sorted(w.distances.begin(), w.distances.end()));
  EXPECT_THROW(assign_words(d, cb, 11), ConfigError);
  EXPECT_THROW(assign_words(d, cb, 0), ConfigError);
}

TEST(AssignWords, MatchesExhaustiveSort) {
  auto cb = random_codebook(10, 11, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> d(11);
    for (auto& x : d) x = u(rng);
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::uint32_t c = 0; c < 10; ++c) {
      double s = 0;
      for (std::size_t j = 0; j < 11; ++j) s += (d[j] - cb.centroid(c)[j]) * (d[j] - cb.centroid(c)[j]);
      all.emplace_back(s, c);
    }
    std::sort(all.begin(), all.end());
    auto w = assign_words(d, cb, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      ASSERT_EQ(w.word_ids[i], all[i].second);
      ASSERT_NEAR(w.distances[i], std::sqrt(all[i].first), 1e-12);
    }
  }
}

TEST(AssignWords, TiesPreferLowerId) {
  Codebook cb;
  cb.k = 3;
  cb.dim = 1;
  cb.centroids = {2.0, 0.0, 2.0};
  auto w = assign_words(std::vector<double>{1.0}, cb, 3);
  EXPECT_EQ(w.word_ids, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(CodebookFile, RoundTrip) {
  testing::TempDir dir("cb");
  auto blobs = make_blobs(5, 3, 20, 0.1, 7);
  auto cb = train_codebook(blobs.points, 3, {.k = 5, .seed = 17});
  save_codebook(cb, dir.path() / "c.bowc");
  auto back = load_codebook(dir.path() / "c.bowc");
  EXPECT_EQ(back.k, cb.k);
  EXPECT_EQ(back.dim, cb.dim);
  EXPECT_EQ(back.centroids, cb.centroids);
  EXPECT_EQ(back.meta.seed, 17u);
  EXPECT_EQ(back.meta.objective, cb.meta.objective);
  std::ofstream(dir.path() / "bad.bowc") << "NOPE";
  EXPECT_THROW(load_codebook(dir.path() / "bad.bowc"), DataError);
}

}  // namespace
}  // namespace bowreid
