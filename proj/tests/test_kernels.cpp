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

#include <random>

#include "bowreid/kernels.hpp"

namespace bowreid::kernels {
namespace {

TEST(Kernels, DotMatchesLongDouble) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  for (std::size_t dim : {1u, 7u, 8u, 9u, 63u, 5600u}) {
    std::vector<float> a(dim), b(dim);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    long double ref = 0;
    for (std::size_t i = 0; i < dim; ++i) ref += static_cast<long double>(a[i]) * b[i];
    EXPECT_NEAR(dot(a.data(), b.data(), dim), static_cast<double>(ref), 1e-12);
  }
}

TEST(Kernels, ScoreAllSerialEqualsParallel) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  const std::size_t n = 513, dim = 130;
  std::vector<float> rows(n * dim), q(dim);
  for (auto& x : rows) x = u(rng);
  for (auto& x : q) x = u(rng);
  std::vector<double> s(n), p(n);
  serial::score_all(rows, dim, q, s);
  for (int t : {1, 2, 4}) {
    set_threads(t);
    parallel::score_all(rows, dim, q, p);
    EXPECT_EQ(s, p);
  }
  set_threads(0);
}

TEST(Kernels, AssignSerialEqualsParallel) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 1000, k = 37, dim = 11;
  std::vector<double> pts(n * dim), cents(k * dim);
  for (auto& x : pts) x = u(rng);
  for (auto& x : cents) x = u(rng);
  // a tie: point 0 equidistant to two identical centroids
  std::copy(cents.begin(), cents.begin() + dim, cents.begin() + 5 * dim);
  std::vector<std::uint32_t> ls(n), lp(n);
  std::vector<double> ds(n), dp(n);
  serial::assign_nearest(pts, cents, dim, ls, ds);
  for (int t : {1, 3}) {
    set_threads(t);
    parallel::assign_nearest(pts, cents, dim, lp, dp);
    EXPECT_EQ(ls, lp);
    EXPECT_EQ(ds, dp);
  }
  set_threads(0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = 1e300;
    std::uint32_t arg = 0;
    for (std::uint32_t c = 0; c < k; ++c) {
      double d = 0;
      for (std::size_t j = 0; j < dim; ++j) {
        double t = pts[i * dim + j] - cents[c * dim + j];
        d += t * t;
      }
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    ASSERT_EQ(ls[i], arg);
    ASSERT_NE(ls[i], 5u);
  }
}

}  // namespace
}  // namespace bowreid::kernels
