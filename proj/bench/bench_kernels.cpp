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

// Serial vs OpenMP kernels: gallery scoring and nearest-centroid assignment.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "bowreid/kernels.hpp"

namespace {

using namespace bowreid;

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> random_doubles(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <bool Parallel>
void BM_ScoreAll(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 5600;
  const auto rows = random_floats(n * dim, 1);
  const auto q = random_floats(dim, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::score_all(rows, dim, q, out);
    } else {
      kernels::serial::score_all(rows, dim, q, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(rows.size() * sizeof(float)));
}

template <bool Parallel>
void BM_AssignNearest(benchmark::State& state) {
  const std::size_t points = 512 * 64, k = 350, dim = 11;
  const auto pts = random_doubles(points * dim, 3);
  const auto cents = random_doubles(k * dim, 4);
  std::vector<std::uint32_t> labels(points);
  std::vector<double> dist(points);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::assign_nearest(pts, cents, dim, labels, dist);
    } else {
      kernels::serial::assign_nearest(pts, cents, dim, labels, dist);
    }
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * points));
}

BENCHMARK(BM_ScoreAll<false>)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreAll<true>)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignNearest<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignNearest<true>)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
