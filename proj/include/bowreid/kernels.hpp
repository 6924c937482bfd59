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

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; both call
// the same per-item routine so their outputs are bit-identical.

#include <cstddef>
#include <cstdint>
#include <span>

namespace bowreid::kernels {

/// Dot product of two f32 rows, accumulated in f64 over eight lanes.
double dot(const float* a, const float* b, std::size_t dim);

/// Squared Euclidean distance, sequential f64 accumulation.
double squared_distance(const double* a, const double* b, std::size_t dim);

/// Index of the nearest of `k` centroids (lowest index on ties) and its
/// squared distance.
std::uint32_t nearest_centroid(const double* point, const double* centroids, std::size_t k,
                               std::size_t dim, double* best_dist2);

namespace serial {

/// out[i] = <rows[i], query> for a row-major (n x dim) matrix.
void score_all(std::span<const float> rows, std::size_t dim, std::span<const float> query,
               std::span<double> out);

/// Hard assignment of each point to its nearest centroid.
void assign_nearest(std::span<const double> points, std::span<const double> centroids,
                    std::size_t dim, std::span<std::uint32_t> labels,
                    std::span<double> dist2);

}  // namespace serial

namespace parallel {

void score_all(std::span<const float> rows, std::size_t dim, std::span<const float> query,
               std::span<double> out);

void assign_nearest(std::span<const double> points, std::span<const double> centroids,
                    std::size_t dim, std::span<std::uint32_t> labels,
                    std::span<double> dist2);

}  // namespace parallel

/// Worker count used by the parallel kernels (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace bowreid::kernels
