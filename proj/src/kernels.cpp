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

#include "bowreid/kernels.hpp"

#include <cassert>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bowreid::kernels {

double dot(const float* a, const float* b, std::size_t dim) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (int l = 0; l < 8; ++l) {
      acc[l] += static_cast<double>(a[i + l]) * static_cast<double>(b[i + l]);
    }
  }
  for (; i < dim; ++i) acc[0] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

std::uint32_t nearest_centroid(const double* point, const double* centroids, std::size_t k,
                               std::size_t dim, double* best_dist2) {
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    double d = squared_distance(point, centroids + c * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  if (best_dist2) *best_dist2 = best_d;
  return best;
}

namespace serial {

void score_all(std::span<const float> rows, std::size_t dim, std::span<const float> query,
               std::span<double> out) {
  assert(query.size() == dim && rows.size() == out.size() * dim);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = dot(rows.data() + i * dim, query.data(), dim);
  }
}

void assign_nearest(std::span<const double> points, std::span<const double> centroids,
                    std::size_t dim, std::span<std::uint32_t> labels,
                    std::span<double> dist2) {
  const std::size_t k = centroids.size() / dim;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = nearest_centroid(points.data() + i * dim, centroids.data(), k, dim, &dist2[i]);
  }
}

}  // namespace serial

namespace parallel {

void score_all(std::span<const float> rows, std::size_t dim, std::span<const float> query,
               std::span<double> out) {
  assert(query.size() == dim && rows.size() == out.size() * dim);
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = dot(rows.data() + i * dim, query.data(), dim);
  }
}

void assign_nearest(std::span<const double> points, std::span<const double> centroids,
                    std::size_t dim, std::span<std::uint32_t> labels,
                    std::span<double> dist2) {
  const std::size_t k = centroids.size() / dim;
  const auto n = static_cast<std::int64_t>(labels.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    labels[i] = nearest_centroid(points.data() + i * dim, centroids.data(), k, dim, &dist2[i]);
  }
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace bowreid::kernels
