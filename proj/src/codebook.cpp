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

#include "bowreid/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <string>

#include "bowreid/binary_io.hpp"
#include "bowreid/error.hpp"
#include "bowreid/kernels.hpp"

namespace bowreid {

namespace {

constexpr std::string_view kMagic = "BOWC";
constexpr std::uint16_t kVersion = 1;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> kmeanspp_init(std::span<const double> x, std::size_t n, std::size_t dim,
                                  std::size_t k, std::mt19937_64& rng) {
  std::vector<double> centroids(k * dim);
  std::size_t first = static_cast<std::size_t>(rng() % n);
  std::copy_n(x.data() + first * dim, dim, centroids.data());

  std::vector<double> d2(n);
  const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) {
    d2[i] = kernels::squared_distance(x.data() + i * dim, centroids.data(), dim);
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (!(total > 0.0)) {
      throw DataError("k-means: fewer than k=" + std::to_string(k) + " distinct descriptors");
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    double* dst = centroids.data() + c * dim;
    std::copy_n(x.data() + pick * dim, dim, dst);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
      d2[i] = std::min(d2[i], kernels::squared_distance(x.data() + i * dim, dst, dim));
    }
  }
  return centroids;
}

}  // namespace

Codebook train_codebook(std::span<const double> descriptors, std::size_t dim,
                        const KMeansOptions& opts) {
  if (dim == 0) throw DataError("k-means: descriptor dimension is zero");
  if (opts.k == 0) throw ConfigError("k-means: k must be >= 1");
  if (descriptors.size() % dim != 0) throw DataError("k-means: ragged descriptor array");
  const std::size_t n = descriptors.size() / dim;
  const std::size_t k = opts.k;
  if (n < k) {
    throw DataError("k-means: " + std::to_string(n) + " descriptors for k=" +
                    std::to_string(k));
  }
  for (double v : descriptors) {
    if (!std::isfinite(v)) throw DataError("k-means: non-finite descriptor value");
  }

  std::mt19937_64 rng(opts.seed);
  std::vector<double> centroids = kmeanspp_init(descriptors, n, dim, k, rng);

  Codebook cb;
  cb.k = static_cast<std::uint32_t>(k);
  cb.dim = static_cast<std::uint32_t>(dim);
  cb.meta.seed = opts.seed;

  std::vector<std::uint32_t> labels(n);
  std::vector<double> dist2(n);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);

  for (std::uint32_t it = 0; it < opts.max_iter; ++it) {
    kernels::parallel::assign_nearest(descriptors, centroids, dim, labels, dist2);
    double objective = 0.0;
    for (double v : dist2) objective += v;
    cb.meta.objective_history.push_back(objective);

    // Sums are reduced in point order so the result does not depend on the
    // thread count.
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = descriptors.data() + i * dim;
      double* s = sums.data() + labels[i] * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += p[j];
      ++counts[labels[i]];
    }

    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double* cen = centroids.data() + c * dim;
      std::vector<double> next(dim);
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < dim; ++j) {
          next[j] = sums[c * dim + j] / static_cast<double>(counts[c]);
        }
      } else {
        auto far = static_cast<std::size_t>(
            std::max_element(dist2.begin(), dist2.end()) - dist2.begin());
        std::copy_n(descriptors.data() + far * dim, dim, next.data());
        dist2[far] = 0.0;
      }
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        d += (next[j] - cen[j]) * (next[j] - cen[j]);
        cen[j] = next[j];
      }
      movement += std::sqrt(d);
    }
    cb.meta.iterations = it + 1;
    if (movement / static_cast<double>(k) < opts.tol) break;
  }

  for (double& v : centroids) v = static_cast<double>(static_cast<float>(v));
  kernels::parallel::assign_nearest(descriptors, centroids, dim, labels, dist2);
  cb.meta.objective = 0.0;
  for (double v : dist2) cb.meta.objective += v;
  cb.centroids = std::move(centroids);
  return cb;
}

WordAssignment assign_words(std::span<const double> desc, const Codebook& cb, std::size_t ma) {
  if (desc.size() != cb.dim) {
    throw DataError("assign_words: descriptor has dimension " + std::to_string(desc.size()) +
                    ", codebook has " + std::to_string(cb.dim));
  }
  if (ma < 1 || ma > cb.k) {
    throw ConfigError("assign_words: MA=" + std::to_string(ma) + " outside [1, " +
                      std::to_string(cb.k) + "]");
  }
  std::vector<double> d2(cb.k);
  for (std::size_t c = 0; c < cb.k; ++c) {
    d2[c] = kernels::squared_distance(desc.data(), cb.centroids.data() + c * cb.dim, cb.dim);
  }
  std::vector<std::uint32_t> order(cb.k);
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ma), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
                    });
  WordAssignment out;
  out.word_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ma));
  out.distances.reserve(ma);
  for (auto w : out.word_ids) out.distances.push_back(std::sqrt(d2[w]));
  return out;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write codebook " + path.string());
  io::write_magic(out, kMagic);
  io::write_pod<std::uint16_t>(out, kVersion);
  io::write_pod<std::uint32_t>(out, cb.k);
  io::write_pod<std::uint32_t>(out, cb.dim);
  for (double v : cb.centroids) io::write_pod<float>(out, static_cast<float>(v));
  io::write_pod<std::uint64_t>(out, cb.meta.seed);
  io::write_pod<double>(out, cb.meta.objective);
  if (!out) throw DataError("failed writing codebook " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open codebook " + path.string());
  io::expect_magic(in, kMagic);
  auto version = io::read_pod<std::uint16_t>(in, "codebook version");
  if (version != kVersion) {
    throw DataError("unsupported codebook version " + std::to_string(version));
  }
  Codebook cb;
  cb.k = io::read_pod<std::uint32_t>(in, "codebook k");
  cb.dim = io::read_pod<std::uint32_t>(in, "codebook d");
  if (cb.k == 0 || cb.dim == 0) throw DataError("codebook with zero k or d");
  cb.centroids.resize(static_cast<std::size_t>(cb.k) * cb.dim);
  for (double& v : cb.centroids) {
    v = io::read_pod<float>(in, "codebook centroids");
    if (!std::isfinite(v)) throw DataError("codebook contains a non-finite centroid value");
  }
  cb.meta.seed = io::read_pod<std::uint64_t>(in, "codebook seed");
  cb.meta.objective = io::read_pod<double>(in, "codebook objective");
  return cb;
}

void export_codebook_text(const Codebook& cb, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(9);
  for (std::size_t c = 0; c < cb.k; ++c) {
    for (std::size_t j = 0; j < cb.dim; ++j) out << (j ? " " : "") << cb.centroids[c * cb.dim + j];
    out << '\n';
  }
}

}  // namespace bowreid
