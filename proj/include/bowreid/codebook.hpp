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
#include <span>
#include <vector>

namespace bowreid {

struct TrainMeta {
  std::uint64_t seed = 0;
  std::uint32_t iterations = 0;
  /// Within-cluster sum of squares of the stored centroids.
  double objective = 0.0;
  /// Objective measured at each Lloyd assignment step.
  std::vector<double> objective_history;
};

/// k visual words of dimension d. Centroid values are f32-representable so a
/// saved and reloaded codebook quantizes identically.
struct Codebook {
  std::uint32_t k = 0;
  std::uint32_t dim = 0;
  std::vector<double> centroids;  // k * dim, row-major
  TrainMeta meta;

  std::span<const double> centroid(std::size_t i) const {
    return {centroids.data() + i * dim, dim};
  }
};

struct KMeansOptions {
  std::uint32_t k = 350;
  std::uint64_t seed = 0;
  std::uint32_t max_iter = 100;
  /// Stop once the mean centroid displacement drops below this.
  double tol = 1e-4;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded
/// with the point farthest from its centroid.
Codebook train_codebook(std::span<const double> descriptors, std::size_t dim,
                        const KMeansOptions& opts);

struct WordAssignment {
  std::vector<std::uint32_t> word_ids;
  std::vector<double> distances;  // Euclidean, ascending
};

/// The `ma` nearest visual words, ties broken by lower word id.
WordAssignment assign_words(std::span<const double> desc, const Codebook& cb, std::size_t ma);

void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);
/// One centroid per line, space separated.
void export_codebook_text(const Codebook& cb, const std::filesystem::path& path);

}  // namespace bowreid
