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
#include <string_view>
#include <vector>

#include "bowreid/codebook.hpp"
#include "bowreid/descriptor.hpp"

namespace bowreid {

/// Signature processing stages. Each transform accepts exactly one input
/// stage, so the order raw_tf -> sqrt_tf -> weighted -> final is enforced.
enum class Stage : std::uint8_t { kRawTf, kSqrtTf, kWeighted, kFinal };
std::string_view to_string(Stage s);

/// Concatenation of M per-stripe k-bin histograms (stripe-major).
struct Signature {
  std::uint64_t image_id = 0;
  std::uint32_t k = 0;
  std::uint32_t stripes = 1;
  Stage stage = Stage::kRawTf;
  /// Set when a final-stage vector is exactly zero and cannot be normalized.
  bool zero = false;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

enum class IdfVariant { kStandard, kAvg };
std::string_view to_string(IdfVariant v);
IdfVariant parse_idf_variant(std::string_view s);

struct IdfModel {
  std::vector<double> weights;  // one per visual word
  std::size_t gallery_size = 0;
  IdfVariant variant = IdfVariant::kStandard;
};

/// Training-set mean of weighted signatures (negative evidence).
struct MeanVector {
  std::vector<double> values;
  std::size_t count = 0;
};

enum class WordWeighting { kEqual, kDistance };
WordWeighting parse_word_weighting(std::string_view s);

struct TfOptions {
  std::uint32_t stripes = 16;
  bool use_mask = true;
  WordWeighting weighting = WordWeighting::kEqual;
  /// Bandwidth of exp(-d^2 / sigma^2) in distance weighting.
  double distance_sigma = 0.1;
};

/// floor(y * M / H), clamped to M - 1.
std::uint32_t stripe_of(double center_y, int height, std::uint32_t stripes);

/// Each of a patch's words gains the patch's mask weight (1 with the mask
/// off) in the patch's stripe.
Signature accumulate_tf(const PatchGrid& grid, std::span<const WordAssignment> assignments,
                        std::uint32_t k, const TfOptions& opts);

/// Quantizes every patch with `ma` words and accumulates the histogram.
Signature embed_raw(const PatchGrid& grid, const Codebook& cb, std::size_t ma,
                    const TfOptions& opts);

/// t -> t / sqrt(t).
Signature apply_burstiness(const Signature& sig);

/// Standard: ln(N / max(n_i, 0.5)) with n_i the number of gallery images
/// containing word i in any stripe. Avg: n_i counts each containing image
/// with weight (mean image mass / image mass).
IdfModel compute_idf(std::span<const Signature> gallery_tf, IdfVariant variant);

Signature apply_idf(const Signature& sig, const IdfModel& idf);

MeanVector compute_training_mean(std::span<const Signature> train);

/// Subtract the mean then l2-normalize.
Signature finalize(const Signature& sig, const MeanVector& mean);

enum class PoolMode { kAvg, kMax };
std::string_view to_string(PoolMode m);
PoolMode parse_pool_mode(std::string_view s);

Signature pool_queries(std::span<const Signature> sigs, PoolMode mode);

/// Convenience: burstiness, IDF, mean subtraction and normalization.
Signature weight_and_finalize(const Signature& raw, const IdfModel& idf, const MeanVector& mean);

// Signature store: "BOWS", u16 version, u64 count, u32 k, u32 M, then per
// record u64 image_id, u8 flag (bit0 = zero), k*M f32. Loaded records are
// tagged final.
void save_signatures(std::span<const Signature> sigs, const std::filesystem::path& path);
std::vector<Signature> load_signatures(const std::filesystem::path& path);

// Sidecars use the same framing with their own magic and f64 payloads:
// "BOWI" (u64 N, u32 k, u8 variant, k f64) and "BOWM" (u64 count, u32 dim,
// dim f64).
void save_idf(const IdfModel& idf, const std::filesystem::path& path);
IdfModel load_idf(const std::filesystem::path& path);
void save_mean(const MeanVector& mean, const std::filesystem::path& path);
MeanVector load_mean(const std::filesystem::path& path);

}  // namespace bowreid
