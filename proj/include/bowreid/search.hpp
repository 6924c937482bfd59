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
#include <string>
#include <vector>

#include "bowreid/dataset.hpp"
#include "bowreid/embedding.hpp"

namespace bowreid {

/// Final signatures of one descriptor channel, aligned with the gallery metas.
struct ChannelSignatures {
  std::string name;
  std::vector<Signature> sigs;
};

struct IndexStats {
  std::size_t items = 0;
  std::size_t channels = 0;
  std::size_t bytes = 0;
  /// Fraction of the allocated signature storage in use.
  double load_factor = 1.0;
  std::size_t zero_signatures = 0;
};

/// Dense, immutable store of gallery signatures (f32, row-major per channel).
class GalleryIndex {
 public:
  struct Channel {
    std::string name;
    std::uint32_t k = 0;
    std::uint32_t stripes = 0;
    std::size_t dim = 0;
    std::vector<float> rows;
    std::vector<std::uint8_t> zero;
  };

  GalleryIndex() = default;

  std::size_t size() const { return metas_.size(); }
  std::size_t num_channels() const { return channels_.size(); }
  const Channel& channel(std::size_t c) const { return channels_.at(c); }
  std::size_t channel_index(const std::string& name) const;
  const std::vector<ImageMeta>& metas() const { return metas_; }
  std::span<const float> row(std::size_t c, std::size_t pos) const {
    const auto& ch = channels_.at(c);
    return {ch.rows.data() + pos * ch.dim, ch.dim};
  }
  IndexStats stats() const;

  friend GalleryIndex build_index(std::vector<ChannelSignatures> channels,
                                  std::vector<ImageMeta> metas);
  friend GalleryIndex load_index(const std::filesystem::path& path);

 private:
  std::vector<Channel> channels_;
  std::vector<ImageMeta> metas_;
};

GalleryIndex build_index(std::vector<ChannelSignatures> channels, std::vector<ImageMeta> metas);

void save_index(const GalleryIndex& index, const std::filesystem::path& path);
GalleryIndex load_index(const std::filesystem::path& path);

struct RankEntry {
  std::size_t position = 0;  // row in the index
  std::uint64_t image_id = 0;
  double score = 0.0;

  bool operator==(const RankEntry&) const = default;
};

/// Every gallery item once, by descending score, ties by ascending image id.
struct RankList {
  QuerySpec query;
  std::vector<RankEntry> entries;
};

enum class Exec { kSerial, kParallel };

/// Exact dot product of `q` against every gallery row of channel `c`.
std::vector<double> score_channel(const GalleryIndex& index, std::size_t c,
                                  std::span<const double> q, Exec exec = Exec::kParallel);

/// Sorts positions by score with the standard tie rule.
RankList rank_scores(const GalleryIndex& index, std::span<const double> scores);

RankList query(const GalleryIndex& index, const Signature& q, std::size_t channel,
               Exec exec = Exec::kParallel);

/// w_a * a + w_b * b.
std::vector<double> fuse_channels(std::span<const double> a, std::span<const double> b,
                                  double w_a, double w_b);

/// Per-channel weights of a score-level fusion; one entry per index channel.
using ChannelWeights = std::vector<double>;

/// Fused scores of one query signature per channel.
std::vector<double> score_fused(const GalleryIndex& index, std::span<const Signature> q,
                                const ChannelWeights& weights, Exec exec = Exec::kParallel);

/// Adds sum_{i=1..T} S(R_i, G) / (i + 1) to each initial score, where R_i is
/// the i-th item of `initial`, then re-sorts.
RankList rerank(const GalleryIndex& index, const RankList& initial, std::size_t t,
                const ChannelWeights& weights, Exec exec = Exec::kParallel);

/// One line per entry: `rank image_id score` (1-based rank, 6 decimals).
void write_ranklist_text(const RankList& list, std::ostream& os, std::size_t limit = 0);
/// "BOWR", u16 version, i32 person, i32 camera, u32 n, n u64 query image
/// ids, u64 count, then (u64 position, u64 image_id, f64 score) per entry.
void save_ranklist(const RankList& list, const std::filesystem::path& path);
RankList load_ranklist(const std::filesystem::path& path);

}  // namespace bowreid
