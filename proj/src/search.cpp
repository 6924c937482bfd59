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

#include "bowreid/search.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "bowreid/binary_io.hpp"
#include "bowreid/error.hpp"
#include "bowreid/kernels.hpp"

namespace bowreid {

namespace {

constexpr std::uint16_t kVersion = 1;

std::vector<float> to_f32(std::span<const double> v) {
  return std::vector<float>(v.begin(), v.end());
}

void score_rows(const GalleryIndex::Channel& ch, std::span<const float> q, std::span<double> out,
                Exec exec) {
  if (exec == Exec::kParallel) {
    kernels::parallel::score_all(ch.rows, ch.dim, q, out);
  } else {
    kernels::serial::score_all(ch.rows, ch.dim, q, out);
  }
}

void check_weights(const GalleryIndex& index, const ChannelWeights& weights) {
  if (weights.size() != index.num_channels()) {
    throw ConfigError("expected " + std::to_string(index.num_channels()) +
                      " channel weights, got " + std::to_string(weights.size()));
  }
  bool any = false;
  for (double w : weights) {
    if (w < 0) throw ConfigError("channel weights must be non-negative");
    any = any || w > 0;
  }
  if (!any) throw ConfigError("at least one channel weight must be positive");
}

}  // namespace

std::size_t GalleryIndex::channel_index(const std::string& name) const {
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    if (channels_[c].name == name) return c;
  }
  throw ConfigError("index has no channel '" + name + "'");
}

IndexStats GalleryIndex::stats() const {
  IndexStats s;
  s.items = metas_.size();
  s.channels = channels_.size();
  std::size_t used = 0, reserved = 0;
  for (const auto& ch : channels_) {
    used += ch.rows.size() * sizeof(float);
    reserved += ch.rows.capacity() * sizeof(float);
    s.zero_signatures += static_cast<std::size_t>(std::count(ch.zero.begin(), ch.zero.end(), 1));
  }
  s.bytes = reserved + metas_.capacity() * sizeof(ImageMeta);
  s.load_factor = reserved == 0 ? 1.0 : static_cast<double>(used) / static_cast<double>(reserved);
  return s;
}

GalleryIndex build_index(std::vector<ChannelSignatures> channels, std::vector<ImageMeta> metas) {
  GalleryIndex index;
  for (auto& cs : channels) {
    if (cs.sigs.size() != metas.size()) {
      throw DataError("build_index: channel '" + cs.name + "' has " +
                      std::to_string(cs.sigs.size()) + " signatures for " +
                      std::to_string(metas.size()) + " images");
    }
    GalleryIndex::Channel ch;
    ch.name = cs.name;
    if (!cs.sigs.empty()) {
      ch.k = cs.sigs.front().k;
      ch.stripes = cs.sigs.front().stripes;
      ch.dim = cs.sigs.front().dim();
    }
    ch.rows.reserve(ch.dim * cs.sigs.size());
    for (std::size_t i = 0; i < cs.sigs.size(); ++i) {
      const auto& s = cs.sigs[i];
      if (s.stage != Stage::kFinal) {
        throw InvariantError("build_index: gallery signatures must be final");
      }
      if (s.dim() != ch.dim) throw DataError("build_index: mixed signature dimensions");
      if (s.image_id != metas[i].image_id) {
        throw DataError("build_index: signature " + std::to_string(i) + " is image " +
                        std::to_string(s.image_id) + ", meta is image " +
                        std::to_string(metas[i].image_id));
      }
      ch.rows.insert(ch.rows.end(), s.values.begin(), s.values.end());
      ch.zero.push_back(s.zero ? 1 : 0);
    }
    cs.sigs.clear();
    index.channels_.push_back(std::move(ch));
  }
  index.metas_ = std::move(metas);
  return index;
}

void save_index(const GalleryIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write index " + path.string());
  io::write_magic(out, "BOWX");
  io::write_pod<std::uint16_t>(out, kVersion);
  io::write_pod<std::uint64_t>(out, index.size());
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(index.num_channels()));
  for (const auto& im : index.metas()) {
    io::write_pod<std::uint64_t>(out, im.image_id);
    io::write_pod<std::int32_t>(out, im.person_id);
    io::write_pod<std::int32_t>(out, im.camera_id);
    io::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(im.quality));
    io::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(im.role));
    io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(im.path.size()));
    out.write(im.path.data(), static_cast<std::streamsize>(im.path.size()));
  }
  for (std::size_t c = 0; c < index.num_channels(); ++c) {
    const auto& ch = index.channel(c);
    io::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(ch.name.size()));
    out.write(ch.name.data(), static_cast<std::streamsize>(ch.name.size()));
    io::write_pod<std::uint32_t>(out, ch.k);
    io::write_pod<std::uint32_t>(out, ch.stripes);
    out.write(reinterpret_cast<const char*>(ch.zero.data()),
              static_cast<std::streamsize>(ch.zero.size()));
    out.write(reinterpret_cast<const char*>(ch.rows.data()),
              static_cast<std::streamsize>(ch.rows.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing index " + path.string());
}

GalleryIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index " + path.string());
  io::expect_magic(in, "BOWX");
  if (io::read_pod<std::uint16_t>(in, "version") != kVersion) {
    throw DataError("unsupported index version in " + path.string());
  }
  GalleryIndex index;
  const auto n = io::read_pod<std::uint64_t>(in, "item count");
  const auto nc = io::read_pod<std::uint32_t>(in, "channel count");
  index.metas_.resize(n);
  for (auto& im : index.metas_) {
    im.image_id = io::read_pod<std::uint64_t>(in, "image id");
    im.person_id = io::read_pod<std::int32_t>(in, "person id");
    im.camera_id = io::read_pod<std::int32_t>(in, "camera id");
    im.quality = static_cast<Quality>(io::read_pod<std::uint8_t>(in, "quality"));
    im.role = static_cast<Role>(io::read_pod<std::uint8_t>(in, "role"));
    im.path.resize(io::read_pod<std::uint32_t>(in, "path length"));
    if (!in.read(im.path.data(), static_cast<std::streamsize>(im.path.size()))) {
      throw DataError("truncated index " + path.string());
    }
  }
  for (std::uint32_t c = 0; c < nc; ++c) {
    GalleryIndex::Channel ch;
    ch.name.resize(io::read_pod<std::uint8_t>(in, "channel name length"));
    in.read(ch.name.data(), static_cast<std::streamsize>(ch.name.size()));
    ch.k = io::read_pod<std::uint32_t>(in, "k");
    ch.stripes = io::read_pod<std::uint32_t>(in, "M");
    ch.dim = static_cast<std::size_t>(ch.k) * ch.stripes;
    ch.zero.resize(n);
    ch.rows.resize(n * ch.dim);
    in.read(reinterpret_cast<char*>(ch.zero.data()), static_cast<std::streamsize>(n));
    if (!in.read(reinterpret_cast<char*>(ch.rows.data()),
                 static_cast<std::streamsize>(ch.rows.size() * sizeof(float)))) {
      throw DataError("truncated index " + path.string());
    }
    index.channels_.push_back(std::move(ch));
  }
  return index;
}

std::vector<double> score_channel(const GalleryIndex& index, std::size_t c,
                                  std::span<const double> q, Exec exec) {
  const auto& ch = index.channel(c);
  if (index.size() > 0 && q.size() != ch.dim) {
    throw DataError("query has dimension " + std::to_string(q.size()) + ", channel '" +
                    ch.name + "' has " + std::to_string(ch.dim));
  }
  std::vector<double> scores(index.size());
  if (index.size() == 0) return scores;
  const auto qf = to_f32(q);
  score_rows(ch, qf, scores, exec);
  return scores;
}

RankList rank_scores(const GalleryIndex& index, std::span<const double> scores) {
  if (scores.size() != index.size()) {
    throw InvariantError("rank_scores: score count does not match the gallery");
  }
  RankList list;
  list.entries.resize(scores.size());
  const auto& metas = index.metas();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    list.entries[i] = {i, metas[i].image_id, scores[i]};
  }
  std::sort(list.entries.begin(), list.entries.end(), [](const RankEntry& a, const RankEntry& b) {
    return a.score > b.score || (a.score == b.score && a.image_id < b.image_id);
  });
  return list;
}

RankList query(const GalleryIndex& index, const Signature& q, std::size_t channel, Exec exec) {
  if (q.stage != Stage::kFinal) throw InvariantError("query: signature must be final");
  return rank_scores(index, score_channel(index, channel, q.values, exec));
}

std::vector<double> fuse_channels(std::span<const double> a, std::span<const double> b,
                                  double w_a, double w_b) {
  if (a.size() != b.size()) throw DataError("fuse_channels: score lists differ in length");
  if (w_a < 0 || w_b < 0 || (w_a == 0 && w_b == 0)) {
    throw ConfigError("fuse_channels: weights must be non-negative and not both zero");
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = w_a * a[i] + w_b * b[i];
  return out;
}

std::vector<double> score_fused(const GalleryIndex& index, std::span<const Signature> q,
                                const ChannelWeights& weights, Exec exec) {
  check_weights(index, weights);
  if (q.size() != index.num_channels()) {
    throw DataError("score_fused: need one query signature per channel");
  }
  std::vector<double> fused(index.size(), 0.0);
  for (std::size_t c = 0; c < index.num_channels(); ++c) {
    if (weights[c] == 0) continue;
    if (q[c].stage != Stage::kFinal) throw InvariantError("query: signature must be final");
    auto s = score_channel(index, c, q[c].values, exec);
    for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += weights[c] * s[i];
  }
  return fused;
}

RankList rerank(const GalleryIndex& index, const RankList& initial, std::size_t t,
                const ChannelWeights& weights, Exec exec) {
  if (t == 0) return initial;
  check_weights(index, weights);
  if (t > initial.entries.size()) {
    throw ConfigError("rerank: T=" + std::to_string(t) + " exceeds the gallery size " +
                      std::to_string(initial.entries.size()));
  }
  if (initial.entries.size() != index.size()) {
    throw InvariantError("rerank: initial list does not cover the gallery");
  }
  std::vector<double> scores(index.size());
  for (const auto& e : initial.entries) scores[e.position] = e.score;

  std::vector<double> expanded(index.size());
  for (std::size_t i = 1; i <= t; ++i) {
    const std::size_t r = initial.entries[i - 1].position;
    std::fill(expanded.begin(), expanded.end(), 0.0);
    for (std::size_t c = 0; c < index.num_channels(); ++c) {
      if (weights[c] == 0) continue;
      std::vector<double> s(index.size());
      score_rows(index.channel(c), index.row(c, r), s, exec);
      for (std::size_t g = 0; g < s.size(); ++g) expanded[g] += weights[c] * s[g];
    }
    const double w = 1.0 / static_cast<double>(i + 1);
    for (std::size_t g = 0; g < scores.size(); ++g) scores[g] += w * expanded[g];
  }
  RankList out = rank_scores(index, scores);
  out.query = initial.query;
  return out;
}

void write_ranklist_text(const RankList& list, std::ostream& os, std::size_t limit) {
  const std::size_t n = limit == 0 ? list.entries.size() : std::min(limit, list.entries.size());
  char buf[64];
  for (std::size_t r = 0; r < n; ++r) {
    std::snprintf(buf, sizeof buf, "%zu %" PRIu64 " %.6f\n", r + 1, list.entries[r].image_id,
                  list.entries[r].score);
    os << buf;
  }
}

void save_ranklist(const RankList& list, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  io::write_magic(out, "BOWR");
  io::write_pod<std::uint16_t>(out, kVersion);
  io::write_pod<std::int32_t>(out, list.query.person_id);
  io::write_pod<std::int32_t>(out, list.query.camera_id);
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(list.query.query_image_ids.size()));
  for (auto id : list.query.query_image_ids) io::write_pod<std::uint64_t>(out, id);
  io::write_pod<std::uint64_t>(out, list.entries.size());
  for (const auto& e : list.entries) {
    io::write_pod<std::uint64_t>(out, e.position);
    io::write_pod<std::uint64_t>(out, e.image_id);
    io::write_pod<double>(out, e.score);
  }
}

RankList load_ranklist(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  io::expect_magic(in, "BOWR");
  if (io::read_pod<std::uint16_t>(in, "version") != kVersion) {
    throw DataError("unsupported rank list version in " + path.string());
  }
  RankList list;
  list.query.person_id = io::read_pod<std::int32_t>(in, "person");
  list.query.camera_id = io::read_pod<std::int32_t>(in, "camera");
  list.query.query_image_ids.resize(io::read_pod<std::uint32_t>(in, "query count"));
  for (auto& id : list.query.query_image_ids) id = io::read_pod<std::uint64_t>(in, "query id");
  list.entries.resize(io::read_pod<std::uint64_t>(in, "entry count"));
  for (auto& e : list.entries) {
    e.position = io::read_pod<std::uint64_t>(in, "position");
    e.image_id = io::read_pod<std::uint64_t>(in, "image id");
    e.score = io::read_pod<double>(in, "score");
  }
  return list;
}

}  // namespace bowreid
