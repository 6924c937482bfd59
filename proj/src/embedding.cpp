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

#include "bowreid/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "bowreid/binary_io.hpp"
#include "bowreid/error.hpp"

namespace bowreid {

namespace {

constexpr std::uint16_t kVersion = 1;

void require_stage(const Signature& sig, Stage expected, std::string_view op) {
  if (sig.stage != expected) {
    throw InvariantError(std::string(op) + ": expected a " + std::string(to_string(expected)) +
                         " signature, got " + std::string(to_string(sig.stage)));
  }
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void normalize_in_place(Signature& sig) {
  const double norm = l2_norm(sig.values);
  sig.zero = norm == 0.0;
  if (!sig.zero) {
    for (double& v : sig.values) v /= norm;
  }
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kRawTf: return "raw_tf";
    case Stage::kSqrtTf: return "sqrt_tf";
    case Stage::kWeighted: return "weighted";
    case Stage::kFinal: return "final";
  }
  return "?";
}

std::string_view to_string(IdfVariant v) {
  return v == IdfVariant::kStandard ? "standard" : "avg";
}

IdfVariant parse_idf_variant(std::string_view s) {
  if (s == "standard") return IdfVariant::kStandard;
  if (s == "avg") return IdfVariant::kAvg;
  throw ConfigError("unknown idf variant '" + std::string(s) + "'");
}

WordWeighting parse_word_weighting(std::string_view s) {
  if (s == "equal") return WordWeighting::kEqual;
  if (s == "distance") return WordWeighting::kDistance;
  throw ConfigError("unknown MA weighting '" + std::string(s) + "'");
}

std::string_view to_string(PoolMode m) { return m == PoolMode::kAvg ? "avg" : "max"; }

PoolMode parse_pool_mode(std::string_view s) {
  if (s == "avg") return PoolMode::kAvg;
  if (s == "max") return PoolMode::kMax;
  throw ConfigError("unknown pooling mode '" + std::string(s) + "'");
}

std::uint32_t stripe_of(double center_y, int height, std::uint32_t stripes) {
  if (stripes == 0 || height <= 0) throw ConfigError("stripe_of: M and H must be positive");
  if (center_y <= 0) return 0;
  auto s = static_cast<std::uint64_t>(std::floor(center_y * stripes / height));
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(s, stripes - 1));
}

Signature accumulate_tf(const PatchGrid& grid, std::span<const WordAssignment> assignments,
                        std::uint32_t k, const TfOptions& opts) {
  if (assignments.size() != grid.size()) {
    throw InvariantError("accumulate_tf: " + std::to_string(assignments.size()) +
                         " assignments for " + std::to_string(grid.size()) + " patches");
  }
  if (opts.stripes == 0) throw ConfigError("stripe count must be >= 1");
  Signature sig;
  sig.k = k;
  sig.stripes = opts.stripes;
  sig.stage = Stage::kRawTf;
  sig.values.assign(static_cast<std::size_t>(k) * opts.stripes, 0.0);
  const double inv_sigma2 = 1.0 / (opts.distance_sigma * opts.distance_sigma);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto& a = assignments[p];
    const double w = opts.use_mask ? grid.weights[p] : 1.0;
    const std::size_t base =
        static_cast<std::size_t>(stripe_of(grid.patches[p].center_y, grid.height, opts.stripes)) *
        k;
    for (std::size_t j = 0; j < a.word_ids.size(); ++j) {
      if (a.word_ids[j] >= k) {
        throw DataError("accumulate_tf: word id " + std::to_string(a.word_ids[j]) +
                        " out of range for k=" + std::to_string(k));
      }
      double inc = w;
      if (opts.weighting == WordWeighting::kDistance) {
        inc *= std::exp(-a.distances[j] * a.distances[j] * inv_sigma2);
      }
      sig.values[base + a.word_ids[j]] += inc;
    }
  }
  return sig;
}

Signature embed_raw(const PatchGrid& grid, const Codebook& cb, std::size_t ma,
                    const TfOptions& opts) {
  std::vector<WordAssignment> assignments;
  assignments.reserve(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    assignments.push_back(assign_words(grid.descriptor(p), cb, ma));
  }
  return accumulate_tf(grid, assignments, cb.k, opts);
}

Signature apply_burstiness(const Signature& sig) {
  require_stage(sig, Stage::kRawTf, "apply_burstiness");
  Signature out = sig;
  for (double& v : out.values) {
    if (v < 0.0) throw DataError("apply_burstiness: negative term frequency");
    if (v > 0.0) v = v / std::sqrt(v);
  }
  out.stage = Stage::kSqrtTf;
  return out;
}

IdfModel compute_idf(std::span<const Signature> gallery_tf, IdfVariant variant) {
  if (gallery_tf.empty()) throw DataError("compute_idf: empty gallery");
  const std::uint32_t k = gallery_tf.front().k;
  const std::size_t n = gallery_tf.size();

  std::vector<double> mass(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = gallery_tf[j];
    if (s.stage != Stage::kRawTf && s.stage != Stage::kSqrtTf) {
      throw InvariantError("compute_idf: expects term-frequency signatures");
    }
    if (s.k != k || s.values.size() != static_cast<std::size_t>(k) * s.stripes) {
      throw DataError("compute_idf: inconsistent signature dimensions");
    }
    for (double v : s.values) mass[j] += v;
  }
  double mean_mass = 0.0;
  for (double m : mass) mean_mass += m;
  mean_mass /= static_cast<double>(n);

  std::vector<double> doc_freq(k, 0.0);
  std::vector<char> present(k);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = gallery_tf[j];
    std::fill(present.begin(), present.end(), 0);
    for (std::size_t m = 0; m < s.stripes; ++m) {
      for (std::size_t i = 0; i < k; ++i) {
        if (s.values[m * k + i] != 0.0) present[i] = 1;
      }
    }
    const double vote =
        variant == IdfVariant::kStandard || mass[j] == 0.0 ? 1.0 : mean_mass / mass[j];
    for (std::size_t i = 0; i < k; ++i) {
      if (present[i]) doc_freq[i] += vote;
    }
  }

  IdfModel idf;
  idf.gallery_size = n;
  idf.variant = variant;
  idf.weights.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    idf.weights[i] = std::log(static_cast<double>(n) / std::max(doc_freq[i], 0.5));
  }
  return idf;
}

Signature apply_idf(const Signature& sig, const IdfModel& idf) {
  require_stage(sig, Stage::kSqrtTf, "apply_idf");
  if (idf.weights.size() != sig.k || sig.values.size() != static_cast<std::size_t>(sig.k) * sig.stripes) {
    throw DataError("apply_idf: IDF has " + std::to_string(idf.weights.size()) +
                    " words, signature has k=" + std::to_string(sig.k));
  }
  Signature out = sig;
  for (std::size_t m = 0; m < sig.stripes; ++m) {
    for (std::size_t i = 0; i < sig.k; ++i) out.values[m * sig.k + i] *= idf.weights[i];
  }
  out.stage = Stage::kWeighted;
  return out;
}

MeanVector compute_training_mean(std::span<const Signature> train) {
  if (train.empty()) throw DataError("compute_training_mean: no training signatures");
  const std::size_t dim = train.front().dim();
  MeanVector mean;
  mean.values.assign(dim, 0.0);
  for (const auto& s : train) {
    require_stage(s, Stage::kWeighted, "compute_training_mean");
    if (s.dim() != dim) throw DataError("compute_training_mean: dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) mean.values[i] += s.values[i];
  }
  for (double& v : mean.values) v /= static_cast<double>(train.size());
  mean.count = train.size();
  return mean;
}

Signature finalize(const Signature& sig, const MeanVector& mean) {
  require_stage(sig, Stage::kWeighted, "finalize");
  if (mean.values.size() != sig.dim()) {
    throw DataError("finalize: mean has dimension " + std::to_string(mean.values.size()) +
                    ", signature has " + std::to_string(sig.dim()));
  }
  Signature out = sig;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= mean.values[i];
  normalize_in_place(out);
  out.stage = Stage::kFinal;
  return out;
}

Signature weight_and_finalize(const Signature& raw, const IdfModel& idf, const MeanVector& mean) {
  return finalize(apply_idf(apply_burstiness(raw), idf), mean);
}

Signature pool_queries(std::span<const Signature> sigs, PoolMode mode) {
  if (sigs.empty()) throw DataError("pool_queries: no query signatures");
  Signature out = sigs.front();
  for (const auto& s : sigs) {
    require_stage(s, Stage::kFinal, "pool_queries");
    if (s.dim() != out.dim()) throw DataError("pool_queries: dimension mismatch");
  }
  for (std::size_t q = 1; q < sigs.size(); ++q) {
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      const double v = sigs[q].values[i];
      out.values[i] = mode == PoolMode::kAvg ? out.values[i] + v : std::max(out.values[i], v);
    }
  }
  if (mode == PoolMode::kAvg) {
    for (double& v : out.values) v /= static_cast<double>(sigs.size());
  }
  normalize_in_place(out);
  return out;
}

void save_signatures(std::span<const Signature> sigs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write signature store " + path.string());
  const std::uint32_t k = sigs.empty() ? 0 : sigs.front().k;
  const std::uint32_t m = sigs.empty() ? 0 : sigs.front().stripes;
  io::write_magic(out, "BOWS");
  io::write_pod<std::uint16_t>(out, kVersion);
  io::write_pod<std::uint64_t>(out, sigs.size());
  io::write_pod<std::uint32_t>(out, k);
  io::write_pod<std::uint32_t>(out, m);
  for (const auto& s : sigs) {
    if (s.k != k || s.stripes != m || s.dim() != static_cast<std::size_t>(k) * m) {
      throw DataError("save_signatures: mixed signature shapes");
    }
    io::write_pod<std::uint64_t>(out, s.image_id);
    io::write_pod<std::uint8_t>(out, s.zero ? 1 : 0);
    for (double v : s.values) io::write_pod<float>(out, static_cast<float>(v));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<Signature> load_signatures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open signature store " + path.string());
  io::expect_magic(in, "BOWS");
  if (io::read_pod<std::uint16_t>(in, "version") != kVersion) {
    throw DataError("unsupported signature store version in " + path.string());
  }
  const auto count = io::read_pod<std::uint64_t>(in, "count");
  const auto k = io::read_pod<std::uint32_t>(in, "k");
  const auto m = io::read_pod<std::uint32_t>(in, "M");
  std::vector<Signature> out;
  out.reserve(count);
  for (std::uint64_t r = 0; r < count; ++r) {
    Signature s;
    s.k = k;
    s.stripes = m;
    s.stage = Stage::kFinal;
    s.image_id = io::read_pod<std::uint64_t>(in, "image id");
    s.zero = (io::read_pod<std::uint8_t>(in, "flag") & 1) != 0;
    s.values.resize(static_cast<std::size_t>(k) * m);
    for (double& v : s.values) v = io::read_pod<float>(in, "signature values");
    out.push_back(std::move(s));
  }
  return out;
}

void save_idf(const IdfModel& idf, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  io::write_magic(out, "BOWI");
  io::write_pod<std::uint16_t>(out, kVersion);
  io::write_pod<std::uint64_t>(out, idf.gallery_size);
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(idf.weights.size()));
  io::write_pod<std::uint8_t>(out, idf.variant == IdfVariant::kStandard ? 0 : 1);
  for (double w : idf.weights) io::write_pod<double>(out, w);
}

IdfModel load_idf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  io::expect_magic(in, "BOWI");
  if (io::read_pod<std::uint16_t>(in, "version") != kVersion) {
    throw DataError("unsupported IDF version in " + path.string());
  }
  IdfModel idf;
  idf.gallery_size = io::read_pod<std::uint64_t>(in, "N");
  idf.weights.resize(io::read_pod<std::uint32_t>(in, "k"));
  idf.variant = io::read_pod<std::uint8_t>(in, "variant") == 0 ? IdfVariant::kStandard
                                                                : IdfVariant::kAvg;
  for (double& w : idf.weights) w = io::read_pod<double>(in, "IDF weights");
  return idf;
}

void save_mean(const MeanVector& mean, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  io::write_magic(out, "BOWM");
  io::write_pod<std::uint16_t>(out, kVersion);
  io::write_pod<std::uint64_t>(out, mean.count);
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(mean.values.size()));
  for (double v : mean.values) io::write_pod<double>(out, v);
}

MeanVector load_mean(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  io::expect_magic(in, "BOWM");
  if (io::read_pod<std::uint16_t>(in, "version") != kVersion) {
    throw DataError("unsupported mean-vector version in " + path.string());
  }
  MeanVector mean;
  mean.count = io::read_pod<std::uint64_t>(in, "count");
  mean.values.resize(io::read_pod<std::uint32_t>(in, "dim"));
  for (double& v : mean.values) v = io::read_pod<double>(in, "mean values");
  if (mean.count == 0) throw DataError("mean vector built from zero signatures");
  return mean;
}

}  // namespace bowreid
