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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bowreid/codebook.hpp"
#include "bowreid/config.hpp"
#include "bowreid/dataset.hpp"
#include "bowreid/descriptor.hpp"
#include "bowreid/embedding.hpp"
#include "bowreid/evaluation.hpp"
#include "bowreid/search.hpp"

namespace bowreid {

/// Reads, normalizes and describes images according to a config.
class FeatureExtractor {
 public:
  /// Loads the CN table named by the config when a CN channel is enabled.
  explicit FeatureExtractor(const ExperimentConfig& cfg);
  FeatureExtractor(const ExperimentConfig& cfg, std::shared_ptr<const CnTable> table);

  PatchGrid grid(const RgbImage& raw, DescriptorKind kind) const;
  PatchGrid grid(const DatasetManifest& m, std::uint64_t image_id, DescriptorKind kind) const;

 private:
  ExperimentConfig cfg_;
  std::shared_ptr<const CnTable> table_;
};

/// Codebook, IDF and training mean of one descriptor channel.
struct ChannelModel {
  DescriptorKind kind = DescriptorKind::kColorNames;
  Codebook codebook;
  IdfModel idf;
  MeanVector mean;
};

/// Per-image stage outputs run in parallel batches and are folded in image
/// order, so results do not depend on the thread count.
Codebook train_channel_codebook(const ExperimentConfig& cfg, const DatasetManifest& source,
                                std::span<const std::uint64_t> ids, const FeatureExtractor& fx,
                                DescriptorKind kind);

std::vector<Signature> embed_raw_images(const ExperimentConfig& cfg, const DatasetManifest& m,
                                        std::span<const std::uint64_t> ids,
                                        const FeatureExtractor& fx, DescriptorKind kind,
                                        const Codebook& cb);

/// IDF over the gallery raw histograms and the weighted training mean.
void fit_channel_weights(const ExperimentConfig& cfg, const DatasetManifest& m,
                         const FeatureExtractor& fx, ChannelModel& model);

std::vector<Signature> embed_final_images(const ExperimentConfig& cfg, const DatasetManifest& m,
                                          std::span<const std::uint64_t> ids,
                                          const FeatureExtractor& fx, const ChannelModel& model);

/// Images used to train codebooks: the independent codebook dataset when
/// configured, otherwise the train split.
struct CodebookSource {
  DatasetManifest manifest;
  std::vector<std::uint64_t> ids;
};
CodebookSource codebook_source(const ExperimentConfig& cfg, const DatasetManifest& m);

DatasetManifest load_dataset(const ExperimentConfig& cfg);

/// Channel weights and names in config order.
ChannelWeights channel_weights(const ExperimentConfig& cfg);

/// Output locations inside `cfg.output_dir`.
struct ArtifactPaths {
  std::filesystem::path root;
  std::filesystem::path channel_dir(DescriptorKind kind) const;
  std::filesystem::path codebook(DescriptorKind kind) const;
  std::filesystem::path idf(DescriptorKind kind) const;
  std::filesystem::path mean(DescriptorKind kind) const;
  std::filesystem::path gallery(DescriptorKind kind) const;
  std::filesystem::path queries(DescriptorKind kind) const;
  std::filesystem::path index() const { return root / "index.bowx"; }
  std::filesystem::path ranklists_dir() const { return root / "ranklists"; }
  std::filesystem::path report() const { return root / "report.txt"; }
  std::filesystem::path query_csv() const { return root / "per_query.csv"; }
  std::filesystem::path timing() const { return root / "timing.txt"; }
};

struct StageTimes {
  double extraction_s = 0.0;  // query-image feature extraction, total
  double search_s = 0.0;
  double rerank_s = 0.0;
  std::size_t query_images = 0;
  std::size_t queries = 0;
};

void write_timing(const StageTimes& t, const std::filesystem::path& path);

/// Final query signatures of every query-role image, per channel, keyed by
/// image id.
struct QuerySignatures {
  std::vector<std::vector<Signature>> per_channel;
  std::vector<std::uint64_t> ids;  // sorted

  const Signature& get(std::size_t channel, std::uint64_t image_id) const;
};

/// One query vector per channel: the probe's signature, or the pooled
/// signature of every listed image when multi-query is enabled.
std::vector<Signature> build_query(const ExperimentConfig& cfg, const QuerySignatures& qs,
                                   const QuerySpec& spec);

/// Pools (when enabled) and scores one query, then reranks with T expanded
/// queries.
struct QueryRun {
  RankList initial;
  RankList reranked;
};
QueryRun run_query(const ExperimentConfig& cfg, const GalleryIndex& index,
                   const QuerySignatures& qs, const QuerySpec& spec);

struct ExperimentResult {
  EvalReport report;
  StageTimes times;
  IndexStats index_stats;
};

/// Full pipeline: codebooks, embedding, indexing, search, rerank and
/// evaluation. Writes artifacts under `cfg.output_dir` and logs per-stage
/// wall time to `log` when non-null.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Staged execution. Each stage reads its inputs from and writes its outputs to
// cfg.output_dir, so the stages can run as separate processes.
void stage_train_codebooks(const ExperimentConfig& cfg, std::ostream* log = nullptr);
void stage_embed(const ExperimentConfig& cfg, std::ostream* log = nullptr);
IndexStats stage_index(const ExperimentConfig& cfg, std::ostream* log = nullptr);
/// Writes ranklists/initial/NNNNNN.bowr; returns the number of queries.
std::size_t stage_search(const ExperimentConfig& cfg, std::ostream* log = nullptr);
/// Writes ranklists/reranked/NNNNNN.bowr with T = cfg.rerank_t.
std::size_t stage_rerank(const ExperimentConfig& cfg, std::ostream* log = nullptr);
/// Scores the reranked lists if present, otherwise the initial ones.
EvalReport stage_evaluate(const ExperimentConfig& cfg, std::ostream* log = nullptr);

}  // namespace bowreid
