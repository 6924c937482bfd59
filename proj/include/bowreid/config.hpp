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
#include <string>
#include <string_view>
#include <vector>

#include "bowreid/dataset.hpp"
#include "bowreid/descriptor.hpp"
#include "bowreid/embedding.hpp"
#include "bowreid/evaluation.hpp"

namespace bowreid {

enum class MultiQuery { kOff, kAvg, kMax };

/// Every knob of an experiment. Defaults are the "BoW + Geo + Gauss +
/// Rerank" operating point: k = 350, 16 stripes, MA = 10, T = 1.
struct ExperimentConfig {
  // data
  std::filesystem::path dataset_root;
  Layout layout = Layout::kMarket;
  /// Independent dataset for codebook training; empty uses the train split.
  std::filesystem::path codebook_root;
  Layout codebook_layout = Layout::kMarket;
  /// Path to a 32768x11 table, or "synthetic".
  std::string cn_table = "synthetic";
  std::filesystem::path output_dir = "bowreid_out";

  // descriptor
  int image_height = 128;
  int image_width = 64;
  int patch_size = 4;
  int patch_step = 4;
  bool mask = true;
  MaskParams mask_params;
  std::vector<DescriptorKind> channels{DescriptorKind::kColorNames};
  std::vector<double> fusion_weights{1.0};

  // codebook
  std::uint32_t k = 350;
  std::uint64_t kmeans_seed = 1;
  std::uint32_t kmeans_max_iter = 100;
  double kmeans_tol = 1e-4;
  /// Random subsample of training descriptors (0 = use all).
  std::size_t kmeans_sample = 0;

  // embedding
  std::uint32_t stripes = 16;
  std::uint32_t ma = 10;
  WordWeighting ma_weighting = WordWeighting::kEqual;
  double ma_sigma = 0.1;
  IdfVariant idf = IdfVariant::kStandard;

  // search
  MultiQuery multi_query = MultiQuery::kOff;
  std::uint32_t rerank_t = 1;

  // evaluation and output
  ApVariant ap_variant = ApVariant::kPrecisionAtHit;
  std::size_t cmc_ranks = 50;
  /// Entries per query written to ranklists.txt (0 = no file).
  std::size_t ranklist_top = 0;
  bool save_signatures = true;
  int threads = 0;

  /// Applies one `key = value` setting. Throws ConfigError on unknown keys or
  /// malformed values.
  void set(std::string_view key, std::string_view value);

  /// Serializes every key in file syntax (one `key = value` per line).
  std::string to_text() const;
};

std::string_view to_string(MultiQuery m);

/// Parses a key-value file. `[defaults]` is applied first, then every other
/// section in file order; keys before any section header count as overrides.
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies `key=value` overrides in order.
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace bowreid
