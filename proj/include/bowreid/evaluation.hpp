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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bowreid/dataset.hpp"
#include "bowreid/search.hpp"

namespace bowreid {

enum class Relevance : std::uint8_t { kMatch, kNonMatch, kJunk };

/// Cross-camera protocol: same person under another camera with good
/// quality is a match; labeled junk, same person under the probe camera, and
/// the query images themselves are junk; everything else is a non-match.
Relevance classify_gallery(const ImageMeta& item, const QuerySpec& query);

/// Relevance of every gallery item for one query, in index order.
std::vector<Relevance> classify_all(std::span<const ImageMeta> gallery, const QuerySpec& query);

enum class ApVariant { kPrecisionAtHit, kTrapezoid };
ApVariant parse_ap_variant(std::string_view s);

struct QueryOutcome {
  /// nullopt when the query has no match (excluded from mAP and CMC).
  std::optional<double> ap;
  /// 1-based rank of the first match after junk removal, 0 if none.
  std::size_t first_match_rank = 0;
  std::size_t n_gt = 0;
  std::size_t n_junk_skipped = 0;
};

/// Scores one ranking given per-position relevance in rank order. Junk
/// entries are deleted before precision is measured.
QueryOutcome score_ranking(std::span<const Relevance> ranked,
                           ApVariant variant = ApVariant::kPrecisionAtHit);

/// AP of a rank list against labels indexed by gallery position.
QueryOutcome average_precision(const RankList& list, std::span<const Relevance> labels,
                               ApVariant variant = ApVariant::kPrecisionAtHit);

/// CMC(r) for r = 1..max_rank over queries with at least one match.
std::vector<double> cmc_curve(std::span<const QueryOutcome> outcomes, std::size_t max_rank);

/// Same curve straight from rank lists; labels[q] is indexed by gallery
/// position for rank list q.
std::vector<double> cmc_curve(std::span<const RankList> lists,
                              std::span<const std::vector<Relevance>> labels, std::size_t max_rank);

double mean_ap(std::span<const double> aps);

struct QueryRow {
  std::uint64_t query_id = 0;  // probe image id
  QueryOutcome outcome;
};

struct EvalReport {
  double map = 0.0;
  std::vector<double> aps;  // evaluated queries only
  std::vector<double> cmc;  // index r - 1
  std::vector<QueryRow> rows;
  std::size_t excluded_queries = 0;

  double rank(std::size_t r) const { return r == 0 || r > cmc.size() ? 0.0 : cmc[r - 1]; }
};

EvalReport make_report(std::vector<QueryRow> rows, std::size_t max_rank);

/// `mAP`, `rank-1`, `rank-5`, `rank-10`, `rank-20` lines plus counts.
void write_report(const EvalReport& report, const std::filesystem::path& path);
/// query_id,AP,first_match_rank,n_gt,n_junk_skipped
void write_query_csv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace bowreid
