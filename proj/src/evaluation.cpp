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

#include "bowreid/evaluation.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <string>

#include "bowreid/error.hpp"

namespace bowreid {

Relevance classify_gallery(const ImageMeta& item, const QuerySpec& query) {
  if (std::find(query.query_image_ids.begin(), query.query_image_ids.end(), item.image_id) !=
      query.query_image_ids.end()) {
    return Relevance::kJunk;
  }
  if (item.quality == Quality::kJunk) return Relevance::kJunk;
  if (item.quality == Quality::kDistractor) return Relevance::kNonMatch;
  if (item.person_id == query.person_id) {
    return item.camera_id == query.camera_id ? Relevance::kJunk : Relevance::kMatch;
  }
  return Relevance::kNonMatch;
}

std::vector<Relevance> classify_all(std::span<const ImageMeta> gallery, const QuerySpec& query) {
  std::vector<Relevance> out;
  out.reserve(gallery.size());
  for (const auto& im : gallery) out.push_back(classify_gallery(im, query));
  return out;
}

ApVariant parse_ap_variant(std::string_view s) {
  if (s == "precision_at_hit") return ApVariant::kPrecisionAtHit;
  if (s == "trapezoid") return ApVariant::kTrapezoid;
  throw ConfigError("unknown AP variant '" + std::string(s) + "'");
}

QueryOutcome score_ranking(std::span<const Relevance> ranked, ApVariant variant) {
  QueryOutcome out;
  for (auto r : ranked) {
    if (r == Relevance::kMatch) ++out.n_gt;
  }
  std::size_t rank = 0;  // position in the junk-free list
  std::size_t hits = 0;
  double sum = 0.0;
  for (auto r : ranked) {
    if (r == Relevance::kJunk) {
      ++out.n_junk_skipped;
      continue;
    }
    ++rank;
    if (r != Relevance::kMatch) continue;
    ++hits;
    if (hits == 1) out.first_match_rank = rank;
    const double precision = static_cast<double>(hits) / static_cast<double>(rank);
    if (variant == ApVariant::kPrecisionAtHit) {
      sum += precision;
    } else {
      const double previous =
          rank == 1 ? 1.0 : static_cast<double>(hits - 1) / static_cast<double>(rank - 1);
      sum += (previous + precision) / 2.0;
    }
  }
  if (out.n_gt > 0) out.ap = sum / static_cast<double>(out.n_gt);
  return out;
}

QueryOutcome average_precision(const RankList& list, std::span<const Relevance> labels,
                               ApVariant variant) {
  std::vector<Relevance> ranked;
  ranked.reserve(list.entries.size());
  for (const auto& e : list.entries) {
    if (e.position >= labels.size()) {
      throw InvariantError("average_precision: rank entry outside the gallery");
    }
    ranked.push_back(labels[e.position]);
  }
  return score_ranking(ranked, variant);
}

std::vector<double> cmc_curve(std::span<const QueryOutcome> outcomes, std::size_t max_rank) {
  std::vector<double> cmc(max_rank, 0.0);
  std::size_t evaluated = 0;
  std::vector<std::size_t> first_hits(max_rank + 1, 0);
  for (const auto& o : outcomes) {
    if (!o.ap) continue;
    ++evaluated;
    if (o.first_match_rank <= max_rank) ++first_hits[o.first_match_rank];
  }
  if (evaluated == 0) return cmc;
  std::size_t acc = 0;
  for (std::size_t r = 1; r <= max_rank; ++r) {
    acc += first_hits[r];
    cmc[r - 1] = static_cast<double>(acc) / static_cast<double>(evaluated);
  }
  return cmc;
}

std::vector<double> cmc_curve(std::span<const RankList> lists,
                              std::span<const std::vector<Relevance>> labels, std::size_t max_rank) {
  if (lists.size() != labels.size()) {
    throw InvariantError("cmc_curve: one label vector per rank list required");
  }
  std::vector<QueryOutcome> outcomes;
  outcomes.reserve(lists.size());
  for (std::size_t q = 0; q < lists.size(); ++q) {
    outcomes.push_back(average_precision(lists[q], labels[q]));
  }
  return cmc_curve(outcomes, max_rank);
}

double mean_ap(std::span<const double> aps) {
  if (aps.empty()) throw DataError("mean_ap: no evaluated queries");
  double s = 0.0;
  for (double a : aps) s += a;
  return s / static_cast<double>(aps.size());
}

EvalReport make_report(std::vector<QueryRow> rows, std::size_t max_rank) {
  EvalReport rep;
  std::vector<QueryOutcome> outcomes;
  outcomes.reserve(rows.size());
  for (const auto& row : rows) {
    outcomes.push_back(row.outcome);
    if (row.outcome.ap) {
      rep.aps.push_back(*row.outcome.ap);
    } else {
      ++rep.excluded_queries;
    }
  }
  rep.map = rep.aps.empty() ? 0.0 : mean_ap(rep.aps);
  rep.cmc = cmc_curve(outcomes, max_rank);
  rep.rows = std::move(rows);
  return rep;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write " + path.string());
  std::fprintf(f, "mAP %.6f\n", report.map);
  for (std::size_t r : {1, 5, 10, 20}) std::fprintf(f, "rank-%zu %.6f\n", r, report.rank(r));
  std::fprintf(f, "queries %zu\n", report.rows.size());
  std::fprintf(f, "evaluated %zu\n", report.aps.size());
  std::fprintf(f, "excluded %zu\n", report.excluded_queries);
  std::fclose(f);
}

void write_query_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write " + path.string());
  std::fprintf(f, "query_id,AP,first_match_rank,n_gt,n_junk_skipped\n");
  for (const auto& row : report.rows) {
    const auto& o = row.outcome;
    if (o.ap) {
      std::fprintf(f, "%" PRIu64 ",%.6f,%zu,%zu,%zu\n", row.query_id, *o.ap,
                   o.first_match_rank, o.n_gt, o.n_junk_skipped);
    } else {
      std::fprintf(f, "%" PRIu64 ",NA,0,0,%zu\n", row.query_id, o.n_junk_skipped);
    }
  }
  std::fclose(f);
}

}  // namespace bowreid
