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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bowreid/codebook.hpp"
#include "bowreid/error.hpp"
#include "bowreid/pipeline.hpp"
#include "oracles/metric_oracle.hpp"
#include "oracles/naive_embedding.hpp"
#include "oracles/toy_data.hpp"

namespace bowreid {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ToyFile {
  std::string rel;
  int person = 0;
  int camera = 0;
};

std::vector<ToyFile> list_dir(const fs::path& root, const std::string& sub) {
  std::vector<ToyFile> out;
  for (const auto& e : fs::directory_iterator(root / sub)) {
    ToyFile f;
    f.rel = sub + "/" + e.path().filename().string();
    std::sscanf(e.path().filename().c_str(), "%d_c%d", &f.person, &f.camera);
    out.push_back(f);
  }
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.rel < b.rel; });
  return out;
}

ExperimentConfig toy_config(const fs::path& data, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.dataset_root = data;
  cfg.output_dir = out;
  cfg.k = 12;
  cfg.stripes = 4;
  cfg.ma = 3;
  cfg.kmeans_seed = 3;
  cfg.rerank_t = 0;
  cfg.cmc_ranks = 20;
  return cfg;
}

// Reimplements the pipeline with loops only, reusing just the saved codebook.
double naive_map(const fs::path& data, const std::vector<double>& centroids,
                 const testing::NaiveParams& p) {
  auto train = list_dir(data, "bounding_box_train");
  auto gallery = list_dir(data, "bounding_box_test");
  auto queries = list_dir(data, "query");
  std::vector<std::vector<std::uint8_t>> pixels;
  std::vector<int> train_idx, gallery_idx;
  for (auto& f : train) {
    train_idx.push_back(static_cast<int>(pixels.size()));
    pixels.push_back(testing::naive_read_ppm((data / f.rel).string()));
  }
  for (auto& f : gallery) {
    gallery_idx.push_back(static_cast<int>(pixels.size()));
    pixels.push_back(testing::naive_read_ppm((data / f.rel).string()));
  }
  const int first_query = static_cast<int>(pixels.size());
  for (auto& f : queries) pixels.push_back(testing::naive_read_ppm((data / f.rel).string()));
  auto sigs = testing::naive_final_signatures(pixels, train_idx, gallery_idx, centroids, p);

  double sum = 0;
  int n = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto& qs = sigs[static_cast<std::size_t>(first_query) + q];
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      double s = 0;
      for (std::size_t d = 0; d < qs.size(); ++d) s += qs[d] * sigs[static_cast<std::size_t>(gallery_idx[g])][d];
      scored.emplace_back(s, g);
    }
    std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    std::vector<int> labels;
    for (auto& [s, g] : scored) {
      const auto& gf = gallery[g];
      if (gf.person == -1 || (gf.person == queries[q].person && gf.camera == queries[q].camera)) {
        labels.push_back(2);
      } else {
        labels.push_back(gf.person == queries[q].person ? 1 : 0);
      }
    }
    auto o = testing::oracle_score(labels);
    if (o.has_match) {
      sum += o.ap;
      ++n;
    }
  }
  return sum / n;
}

TEST(Pipeline, ToyRunMatchesNaiveReimplementation) {
  testing::TempDir dir("pipe");
  testing::write_toy_market(dir.path() / "data", {});
  auto cfg = toy_config(dir.path() / "data", dir.path() / "out");
  auto result = run_experiment(cfg);
  auto cb = load_codebook(dir.path() / "out" / "cn" / "codebook.bowc");
  const double expected = naive_map(dir.path() / "data", cb.centroids,
                                    {.k = 12, .stripes = 4, .ma = 3, .mask = true});
  EXPECT_NEAR(result.report.map, expected, 1e-9);
  EXPECT_EQ(result.report.rows.size(), 12u);
  EXPECT_EQ(result.report.excluded_queries, 0u);
  EXPECT_GT(result.report.map, 0.3);
  for (const char* f : {"report.txt", "per_query.csv", "timing.txt", "index.bowx",
                        "cn/gallery.bows", "cn/query.bows", "cn/idf.bowi", "cn/mean.bowm"}) {
    EXPECT_TRUE(fs::exists(dir.path() / "out" / f)) << f;
  }
  auto timing = slurp(dir.path() / "out" / "timing.txt");
  for (const char* stage : {"feature_extraction", "search", "rerank"}) {
    EXPECT_NE(timing.find(stage), std::string::npos) << stage;
  }
}

TEST(Pipeline, MaskOffSingleStripe) {
  testing::TempDir dir("pipe2");
  testing::write_toy_market(dir.path() / "data", {});
  auto cfg = toy_config(dir.path() / "data", dir.path() / "out");
  cfg.mask = false;
  cfg.stripes = 1;
  cfg.ma = 1;
  auto result = run_experiment(cfg);
  auto cb = load_codebook(dir.path() / "out" / "cn" / "codebook.bowc");
  EXPECT_NEAR(result.report.map,
              naive_map(dir.path() / "data", cb.centroids, {.k = 12, .stripes = 1, .ma = 1}),
              1e-9);
}

TEST(Pipeline, RerunsAreByteIdentical) {
  testing::TempDir dir("pipe3");
  testing::write_toy_market(dir.path() / "data", {});
  auto a = toy_config(dir.path() / "data", dir.path() / "a");
  a.rerank_t = 2;
  a.multi_query = MultiQuery::kMax;
  a.channels = {DescriptorKind::kColorNames, DescriptorKind::kHueSat};
  a.fusion_weights = {1.0, 1.0};
  a.ranklist_top = 5;
  auto b = a;
  b.output_dir = dir.path() / "b";
  b.threads = 1;
  run_experiment(a);
  run_experiment(b);
  for (const char* f : {"report.txt", "per_query.csv", "ranklists.txt", "cn/codebook.bowc",
                        "hs/codebook.bowc", "cn/gallery.bows", "hs/query.bows", "index.bowx"}) {
    EXPECT_EQ(slurp(dir.path() / "a" / f), slurp(dir.path() / "b" / f)) << f;
  }
}

TEST(Pipeline, StageErrorsNameTheCause) {
  testing::TempDir dir("pipe4");
  auto cfg = toy_config(dir.path() / "missing", dir.path() / "out");
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("[dataset]", 0), 0u) << e.what();
  }
  testing::write_toy_market(dir.path() / "data", {});
  cfg.dataset_root = dir.path() / "data";
  cfg.k = 100000;
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("[codebook]", 0), 0u) << e.what();
  }
}

TEST(Pipeline, StagedRunMatchesSinglePass) {
  testing::TempDir dir("pipe5");
  testing::write_toy_market(dir.path() / "data", {});
  auto whole = toy_config(dir.path() / "data", dir.path() / "whole");
  whole.rerank_t = 1;
  whole.multi_query = MultiQuery::kAvg;
  whole.channels = {DescriptorKind::kColorNames, DescriptorKind::kHueSat};
  whole.fusion_weights = {1.0, 0.5};
  run_experiment(whole);

  auto staged = whole;
  staged.output_dir = dir.path() / "staged";
  stage_train_codebooks(staged);
  stage_embed(staged);
  EXPECT_EQ(stage_index(staged).items, 29u);
  EXPECT_EQ(stage_search(staged), 12u);
  EXPECT_EQ(stage_rerank(staged), 12u);
  stage_evaluate(staged);
  for (const char* f : {"report.txt", "per_query.csv", "cn/gallery.bows", "hs/query.bows",
                        "index.bowx"}) {
    EXPECT_EQ(slurp(dir.path() / "whole" / f), slurp(dir.path() / "staged" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir.path() / "staged" / "ranklists" / "reranked" / "000011.bowr"));
}

TEST(Pipeline, StagesRequireTheirInputs) {
  testing::TempDir dir("pipe6");
  testing::write_toy_market(dir.path() / "data", {});
  auto cfg = toy_config(dir.path() / "data", dir.path() / "out");
  EXPECT_THROW(stage_embed(cfg), DataError);
  EXPECT_THROW(stage_rerank(cfg), DataError);
  EXPECT_THROW(stage_evaluate(cfg), DataError);
}

}  // namespace
}  // namespace bowreid
