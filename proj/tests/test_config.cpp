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

#include <sstream>

#include "bowreid/config.hpp"
#include "bowreid/error.hpp"

namespace bowreid {
namespace {

TEST(Config, DefaultsMatchOperatingPoint) {
  ExperimentConfig c;
  EXPECT_EQ(c.k, 350u);
  EXPECT_EQ(c.stripes, 16u);
  EXPECT_EQ(c.ma, 10u);
  EXPECT_EQ(c.patch_size, 4);
  EXPECT_EQ(c.patch_step, 4);
  EXPECT_TRUE(c.mask);
  EXPECT_EQ(c.rerank_t, 1u);
  EXPECT_EQ(c.multi_query, MultiQuery::kOff);
  EXPECT_EQ(c.idf, IdfVariant::kStandard);
  EXPECT_EQ(c.mask_params.sigma_x, 1.0);
  EXPECT_EQ(c.channels, std::vector<DescriptorKind>{DescriptorKind::kColorNames});
}

TEST(Config, ParseSectionsAndComments) {
  std::istringstream in(R"(
# ablation: BoW + Geo
[experiment]
stripes = 1
mask = off   # no Gaussian template
[defaults]
k = 350
stripes = 16
)");
  auto c = parse_config(in);
  EXPECT_EQ(c.stripes, 1u);
  EXPECT_FALSE(c.mask);
  EXPECT_EQ(c.k, 350u);
}

TEST(Config, ChannelsResetWeights) {
  ExperimentConfig c;
  c.set("channels", "cn+hs");
  EXPECT_EQ(c.channels.size(), 2u);
  EXPECT_EQ(c.fusion_weights, (std::vector<double>{1.0, 1.0}));
  c.set("fusion_weights", "1,0.5");
  EXPECT_EQ(c.fusion_weights, (std::vector<double>{1.0, 0.5}));
  c.set("channels", "hs");
  c.set("channels", "cn+hs");
  EXPECT_EQ(c.fusion_weights, (std::vector<double>{1.0, 1.0}));
  c.set("fusion_weights", "2,1");
  c.set("channels", "cn+hs");
  EXPECT_EQ(c.fusion_weights, (std::vector<double>{2.0, 1.0}));
  EXPECT_THROW(c.set("channels", "sift"), ConfigError);
}

TEST(Config, Errors) {
  ExperimentConfig c;
  EXPECT_THROW(c.set("nonsense", "1"), ConfigError);
  EXPECT_THROW(c.set("k", "abc"), ConfigError);
  EXPECT_THROW(c.set("k", "0"), ConfigError);
  EXPECT_THROW(c.set("multi_query", "median"), ConfigError);
  EXPECT_THROW(c.set("image_width", "50"), ConfigError);
  std::istringstream bad("k 350\n");
  EXPECT_THROW(parse_config(bad), ConfigError);
}

TEST(Config, OverridesAndTextRoundTrip) {
  ExperimentConfig c;
  apply_overrides(c, {"multi_query=max", "rerank_t=0", "idf=avg", "ma_weighting=distance"});
  EXPECT_EQ(c.multi_query, MultiQuery::kMax);
  EXPECT_EQ(c.rerank_t, 0u);
  EXPECT_THROW(apply_overrides(c, {"rerank_t"}), ConfigError);
  std::istringstream in(c.to_text());
  auto back = parse_config(in);
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.multi_query, MultiQuery::kMax);
  EXPECT_EQ(back.ma_weighting, WordWeighting::kDistance);
}

}  // namespace
}  // namespace bowreid
