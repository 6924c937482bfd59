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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bowreid {

/// Person label carried by false-alarm detections.
inline constexpr int kDistractorPerson = 0;
/// Person label the released naming convention uses for junk boxes.
inline constexpr int kJunkPerson = -1;

enum class Quality { kGood, kJunk, kDistractor };
enum class Role { kTrain, kGallery, kQuery };

std::string_view to_string(Quality q);
std::string_view to_string(Role r);
Quality parse_quality(std::string_view s);
Role parse_role(std::string_view s);

struct ImageMeta {
  std::uint64_t image_id = 0;
  int person_id = 0;
  int camera_id = 1;
  Quality quality = Quality::kGood;
  Role role = Role::kGallery;
  /// Relative to the manifest root.
  std::string path;

  bool operator==(const ImageMeta&) const = default;
};

/// Labels decoded from a `PPPP_cNsS_FFFFFF_BB.ext` file name.
struct ParsedName {
  int person_id = 0;
  int camera_id = 1;
  Quality quality = Quality::kGood;
};

/// Throws DataError naming the offending segment on malformed input.
ParsedName parse_image_name(std::string_view filename);

struct Split {
  std::vector<int> train;  // sorted, unique
  std::vector<int> test;   // sorted, unique

  bool operator==(const Split&) const = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ImageMeta> images;  // sorted by path; image_id == position
  Split split;

  const ImageMeta& at(std::uint64_t image_id) const;
  std::vector<std::uint64_t> ids_with_role(Role role) const;
};

enum class Layout { kMarket, kFlatCsv };
Layout parse_layout(std::string_view s);

struct LoadOptions {
  /// Verify every listed image exists on disk.
  bool check_files = true;
  /// Reject test identities observed by a single camera.
  bool require_cross_camera = true;
};

/// Market layout: `bounding_box_train/`, `bounding_box_test/`, `query/`.
/// Flat-csv layout: `manifest.csv` with header `path,person,camera,quality,role`.
/// In both cases an optional `split.txt` at the root overrides the split
/// implied by roles.
DatasetManifest load_manifest(const std::filesystem::path& root, Layout layout,
                              const LoadOptions& opts = {});

/// Checks every manifest invariant; throws DataError on the first violation.
void validate_manifest(const DatasetManifest& m, bool require_cross_camera);

void write_manifest_csv(const DatasetManifest& m,
                        const std::filesystem::path& csv_path);

Split read_split(const std::filesystem::path& path);
void write_split(const Split& split, const std::filesystem::path& path);

struct QuerySpec {
  std::vector<std::uint64_t> query_image_ids;  // [0] is the probe image
  int person_id = 0;
  int camera_id = 1;
};

struct QuerySelection {
  std::vector<QuerySpec> queries;
  /// Test identities that had no query-role image.
  std::size_t skipped_identities = 0;
  /// Identities whose images span a single camera.
  std::size_t single_camera_identities = 0;
};

/// One QuerySpec per (identity, probe camera). With multi_query, each spec
/// lists every same-camera query image when that camera has more than one,
/// and otherwise all of the identity's query images.
QuerySelection select_queries(const DatasetManifest& m, bool multi_query);

}  // namespace bowreid
