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

#include "bowreid/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bowreid/error.hpp"

namespace bowreid {

namespace fs = std::filesystem;

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".ppm";
}

void sort_and_number(std::vector<ImageMeta>& images) {
  std::sort(images.begin(), images.end(),
            [](const ImageMeta& a, const ImageMeta& b) { return a.path < b.path; });
  for (std::size_t i = 0; i < images.size(); ++i) images[i].image_id = i;
}

Split split_from_roles(const std::vector<ImageMeta>& images) {
  std::set<int> train, test;
  for (const auto& im : images) {
    if (im.person_id <= 0) continue;
    (im.role == Role::kTrain ? train : test).insert(im.person_id);
  }
  return {{train.begin(), train.end()}, {test.begin(), test.end()}};
}

Quality quality_from_person(int person, std::string_view segment) {
  if (person == kDistractorPerson) return Quality::kDistractor;
  if (person == kJunkPerson) return Quality::kJunk;
  if (person < 0) {
    throw DataError("invalid person segment '" + std::string(segment) + "'");
  }
  return Quality::kGood;
}

}  // namespace

std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::kGood: return "good";
    case Quality::kJunk: return "junk";
    case Quality::kDistractor: return "distractor";
  }
  return "?";
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kTrain: return "train";
    case Role::kGallery: return "gallery";
    case Role::kQuery: return "query";
  }
  return "?";
}

Quality parse_quality(std::string_view s) {
  if (s == "good") return Quality::kGood;
  if (s == "junk") return Quality::kJunk;
  if (s == "distractor") return Quality::kDistractor;
  throw DataError("unknown quality '" + std::string(s) + "'");
}

Role parse_role(std::string_view s) {
  if (s == "train") return Role::kTrain;
  if (s == "gallery") return Role::kGallery;
  if (s == "query") return Role::kQuery;
  throw DataError("unknown role '" + std::string(s) + "'");
}

Layout parse_layout(std::string_view s) {
  if (s == "market") return Layout::kMarket;
  if (s == "flat-csv") return Layout::kFlatCsv;
  throw DataError("unknown layout '" + std::string(s) + "'");
}

ParsedName parse_image_name(std::string_view filename) {
  if (auto slash = filename.find_last_of("/\\"); slash != std::string_view::npos) {
    filename.remove_prefix(slash + 1);
  }
  std::string_view stem = filename;
  if (auto dot = stem.find('.'); dot != std::string_view::npos) stem = stem.substr(0, dot);

  auto parts = split_on(stem, '_');
  if (parts.size() != 4) {
    throw DataError("malformed image name '" + std::string(filename) +
                    "': expected 4 '_'-separated segments");
  }
  ParsedName out;
  if (!parse_int(parts[0], out.person_id)) {
    throw DataError("malformed person segment '" + std::string(parts[0]) + "' in '" +
                    std::string(filename) + "'");
  }
  out.quality = quality_from_person(out.person_id, parts[0]);

  // cNsS
  std::string_view cam = parts[1];
  auto s_pos = cam.find('s');
  if (cam.size() < 4 || cam[0] != 'c' || s_pos == std::string_view::npos ||
      !parse_int(cam.substr(1, s_pos - 1), out.camera_id) ||
      !all_digits(cam.substr(s_pos + 1)) || out.camera_id < 1) {
    throw DataError("malformed camera segment '" + std::string(cam) + "' in '" +
                    std::string(filename) + "'");
  }
  if (!all_digits(parts[2])) {
    throw DataError("malformed frame segment '" + std::string(parts[2]) + "' in '" +
                    std::string(filename) + "'");
  }
  if (!all_digits(parts[3])) {
    throw DataError("malformed box segment '" + std::string(parts[3]) + "' in '" +
                    std::string(filename) + "'");
  }
  return out;
}

const ImageMeta& DatasetManifest::at(std::uint64_t image_id) const {
  if (image_id >= images.size()) {
    throw DataError("unknown image id " + std::to_string(image_id));
  }
  return images[image_id];
}

std::vector<std::uint64_t> DatasetManifest::ids_with_role(Role role) const {
  std::vector<std::uint64_t> out;
  for (const auto& im : images) {
    if (im.role == role) out.push_back(im.image_id);
  }
  return out;
}

Split read_split(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file " + path.string());
  std::set<int> train, test;
  std::set<int>* current = nullptr;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "train:") {
      current = &train;
    } else if (line == "test:") {
      current = &test;
    } else {
      int id = 0;
      if (current == nullptr || !parse_int(line, id)) {
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'train:', 'test:' or a person id");
      }
      current->insert(id);
    }
  }
  return {{train.begin(), train.end()}, {test.begin(), test.end()}};
}

void write_split(const Split& split, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file " + path.string());
  out << "train:\n";
  for (int id : split.train) out << id << '\n';
  out << "test:\n";
  for (int id : split.test) out << id << '\n';
}

void validate_manifest(const DatasetManifest& m, bool require_cross_camera) {
  std::set<std::string> paths;
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    const auto& im = m.images[i];
    if (im.image_id != i) throw DataError("image ids are not dense and ordered");
    if (!paths.insert(im.path).second) {
      throw DataError("duplicate image path '" + im.path + "'");
    }
    if (im.camera_id < 1) {
      throw DataError("camera id must be >= 1 for '" + im.path + "'");
    }
    if (im.quality == Quality::kDistractor) {
      if (im.person_id != kDistractorPerson) {
        throw DataError("distractor '" + im.path + "' must carry person id 0");
      }
      if (im.role != Role::kGallery) {
        throw DataError("distractor '" + im.path + "' must be a gallery image");
      }
    } else if (im.person_id == kDistractorPerson) {
      throw DataError("non-distractor '" + im.path + "' carries the distractor label");
    }
  }

  std::vector<int> both;
  std::set_intersection(m.split.train.begin(), m.split.train.end(), m.split.test.begin(),
                        m.split.test.end(), std::back_inserter(both));
  if (!both.empty()) {
    throw DataError("person " + std::to_string(both.front()) +
                    " is in both train and test splits");
  }

  std::map<int, std::set<int>> cameras;
  for (const auto& im : m.images) {
    if (im.person_id <= 0) continue;
    const auto& ids = im.role == Role::kTrain ? m.split.train : m.split.test;
    if (!std::binary_search(ids.begin(), ids.end(), im.person_id)) {
      throw DataError("person " + std::to_string(im.person_id) + " of '" + im.path +
                      "' is not in the " + (im.role == Role::kTrain ? "train" : "test") +
                      " split");
    }
    if (im.role != Role::kTrain) cameras[im.person_id].insert(im.camera_id);
  }
  if (require_cross_camera) {
    for (const auto& [person, cams] : cameras) {
      if (cams.size() < 2) {
        throw DataError("test identity " + std::to_string(person) +
                        " appears in only one camera");
      }
    }
  }
}

namespace {

std::vector<ImageMeta> scan_market(const fs::path& root) {
  static const std::pair<const char*, Role> kDirs[] = {
      {"bounding_box_train", Role::kTrain},
      {"bounding_box_test", Role::kGallery},
      {"query", Role::kQuery},
  };
  std::vector<ImageMeta> images;
  for (const auto& [dir, role] : kDirs) {
    fs::path sub = root / dir;
    if (!fs::is_directory(sub)) continue;
    for (const auto& entry : fs::directory_iterator(sub)) {
      if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
      auto name = entry.path().filename().string();
      auto parsed = parse_image_name(name);
      ImageMeta im;
      im.person_id = parsed.person_id;
      im.camera_id = parsed.camera_id;
      im.quality = parsed.quality;
      im.role = role;
      im.path = (fs::path(dir) / name).generic_string();
      images.push_back(std::move(im));
    }
  }
  return images;
}

std::vector<ImageMeta> read_flat_csv(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw DataError("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("no images found");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,person,camera,quality,role") {
    throw DataError(csv.string() + ": expected header 'path,person,camera,quality,role'");
  }
  std::vector<ImageMeta> images;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_on(line, ',');
    auto where = csv.string() + ":" + std::to_string(lineno) + ": ";
    if (fields.size() != 5) throw DataError(where + "expected 5 fields");
    ImageMeta im;
    im.path = std::string(fields[0]);
    if (!parse_int(fields[1], im.person_id)) throw DataError(where + "bad person id");
    if (!parse_int(fields[2], im.camera_id)) throw DataError(where + "bad camera id");
    try {
      im.quality = parse_quality(fields[3]);
      im.role = parse_role(fields[4]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    images.push_back(std::move(im));
  }
  return images;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& root, Layout layout, const LoadOptions& opts) {
  if (!fs::is_directory(root)) {
    throw DataError("dataset root " + root.string() + " is not a directory");
  }
  DatasetManifest m;
  m.root = root;
  m.images = layout == Layout::kMarket ? scan_market(root) : read_flat_csv(root / "manifest.csv");
  if (m.images.empty()) throw DataError("no images found under " + root.string());
  sort_and_number(m.images);

  if (opts.check_files) {
    for (const auto& im : m.images) {
      if (!fs::is_regular_file(root / im.path)) {
        throw DataError("missing image file " + (root / im.path).string());
      }
    }
  }
  m.split = fs::exists(root / "split.txt") ? read_split(root / "split.txt")
                                           : split_from_roles(m.images);
  validate_manifest(m, opts.require_cross_camera);
  return m;
}

void write_manifest_csv(const DatasetManifest& m, const fs::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "path,person,camera,quality,role\n";
  for (const auto& im : m.images) {
    if (im.path.find(',') != std::string::npos) {
      throw DataError("path '" + im.path + "' contains a comma");
    }
    out << im.path << ',' << im.person_id << ',' << im.camera_id << ','
        << to_string(im.quality) << ',' << to_string(im.role) << '\n';
  }
}

QuerySelection select_queries(const DatasetManifest& m, bool multi_query) {
  QuerySelection sel;
  for (int person : m.split.test) {
    std::set<int> cams;
    std::map<int, std::vector<std::uint64_t>> queries_by_cam;
    std::vector<std::uint64_t> all_queries;
    for (const auto& im : m.images) {
      if (im.person_id != person || im.role == Role::kTrain) continue;
      cams.insert(im.camera_id);
      if (im.role == Role::kQuery) {
        queries_by_cam[im.camera_id].push_back(im.image_id);
        all_queries.push_back(im.image_id);
      }
    }
    if (all_queries.empty()) {
      ++sel.skipped_identities;
      continue;
    }
    if (cams.size() < 2) {
      ++sel.single_camera_identities;
      continue;
    }
    for (const auto& [cam, ids] : queries_by_cam) {
      QuerySpec q;
      q.person_id = person;
      q.camera_id = cam;
      q.query_image_ids.push_back(ids.front());
      if (multi_query) {
        const auto& pool = ids.size() > 1 ? ids : all_queries;
        for (auto id : pool) {
          if (id != ids.front()) q.query_image_ids.push_back(id);
        }
      }
      sel.queries.push_back(std::move(q));
    }
  }
  return sel;
}

}  // namespace bowreid
