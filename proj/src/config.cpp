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

#include "bowreid/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "bowreid/error.hpp"

namespace bowreid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
  if (value == "off" || value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(value) + "' for " + std::string(key));
}

std::vector<std::string_view> split_list(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

Layout layout_or_config_error(std::string_view v) {
  try {
    return parse_layout(v);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::string_view to_string(MultiQuery m) {
  switch (m) {
    case MultiQuery::kOff: return "off";
    case MultiQuery::kAvg: return "avg";
    case MultiQuery::kMax: return "max";
  }
  return "?";
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "dataset_root") {
    dataset_root = std::string(value);
  } else if (key == "layout") {
    layout = layout_or_config_error(value);
  } else if (key == "codebook_root") {
    codebook_root = std::string(value);
  } else if (key == "codebook_layout") {
    codebook_layout = layout_or_config_error(value);
  } else if (key == "cn_table") {
    cn_table = std::string(value);
  } else if (key == "output_dir") {
    output_dir = std::string(value);
  } else if (key == "image_height") {
    image_height = parse_number<int>(key, value);
  } else if (key == "image_width") {
    image_width = parse_number<int>(key, value);
    if (image_width != 64 && image_width != 48) {
      throw ConfigError("image_width must be 64 or 48");
    }
  } else if (key == "patch_size") {
    patch_size = parse_number<int>(key, value);
  } else if (key == "patch_step") {
    patch_step = parse_number<int>(key, value);
  } else if (key == "mask") {
    mask = parse_bool(key, value);
  } else if (key == "mask_mu_x") {
    mask_params.mu_x = parse_number<double>(key, value);
  } else if (key == "mask_mu_y") {
    mask_params.mu_y = parse_number<double>(key, value);
  } else if (key == "mask_sigma_x" || key == "mask_sigma_y") {
    double s = parse_number<double>(key, value);
    if (!(s > 0)) throw ConfigError(std::string(key) + " must be positive");
    (key == "mask_sigma_x" ? mask_params.sigma_x : mask_params.sigma_y) = s;
  } else if (key == "channels") {
    if (value == "cn+hs") {
      channels = {DescriptorKind::kColorNames, DescriptorKind::kHueSat};
    } else {
      channels = {parse_descriptor_kind(value)};
    }
    if (fusion_weights.size() != channels.size()) fusion_weights.assign(channels.size(), 1.0);
  } else if (key == "fusion_weights") {
    fusion_weights.clear();
    for (auto w : split_list(value, ',')) fusion_weights.push_back(parse_number<double>(key, w));
  } else if (key == "k") {
    k = parse_number<std::uint32_t>(key, value);
    if (k == 0) throw ConfigError("k must be >= 1");
  } else if (key == "kmeans_seed") {
    kmeans_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "kmeans_max_iter") {
    kmeans_max_iter = parse_number<std::uint32_t>(key, value);
  } else if (key == "kmeans_tol") {
    kmeans_tol = parse_number<double>(key, value);
  } else if (key == "kmeans_sample") {
    kmeans_sample = parse_number<std::size_t>(key, value);
  } else if (key == "stripes") {
    stripes = parse_number<std::uint32_t>(key, value);
    if (stripes == 0) throw ConfigError("stripes must be >= 1");
  } else if (key == "ma") {
    ma = parse_number<std::uint32_t>(key, value);
    if (ma == 0) throw ConfigError("ma must be >= 1");
  } else if (key == "ma_weighting") {
    ma_weighting = parse_word_weighting(value);
  } else if (key == "ma_sigma") {
    ma_sigma = parse_number<double>(key, value);
  } else if (key == "idf") {
    idf = parse_idf_variant(value);
  } else if (key == "multi_query") {
    if (value == "off") {
      multi_query = MultiQuery::kOff;
    } else if (value == "avg") {
      multi_query = MultiQuery::kAvg;
    } else if (value == "max") {
      multi_query = MultiQuery::kMax;
    } else {
      throw ConfigError("multi_query must be off, avg or max");
    }
  } else if (key == "rerank_t") {
    rerank_t = parse_number<std::uint32_t>(key, value);
  } else if (key == "ap_variant") {
    ap_variant = parse_ap_variant(value);
  } else if (key == "cmc_ranks") {
    cmc_ranks = parse_number<std::size_t>(key, value);
    if (cmc_ranks < 20) throw ConfigError("cmc_ranks must be >= 20");
  } else if (key == "ranklist_top") {
    ranklist_top = parse_number<std::size_t>(key, value);
  } else if (key == "save_signatures") {
    save_signatures = parse_bool(key, value);
  } else if (key == "threads") {
    threads = parse_number<int>(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  auto layout_name = [](Layout l) { return l == Layout::kMarket ? "market" : "flat-csv"; };
  os << "dataset_root = " << dataset_root.string() << '\n'
     << "layout = " << layout_name(layout) << '\n'
     << "codebook_root = " << codebook_root.string() << '\n'
     << "codebook_layout = " << layout_name(codebook_layout) << '\n'
     << "cn_table = " << cn_table << '\n'
     << "output_dir = " << output_dir.string() << '\n'
     << "image_height = " << image_height << '\n'
     << "image_width = " << image_width << '\n'
     << "patch_size = " << patch_size << '\n'
     << "patch_step = " << patch_step << '\n'
     << "mask = " << (mask ? "on" : "off") << '\n'
     << "mask_mu_x = " << mask_params.mu_x << '\n'
     << "mask_mu_y = " << mask_params.mu_y << '\n'
     << "mask_sigma_x = " << mask_params.sigma_x << '\n'
     << "mask_sigma_y = " << mask_params.sigma_y << '\n';
  os << "channels = ";
  for (std::size_t i = 0; i < channels.size(); ++i) os << (i ? "+" : "") << to_string(channels[i]);
  os << "\nfusion_weights = ";
  for (std::size_t i = 0; i < fusion_weights.size(); ++i) os << (i ? "," : "") << fusion_weights[i];
  os << "\nk = " << k << '\n'
     << "kmeans_seed = " << kmeans_seed << '\n'
     << "kmeans_max_iter = " << kmeans_max_iter << '\n'
     << "kmeans_tol = " << kmeans_tol << '\n'
     << "kmeans_sample = " << kmeans_sample << '\n'
     << "stripes = " << stripes << '\n'
     << "ma = " << ma << '\n'
     << "ma_weighting = " << (ma_weighting == WordWeighting::kEqual ? "equal" : "distance") << '\n'
     << "ma_sigma = " << ma_sigma << '\n'
     << "idf = " << to_string(idf) << '\n'
     << "multi_query = " << to_string(multi_query) << '\n'
     << "rerank_t = " << rerank_t << '\n'
     << "ap_variant = "
     << (ap_variant == ApVariant::kPrecisionAtHit ? "precision_at_hit" : "trapezoid") << '\n'
     << "cmc_ranks = " << cmc_ranks << '\n'
     << "ranklist_top = " << ranklist_top << '\n'
     << "save_signatures = " << (save_signatures ? "on" : "off") << '\n'
     << "threads = " << threads << '\n';
  return os.str();
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> defaults, overrides;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    if (v.front() == '[') {
      if (v.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad section header");
      }
      section = std::string(trim(v.substr(1, v.size() - 2)));
      continue;
    }
    auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    auto& target = section == "defaults" ? defaults : overrides;
    target.emplace_back(std::string(trim(v.substr(0, eq))), std::string(trim(v.substr(eq + 1))));
  }
  ExperimentConfig cfg;
  for (const auto& [k, val] : defaults) cfg.set(k, val);
  for (const auto& [k, val] : overrides) cfg.set(k, val);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    cfg.set(std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1));
  }
}

}  // namespace bowreid
