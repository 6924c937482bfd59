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

#include "bowreid/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>

#include "bowreid/error.hpp"
#include "bowreid/image.hpp"
#include "bowreid/kernels.hpp"

namespace bowreid {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kBatch = 256;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Computes make(i) for i in [0, n) in parallel batches and hands the results
/// to fold(i, value) strictly in index order.
template <typename T, typename Make, typename Fold>
void ordered_map_fold(std::size_t n, Make make, Fold fold) {
  std::vector<T> batch;
  for (std::size_t start = 0; start < n; start += kBatch) {
    const std::size_t len = std::min(kBatch, n - start);
    batch.assign(len, T{});
    std::exception_ptr error;
    std::mutex error_mu;
    const auto slen = static_cast<std::int64_t>(len);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < slen; ++i) {
      try {
        batch[i] = make(start + static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    for (std::size_t i = 0; i < len; ++i) fold(start + i, std::move(batch[i]));
  }
}

void log_line(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << std::endl;
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f s", s);
  return buf;
}

/// Runs f, prefixing any library error with the stage name.
template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  const auto prefix = [stage](const std::exception& e) {
    return std::string("[") + stage + "] " + e.what();
  };
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix(e));
  } catch (const DataError& e) {
    throw DataError(prefix(e));
  } catch (const InvariantError& e) {
    throw InvariantError(prefix(e));
  } catch (const fs::filesystem_error& e) {
    throw DataError(prefix(e));
  }
}

Codebook train_and_save_codebook(const ExperimentConfig& cfg, const CodebookSource& src,
                                 const FeatureExtractor& fx, DescriptorKind kind,
                                 const ArtifactPaths& paths, std::ostream* log) {
  const auto t = Clock::now();
  fs::create_directories(paths.channel_dir(kind));
  auto cb = train_channel_codebook(cfg, src.manifest, src.ids, fx, kind);
  save_codebook(cb, paths.codebook(kind));
  export_codebook_text(cb, paths.channel_dir(kind) / "codebook.txt");
  log_line(log, "[codebook:" + std::string(to_string(kind)) + "] k=" + std::to_string(cb.k) +
                    " after " + std::to_string(cb.meta.iterations) + " iterations, " +
                    fmt_seconds(seconds_since(t)));
  return cb;
}

std::string ranklist_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.bowr", i);
  return buf;
}

std::vector<fs::path> ranklist_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".bowr") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_config_copy(const ExperimentConfig& cfg, const ArtifactPaths& paths) {
  fs::create_directories(paths.root);
  std::ofstream out(paths.root / "config.txt");
  out << cfg.to_text();
}

TfOptions tf_options(const ExperimentConfig& cfg) {
  TfOptions o;
  o.stripes = cfg.stripes;
  o.use_mask = cfg.mask;
  o.weighting = cfg.ma_weighting;
  o.distance_sigma = cfg.ma_sigma;
  return o;
}

}  // namespace

FeatureExtractor::FeatureExtractor(const ExperimentConfig& cfg) : cfg_(cfg) {
  if (std::find(cfg.channels.begin(), cfg.channels.end(), DescriptorKind::kColorNames) !=
      cfg.channels.end()) {
    table_ = std::make_shared<const CnTable>(cfg.cn_table == "synthetic"
                                                 ? CnTable::synthetic()
                                                 : CnTable::load(cfg.cn_table));
  }
}

FeatureExtractor::FeatureExtractor(const ExperimentConfig& cfg,
                                   std::shared_ptr<const CnTable> table)
    : cfg_(cfg), table_(std::move(table)) {}

PatchGrid FeatureExtractor::grid(const RgbImage& raw, DescriptorKind kind) const {
  NormalizeOptions norm{cfg_.image_height, cfg_.image_width};
  GridOptions g;
  g.kind = kind;
  g.patch_size = cfg_.patch_size;
  g.patch_step = cfg_.patch_step;
  g.mask = cfg_.mask_params;
  return extract_patch_grid(normalize_image(raw, norm), g, table_.get());
}

PatchGrid FeatureExtractor::grid(const DatasetManifest& m, std::uint64_t image_id,
                                 DescriptorKind kind) const {
  return grid(read_image(m.root / m.at(image_id).path), kind);
}

DatasetManifest load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset_root.empty()) throw ConfigError("dataset_root is not set");
  return load_manifest(cfg.dataset_root, cfg.layout);
}

CodebookSource codebook_source(const ExperimentConfig& cfg, const DatasetManifest& m) {
  CodebookSource src;
  if (cfg.codebook_root.empty()) {
    src.manifest = m;
    src.ids = m.ids_with_role(Role::kTrain);
  } else {
    LoadOptions opts;
    opts.require_cross_camera = false;
    src.manifest = load_manifest(cfg.codebook_root, cfg.codebook_layout, opts);
    for (const auto& im : src.manifest.images) src.ids.push_back(im.image_id);
  }
  if (src.ids.empty()) throw DataError("no images available for codebook training");
  return src;
}

Codebook train_channel_codebook(const ExperimentConfig& cfg, const DatasetManifest& source,
                                std::span<const std::uint64_t> ids, const FeatureExtractor& fx,
                                DescriptorKind kind) {
  const std::size_t dim = descriptor_dim(kind);
  std::vector<double> descriptors;
  ordered_map_fold<std::vector<double>>(
      ids.size(), [&](std::size_t i) { return fx.grid(source, ids[i], kind).descriptors; },
      [&](std::size_t, std::vector<double>&& d) {
        descriptors.insert(descriptors.end(), d.begin(), d.end());
      });

  if (cfg.kmeans_sample > 0 && descriptors.size() / dim > cfg.kmeans_sample) {
    const std::size_t n = descriptors.size() / dim;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(cfg.kmeans_seed ^ 0x9e3779b97f4a7c15ULL);
    // Partial Fisher-Yates; selected rows are kept in their original order.
    for (std::size_t i = 0; i < cfg.kmeans_sample; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
      std::swap(order[i], order[j]);
    }
    order.resize(cfg.kmeans_sample);
    std::sort(order.begin(), order.end());
    std::vector<double> sampled;
    sampled.reserve(order.size() * dim);
    for (auto r : order) {
      sampled.insert(sampled.end(), descriptors.begin() + static_cast<std::ptrdiff_t>(r * dim),
                     descriptors.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
    }
    descriptors.swap(sampled);
  }

  KMeansOptions km;
  km.k = cfg.k;
  km.seed = cfg.kmeans_seed;
  km.max_iter = cfg.kmeans_max_iter;
  km.tol = cfg.kmeans_tol;
  return train_codebook(descriptors, dim, km);
}

std::vector<Signature> embed_raw_images(const ExperimentConfig& cfg, const DatasetManifest& m,
                                        std::span<const std::uint64_t> ids,
                                        const FeatureExtractor& fx, DescriptorKind kind,
                                        const Codebook& cb) {
  const auto opts = tf_options(cfg);
  std::vector<Signature> out;
  out.reserve(ids.size());
  ordered_map_fold<Signature>(
      ids.size(),
      [&](std::size_t i) {
        auto sig = embed_raw(fx.grid(m, ids[i], kind), cb, cfg.ma, opts);
        sig.image_id = ids[i];
        return sig;
      },
      [&](std::size_t, Signature&& s) { out.push_back(std::move(s)); });
  return out;
}

void fit_channel_weights(const ExperimentConfig& cfg, const DatasetManifest& m,
                         const FeatureExtractor& fx, ChannelModel& model) {
  const auto gallery_ids = m.ids_with_role(Role::kGallery);
  const auto train_ids = m.ids_with_role(Role::kTrain);
  if (train_ids.empty()) throw DataError("the manifest has no training images");
  const auto opts = tf_options(cfg);

  {
    auto raw = embed_raw_images(cfg, m, gallery_ids, fx, model.kind, model.codebook);
    model.idf = compute_idf(raw, cfg.idf);
  }

  // Streaming mean: folding in image order keeps the sum deterministic.
  MeanVector mean;
  mean.values.assign(static_cast<std::size_t>(model.codebook.k) * cfg.stripes, 0.0);
  ordered_map_fold<Signature>(
      train_ids.size(),
      [&](std::size_t i) {
        auto raw = embed_raw(fx.grid(m, train_ids[i], model.kind), model.codebook, cfg.ma, opts);
        return apply_idf(apply_burstiness(raw), model.idf);
      },
      [&](std::size_t, Signature&& s) {
        for (std::size_t j = 0; j < s.values.size(); ++j) mean.values[j] += s.values[j];
      });
  for (double& v : mean.values) v /= static_cast<double>(train_ids.size());
  mean.count = train_ids.size();
  model.mean = std::move(mean);
}

std::vector<Signature> embed_final_images(const ExperimentConfig& cfg, const DatasetManifest& m,
                                          std::span<const std::uint64_t> ids,
                                          const FeatureExtractor& fx, const ChannelModel& model) {
  const auto opts = tf_options(cfg);
  std::vector<Signature> out;
  out.reserve(ids.size());
  ordered_map_fold<Signature>(
      ids.size(),
      [&](std::size_t i) {
        auto raw = embed_raw(fx.grid(m, ids[i], model.kind), model.codebook, cfg.ma, opts);
        raw.image_id = ids[i];
        return weight_and_finalize(raw, model.idf, model.mean);
      },
      [&](std::size_t, Signature&& s) { out.push_back(std::move(s)); });
  return out;
}

ChannelWeights channel_weights(const ExperimentConfig& cfg) {
  if (cfg.fusion_weights.size() != cfg.channels.size()) {
    throw ConfigError("fusion_weights needs one weight per channel");
  }
  return cfg.fusion_weights;
}

fs::path ArtifactPaths::channel_dir(DescriptorKind kind) const {
  return root / std::string(to_string(kind));
}
fs::path ArtifactPaths::codebook(DescriptorKind kind) const {
  return channel_dir(kind) / "codebook.bowc";
}
fs::path ArtifactPaths::idf(DescriptorKind kind) const { return channel_dir(kind) / "idf.bowi"; }
fs::path ArtifactPaths::mean(DescriptorKind kind) const { return channel_dir(kind) / "mean.bowm"; }
fs::path ArtifactPaths::gallery(DescriptorKind kind) const {
  return channel_dir(kind) / "gallery.bows";
}
fs::path ArtifactPaths::queries(DescriptorKind kind) const {
  return channel_dir(kind) / "query.bows";
}

void write_timing(const StageTimes& t, const fs::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write " + path.string());
  auto per = [](double total, std::size_t n) { return n ? total / static_cast<double>(n) : 0.0; };
  std::fprintf(f, "stage total_s per_query_s\n");
  std::fprintf(f, "feature_extraction %.6f %.6f\n", t.extraction_s,
               per(t.extraction_s, t.query_images));
  std::fprintf(f, "search %.6f %.6f\n", t.search_s, per(t.search_s, t.queries));
  std::fprintf(f, "rerank %.6f %.6f\n", t.rerank_s, per(t.rerank_s, t.queries));
  std::fclose(f);
}

const Signature& QuerySignatures::get(std::size_t channel, std::uint64_t image_id) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), image_id);
  if (it == ids.end() || *it != image_id) {
    throw DataError("no query signature for image " + std::to_string(image_id));
  }
  return per_channel.at(channel)[static_cast<std::size_t>(it - ids.begin())];
}

std::vector<Signature> build_query(const ExperimentConfig& cfg, const QuerySignatures& qs,
                                   const QuerySpec& spec) {
  if (spec.query_image_ids.empty()) throw DataError("query spec without images");
  std::vector<Signature> q;
  for (std::size_t c = 0; c < qs.per_channel.size(); ++c) {
    if (cfg.multi_query == MultiQuery::kOff || spec.query_image_ids.size() == 1) {
      q.push_back(qs.get(c, spec.query_image_ids.front()));
    } else {
      std::vector<Signature> members;
      for (auto id : spec.query_image_ids) members.push_back(qs.get(c, id));
      q.push_back(pool_queries(
          members, cfg.multi_query == MultiQuery::kAvg ? PoolMode::kAvg : PoolMode::kMax));
    }
  }
  return q;
}

QueryRun run_query(const ExperimentConfig& cfg, const GalleryIndex& index,
                   const QuerySignatures& qs, const QuerySpec& spec) {
  const auto weights = channel_weights(cfg);
  QueryRun run;
  run.initial = rank_scores(index, score_fused(index, build_query(cfg, qs, spec), weights));
  run.initial.query = spec;
  run.reranked = rerank(index, run.initial, cfg.rerank_t, weights);
  return run;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  kernels::set_threads(cfg.threads);
  const ArtifactPaths paths{cfg.output_dir};
  in_stage("setup", [&] { write_config_copy(cfg, paths); });

  auto t0 = Clock::now();
  const DatasetManifest m = in_stage("dataset", [&] { return load_dataset(cfg); });
  log_line(log, "[dataset] " + std::to_string(m.images.size()) + " images, " +
                    std::to_string(m.split.train.size()) + " train / " +
                    std::to_string(m.split.test.size()) + " test identities");
  const auto weights = in_stage("setup", [&] { return channel_weights(cfg); });
  const FeatureExtractor fx = in_stage("setup", [&] { return FeatureExtractor(cfg); });
  const auto gallery_ids = m.ids_with_role(Role::kGallery);
  const auto query_ids = m.ids_with_role(Role::kQuery);

  ExperimentResult result;
  std::vector<ChannelSignatures> gallery_channels;
  QuerySignatures qs;
  qs.ids = query_ids;
  std::optional<CodebookSource> cb_source;

  for (auto kind : cfg.channels) {
    const std::string name(to_string(kind));
    ChannelModel model;
    model.kind = kind;

    in_stage("codebook", [&] {
      if (!cb_source) cb_source = codebook_source(cfg, m);
      model.codebook = train_and_save_codebook(cfg, *cb_source, fx, kind, paths, log);
    });

    auto t = Clock::now();
    in_stage("weights", [&] {
      fit_channel_weights(cfg, m, fx, model);
      save_idf(model.idf, paths.idf(kind));
      save_mean(model.mean, paths.mean(kind));
    });
    log_line(log, "[weights:" + name + "] " + fmt_seconds(seconds_since(t)));

    t = Clock::now();
    auto gallery = in_stage("embed", [&] { return embed_final_images(cfg, m, gallery_ids, fx, model); });
    log_line(log, "[embed:" + name + "] gallery " + std::to_string(gallery.size()) + " images, " +
                      fmt_seconds(seconds_since(t)));

    t = Clock::now();
    auto queries = in_stage("embed", [&] { return embed_final_images(cfg, m, query_ids, fx, model); });
    result.times.extraction_s += seconds_since(t);

    if (cfg.save_signatures) {
      in_stage("embed", [&] {
        save_signatures(gallery, paths.gallery(kind));
        save_signatures(queries, paths.queries(kind));
      });
    }
    gallery_channels.push_back({name, std::move(gallery)});
    qs.per_channel.push_back(std::move(queries));
  }
  result.times.query_images = query_ids.size();

  const GalleryIndex index = in_stage("index", [&] {
    std::vector<ImageMeta> gallery_metas;
    for (auto id : gallery_ids) gallery_metas.push_back(m.at(id));
    auto built = build_index(std::move(gallery_channels), std::move(gallery_metas));
    if (cfg.save_signatures) save_index(built, paths.index());
    return built;
  });
  result.index_stats = index.stats();
  log_line(log, "[index] " + std::to_string(result.index_stats.items) + " items, " +
                    std::to_string(result.index_stats.bytes >> 20) + " MiB");

  const auto selection = select_queries(m, cfg.multi_query != MultiQuery::kOff);
  if (selection.skipped_identities > 0) {
    log_line(log, "[queries] warning: " + std::to_string(selection.skipped_identities) +
                      " test identities have no query image");
  }

  std::ofstream ranklists;
  if (cfg.ranklist_top > 0) ranklists.open(paths.root / "ranklists.txt");

  std::vector<QueryRow> rows;
  rows.reserve(selection.queries.size());
  for (const auto& spec : selection.queries) {
    auto ts = Clock::now();
    QueryRun run;
    in_stage("search", [&] {
      run.initial = rank_scores(index, score_fused(index, build_query(cfg, qs, spec), weights));
      run.initial.query = spec;
    });
    result.times.search_s += seconds_since(ts);
    ts = Clock::now();
    run.reranked = in_stage("rerank", [&] { return rerank(index, run.initial, cfg.rerank_t, weights); });
    result.times.rerank_s += seconds_since(ts);

    const auto labels = classify_all(index.metas(), spec);
    rows.push_back({spec.query_image_ids.front(),
                    average_precision(run.reranked, labels, cfg.ap_variant)});
    if (ranklists.is_open()) {
      ranklists << "# query " << spec.query_image_ids.front() << " person " << spec.person_id
                << " camera " << spec.camera_id << '\n';
      write_ranklist_text(run.reranked, ranklists, cfg.ranklist_top);
    }
  }
  result.times.queries = selection.queries.size();

  in_stage("evaluate", [&] {
    result.report = make_report(std::move(rows), cfg.cmc_ranks);
    write_report(result.report, paths.report());
    write_query_csv(result.report, paths.query_csv());
    write_timing(result.times, paths.timing());
  });

  char buf[160];
  std::snprintf(buf, sizeof buf, "[eval] %zu queries: mAP %.4f rank-1 %.4f rank-5 %.4f",
                result.report.rows.size(), result.report.map, result.report.rank(1),
                result.report.rank(5));
  log_line(log, buf);
  const auto per = [](double s, std::size_t n) { return n ? s / static_cast<double>(n) : 0.0; };
  std::snprintf(buf, sizeof buf,
                "[timing] per query: extraction %.4f s, search %.4f s, rerank %.4f s",
                per(result.times.extraction_s, result.times.query_images),
                per(result.times.search_s, result.times.queries),
                per(result.times.rerank_s, result.times.queries));
  log_line(log, buf);
  log_line(log, "[total] " + fmt_seconds(seconds_since(t0)));
  return result;
}

void stage_train_codebooks(const ExperimentConfig& cfg, std::ostream* log) {
  kernels::set_threads(cfg.threads);
  const ArtifactPaths paths{cfg.output_dir};
  in_stage("setup", [&] { write_config_copy(cfg, paths); });
  const auto m = in_stage("dataset", [&] { return load_dataset(cfg); });
  const FeatureExtractor fx = in_stage("setup", [&] { return FeatureExtractor(cfg); });
  in_stage("codebook", [&] {
    const auto src = codebook_source(cfg, m);
    for (auto kind : cfg.channels) train_and_save_codebook(cfg, src, fx, kind, paths, log);
  });
}

void stage_embed(const ExperimentConfig& cfg, std::ostream* log) {
  kernels::set_threads(cfg.threads);
  const ArtifactPaths paths{cfg.output_dir};
  const auto m = in_stage("dataset", [&] { return load_dataset(cfg); });
  const FeatureExtractor fx = in_stage("setup", [&] { return FeatureExtractor(cfg); });
  in_stage("embed", [&] {
    for (auto kind : cfg.channels) {
      const auto t = Clock::now();
      ChannelModel model;
      model.kind = kind;
      model.codebook = load_codebook(paths.codebook(kind));
      fit_channel_weights(cfg, m, fx, model);
      save_idf(model.idf, paths.idf(kind));
      save_mean(model.mean, paths.mean(kind));
      save_signatures(embed_final_images(cfg, m, m.ids_with_role(Role::kGallery), fx, model),
                      paths.gallery(kind));
      save_signatures(embed_final_images(cfg, m, m.ids_with_role(Role::kQuery), fx, model),
                      paths.queries(kind));
      log_line(log, "[embed:" + std::string(to_string(kind)) + "] " +
                        fmt_seconds(seconds_since(t)));
    }
  });
}

IndexStats stage_index(const ExperimentConfig& cfg, std::ostream* log) {
  const ArtifactPaths paths{cfg.output_dir};
  const auto m = in_stage("dataset", [&] { return load_dataset(cfg); });
  return in_stage("index", [&] {
    std::vector<ChannelSignatures> channels;
    for (auto kind : cfg.channels) {
      channels.push_back({std::string(to_string(kind)), load_signatures(paths.gallery(kind))});
    }
    std::vector<ImageMeta> metas;
    for (auto id : m.ids_with_role(Role::kGallery)) metas.push_back(m.at(id));
    const auto index = build_index(std::move(channels), std::move(metas));
    save_index(index, paths.index());
    const auto st = index.stats();
    log_line(log, "[index] " + std::to_string(st.items) + " items, " +
                      std::to_string(st.channels) + " channels, " + std::to_string(st.bytes) +
                      " bytes, " + std::to_string(st.zero_signatures) + " zero signatures");
    return st;
  });
}

std::size_t stage_search(const ExperimentConfig& cfg, std::ostream* log) {
  kernels::set_threads(cfg.threads);
  const ArtifactPaths paths{cfg.output_dir};
  const auto m = in_stage("dataset", [&] { return load_dataset(cfg); });
  return in_stage("search", [&] {
    const auto index = load_index(paths.index());
    const auto weights = channel_weights(cfg);
    QuerySignatures qs;
    for (auto kind : cfg.channels) {
      auto sigs = load_signatures(paths.queries(kind));
      std::vector<std::uint64_t> ids;
      for (const auto& s : sigs) ids.push_back(s.image_id);
      if (qs.per_channel.empty()) {
        qs.ids = ids;
      } else if (ids != qs.ids) {
        throw DataError("query stores disagree on image ids across channels");
      }
      qs.per_channel.push_back(std::move(sigs));
    }
    if (!std::is_sorted(qs.ids.begin(), qs.ids.end())) {
      throw DataError("query store is not sorted by image id");
    }
    const auto selection = select_queries(m, cfg.multi_query != MultiQuery::kOff);
    const auto dir = paths.ranklists_dir() / "initial";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto t = Clock::now();
    for (std::size_t i = 0; i < selection.queries.size(); ++i) {
      const auto& spec = selection.queries[i];
      auto list = rank_scores(index, score_fused(index, build_query(cfg, qs, spec), weights));
      list.query = spec;
      save_ranklist(list, dir / ranklist_name(i));
    }
    log_line(log, "[search] " + std::to_string(selection.queries.size()) + " queries, " +
                      fmt_seconds(seconds_since(t)));
    return selection.queries.size();
  });
}

std::size_t stage_rerank(const ExperimentConfig& cfg, std::ostream* log) {
  kernels::set_threads(cfg.threads);
  const ArtifactPaths paths{cfg.output_dir};
  return in_stage("rerank", [&] {
    const auto index = load_index(paths.index());
    const auto weights = channel_weights(cfg);
    const auto files = ranklist_files(paths.ranklists_dir() / "initial");
    if (files.empty()) throw DataError("no initial rank lists; run search first");
    const auto dir = paths.ranklists_dir() / "reranked";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto t = Clock::now();
    for (const auto& f : files) {
      save_ranklist(rerank(index, load_ranklist(f), cfg.rerank_t, weights), dir / f.filename());
    }
    log_line(log, "[rerank] T=" + std::to_string(cfg.rerank_t) + ", " +
                      std::to_string(files.size()) + " lists, " + fmt_seconds(seconds_since(t)));
    return files.size();
  });
}

EvalReport stage_evaluate(const ExperimentConfig& cfg, std::ostream* log) {
  const ArtifactPaths paths{cfg.output_dir};
  return in_stage("evaluate", [&] {
    const auto index = load_index(paths.index());
    auto files = ranklist_files(paths.ranklists_dir() / "reranked");
    const char* source = "reranked";
    if (files.empty()) {
      files = ranklist_files(paths.ranklists_dir() / "initial");
      source = "initial";
    }
    if (files.empty()) throw DataError("no rank lists to evaluate");
    std::vector<QueryRow> rows;
    for (const auto& f : files) {
      const auto list = load_ranklist(f);
      if (list.query.query_image_ids.empty()) throw DataError("rank list without a query: " + f.string());
      const auto labels = classify_all(index.metas(), list.query);
      rows.push_back({list.query.query_image_ids.front(),
                      average_precision(list, labels, cfg.ap_variant)});
    }
    auto report = make_report(std::move(rows), cfg.cmc_ranks);
    write_report(report, paths.report());
    write_query_csv(report, paths.query_csv());
    char buf[160];
    std::snprintf(buf, sizeof buf, "[eval] %s lists, %zu queries: mAP %.4f rank-1 %.4f", source,
                  report.rows.size(), report.map, report.rank(1));
    log_line(log, buf);
    return report;
  });
}

}  // namespace bowreid
