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

// Command-line driver for the re-identification pipeline.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bowreid/config.hpp"
#include "bowreid/error.hpp"
#include "bowreid/kernels.hpp"
#include "bowreid/pipeline.hpp"
#include "bowreid/search.hpp"

namespace {

using namespace bowreid;

enum ExitCode { kOk = 0, kConfigExit = 1, kDataExit = 2, kInvariantExit = 3 };

struct CommonArgs {
  std::string config;
  std::vector<std::string> sets;
  int threads = -1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config, "Experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", args.sets, "Override a config key (key=value), repeatable");
  cmd->add_option("-j,--threads", args.threads, "Worker thread cap (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("-q,--quiet", args.quiet, "Suppress progress output");
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig cfg = args.config.empty() ? ExperimentConfig{} : load_config(args.config);
  apply_overrides(cfg, args.sets);
  if (args.threads >= 0) cfg.threads = args.threads;
  return cfg;
}

void print_report(const EvalReport& r) {
  std::printf("mAP     %.4f\n", r.map);
  for (std::size_t k : {1u, 5u, 10u, 20u}) std::printf("rank-%-2zu %.4f\n", k, r.rank(k));
  std::printf("queries %zu (excluded %zu)\n", r.rows.size(), r.excluded_queries);
}

struct BenchArgs {
  std::size_t items = 20000;
  std::size_t dim = 5600;
  std::size_t queries = 10;
  std::uint64_t seed = 1;
  std::string index;
};

double millis_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

int run_bench(const BenchArgs& b, int threads) {
  std::vector<float> rows;
  std::size_t n = b.items, dim = b.dim;
  if (!b.index.empty()) {
    const auto index = load_index(b.index);
    const auto& ch = index.channel(0);
    rows = ch.rows;
    n = index.size();
    dim = ch.dim;
  } else {
    std::mt19937_64 rng(b.seed);
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    rows.resize(n * dim);
    for (auto& v : rows) v = u(rng);
  }
  if (n == 0 || dim == 0) throw DataError("bench: empty gallery");
  std::mt19937_64 rng(b.seed + 1);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  std::vector<float> q(dim);
  std::vector<double> scores(n);

  auto time_scan = [&](auto&& scan) {
    scan();  // warm-up
    std::vector<double> ms;
    for (std::size_t i = 0; i < b.queries; ++i) {
      for (auto& v : q) v = u(rng);
      const auto t = std::chrono::steady_clock::now();
      scan();
      ms.push_back(millis_since(t));
    }
    std::sort(ms.begin(), ms.end());
    return ms[ms.size() / 2];
  };
  const double serial = time_scan([&] { kernels::serial::score_all(rows, dim, q, scores); });
  kernels::set_threads(threads);
  const double parallel = time_scan([&] { kernels::parallel::score_all(rows, dim, q, scores); });
  std::printf("gallery      %zu x %zu (%.1f MiB)\n", n, dim,
              static_cast<double>(rows.size() * sizeof(float)) / (1 << 20));
  std::printf("serial       %.2f ms/query (median of %zu)\n", serial, b.queries);
  std::printf("parallel     %.2f ms/query with %d threads\n", parallel, kernels::max_threads());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bag-of-words person re-identification"};
  app.require_subcommand(1);
  CommonArgs args;
  BenchArgs bench;

  auto* run = app.add_subcommand("run", "Full pipeline: codebook, embed, index, search, rerank, evaluate");
  auto* train = app.add_subcommand("train-codebook", "Train one k-means codebook per channel");
  auto* embed = app.add_subcommand("embed", "Fit IDF and mean, write gallery and query signatures");
  auto* index = app.add_subcommand("index", "Build the gallery index from stored signatures");
  auto* search = app.add_subcommand("search", "Rank the gallery for every query");
  auto* rerank = app.add_subcommand("rerank", "Rerank stored rank lists with expanded queries");
  auto* evaluate = app.add_subcommand("evaluate", "Compute mAP and CMC from stored rank lists");
  auto* bench_cmd = app.add_subcommand("bench", "Time serial and parallel gallery scans");
  for (auto* cmd : {run, train, embed, index, search, rerank, evaluate, bench_cmd}) {
    add_common(cmd, args);
  }
  bench_cmd->add_option("--items", bench.items, "Synthetic gallery size");
  bench_cmd->add_option("--dim", bench.dim, "Synthetic signature dimension");
  bench_cmd->add_option("--queries", bench.queries, "Timed queries")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Random seed");
  bench_cmd->add_option("--index", bench.index, "Time an existing index instead")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigExit;
  }

  try {
    const ExperimentConfig cfg = resolve(args);
    std::ostream* log = args.quiet ? nullptr : &std::cerr;
    if (*run) {
      print_report(run_experiment(cfg, log).report);
    } else if (*train) {
      stage_train_codebooks(cfg, log);
    } else if (*embed) {
      stage_embed(cfg, log);
    } else if (*index) {
      stage_index(cfg, log);
    } else if (*search) {
      stage_search(cfg, log);
    } else if (*rerank) {
      stage_rerank(cfg, log);
    } else if (*evaluate) {
      print_report(stage_evaluate(cfg, log));
    } else if (*bench_cmd) {
      return run_bench(bench, cfg.threads);
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInvariantExit;
  }
}
