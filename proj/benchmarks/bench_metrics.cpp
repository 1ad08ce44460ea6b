// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "mtbias/entropy.hpp"
#include "mtbias/stats.hpp"

using namespace mtbias;

namespace {

SampleSet embedded_set(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 1.0);
  SampleSet s;
  s.instance_id = "bench";
  s.model_id = "m";
  s.language = "es";
  for (std::size_t i = 0; i < n; ++i) {
    Sample x;
    x.text = "s" + std::to_string(i);
    x.log_prob = -1.0;
    x.gender_label = i % 3 == 0 ? GenderLabel::Feminine : GenderLabel::Masculine;
    x.embedding.resize(dim);
    for (auto& v : x.embedding) v = noise(rng);
    s.samples.push_back(std::move(x));
  }
  s.sampling_meta.num_samples = n;
  return s;
}

// Block-structured entailment with k clusters.
EntailmentMatrix block_entailment(std::size_t n, std::size_t k) {
  EntailmentMatrix m(n, 0.1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i % k == j % k) m(i, j) = 0.9;
    }
  }
  return m;
}

}  // namespace

static void BM_CosineAndS3E(benchmark::State& state) {
  const auto set = embedded_set(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    const auto sim = metrics::cosine_similarity_matrix(set);
    benchmark::DoNotOptimize(metrics::s3e_entropy(sim, {2.0, 1e-6}).entropy);
  }
}
BENCHMARK(BM_CosineAndS3E)->Args({128, 768})->Args({256, 1024});

static void BM_S3EOnly(benchmark::State& state) {
  const auto set = embedded_set(static_cast<std::size_t>(state.range(0)), 64);
  const auto sim = metrics::cosine_similarity_matrix(set);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::s3e_entropy(sim, {2.0, 1e-6}).entropy);
}
BENCHMARK(BM_S3EOnly)->Arg(128)->Arg(256);

static void BM_EntailmentClustering(benchmark::State& state) {
  const auto m = block_entailment(static_cast<std::size_t>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::cluster_by_entailment(m).num_clusters);
}
BENCHMARK(BM_EntailmentClustering)->Arg(128)->Arg(256);

static void BM_KendallTauB(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 50);
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = d(rng);
    y[i] = x[i] + d(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(stats::kendall_tau_b(x, y));
}
BENCHMARK(BM_KendallTauB)->Arg(12)->Arg(1000);

BENCHMARK_MAIN();
