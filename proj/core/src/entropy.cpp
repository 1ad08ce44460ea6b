// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include "mtbias/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "mtbias/error.hpp"
#include "mtbias/stats.hpp"

namespace mtbias::metrics {

namespace {

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

// Surprisal -ln(n_c / N) for a labelling already reduced to cluster sizes.
EntropyResult from_cluster_sizes(const std::vector<std::size_t>& cluster_of,
                                 const std::vector<std::size_t>& sizes) {
  const auto n = static_cast<double>(cluster_of.size());
  EntropyResult out;
  out.per_sample_surprisal.reserve(cluster_of.size());
  for (std::size_t c : cluster_of) {
    out.per_sample_surprisal.push_back(-std::log(static_cast<double>(sizes[c]) / n));
  }
  out.entropy = mean_of(out.per_sample_surprisal);
  return out;
}

}  // namespace

double shannon_entropy(std::span<const double> probabilities) {
  if (probabilities.empty()) throw ValidationError("shannon_entropy: empty distribution");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ValidationError("shannon_entropy: probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("shannon_entropy: probabilities sum to " + std::to_string(total));
  }
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

EntropyResult sequence_entropy(const SampleSet& samples) {
  if (samples.samples.empty()) throw ValidationError("sequence_entropy: empty sample set");
  EntropyResult out;
  out.per_sample_surprisal.reserve(samples.size());
  for (const auto& s : samples.samples) out.per_sample_surprisal.push_back(-s.log_prob);
  out.entropy = mean_of(out.per_sample_surprisal);
  return out;
}

ClusterAssignment cluster_by_entailment(const EntailmentMatrix& matrix, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("cluster_by_entailment: threshold must lie in (0,1)");
  }
  const std::size_t n = matrix.size();
  ClusterAssignment out;
  out.cluster_of.resize(n);
  std::vector<std::size_t> representatives;
  for (std::size_t i = 0; i < n; ++i) {
    auto joined = std::find_if(representatives.begin(), representatives.end(), [&](std::size_t r) {
      return matrix(i, r) >= threshold && matrix(r, i) >= threshold;
    });
    if (joined == representatives.end()) {
      out.cluster_of[i] = representatives.size();
      representatives.push_back(i);
    } else {
      out.cluster_of[i] = static_cast<std::size_t>(joined - representatives.begin());
    }
  }
  out.num_clusters = representatives.size();
  return out;
}

ClusterAssignment cluster_by_entailment(const SampleSet& samples, const EntailmentMatrix& matrix,
                                        double threshold) {
  if (matrix.size() != samples.size()) {
    throw ValidationError("cluster_by_entailment: matrix is " + std::to_string(matrix.size()) +
                          "x" + std::to_string(matrix.size()) + " for " +
                          std::to_string(samples.size()) + " samples");
  }
  return cluster_by_entailment(matrix, threshold);
}

EntropyResult semantic_entropy(const ClusterAssignment& assignment) {
  validate_assignment(assignment);
  std::vector<std::size_t> sizes(assignment.num_clusters, 0);
  for (std::size_t c : assignment.cluster_of) ++sizes[c];
  return from_cluster_sizes(assignment.cluster_of, sizes);
}

EntropyResult gender_entropy(const SampleSet& samples) {
  if (samples.samples.empty()) throw ValidationError("gender_entropy: empty sample set");
  std::vector<std::size_t> labels;
  labels.reserve(samples.size());
  std::vector<std::size_t> sizes(kNumGenderLabels, 0);
  for (const auto& s : samples.samples) {
    const auto c = static_cast<std::size_t>(s.gender_label);
    labels.push_back(c);
    ++sizes[c];
  }
  return from_cluster_sizes(labels, sizes);
}

SquareMatrix cosine_similarity_matrix(const SampleSet& samples, double floor) {
  if (!(floor > 0.0 && floor < 1.0)) {
    throw ValidationError("cosine_similarity_matrix: floor must lie in (0,1)");
  }
  if (!samples.has_embeddings()) {
    throw ValidationError("cosine_similarity_matrix: every sample needs an embedding");
  }
  const std::size_t n = samples.size();
  const std::size_t dim = samples.samples.front().embedding.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = samples.samples[i].embedding;
    if (e.size() != dim) throw ValidationError("cosine_similarity_matrix: ragged embeddings");
    double acc = 0.0;
    for (double v : e) acc += v * v;
    if (!(acc > 0.0)) throw ValidationError("cosine_similarity_matrix: zero-norm embedding");
    norms[i] = std::sqrt(acc);
  }
  SquareMatrix sim(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = samples.samples[i].embedding;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b = samples.samples[j].embedding;
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += a[d] * b[d];
      const double c = std::clamp(dot / (norms[i] * norms[j]), floor, 1.0);
      sim(i, j) = c;
      sim(j, i) = c;
    }
  }
  return sim;
}

EntropyResult s3e_entropy(const SquareMatrix& similarity, const SimilarityConfig& config) {
  if (!(config.alpha > 0.0) || !std::isfinite(config.alpha)) {
    throw ValidationError("s3e_entropy: alpha must be positive");
  }
  const std::size_t n = similarity.size();
  if (n == 0) throw ValidationError("s3e_entropy: empty similarity matrix");
  EntropyResult out;
  out.per_sample_surprisal.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (similarity(i, i) != 1.0) throw ValidationError("s3e_entropy: diagonal must be 1");
    double acc = 0.0;
    for (double raw : similarity.row(i)) {
      const double s = std::isnan(raw) ? raw : std::max(raw, config.floor);
      if (!(s > 0.0 && s <= 1.0)) {
        throw ValidationError("s3e_entropy: similarity entries must lie in (0,1] after clamping");
      }
      acc += std::pow(s, config.alpha);
    }
    // acc >= 1 because of the self term, so the surprisal is at most ln N.
    out.per_sample_surprisal.push_back(std::max(0.0, -std::log(acc / static_cast<double>(n))));
  }
  out.entropy = mean_of(out.per_sample_surprisal);
  return out;
}

AlphaChoice tune_alpha(std::span<const SampleSet> calibration, std::span<const double> grid,
                       double floor) {
  if (grid.empty()) throw ValidationError("tune_alpha: empty alpha grid");
  if (calibration.size() < 3) {
    throw ValidationError("tune_alpha: need at least 3 calibration instances");
  }
  for (double a : grid) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("tune_alpha: alpha must be > 0");
  }

  std::vector<SquareMatrix> similarities;
  std::vector<double> gender_h;
  similarities.reserve(calibration.size());
  gender_h.reserve(calibration.size());
  for (const auto& set : calibration) {
    similarities.push_back(cosine_similarity_matrix(set, floor));
    gender_h.push_back(gender_entropy(set).entropy);
  }

  std::vector<double> sorted_grid(grid.begin(), grid.end());
  std::sort(sorted_grid.begin(), sorted_grid.end());

  AlphaChoice best{sorted_grid.front(), std::nullopt};
  std::vector<double> s3e_h(calibration.size());
  for (double alpha : sorted_grid) {
    for (std::size_t k = 0; k < similarities.size(); ++k) {
      s3e_h[k] = s3e_entropy(similarities[k], {alpha, floor}).entropy;
    }
    const auto rho = stats::spearman_rho(s3e_h, gender_h);
    if (rho && (!best.correlation || *rho > *best.correlation)) {
      best = {alpha, rho};
    }
  }
  return best;
}

}  // namespace mtbias::metrics
