// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

/**
 * @file entropy.hpp
 * @brief Monte-Carlo entropy and surprisal estimators over sampled translations.
 *
 * Every estimator returns the per-sample surprisal alongside the entropy, which
 * is the mean surprisal over the drawn samples. All logarithms are natural
 * (nats). Duplicate sample texts count as distinct draws.
 *
 * Estimators:
 * - Shannon entropy of an explicit distribution.
 * - Semantic entropy: surprisal of a sample is -ln of the fraction of draws in
 *   its entailment cluster.
 * - Gender entropy: same, with clusters given by the focus-noun gender label.
 * - Similarity-sensitive entropy (S3E): surprisal is -ln of the mean
 *   alpha-exponentiated similarity to all draws, self included.
 */

#include <optional>
#include <span>
#include <vector>

#include "mtbias/types.hpp"

namespace mtbias::metrics {

struct EntropyResult {
  double entropy = 0.0;
  std::vector<double> per_sample_surprisal;
};

/// -sum p ln p with 0 ln 0 = 0. Input must be non-negative and sum to 1
/// within 1e-9.
double shannon_entropy(std::span<const double> probabilities);

/// Monte-Carlo Shannon estimate from sequence log-probabilities: the
/// surprisal of each draw is -log_prob.
EntropyResult sequence_entropy(const SampleSet& samples);

/// Greedy single-pass clustering in sample order. Sample i joins the first
/// cluster whose representative r satisfies scores(i,r) >= threshold and
/// scores(r,i) >= threshold; otherwise it founds a new cluster.
ClusterAssignment cluster_by_entailment(const SampleSet& samples, const EntailmentMatrix& matrix,
                                        double threshold = 0.5);

/// Same procedure on a bare matrix (no SampleSet needed).
ClusterAssignment cluster_by_entailment(const EntailmentMatrix& matrix, double threshold = 0.5);

EntropyResult semantic_entropy(const ClusterAssignment& assignment);

/// Clusters are the distinct gender labels; Unknown is its own class.
EntropyResult gender_entropy(const SampleSet& samples);

/// Cosine similarities, clamped below at `floor`, unit diagonal.
SquareMatrix cosine_similarity_matrix(const SampleSet& samples, double floor = 1e-6);

/// Entries below config.floor are raised to it before exponentiation.
EntropyResult s3e_entropy(const SquareMatrix& similarity, const SimilarityConfig& config);

struct AlphaChoice {
  double alpha = 1.0;
  // Spearman correlation between per-instance S3E and gender entropy at the
  // chosen alpha; nullopt when undefined for every grid point.
  std::optional<double> correlation;
};

inline constexpr double kDefaultAlphaGrid[] = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

/// Picks the alpha from `grid` maximising the Spearman correlation between
/// per-instance S3E and gender entropy. Ties go to the smallest alpha.
AlphaChoice tune_alpha(std::span<const SampleSet> calibration, std::span<const double> grid,
                       double floor = 1e-6);

}  // namespace mtbias::metrics
