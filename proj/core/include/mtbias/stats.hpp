// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtbias::stats {

inline constexpr double kSignificanceLevel = 0.05;

double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool degenerate = false;   // both groups had zero variance
};

/// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
/// Requires at least two values per group.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct EffectEstimate {
  std::string cue;
  std::string level;
  std::string reference_level;
  double coefficient = 0.0;   // mean(level) - mean(reference)
  std::optional<double> p_value;
  bool significant = false;   // p_value < 0.05
  bool degenerate = false;
  std::size_t n_level = 0;
  std::size_t n_reference = 0;

  bool operator==(const EffectEstimate&) const = default;
};

/// One-factor deviations from a reference level with per-level Welch tests.
/// Levels are emitted in lexicographic order. A level (or reference) with
/// fewer than two observations gets an estimate without a p-value; a level
/// with no observations is skipped. Throws when the reference level has no
/// observations.
std::vector<EffectEstimate> single_effect_anova(std::span<const double> values,
                                                std::span<const std::string> factor,
                                                std::string_view reference,
                                                std::string_view cue = {});

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

/// Tau-b with tie correction. nullopt when either input is constant.
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. nullopt when either input is
/// constant.
std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y);

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y);

/// Linear-interpolated quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

// ---------------------------------------------------------------------------
// COMET binning
// ---------------------------------------------------------------------------

enum class Condition { Ambiguous, Unambiguous };
std::string_view to_string(Condition c);

struct BinInput {
  double comet = 0.0;
  double entropy = 0.0;
  bool ambiguous = false;
};

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

struct BinnedSummary {
  std::size_t bin_index = 0;
  double lo = 0.0;   // bin range on the COMET score, lo <= comet <= hi
  double hi = 0.0;
  Condition condition = Condition::Unambiguous;
  std::vector<double> values;   // entropies, sorted
  std::size_t count = 0;
  std::optional<double> min, q1, median, q3, max;
  std::vector<DensityPoint> density;
};

struct BinningResult {
  std::vector<double> edges;   // interior edges, strictly increasing
  std::vector<BinnedSummary> bins;   // bin-major, Unambiguous then Ambiguous
  bool collapsed = false;   // fewer than k bins survived edge de-duplication
  std::size_t num_bins = 0;
};

inline constexpr std::size_t kDensityPoints = 32;

/// Equal-count (quantile) binning on COMET score into k bins, summarised
/// separately for ambiguous and unambiguous records. A record whose score
/// equals an edge falls in the lower bin. Collapsed edges are merged.
BinningResult comet_bins(std::span<const BinInput> records, std::size_t k = 3);

// ---------------------------------------------------------------------------
// Reference aggregation and rankings
// ---------------------------------------------------------------------------

/// Maximum score over the acceptable references of an item.
double max_reference_aggregation(std::span<const double> scores_per_reference);

/// Stable ordering of models by value; ties broken by model id.
std::vector<std::pair<std::string, double>> rank_models(
    const std::map<std::string, double>& metric_values, bool ascending);

}  // namespace mtbias::stats
