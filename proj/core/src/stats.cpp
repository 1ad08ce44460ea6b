// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include "mtbias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "mtbias/error.hpp"

namespace mtbias::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ValidationError("welch_t_test: each group needs at least two observations");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  const double sa = sample_variance(a) / na;
  const double sb = sample_variance(b) / nb;
  const double se2 = sa + sb;

  WelchResult r;
  if (se2 == 0.0) {
    r.degenerate = true;
    r.df = na + nb - 2.0;
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = diff > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
  return r;
}

std::vector<EffectEstimate> single_effect_anova(std::span<const double> values,
                                                std::span<const std::string> factor,
                                                std::string_view reference,
                                                std::string_view cue) {
  if (values.size() != factor.size()) {
    throw ValidationError("single_effect_anova: values and factor differ in length");
  }
  std::map<std::string, std::vector<double>, std::less<>> groups;
  for (std::size_t i = 0; i < values.size(); ++i) groups[factor[i]].push_back(values[i]);

  const auto ref_it = groups.find(reference);
  if (ref_it == groups.end()) {
    throw ValidationError("single_effect_anova: no observations at reference level '" +
                          std::string(reference) + "'");
  }
  const auto& ref = ref_it->second;
  const double ref_mean = mean(ref);

  std::vector<EffectEstimate> out;
  for (const auto& [level, vals] : groups) {
    if (level == reference) continue;
    EffectEstimate e;
    e.cue = std::string(cue);
    e.level = level;
    e.reference_level = std::string(reference);
    e.coefficient = mean(vals) - ref_mean;
    e.n_level = vals.size();
    e.n_reference = ref.size();
    if (vals.size() >= 2 && ref.size() >= 2) {
      const auto w = welch_t_test(vals, ref);
      e.p_value = w.p;
      e.degenerate = w.degenerate;
      e.significant = w.p < kSignificanceLevel;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* who) {
  if (x.size() != y.size()) throw ValidationError(std::string(who) + ": inputs differ in length");
  if (x.size() < 3) throw ValidationError(std::string(who) + ": need at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError(std::string(who) + ": non-finite input");
    }
  }
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("pearson_r: bad input lengths");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "kendall_tau_b");
  const std::size_t n = x.size();
  long long score = 0;
  long long tied_x = 0;
  long long tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int dx = sign(x[i] - x[j]);
      const int dy = sign(y[i] - y[j]);
      if (dx == 0) ++tied_x;
      if (dy == 0) ++tied_y;
      score += dx * dy;
    }
  }
  const auto pairs = static_cast<long long>(n * (n - 1) / 2);
  const double denom = std::sqrt(static_cast<double>(pairs - tied_x)) *
                       std::sqrt(static_cast<double>(pairs - tied_y));
  if (denom == 0.0) return std::nullopt;
  return std::clamp(static_cast<double>(score) / denom, -1.0, 1.0);
}

std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "spearman_rho");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_r(rx, ry);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string_view to_string(Condition c) {
  return c == Condition::Ambiguous ? "Ambiguous" : "Unambiguous";
}

namespace {

std::vector<DensityPoint> gaussian_kde(const std::vector<double>& sorted) {
  std::vector<DensityPoint> out;
  if (sorted.empty()) return out;
  const auto n = static_cast<double>(sorted.size());
  const double sd = std::sqrt(sample_variance(sorted));
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  double h = 0.9 * spread * std::pow(n, -0.2);
  if (!(h > 0.0)) h = 1e-3 * std::max(1.0, std::abs(sorted.front()));
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * 3.14159265358979323846));
  out.reserve(kDensityPoints);
  for (std::size_t k = 0; k < kDensityPoints; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kDensityPoints - 1);
    double acc = 0.0;
    for (double v : sorted) {
      const double z = (x - v) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out.push_back({x, acc * norm});
  }
  return out;
}

BinnedSummary summarise(std::size_t index, double lo, double hi, Condition cond,
                        std::vector<double> values) {
  BinnedSummary s;
  s.bin_index = index;
  s.lo = lo;
  s.hi = hi;
  s.condition = cond;
  std::sort(values.begin(), values.end());
  s.count = values.size();
  if (!values.empty()) {
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    s.density = gaussian_kde(values);
  }
  s.values = std::move(values);
  return s;
}

}  // namespace

BinningResult comet_bins(std::span<const BinInput> records, std::size_t k) {
  if (k < 2) throw ValidationError("comet_bins: need k >= 2");
  if (records.empty()) throw ValidationError("comet_bins: no records");
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) {
    if (!std::isfinite(r.comet) || !std::isfinite(r.entropy)) {
      throw ValidationError("comet_bins: non-finite input");
    }
    scores.push_back(r.comet);
  }
  std::sort(scores.begin(), scores.end());
  const double smin = scores.front();
  const double smax = scores.back();

  // Interior quantile edges; an edge at or beyond the maximum, or equal to
  // its predecessor, would leave an empty bin and is merged away.
  BinningResult result;
  for (std::size_t j = 1; j < k; ++j) {
    const double e = quantile_sorted(scores, static_cast<double>(j) / static_cast<double>(k));
    if (e >= smax) continue;
    if (!result.edges.empty() && e <= result.edges.back()) continue;
    result.edges.push_back(e);
  }
  result.num_bins = result.edges.size() + 1;
  result.collapsed = result.num_bins < k;

  std::vector<std::vector<double>> amb(result.num_bins), unamb(result.num_bins);
  for (const auto& r : records) {
    // Number of edges strictly below the score: values on an edge go low.
    const auto bin = static_cast<std::size_t>(
        std::lower_bound(result.edges.begin(), result.edges.end(), r.comet) - result.edges.begin());
    (r.ambiguous ? amb : unamb)[bin].push_back(r.entropy);
  }
  for (std::size_t b = 0; b < result.num_bins; ++b) {
    const double lo = b == 0 ? smin : result.edges[b - 1];
    const double hi = b + 1 == result.num_bins ? smax : result.edges[b];
    result.bins.push_back(summarise(b, lo, hi, Condition::Unambiguous, std::move(unamb[b])));
    result.bins.push_back(summarise(b, lo, hi, Condition::Ambiguous, std::move(amb[b])));
  }
  return result;
}

double max_reference_aggregation(std::span<const double> scores_per_reference) {
  if (scores_per_reference.empty()) {
    throw ValidationError("max_reference_aggregation: no reference scores");
  }
  return *std::max_element(scores_per_reference.begin(), scores_per_reference.end());
}

std::vector<std::pair<std::string, double>> rank_models(
    const std::map<std::string, double>& metric_values, bool ascending) {
  std::vector<std::pair<std::string, double>> out(metric_values.begin(), metric_values.end());
  std::stable_sort(out.begin(), out.end(), [ascending](const auto& a, const auto& b) {
    return ascending ? a.second < b.second : a.second > b.second;
  });
  return out;
}

}  // namespace mtbias::stats
