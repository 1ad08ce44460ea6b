// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtbias/error.hpp"
#include "mtbias/stats.hpp"
#include "support/synthetic.hpp"

using namespace mtbias;
using namespace mtbias::stats;
using mtbias::testing::Rng;

namespace {

std::vector<double> draw(Rng& rng, std::size_t n, double mu, double sigma) {
  std::vector<double> out(n);
  for (auto& v : out) v = mu + sigma * rng.normal();
  return out;
}

std::size_t total_count(const BinningResult& r) {
  std::size_t n = 0;
  for (const auto& b : r.bins) n += b.count;
  return n;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("Welch t-test against an independent implementation") {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 3, 4, 5, 6};
  auto r = welch_t_test(a, b);
  CHECK(r.t == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r.df == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(r.p == doctest::Approx(0.34659350708733416).epsilon(1e-12));

  const std::vector<double> c = {1.2, 1.4, 1.1}, d = {1.0, 0.9, 1.05};
  r = welch_t_test(c, d);
  CHECK(r.t == doctest::Approx(2.5354627641855485).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(2.941176470588237).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.08668880248742782).epsilon(1e-10));

  const std::vector<double> e = {0.5, 0.7, 0.9, 1.3}, f = {1.1, 1.4, 1.2, 1.8, 1.6};
  r = welch_t_test(e, f);
  CHECK(r.t == doctest::Approx(-2.6702457084282822).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(5.918736070390519).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.037507100510732326).epsilon(1e-10));
}

TEST_CASE("Welch t-test edge cases") {
  const std::vector<double> a = {1.0, 2.0, 4.0};
  auto r = welch_t_test(a, a);
  CHECK(r.t == 0.0);
  CHECK(r.p == doctest::Approx(1.0));

  const std::vector<double> flat1 = {1, 1, 1, 1}, flat2 = {2, 2, 2, 2};
  r = welch_t_test(flat1, flat1);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
  CHECK(r.degenerate);
  r = welch_t_test(flat2, flat1);
  CHECK(std::isinf(r.t));
  CHECK(r.t > 0.0);
  CHECK(r.p == 0.0);
  CHECK(r.degenerate);

  const std::vector<double> lo = {0.0, 0.01}, hi = {100.0, 100.01};
  CHECK(welch_t_test(lo, hi).p < 1e-6);

  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS(welch_t_test(one, a), ValidationError);
}

TEST_CASE("single-effect ANOVA") {
  SUBCASE("identical groups") {
    const std::vector<double> v = {1, 2, 3, 1, 2, 3};
    const std::vector<std::string> f = {"a", "a", "a", "ref", "ref", "ref"};
    const auto est = single_effect_anova(v, f, "ref", "cue");
    REQUIRE(est.size() == 1);
    CHECK(est[0].coefficient == 0.0);
    CHECK(est[0].p_value.value() == doctest::Approx(1.0));
    CHECK_FALSE(est[0].significant);
  }
  SUBCASE("zero-variance groups") {
    const std::vector<double> v = {2, 2, 2, 2, 1, 1, 1, 1};
    const std::vector<std::string> f = {"x", "x", "x", "x", "N", "N", "N", "N"};
    const auto est = single_effect_anova(v, f, "N", "cue");
    REQUIRE(est.size() == 1);
    CHECK(est[0].coefficient == 1.0);
    CHECK(est[0].degenerate);
  }
  SUBCASE("three against three") {
    const std::vector<double> v = {1.2, 1.4, 1.1, 1.0, 0.9, 1.05};
    const std::vector<std::string> f = {"F", "F", "F", "N", "N", "N"};
    const auto est = single_effect_anova(v, f, "N", "Recency");
    REQUIRE(est.size() == 1);
    CHECK(est[0].cue == "Recency");
    CHECK(est[0].level == "F");
    CHECK(est[0].reference_level == "N");
    CHECK(est[0].coefficient == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(est[0].p_value.value() == doctest::Approx(0.08668880248742782).epsilon(1e-10));
    CHECK_FALSE(est[0].significant);
    CHECK(est[0].n_level == 3);
    CHECK(est[0].n_reference == 3);
  }
  SUBCASE("small level has no p-value, levels sorted") {
    const std::vector<double> v = {5, 1, 2, 3, 4};
    const std::vector<std::string> f = {"z", "N", "N", "a", "a"};
    const auto est = single_effect_anova(v, f, "N", "cue");
    REQUIRE(est.size() == 2);
    CHECK(est[0].level == "a");
    CHECK(est[1].level == "z");
    CHECK(est[1].coefficient == doctest::Approx(3.5));
    CHECK_FALSE(est[1].p_value);
    CHECK_FALSE(est[1].significant);
  }
  SUBCASE("missing reference") {
    const std::vector<double> v = {1, 2};
    const std::vector<std::string> f = {"a", "a"};
    CHECK_THROWS_AS(single_effect_anova(v, f, "N", "cue"), ValidationError);
  }
}

TEST_CASE("rank correlations") {
  const std::vector<double> x = {1, 2, 2, 3, 4, 4, 4, 5}, y = {2, 1, 3, 3, 5, 4, 6, 6};
  CHECK(kendall_tau_b(x, y).value() == doctest::Approx(0.8006407690254358).epsilon(1e-13));
  CHECK(spearman_rho(x, y).value() == doctest::Approx(0.9007775105401477).epsilon(1e-13));
  CHECK(pearson_r(x, y).value() == doctest::Approx(0.8767227853705734).epsilon(1e-13));

  const std::vector<double> u = {3, 1, 4, 1.5, 9};
  std::vector<double> rev(u.size()), neg(u.size());
  std::transform(u.begin(), u.end(), neg.begin(), [](double v) { return -v; });
  std::transform(u.begin(), u.end(), rev.begin(), [](double v) { return 10.0 - v; });
  CHECK(kendall_tau_b(u, u).value() == doctest::Approx(1.0));
  CHECK(kendall_tau_b(u, rev).value() == doctest::Approx(-1.0));
  CHECK(spearman_rho(u, u).value() == doctest::Approx(1.0));
  CHECK(spearman_rho(u, neg).value() == doctest::Approx(-1.0));

  const std::vector<double> constant = {2, 2, 2, 2, 2};
  CHECK_FALSE(kendall_tau_b(u, constant));
  CHECK_FALSE(spearman_rho(constant, u));
}

TEST_CASE("average ranks and quantiles") {
  const std::vector<double> v = {10, 20, 20, 5};
  CHECK(average_ranks(v) == std::vector<double>{2.0, 3.5, 3.5, 1.0});
  const std::vector<double> sorted = {1, 1, 2, 3, 4, 5, 6, 9};
  CHECK(quantile_sorted(sorted, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_sorted(sorted, 0.5) == doctest::Approx(3.5));
  CHECK(quantile_sorted(sorted, 0.75) == doctest::Approx(5.25));
  CHECK(quantile_sorted(sorted, 0.0) == 1.0);
  CHECK(quantile_sorted(sorted, 1.0) == 9.0);
}

TEST_CASE("COMET binning") {
  SUBCASE("nine uniform scores in three bins") {
    std::vector<BinInput> in;
    for (int i = 1; i <= 9; ++i) in.push_back({static_cast<double>(i), 0.1 * i, false});
    const auto r = comet_bins(in, 3);
    CHECK_FALSE(r.collapsed);
    CHECK(r.num_bins == 3);
    REQUIRE(r.bins.size() == 6);
    for (const auto& b : r.bins) {
      CHECK(b.count == (b.condition == Condition::Unambiguous ? 3u : 0u));
    }
    REQUIRE(r.bins[0].values.size() == 3);
    CHECK(r.bins[0].values[2] == doctest::Approx(0.3));
    CHECK(r.bins[4].values.front() == doctest::Approx(0.7));
    CHECK(r.bins[0].density.size() == kDensityPoints);
    CHECK(r.bins[1].count == 0);
    CHECK_FALSE(r.bins[1].median);
  }
  SUBCASE("identical scores collapse") {
    std::vector<BinInput> in(12, {70.0, 0.5, false});
    in[3].ambiguous = true;
    const auto r = comet_bins(in, 3);
    CHECK(r.collapsed);
    CHECK(r.num_bins == 1);
    CHECK(total_count(r) == 12);
  }
  SUBCASE("edges agree with a sorting oracle") {
    Rng rng(29);
    std::vector<BinInput> in;
    for (int i = 0; i < 301; ++i) in.push_back({rng.uniform(20.0, 95.0), rng.uniform(), rng.uniform() < 0.4});
    std::vector<double> sorted;
    for (const auto& b : in) sorted.push_back(b.comet);
    std::sort(sorted.begin(), sorted.end());
    const auto r = comet_bins(in, 3);
    REQUIRE(r.edges.size() == 2);
    // 301 points: the tercile positions fall exactly on order statistics 100 and 200.
    CHECK(r.edges[0] == doctest::Approx(sorted[100]).epsilon(1e-14));
    CHECK(r.edges[1] == doctest::Approx(sorted[200]).epsilon(1e-14));
    for (const auto& b : r.bins) {
      std::size_t expected = 0;
      for (const auto& x : in) {
        const bool cond = b.condition == Condition::Ambiguous;
        if (x.ambiguous != cond) continue;
        const bool above_lo = b.bin_index == 0 || x.comet > r.edges[b.bin_index - 1];
        const bool below_hi = b.bin_index == r.num_bins - 1 || x.comet <= r.edges[b.bin_index];
        expected += above_lo && below_hi;
      }
      CHECK(b.count == expected);
    }
  }
  SUBCASE("a score on an edge goes to the lower bin") {
    std::vector<BinInput> in;
    for (double c : {1.0, 2.0, 3.0, 4.0, 5.0}) in.push_back({c, c, false});
    const auto r = comet_bins(in, 2);
    REQUIRE(r.edges == std::vector<double>{3.0});
    CHECK(r.bins[0].values == std::vector<double>{1.0, 2.0, 3.0});
  }
}

TEST_CASE("reference aggregation and rankings") {
  const double one[] = {80.0};
  const double two[] = {74.2, 76.9};
  CHECK(max_reference_aggregation(one) == 80.0);
  CHECK(max_reference_aggregation(two) == 76.9);
  CHECK_THROWS_AS(max_reference_aggregation(std::span<const double>{}), ValidationError);

  CHECK(rank_models({{"A", 1.0}}, true).size() == 1);
  const auto asc = rank_models({{"A", 2.0}, {"B", 1.0}, {"C", 3.0}}, true);
  CHECK(asc[0].first == "B");
  CHECK(asc[1].first == "A");
  CHECK(asc[2].first == "C");
  const auto ties = rank_models({{"b", 1.0}, {"a", 1.0}, {"c", 0.0}}, false);
  CHECK(ties[0].first == "a");
  CHECK(ties[1].first == "b");
  CHECK(ties[2].first == "c");
}

TEST_CASE("property: Welch antisymmetry") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = draw(rng, 2 + rng.index(20), rng.uniform(-1, 1), rng.uniform(0.1, 2));
    const auto b = draw(rng, 2 + rng.index(20), rng.uniform(-1, 1), rng.uniform(0.1, 2));
    const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
    CHECK(ab.t == -ba.t);
    CHECK(ab.p == ba.p);
    CHECK(ab.p >= 0.0);
    CHECK(ab.p <= 1.0);
  }
}

TEST_CASE("property: rank correlations ignore monotone transforms") {
  Rng rng(37);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.index(30);
    std::vector<double> x(n), y(n), xc(n), ye(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform() < 0.2 ? 1.0 : rng.uniform(0.1, 5.0);
      y[i] = std::round(rng.uniform(0.0, 6.0));
      xc[i] = x[i] * x[i] * x[i];
      ye[i] = std::exp(y[i]);
    }
    const auto k = kendall_tau_b(x, y), s = spearman_rho(x, y);
    REQUIRE(k.has_value() == kendall_tau_b(xc, ye).has_value());
    if (!k) continue;
    CHECK(*kendall_tau_b(xc, ye) == doctest::Approx(*k).epsilon(1e-12));
    CHECK(*spearman_rho(xc, ye) == doctest::Approx(*s).epsilon(1e-12));
    CHECK(std::abs(*k) <= 1.0 + 1e-12);
  }
}

TEST_CASE("property: ANOVA coefficients are translation invariant and scale linearly") {
  Rng rng(41);
  const std::vector<std::string> levels = {"F", "M", "N"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 9 + rng.index(40);
    std::vector<double> v(n);
    std::vector<std::string> f(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = rng.normal();
      f[i] = levels[i % 3];
    }
    const double shift = rng.uniform(-10, 10), scale = rng.uniform(0.1, 10);
    std::vector<double> shifted(n), scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      shifted[i] = v[i] + shift;
      scaled[i] = v[i] * scale;
    }
    const auto base = single_effect_anova(v, f, "N", "c");
    const auto sh = single_effect_anova(shifted, f, "N", "c");
    const auto sc = single_effect_anova(scaled, f, "N", "c");
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(sh[k].coefficient == doctest::Approx(base[k].coefficient).epsilon(1e-9).scale(10));
      CHECK(sc[k].coefficient == doctest::Approx(scale * base[k].coefficient).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: bins partition the records with monotone edges") {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(200);
    std::vector<BinInput> in;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = rng.uniform() < 0.3 ? 50.0 : std::round(rng.uniform(0.0, 100.0));
      in.push_back({c, rng.uniform(), rng.uniform() < 0.5});
    }
    const std::size_t k = 2 + rng.index(5);
    const auto r = comet_bins(in, k);
    CHECK(total_count(r) == n);
    CHECK(std::is_sorted(r.edges.begin(), r.edges.end()));
    CHECK(std::adjacent_find(r.edges.begin(), r.edges.end()) == r.edges.end());
    CHECK(r.num_bins == r.edges.size() + 1);
    CHECK(r.collapsed == (r.num_bins < k));
  }
}

TEST_CASE("property: max aggregation is idempotent and order free") {
  Rng rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.index(5));
    for (auto& x : v) x = rng.uniform(0, 100);
    const double m = max_reference_aggregation(v);
    const double again[] = {m, m};
    CHECK(max_reference_aggregation(again) == m);
    std::reverse(v.begin(), v.end());
    CHECK(max_reference_aggregation(v) == m);
  }
}

}  // TEST_SUITE
