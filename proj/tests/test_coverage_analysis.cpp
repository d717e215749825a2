#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tempo_conformal/coverage_analysis.hpp"
#include "tempo_conformal/errors.hpp"
#include "tempo_conformal/rng.hpp"

using namespace tempo_conformal;

TEST_CASE("evaluate computes coverage and mean set size") {
  LabelMap labels = {{{0, 1}, 0}, {{1, 1}, 1}, {{2, 1}, 0}};
  std::vector<PredictionSet> sets = {
      {{0, 1}, {0}, 0.5},      // covered, size 1
      {{1, 1}, {0}, 0.5},      // missed, size 1
      {{2, 1}, {0, 1}, 0.5},   // covered, size 2
  };
  const auto report = evaluate(sets, labels, 0.1);
  CHECK(report.coverage == doctest::Approx(2.0 / 3.0));
  CHECK(report.efficiency == doctest::Approx(4.0 / 3.0));
  CHECK(report.n_test == 3);

  SUBCASE("set sizes 1,2,3 average to 2") {
    std::vector<PredictionSet> sized = {
        {{0, 1}, {0}, 0.0}, {{1, 1}, {0, 1}, 0.0}, {{2, 1}, {0, 1, 2}, 0.0}};
    CHECK(evaluate(sized, labels, 0.1).efficiency == doctest::Approx(2.0));
  }
  SUBCASE("admit-all sets give coverage 1 and efficiency K") {
    std::vector<PredictionSet> all = {
        {{0, 1}, {0, 1}, kAdmitAll}, {{1, 1}, {0, 1}, kAdmitAll}, {{2, 1}, {0, 1}, kAdmitAll}};
    const auto r = evaluate(all, labels, 0.1);
    CHECK(r.coverage == 1.0);
    CHECK(r.efficiency == 2.0);
  }
  SUBCASE("empty input and missing labels are errors") {
    CHECK_THROWS_AS(evaluate({}, labels, 0.1), ValidationError);
    std::vector<PredictionSet> stray = {{{9, 9}, {0}, 0.5}};
    CHECK_THROWS_AS(evaluate(stray, labels, 0.1), ValidationError);
  }
}

TEST_CASE("discrete total variation distance") {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<double> q = {0.8, 0.2};
  CHECK(tv_distance_discrete(p, q) == doctest::Approx(0.3));
  CHECK(tv_distance_discrete(p, p) == 0.0);
  const std::vector<double> a = {1.0, 0.0};
  const std::vector<double> b = {0.0, 1.0};
  CHECK(tv_distance_discrete(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(tv_distance_discrete(p, std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(tv_distance_discrete(p, std::vector<double>{0.4, 0.4}), ValidationError);

  SUBCASE("metric properties on random histograms") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t bins = 2 + rng.below(10);
      auto draw = [&] {
        std::vector<double> h(bins);
        double sum = 0.0;
        for (double& v : h) {
          v = rng.uniform() + 1e-6;
          sum += v;
        }
        for (double& v : h) v /= sum;
        return h;
      };
      const auto x = draw(), y = draw(), z = draw();
      CHECK(tv_distance_discrete(x, y) == doctest::Approx(tv_distance_discrete(y, x)));
      CHECK(tv_distance_discrete(x, x) == 0.0);
      CHECK(tv_distance_discrete(x, z) <=
            tv_distance_discrete(x, y) + tv_distance_discrete(y, z) + 1e-12);
      CHECK(tv_distance_discrete(x, y) >= 0.0);
      CHECK(tv_distance_discrete(x, y) <= 1.0 + 1e-12);
    }
  }
}

namespace {

StreamSpec uniform_stream() {
  StreamSpec s;
  s.pre = {0.0, 1.0};
  s.post = {0.0, 1.0};
  return s;
}

}  // namespace

TEST_CASE("gap bound: identically distributed streams give a near-zero bound and gap") {
  const std::vector<double> weights(19, 1.0);
  const auto report =
      estimate_gap_bound(uniform_stream(), {0.0, 1.0}, weights, 0.1, 100000, 50, 7);
  CHECK(report.bound < 0.02);
  CHECK(std::abs(report.empirical_gap) < 0.01);
  for (double tv : report.tv_terms) CHECK(tv < 0.025);
}

TEST_CASE("gap bound: shifted test stream bounds the realized gap") {
  // Calibration U(0,1), test U(0.5,1.5): marginal TV = 0.5 and the realized
  // gap concentrates near 0.5 as well; the bound must sit above the gap.
  const std::vector<double> weights(19, 1.0);
  const auto report =
      estimate_gap_bound(uniform_stream(), {0.5, 1.5}, weights, 0.1, 40000, 50, 11);
  CHECK(report.empirical_gap <= report.bound + 0.02);
  CHECK(report.bound == doctest::Approx(0.5 * 19.0 / 20.0).epsilon(0.1));
  CHECK(report.empirical_gap == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("gap bound: decaying weights shrink the bound") {
  std::vector<double> uniform_w(19, 1.0), decayed(19);
  for (std::size_t i = 0; i < decayed.size(); ++i) {
    decayed[i] = std::pow(0.8, static_cast<double>(decayed.size() - 1 - i));
  }
  const auto a = estimate_gap_bound(uniform_stream(), {0.5, 1.5}, uniform_w, 0.1, 20000, 50, 13);
  const auto b = estimate_gap_bound(uniform_stream(), {0.5, 1.5}, decayed, 0.1, 20000, 50, 13);
  CHECK(b.bound < a.bound);
}

TEST_CASE("gap bound is invariant under weight rescaling") {
  std::vector<double> w(10);
  Rng rng(17);
  for (double& v : w) v = rng.uniform(0.1, 2.0);
  std::vector<double> scaled = w;
  for (double& v : scaled) v *= 37.5;
  const auto a = estimate_gap_bound(uniform_stream(), {0.25, 1.25}, w, 0.1, 5000, 50, 19);
  const auto b = estimate_gap_bound(uniform_stream(), {0.25, 1.25}, scaled, 0.1, 5000, 50, 19);
  CHECK(a.bound == doctest::Approx(b.bound).epsilon(1e-9));
  CHECK(a.empirical_gap == b.empirical_gap);
}

TEST_CASE("gap bound configuration errors") {
  const std::vector<double> w(5, 1.0);
  CHECK_THROWS_AS(estimate_gap_bound(uniform_stream(), {0.0, 1.0}, w, 0.1, 50, 50, 1),
                  ConfigError);
  CHECK_THROWS_AS(estimate_gap_bound(uniform_stream(), {0.0, 1.0}, w, 0.1, 500, 1, 1),
                  ConfigError);
  CHECK_THROWS_AS(estimate_gap_bound(uniform_stream(), {0.0, 1.0}, {}, 0.1, 500, 50, 1),
                  ConfigError);
}

namespace {

// Exact per-subset enumeration oracle: every n_calib-subset of slots is an
// equally likely permutation image; composition probabilities per subset come
// from expanding the product of per-slot classification probabilities.
double demo_oracle(const StreamSpec& stream, int n) {
  const int n_calib = n / 2;
  const int changepoint = static_cast<int>(std::floor(stream.changepoint_fraction * n));
  const int target = std::min(changepoint, n_calib);
  const double threshold =
      0.25 * (stream.pre.lo + stream.pre.hi + stream.post.lo + stream.post.hi);
  auto q_of = [&](int slot) {
    const auto& d = slot < changepoint ? stream.pre : stream.post;
    return std::clamp((threshold - d.lo) / (d.hi - d.lo), 0.0, 1.0);
  };

  // P(composition == target) for a given slot subset via full expansion.
  auto subset_probability = [&](const std::vector<int>& slots) {
    double total = 0.0;
    const int m = static_cast<int>(slots.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != target) continue;
      double p = 1.0;
      for (int i = 0; i < m; ++i) {
        const double q = q_of(slots[i]);
        p *= (mask >> i) & 1 ? q : 1.0 - q;
      }
      total += p;
    }
    return total;
  };

  std::vector<int> identity(n_calib);
  std::iota(identity.begin(), identity.end(), 0);
  const double p_identity = subset_probability(identity);

  double max_disparity = 0.0;
  std::vector<int> subset;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != n_calib) continue;
    subset.clear();
    for (int i = 0; i < n; ++i) {
      if ((mask >> i) & 1) subset.push_back(i);
    }
    max_disparity = std::max(max_disparity, std::abs(p_identity - subset_probability(subset)));
  }
  return max_disparity;
}

}  // namespace

TEST_CASE("nonexchangeability demo: exact mode matches brute-force enumeration") {
  SUBCASE("disjoint regimes at the midpoint changepoint") {
    StreamSpec s;
    s.pre = {0.0, 1.0};
    s.post = {2.0, 3.0};
    s.changepoint_fraction = 0.5;
    const double got = nonexchangeability_demo(s, 12, 1, true);
    const double want = demo_oracle(s, 12);
    CHECK(got == want);
    CHECK(got == 1.0);  // disjoint supports identify regimes exactly
  }
  SUBCASE("overlapping regimes still match the oracle") {
    StreamSpec s;
    s.pre = {0.0, 1.0};
    s.post = {0.6, 1.6};
    s.changepoint_fraction = 0.5;
    for (int n : {6, 8, 10, 12}) {
      CHECK(nonexchangeability_demo(s, n, 1, true) ==
            doctest::Approx(demo_oracle(s, n)).epsilon(1e-12));
    }
  }
  SUBCASE("single regime has zero disparity exactly") {
    const double got = nonexchangeability_demo(uniform_stream(), 12, 1, true);
    CHECK(got == 0.0);
  }
}

TEST_CASE("nonexchangeability demo: Monte-Carlo agrees with the exact mode") {
  StreamSpec s;
  s.pre = {0.0, 1.0};
  s.post = {0.5, 1.5};
  s.changepoint_fraction = 0.5;
  const int replicates = 20000;
  const double exact = nonexchangeability_demo(s, 10, 5, true);
  const double mc = nonexchangeability_demo(s, 10, 5, false, replicates, 40);
  // Conservative SE bound for a difference of two proportions, times 3.
  const double se = 3.0 * std::sqrt(0.5 / replicates);
  CHECK(std::abs(mc - exact) <= 3.0 * se + 0.02);

  SUBCASE("single regime control stays near zero") {
    const double control = nonexchangeability_demo(uniform_stream(), 12, 5, false, replicates, 40);
    CHECK(control <= 3.0 * std::sqrt(0.5 / replicates) * 3.0);
  }
}
