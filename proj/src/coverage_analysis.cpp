#include "tempo_conformal/coverage_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "tempo_conformal/errors.hpp"
#include "tempo_conformal/rng.hpp"

namespace tempo_conformal {

namespace {

EvalReport evaluate_impl(std::span<const PredictionSet> sets, double alpha,
                         const std::function<int(TemporalNodeId)>& label_of) {
  if (sets.empty()) throw ValidationError("evaluate: no prediction sets");
  EvalReport report;
  report.alpha = alpha;
  report.n_test = sets.size();
  for (const auto& s : sets) {
    const int label = label_of(s.node);
    report.efficiency += static_cast<double>(s.admitted.size());
    report.coverage +=
        std::binary_search(s.admitted.begin(), s.admitted.end(), label) ? 1.0 : 0.0;
  }
  report.coverage /= static_cast<double>(sets.size());
  report.efficiency /= static_cast<double>(sets.size());
  return report;
}

double slot_sample(const SlotDistribution& d, Rng& rng) { return rng.uniform(d.lo, d.hi); }

const SlotDistribution& slot_dist(const StreamSpec& spec, int slot, int n_slots) {
  const int changepoint = static_cast<int>(std::floor(spec.changepoint_fraction * n_slots));
  return slot < changepoint ? spec.pre : spec.post;
}

}  // namespace

EvalReport evaluate(std::span<const PredictionSet> sets, const LabelMap& labels, double alpha) {
  return evaluate_impl(sets, alpha, [&](TemporalNodeId id) {
    auto it = labels.find(id);
    if (it == labels.end()) {
      throw ValidationError("evaluate: no label for occurrence (" + std::to_string(id.node) +
                            ", " + std::to_string(id.time) + ")");
    }
    return it->second;
  });
}

EvalReport evaluate(std::span<const PredictionSet> sets, const TemporalGraph& g, double alpha) {
  return evaluate_impl(sets, alpha, [&](TemporalNodeId id) {
    const int label = g.label(id);
    if (label == kNoLabel) throw ValidationError("evaluate: unlabeled occurrence");
    return label;
  });
}

double tv_distance_discrete(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("tv distance: mismatched support");
  if (p.empty()) throw ValidationError("tv distance: empty histograms");
  double sp = 0.0, sq = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw ValidationError("tv distance: negative mass");
    sp += p[i];
    sq += q[i];
    acc += std::abs(p[i] - q[i]);
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6) {
    throw ValidationError("tv distance: histograms must sum to 1");
  }
  return 0.5 * acc;
}

GapBoundReport estimate_gap_bound(const StreamSpec& calib, const SlotDistribution& test,
                                  std::span<const double> weights, double alpha, int n_samples,
                                  int n_bins, std::uint64_t seed) {
  if (n_samples < 100) throw ConfigError("estimate_gap_bound: n_samples must be >= 100");
  if (n_bins < 2) throw ConfigError("estimate_gap_bound: n_bins must be >= 2");
  if (weights.empty()) throw ConfigError("estimate_gap_bound: empty weights");
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("estimate_gap_bound: weights must be >= 0");
  }
  const int n_calib = static_cast<int>(weights.size());

  GapBoundReport report;
  report.weights_used.assign(weights.begin(), weights.end());

  // Swapping the test point into calibration slot i changes exactly the i-th
  // and last marginals, both to the same (slot_i vs test) pair, so the max
  // marginal TV per swap is the binned TV between slot i draws and test draws.
  {
    Rng rng(derive_seed(seed, 1));
    std::vector<std::vector<double>> slot_draws(n_calib, std::vector<double>(n_samples));
    std::vector<double> test_draws(n_samples);
    for (int rep = 0; rep < n_samples; ++rep) {
      for (int i = 0; i < n_calib; ++i) {
        slot_draws[i][rep] = slot_sample(slot_dist(calib, i, n_calib), rng);
      }
      test_draws[rep] = slot_sample(test, rng);
    }

    report.tv_terms.resize(n_calib);
    std::vector<double> hp(n_bins), hq(n_bins);
    for (int i = 0; i < n_calib; ++i) {
      double lo = test_draws[0], hi = test_draws[0];
      for (double v : slot_draws[i]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      for (double v : test_draws) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double width = hi > lo ? hi - lo : 1.0;
      std::fill(hp.begin(), hp.end(), 0.0);
      std::fill(hq.begin(), hq.end(), 0.0);
      const double unit = 1.0 / static_cast<double>(n_samples);
      auto bin_of = [&](double v) {
        int b = static_cast<int>((v - lo) / width * n_bins);
        return std::clamp(b, 0, n_bins - 1);
      };
      for (double v : slot_draws[i]) hp[bin_of(v)] += unit;
      for (double v : test_draws) hq[bin_of(v)] += unit;
      report.tv_terms[i] = tv_distance_discrete(hp, hq);
    }
  }

  // Eq.-style bound with weights canonicalized by their maximum (test weight
  // pinned at 1), which makes the report invariant to rescaling the input.
  double max_w = *std::max_element(weights.begin(), weights.end());
  if (max_w == 0.0) throw ConfigError("estimate_gap_bound: all weights are zero");
  double bound_num = 0.0, bound_den = 1.0;
  for (int i = 0; i < n_calib; ++i) {
    bound_num += (weights[i] / max_w) * report.tv_terms[i];
    bound_den += weights[i] / max_w;
  }
  report.bound = bound_num / bound_den;

  // Fresh draws for the realized coverage.
  {
    Rng rng(derive_seed(seed, 2));
    std::vector<double> calib_scores(n_calib);
    std::int64_t covered = 0;
    for (int rep = 0; rep < n_samples; ++rep) {
      for (int i = 0; i < n_calib; ++i) {
        calib_scores[i] = slot_sample(slot_dist(calib, i, n_calib), rng);
      }
      const double test_score = slot_sample(test, rng);
      const double threshold = weighted_quantile_threshold(calib_scores, weights, alpha);
      covered += test_score <= threshold ? 1 : 0;
    }
    const double coverage = static_cast<double>(covered) / static_cast<double>(n_samples);
    report.empirical_gap = (1.0 - alpha) - coverage;
  }
  return report;
}

namespace {

// P(composition == target) where the composition is the number of
// pre-regime-classified scores among calibration slots, k of which are
// pre-changepoint. Poisson-binomial via convolution of two binomials.
double composition_probability(int k_pre_slots, int n_calib, double q_pre, double q_post,
                               int target) {
  std::vector<double> pmf(1, 1.0);
  auto convolve_binomial = [&pmf](int trials, double p) {
    for (int t = 0; t < trials; ++t) {
      std::vector<double> next(pmf.size() + 1, 0.0);
      for (std::size_t c = 0; c < pmf.size(); ++c) {
        next[c] += pmf[c] * (1.0 - p);
        next[c + 1] += pmf[c] * p;
      }
      pmf = std::move(next);
    }
  };
  convolve_binomial(k_pre_slots, q_pre);
  convolve_binomial(n_calib - k_pre_slots, q_post);
  if (target < 0 || target >= static_cast<int>(pmf.size())) return 0.0;
  return pmf[target];
}

}  // namespace

double nonexchangeability_demo(const StreamSpec& stream, int n, std::uint64_t seed,
                               bool exact_mode, int n_replicates, int n_permutations) {
  if (n < 2) throw ConfigError("nonexchangeability demo: need at least 2 slots");
  const int n_calib = n / 2;
  const int changepoint = static_cast<int>(std::floor(stream.changepoint_fraction * n));
  const int target = std::min(changepoint, n_calib);  // composition of the temporal assignment

  const double mid_pre = 0.5 * (stream.pre.lo + stream.pre.hi);
  const double mid_post = 0.5 * (stream.post.lo + stream.post.hi);
  const double threshold = 0.5 * (mid_pre + mid_post);
  auto classify_pre_prob = [&](const SlotDistribution& d) {
    if (d.hi <= d.lo) return d.lo < threshold ? 1.0 : 0.0;
    return std::clamp((threshold - d.lo) / (d.hi - d.lo), 0.0, 1.0);
  };
  const double q_pre = classify_pre_prob(stream.pre);
  const double q_post = classify_pre_prob(stream.post);

  if (exact_mode) {
    // All permutations reduce to the pre-changepoint slot count k drawn into
    // the calibration positions.
    const double p_identity = composition_probability(target, n_calib, q_pre, q_post, target);
    const int k_lo = std::max(0, n_calib - (n - changepoint));
    const int k_hi = std::min(n_calib, changepoint);
    double max_disparity = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
      const double p_k = composition_probability(k, n_calib, q_pre, q_post, target);
      max_disparity = std::max(max_disparity, std::abs(p_identity - p_k));
    }
    return max_disparity;
  }

  if (n_replicates < 100) throw ConfigError("nonexchangeability demo: n_replicates must be >= 100");
  if (n_permutations < 1) throw ConfigError("nonexchangeability demo: need >= 1 permutation");

  Rng rng(derive_seed(seed, 3));
  std::vector<std::vector<int>> permutations(n_permutations, std::vector<int>(n));
  for (auto& perm : permutations) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
  }

  std::vector<double> scores(n);
  std::int64_t hits_identity = 0;
  std::vector<std::int64_t> hits_perm(n_permutations, 0);
  for (int rep = 0; rep < n_replicates; ++rep) {
    for (int i = 0; i < n; ++i) scores[i] = slot_sample(slot_dist(stream, i, n), rng);
    auto composition = [&](const std::vector<int>* perm) {
      int count = 0;
      for (int pos = 0; pos < n_calib; ++pos) {
        const int slot = perm ? (*perm)[pos] : pos;
        count += scores[slot] < threshold ? 1 : 0;
      }
      return count;
    };
    hits_identity += composition(nullptr) == target ? 1 : 0;
    for (int pi = 0; pi < n_permutations; ++pi) {
      hits_perm[pi] += composition(&permutations[pi]) == target ? 1 : 0;
    }
  }

  const double p_identity = static_cast<double>(hits_identity) / n_replicates;
  double max_disparity = 0.0;
  for (int pi = 0; pi < n_permutations; ++pi) {
    const double p = static_cast<double>(hits_perm[pi]) / n_replicates;
    max_disparity = std::max(max_disparity, std::abs(p_identity - p));
  }
  return max_disparity;
}

}  // namespace tempo_conformal
