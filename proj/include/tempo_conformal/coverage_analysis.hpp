#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "tempo_conformal/temporal_graph.hpp"
#include "tempo_conformal/weighted_quantile.hpp"

namespace tempo_conformal {

struct EvalReport {
  double coverage = 0.0;    // fraction of test points whose true label is admitted
  double efficiency = 0.0;  // mean prediction-set size
  std::size_t n_test = 0;
  double alpha = 0.0;
};

using LabelMap = std::map<TemporalNodeId, int>;

EvalReport evaluate(std::span<const PredictionSet> sets, const LabelMap& labels, double alpha);
EvalReport evaluate(std::span<const PredictionSet> sets, const TemporalGraph& g, double alpha);

// Half L1 distance between two histograms over the same support.
double tv_distance_discrete(std::span<const double> p, std::span<const double> q);

// Uniform score distribution on [lo, hi).
struct SlotDistribution {
  double lo = 0.0;
  double hi = 1.0;
};

// Score stream with one regime switch: slots before the changepoint draw from
// `pre`, the rest from `post`.
struct StreamSpec {
  SlotDistribution pre;
  SlotDistribution post;
  double changepoint_fraction = 0.5;
};

struct GapBoundReport {
  double empirical_gap = 0.0;     // (1 - alpha) - empirical coverage, signed
  double bound = 0.0;             // sum(w_i * tv_i) / (1 + sum(w_i)), canonical weights
  std::vector<double> tv_terms;   // per-swap marginal total-variation estimates
  std::vector<double> weights_used;
};

// Monte-Carlo estimate of the coverage-gap bound and of the realized gap.
// Each tv term is the max binned marginal TV between the swapped and
// unswapped joint score vectors (conservative surrogate for the sequence-law
// distance). Coverage uses weighted_quantile_threshold on fresh draws.
GapBoundReport estimate_gap_bound(const StreamSpec& calib, const SlotDistribution& test,
                                  std::span<const double> weights, double alpha, int n_samples,
                                  int n_bins, std::uint64_t seed);

// Largest difference, over calibration-set permutations, between the
// probability of reproducing the temporal calibration composition under the
// original assignment and under the permuted one. Regime membership is read
// off score values against the midpoint threshold. Exact mode enumerates all
// compositions; Monte-Carlo mode samples score draws and permutations.
double nonexchangeability_demo(const StreamSpec& stream, int n, std::uint64_t seed,
                               bool exact_mode = false, int n_replicates = 20000,
                               int n_permutations = 50);

}  // namespace tempo_conformal
