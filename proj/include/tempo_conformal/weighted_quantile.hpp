#pragma once

#include <limits>
#include <span>
#include <vector>

#include "tempo_conformal/temporal_graph.hpp"

namespace tempo_conformal {

// Threshold meaning "admit every class"; returned when the requested rank
// exceeds the calibration sample.
inline constexpr double kAdmitAll = std::numeric_limits<double>::infinity();

// Learnable rank-indexed quantile weights. weights() is the softmax of the
// logits; entries attach to sorted-score rank positions, not to calibration
// sample identities.
struct WeightVector {
  std::vector<double> logits;

  static WeightVector uniform(std::size_t n) { return WeightVector{std::vector<double>(n, 0.0)}; }
  std::size_t size() const { return logits.size(); }
  std::vector<double> weights() const;
};

// Whether the soft selection softmax is driven by the cumulative-weight gap
// Gamma (default) or by the raw rank weight itself.
enum class SoftSelector { cumulative_gap, raw_weight };

struct QuantileResult {
  double eta = 0.0;                   // threshold
  std::vector<double> selection;      // softmax mass per ascending rank
  std::vector<double> sorted_scores;  // ascending calibration scores
};

struct SoftQuantileGradient {
  double eta = 0.0;
  std::vector<double> selection;
  std::vector<double> sorted_scores;
  std::vector<double> d_eta_d_logit;
};

struct PredictionSet {
  TemporalNodeId node;
  std::vector<int> admitted;  // ascending class indices
  double quantile_used = 0.0;
};

// ceil((n+1)(1-alpha))-th smallest calibration score; kAdmitAll when that rank
// exceeds n.
double hard_quantile(std::span<const double> calib_scores, double alpha);

// Differentiable weighted quantile: scores sorted ascending, cumulative rank
// weights compared against 1-alpha, softmax at the given temperature selects
// the rank mix, eta is the selected convex combination of sorted scores.
QuantileResult soft_quantile(std::span<const double> calib_scores, const WeightVector& w,
                             double alpha, double temperature,
                             SoftSelector selector = SoftSelector::cumulative_gap);

// soft_quantile plus d(eta)/d(logits) via the chain rule.
SoftQuantileGradient soft_quantile_gradient(std::span<const double> calib_scores,
                                            const WeightVector& w, double alpha,
                                            double temperature,
                                            SoftSelector selector = SoftSelector::cumulative_gap);

// Smallest score whose cumulative normalized weight mass reaches 1-alpha,
// with the hypothetical test point carrying weight 1 at +infinity. Weights are
// canonicalized by their maximum so rescaling the vector is a no-op.
double weighted_quantile_threshold(std::span<const double> scores_time_ordered,
                                   std::span<const double> weights, double alpha);

// weighted_quantile_threshold with geometric weights decay^(n-i); decay 1
// recovers hard_quantile.
double fixed_weight_quantile(std::span<const double> scores_time_ordered, double decay,
                             double alpha);

PredictionSet build_prediction_set(TemporalNodeId node, std::span<const double> class_scores,
                                   double threshold);

// Appendix-style swap audit: with the test point in the last position, flags
// any calibration position whose larger weight combined with a smaller score
// would raise the position-weighted quantile when swapped with the test
// point. Property-test oracle, not part of the serving path.
bool quantile_exchange_check(std::span<const double> scores_with_test_last,
                             std::span<const double> weights);

}  // namespace tempo_conformal
