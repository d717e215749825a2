#include "tempo_conformal/weighted_quantile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tempo_conformal/errors.hpp"

namespace tempo_conformal {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
}

void check_finite(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("non-finite calibration score");
  }
}

std::vector<double> softmax(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// Guard against ceil() promoting an exactly-integral rank that floating-point
// noise nudged upward, e.g. 20 * 0.9 = 18.000000000000004.
constexpr double kRankEps = 1e-8;

}  // namespace

std::vector<double> WeightVector::weights() const {
  if (logits.empty()) throw ConfigError("weight vector is empty");
  return softmax(logits);
}

double hard_quantile(std::span<const double> calib_scores, double alpha) {
  check_alpha(alpha);
  if (calib_scores.empty()) throw ConfigError("hard_quantile: empty calibration scores");
  check_finite(calib_scores);
  const std::size_t n = calib_scores.size();
  const double raw_rank = (static_cast<double>(n) + 1.0) * (1.0 - alpha);
  const auto rank = static_cast<std::int64_t>(std::ceil(raw_rank - kRankEps));
  if (rank > static_cast<std::int64_t>(n)) return kAdmitAll;
  std::vector<double> sorted(calib_scores.begin(), calib_scores.end());
  const std::size_t k = rank < 1 ? 0 : static_cast<std::size_t>(rank - 1);
  std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
  return sorted[k];
}

namespace {

struct SoftParts {
  std::vector<double> sorted;      // ascending scores
  std::vector<double> weights;     // softmax(logits)
  std::vector<double> cumulative;  // cumsum(weights)
  std::vector<double> gap;         // |cumulative - (1-alpha)|
  std::vector<double> selection;   // softmax(-driver / T)
  double eta = 0.0;
};

SoftParts soft_parts(std::span<const double> calib_scores, const WeightVector& w, double alpha,
                     double temperature, SoftSelector selector) {
  check_alpha(alpha);
  if (temperature <= 0.0) throw ConfigError("soft_quantile: temperature must be > 0");
  if (calib_scores.empty()) throw ConfigError("soft_quantile: empty calibration scores");
  if (calib_scores.size() != w.size()) {
    throw ConfigError("soft_quantile: got " + std::to_string(calib_scores.size()) +
                      " scores for " + std::to_string(w.size()) + " weights");
  }
  check_finite(calib_scores);

  SoftParts parts;
  parts.sorted.assign(calib_scores.begin(), calib_scores.end());
  std::sort(parts.sorted.begin(), parts.sorted.end());
  parts.weights = w.weights();

  const std::size_t n = parts.sorted.size();
  parts.cumulative.resize(n);
  double run = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run += parts.weights[i];
    parts.cumulative[i] = run;
  }
  parts.gap.resize(n);
  const double target = 1.0 - alpha;
  for (std::size_t i = 0; i < n; ++i) parts.gap[i] = std::abs(parts.cumulative[i] - target);

  std::vector<double> driver(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = selector == SoftSelector::cumulative_gap ? parts.gap[i] : parts.weights[i];
    driver[i] = -g / temperature;
  }
  parts.selection = softmax(driver);
  parts.eta = 0.0;
  for (std::size_t i = 0; i < n; ++i) parts.eta += parts.sorted[i] * parts.selection[i];
  return parts;
}

}  // namespace

QuantileResult soft_quantile(std::span<const double> calib_scores, const WeightVector& w,
                             double alpha, double temperature, SoftSelector selector) {
  SoftParts parts = soft_parts(calib_scores, w, alpha, temperature, selector);
  return {parts.eta, std::move(parts.selection), std::move(parts.sorted)};
}

SoftQuantileGradient soft_quantile_gradient(std::span<const double> calib_scores,
                                            const WeightVector& w, double alpha,
                                            double temperature, SoftSelector selector) {
  SoftParts parts = soft_parts(calib_scores, w, alpha, temperature, selector);
  const std::size_t n = parts.sorted.size();
  const double target = 1.0 - alpha;

  // d(eta)/d(selection driver u_i), with selection = softmax(u).
  std::vector<double> d_eta_d_u(n);
  for (std::size_t i = 0; i < n; ++i) {
    d_eta_d_u[i] = parts.selection[i] * (parts.sorted[i] - parts.eta);
  }

  // Backprop through the driver into the rank weights.
  std::vector<double> d_eta_d_weight(n, 0.0);
  if (selector == SoftSelector::cumulative_gap) {
    std::vector<double> d_eta_d_cum(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = parts.cumulative[i] - target;
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      d_eta_d_cum[i] = -d_eta_d_u[i] * sign / temperature;
    }
    double suffix = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      suffix += d_eta_d_cum[i];
      d_eta_d_weight[i] = suffix;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) d_eta_d_weight[i] = -d_eta_d_u[i] / temperature;
  }

  // Through the weight softmax into the logits.
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += d_eta_d_weight[i] * parts.weights[i];
  SoftQuantileGradient grad;
  grad.d_eta_d_logit.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    grad.d_eta_d_logit[i] = parts.weights[i] * (d_eta_d_weight[i] - mean);
  }
  grad.eta = parts.eta;
  grad.selection = std::move(parts.selection);
  grad.sorted_scores = std::move(parts.sorted);
  return grad;
}

double weighted_quantile_threshold(std::span<const double> scores_time_ordered,
                                   std::span<const double> weights, double alpha) {
  check_alpha(alpha);
  if (scores_time_ordered.empty()) throw ConfigError("weighted quantile: empty scores");
  if (scores_time_ordered.size() != weights.size()) {
    throw ConfigError("weighted quantile: scores/weights size mismatch");
  }
  check_finite(scores_time_ordered);
  double max_w = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("weighted quantile: weights must be >= 0");
    max_w = std::max(max_w, w);
  }
  if (max_w == 0.0) throw ConfigError("weighted quantile: all weights are zero");

  const std::size_t n = scores_time_ordered.size();

  // Test point carries weight 1 at +infinity; only finite mass can satisfy the
  // target, which keeps the rule conservative.
  double total = 1.0;
  for (double w : weights) total += w / max_w;
  const double target = (1.0 - alpha) * total;

  const bool equal_weights =
      max_w == *std::min_element(weights.begin(), weights.end());
  if (equal_weights) {
    // Canonical weights are all 1, so the cumulative mass at the k-th smallest
    // score is exactly k.
    const auto rank = static_cast<std::int64_t>(std::ceil(target - kRankEps));
    if (rank > static_cast<std::int64_t>(n)) return kAdmitAll;
    std::vector<double> sorted(scores_time_ordered.begin(), scores_time_ordered.end());
    const std::size_t k = rank < 1 ? 0 : static_cast<std::size_t>(rank - 1);
    std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
    return sorted[k];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores_time_ordered[a] < scores_time_ordered[b];
  });
  double cumulative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cumulative += weights[order[i]] / max_w;
    if (cumulative >= target - kRankEps) return scores_time_ordered[order[i]];
  }
  return kAdmitAll;
}

double fixed_weight_quantile(std::span<const double> scores_time_ordered, double decay,
                             double alpha) {
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("fixed weights: decay must be in (0, 1]");
  const std::size_t n = scores_time_ordered.size();
  if (n == 0) throw ConfigError("fixed weights: empty scores");
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = std::pow(decay, static_cast<double>(n - 1 - i));
  }
  return weighted_quantile_threshold(scores_time_ordered, weights, alpha);
}

PredictionSet build_prediction_set(TemporalNodeId node, std::span<const double> class_scores,
                                   double threshold) {
  PredictionSet set;
  set.node = node;
  set.quantile_used = threshold;
  for (std::size_t k = 0; k < class_scores.size(); ++k) {
    if (std::isnan(class_scores[k])) throw NumericError("NaN class score");
    if (class_scores[k] <= threshold) set.admitted.push_back(static_cast<int>(k));
  }
  return set;
}

bool quantile_exchange_check(std::span<const double> scores_with_test_last,
                             std::span<const double> weights) {
  if (scores_with_test_last.size() != weights.size()) {
    throw ConfigError("exchange check: scores/weights size mismatch");
  }
  if (scores_with_test_last.size() < 2) {
    throw ConfigError("exchange check: need at least one calibration point plus the test point");
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("exchange check: weights must sum to 1");

  const std::size_t last = scores_with_test_last.size() - 1;
  const double s_test = scores_with_test_last[last];
  const double w_test = weights[last];
  for (std::size_t k = 0; k < last; ++k) {
    // Positive product keeps the original position-weighted quantile at least
    // as large as the swapped one; the guarded direction is a test score
    // exceeding a calibration score that out-weighs the test position.
    const double delta = (w_test - weights[k]) * (s_test - scores_with_test_last[k]);
    if (s_test > scores_with_test_last[k] && delta < 0.0) return false;
  }
  return true;
}

}  // namespace tempo_conformal
