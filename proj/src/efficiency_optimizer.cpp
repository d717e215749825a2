#include "tempo_conformal/efficiency_optimizer.hpp"

#include <cmath>
#include <string>

#include "tempo_conformal/errors.hpp"

namespace tempo_conformal {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_config(const OptimizerConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("optimizer: alpha must be in (0, 1)");
  if (cfg.sigmoid_width <= 0.0) throw ConfigError("optimizer: sigmoid width must be > 0");
  if (cfg.temperature <= 0.0) throw ConfigError("optimizer: temperature must be > 0");
  if (cfg.epochs < 0) throw ConfigError("optimizer: epochs must be >= 0");
  if (cfg.learning_rate <= 0.0) throw ConfigError("optimizer: learning rate must be > 0");
}

struct ValMetrics {
  double coverage = 0.0;
  double set_size = 0.0;
};

// Hard coverage and mean set size on the validation ids at threshold eta.
ValMetrics validate(const ScoreTable& scores, const TemporalGraph& g,
                    std::span<const TemporalNodeId> ids, double eta) {
  ValMetrics m;
  for (const auto& id : ids) {
    const int label = g.label(id);
    if (label == kNoLabel) throw ValidationError("unlabeled validation occurrence");
    const auto row = scores.row(id);
    int admitted = 0;
    for (double s : row) admitted += s <= eta ? 1 : 0;
    m.set_size += admitted;
    m.coverage += row[label] <= eta ? 1.0 : 0.0;
  }
  m.coverage /= static_cast<double>(ids.size());
  m.set_size /= static_cast<double>(ids.size());
  return m;
}

}  // namespace

LossValue efficiency_loss(const ScoreTable& scores, std::span<const TemporalNodeId> ids,
                          const WeightVector& w, std::span<const double> calib_scores,
                          const OptimizerConfig& cfg) {
  check_config(cfg);
  if (calib_scores.size() != w.size()) {
    throw ConfigError("efficiency loss: calibration scores do not match weight count");
  }

  const SoftQuantileGradient q =
      soft_quantile_gradient(calib_scores, w, cfg.alpha, cfg.temperature, cfg.selector);

  double loss = 0.0;
  double d_loss_d_eta = 0.0;
  const double inv_tau = 1.0 / cfg.sigmoid_width;
  for (const auto& id : ids) {
    for (double s : scores.row(id)) {
      if (!std::isfinite(s)) throw NumericError("efficiency loss: non-finite score");
      const double sig = sigmoid((q.eta - s) * inv_tau);
      loss += sig;
      d_loss_d_eta += sig * (1.0 - sig) * inv_tau;
    }
  }

  LossValue out;
  out.value = loss;
  out.gradient.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.gradient[i] = d_loss_d_eta * q.d_eta_d_logit[i];
  }
  return out;
}

TrainResult train_weights(const ScoreTable& scores, const TemporalGraph& g,
                          std::span<const TemporalNodeId> calib_train_ids,
                          std::span<const TemporalNodeId> calib_valid_ids,
                          const OptimizerConfig& cfg) {
  check_config(cfg);
  if (calib_train_ids.empty()) throw ConfigError("train_weights: empty calibration train set");
  if (calib_valid_ids.empty()) throw ConfigError("train_weights: empty calibration valid set");
  const double floor = cfg.coverage_floor < 0.0 ? 1.0 - cfg.alpha : cfg.coverage_floor;

  // Non-conformity scores are fixed before the loop.
  const std::vector<double> calib_scores = true_label_scores(scores, g, calib_train_ids);

  WeightVector w = WeightVector::uniform(calib_train_ids.size());
  TrainResult result;
  result.weights = w;

  const double uniform_eta =
      soft_quantile(calib_scores, w, cfg.alpha, cfg.temperature, cfg.selector).eta;
  const ValMetrics uniform_val = validate(scores, g, calib_valid_ids, uniform_eta);
  result.trace.uniform_coverage = uniform_val.coverage;
  result.trace.uniform_set_size = uniform_val.set_size;
  result.trace.selected_epoch = 0;
  result.threshold = uniform_eta;

  bool have_candidate = uniform_val.coverage >= floor;
  double best_size = have_candidate ? uniform_val.set_size : 0.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const LossValue loss = efficiency_loss(scores, calib_train_ids, w, calib_scores, cfg);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w.logits[i] -= cfg.learning_rate * loss.gradient[i];
    }
    const double eta = soft_quantile(calib_scores, w, cfg.alpha, cfg.temperature, cfg.selector).eta;
    const ValMetrics val = validate(scores, g, calib_valid_ids, eta);
    result.trace.epochs.push_back({loss.value, val.coverage, val.set_size});

    if (val.coverage >= floor && (!have_candidate || val.set_size < best_size)) {
      have_candidate = true;
      best_size = val.set_size;
      result.weights = w;
      result.threshold = eta;
      result.trace.selected_epoch = epoch;
    }
  }
  return result;
}

}  // namespace tempo_conformal
