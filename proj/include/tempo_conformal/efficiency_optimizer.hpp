#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tempo_conformal/nonconformity.hpp"
#include "tempo_conformal/temporal_graph.hpp"
#include "tempo_conformal/weighted_quantile.hpp"

namespace tempo_conformal {

struct OptimizerConfig {
  int epochs = 100;
  double learning_rate = 0.01;
  double temperature = 0.1;    // soft quantile temperature T
  double sigmoid_width = 0.1;  // tau, scale of the soft set-membership sigmoid
  double alpha = 0.05;
  std::uint64_t seed = 0;
  double coverage_floor = -1.0;  // < 0 uses 1 - alpha
  SoftSelector selector = SoftSelector::cumulative_gap;
};

struct EpochRecord {
  double loss = 0.0;
  double val_coverage = 0.0;
  double val_set_size = 0.0;
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;
  double uniform_coverage = 0.0;  // validation metrics of the uniform candidate
  double uniform_set_size = 0.0;
  int selected_epoch = 0;  // 0 = uniform initialization
};

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;  // d(loss)/d(logits)
};

// Soft expected set size: sum over ids and classes of
// sigmoid((eta - score) / tau), eta the soft weighted quantile of the
// calibration scores. Shrinks as prediction sets shrink.
LossValue efficiency_loss(const ScoreTable& scores, std::span<const TemporalNodeId> ids,
                          const WeightVector& w, std::span<const double> calib_scores,
                          const OptimizerConfig& cfg);

struct TrainResult {
  WeightVector weights;
  TrainingTrace trace;
  double threshold = 0.0;  // frozen eta of the selected weights
};

// Full-batch gradient descent from the uniform initialization; after each
// epoch the current eta is scored on the validation ids as a hard threshold.
// Returns the candidate (uniform included) with the smallest validation mean
// set size among those meeting the coverage floor; uniform when none does.
TrainResult train_weights(const ScoreTable& scores, const TemporalGraph& g,
                          std::span<const TemporalNodeId> calib_train_ids,
                          std::span<const TemporalNodeId> calib_valid_ids,
                          const OptimizerConfig& cfg);

}  // namespace tempo_conformal
