#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tempo_conformal/base_predictor.hpp"
#include "tempo_conformal/temporal_graph.hpp"

namespace tempo_conformal {

struct SynthConfig {
  int n_nodes = 100;
  int n_timesteps = 10;
  int edges_per_step = 50;
  double edge_density = 0.0;  // > 0 derives edges_per_step from the pair count
  int n_classes = 2;
  double drift_rate = 0.0;            // regime shift magnitude after the changepoint
  double changepoint_fraction = 0.5;  // timestep fraction where the shift lands
  std::uint64_t seed = 0;

  // Base-predictor quality knobs: accuracy starts at accuracy_pre and drops by
  // accuracy_drop * drift_rate after the changepoint.
  double accuracy_pre = 0.85;
  double accuracy_drop = 0.2;
};

struct SynthData {
  TemporalGraph graph;
  ProbabilityTable probabilities;
  std::vector<EdgeRecord> edges;    // as written to CSV
  std::vector<LabelRecord> labels;  // one per occurrence
};

// Two-community preferential-attachment edge stream whose community mixing
// rate shifts by drift_rate after the changepoint. Labels are communities;
// the probability table is a community-conditional predictor whose accuracy
// degrades with the drift. Deterministic given the seed.
SynthData generate_temporal_graph(const SynthConfig& cfg);

struct SplitPlan {
  std::vector<TemporalNodeId> train;
  std::vector<TemporalNodeId> valid;
  std::vector<TemporalNodeId> calib_train;
  std::vector<TemporalNodeId> calib_valid;
  std::vector<TemporalNodeId> test;
};

inline constexpr std::array<double, 5> kDefaultSplitFractions = {0.5, 0.1, 0.1, 0.1, 0.2};

// Orders labeled occurrences by (time, node) and cuts contiguously; the first
// four sizes round down, the remainder goes to test.
SplitPlan chronological_split(const TemporalGraph& g, const std::array<double, 5>& fractions);

}  // namespace tempo_conformal
