#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tempo_conformal/base_predictor.hpp"
#include "tempo_conformal/temporal_graph.hpp"

namespace tempo_conformal {

// Per-occurrence, per-class non-conformity scores. Convention throughout:
// larger = less conforming; prediction sets admit classes with score <=
// threshold.
class ScoreTable {
 public:
  ScoreTable() = default;

  std::size_t size() const { return keys_.size(); }
  int num_classes() const { return num_classes_; }
  std::span<const TemporalNodeId> keys() const { return keys_; }

  std::size_t find(TemporalNodeId id) const;
  std::span<const double> row(TemporalNodeId id) const;
  std::span<const double> row_at(std::size_t i) const {
    return {data_.data() + i * num_classes_, static_cast<std::size_t>(num_classes_)};
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  static ScoreTable from_sorted(std::vector<TemporalNodeId> keys, std::vector<double> data,
                                int num_classes);

 private:
  std::vector<TemporalNodeId> keys_;  // sorted by (node, time)
  std::vector<double> data_;
  int num_classes_ = 0;
};

struct DiffusionParams {
  double topo_weight = 0.01;      // lambda1, share taken from topological neighbors
  double temporal_weight = 0.01;  // lambda2, share taken from temporal neighbors
  NeighborQueryParams neighbor_params = {1, kUnboundedTimeGap};
  std::int64_t temporal_window = kUnboundedTimeGap;
};

// score(v, k) = 1 - p_k(v).
ScoreTable tps_scores(const ProbabilityTable& p);

// Cumulative probability mass of classes ranked above k, plus u * p_k. With
// randomize off u = 1; otherwise u is drawn per occurrence from rng_seed.
// Probability ties break by ascending class index.
ScoreTable aps_scores(const ProbabilityTable& p, bool randomize = false,
                      std::uint64_t rng_seed = 0);

// APS plus rank_penalty * max(0, rank(k) - penalty_free_ranks), rank 1-based
// in descending-probability order.
ScoreTable raps_scores(const ProbabilityTable& p, int penalty_free_ranks, double rank_penalty);

// One-hop topological smoothing: (1-w) * own + w * neighbor mean. Nodes with
// no neighbors keep their base score.
ScoreTable daps_scores(const ScoreTable& base, const TemporalGraph& g, double topo_weight,
                       std::int64_t max_time_gap = kUnboundedTimeGap);

// Convex mix of own, topological-neighbor mean, and temporal-neighbor mean
// scores. An empty neighborhood's share is reassigned to the self term.
ScoreTable diffusion_scores(const ScoreTable& base, const TemporalGraph& g,
                            const DiffusionParams& params);

// score(v, label(v)) for each id, in the given order.
std::vector<double> true_label_scores(const ScoreTable& s, const TemporalGraph& g,
                                      std::span<const TemporalNodeId> ids);

}  // namespace tempo_conformal
