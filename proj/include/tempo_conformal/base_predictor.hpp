#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tempo_conformal/temporal_graph.hpp"

namespace tempo_conformal {

struct ProbabilityRecord {
  TemporalNodeId id;
  std::vector<double> probs;
};

// Class-probability rows per occurrence. Rows live on the unit simplex: sums
// within 1e-6 of 1 are renormalized, anything worse is rejected.
class ProbabilityTable {
 public:
  ProbabilityTable() = default;

  std::size_t size() const { return keys_.size(); }
  int num_classes() const { return num_classes_; }
  std::span<const TemporalNodeId> keys() const { return keys_; }

  bool contains(TemporalNodeId id) const { return find(id) != npos; }
  std::size_t find(TemporalNodeId id) const;
  std::span<const double> row(TemporalNodeId id) const;
  std::span<const double> row_at(std::size_t i) const {
    return {data_.data() + i * num_classes_, static_cast<std::size_t>(num_classes_)};
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Internal: keys must be sorted and rows already validated.
  static ProbabilityTable from_sorted(std::vector<TemporalNodeId> keys, std::vector<double> data,
                                      int num_classes);

 private:
  std::vector<TemporalNodeId> keys_;  // sorted by (node, time)
  std::vector<double> data_;          // row-major, size() * num_classes_
  int num_classes_ = 0;
};

ProbabilityTable load_probabilities(std::span<const ProbabilityRecord> records);

inline constexpr double kProbabilitySumTolerance = 1e-6;

// Laplace-smoothed label histogram of the 1-hop topological neighborhood
// restricted to the training ids; global training histogram when no labeled
// neighbor exists. A stand-in probability source so the pipeline runs without
// an upstream model.
ProbabilityTable frequency_classifier(const TemporalGraph& g,
                                      std::span<const TemporalNodeId> train_ids,
                                      double smoothing,
                                      const NeighborQueryParams& params = {1, kUnboundedTimeGap});

}  // namespace tempo_conformal
