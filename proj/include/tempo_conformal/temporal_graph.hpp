#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace tempo_conformal {

// One occurrence of a node at a timestamp. Occurrences, not node ids, are the
// unit of scoring, calibration and prediction.
struct TemporalNodeId {
  std::int64_t node = 0;
  std::int64_t time = 0;
  friend auto operator<=>(const TemporalNodeId&, const TemporalNodeId&) = default;
};

struct TemporalEdge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  std::int64_t time = 0;
  friend auto operator<=>(const TemporalEdge&, const TemporalEdge&) = default;
};

struct EdgeRecord {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  std::int64_t time = 0;
};

struct LabelRecord {
  std::int64_t node = 0;
  std::int64_t time = 0;
  int label = 0;
};

inline constexpr std::int64_t kUnboundedTimeGap = std::numeric_limits<std::int64_t>::max();

struct NeighborQueryParams {
  int max_hops = 1;                           // topological radius, >= 1
  std::int64_t max_time_gap = kUnboundedTimeGap;  // absolute time window, >= 0
};

inline constexpr int kNoLabel = -1;

// Immutable timestamped multigraph with per-occurrence labels. Built once by
// from_records; all queries are const and safe to call from multiple threads.
class TemporalGraph {
 public:
  TemporalGraph() = default;

  // Occurrences are derived from edge endpoints; every label must reference an
  // existing occurrence. num_classes == 0 infers max(label)+1 (at least 2).
  static TemporalGraph from_records(std::span<const EdgeRecord> edges,
                                    std::span<const LabelRecord> labels,
                                    int num_classes = 0);

  // Occurrences u with hop distance <= p.max_hops from v over the static
  // projection of edges timestamped in [v.time - gap, v.time], and
  // |u.time - v.time| <= gap. v itself is excluded. Sorted by (node, time).
  std::vector<TemporalNodeId> topological_neighbors(TemporalNodeId v,
                                                    const NeighborQueryParams& p) const;

  // Earlier occurrences of the same node id within the window:
  // 0 < v.time - u.time <= max_time_gap. Sorted by time.
  std::vector<TemporalNodeId> temporal_neighbors(TemporalNodeId v,
                                                 std::int64_t max_time_gap) const;

  // Index-based variants used on the scoring path; out receives occurrence
  // indices in ascending order.
  void topological_neighbor_indices(std::size_t occ, const NeighborQueryParams& p,
                                    std::vector<std::uint32_t>& out) const;
  void temporal_neighbor_indices(std::size_t occ, std::int64_t max_time_gap,
                                 std::vector<std::uint32_t>& out) const;

  // Same set in deterministic BFS discovery order (not sorted); cheaper, used
  // where only a reproducible reduction order matters.
  void topological_neighbor_indices_unordered(std::size_t occ, const NeighborQueryParams& p,
                                              std::vector<std::uint32_t>& out) const;

  std::span<const TemporalNodeId> occurrences() const { return occurrences_; }
  std::span<const TemporalEdge> edges() const { return edges_; }
  std::size_t num_occurrences() const { return occurrences_.size(); }
  std::size_t num_nodes() const { return node_ids_.size(); }
  int num_classes() const { return num_classes_; }

  bool contains(TemporalNodeId id) const;
  // Position of id in occurrences(), or npos.
  std::size_t occurrence_index(TemporalNodeId id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // kNoLabel when the occurrence is unlabeled.
  int label(TemporalNodeId id) const;
  int label_at(std::size_t occ) const { return labels_[occ]; }

  // Labeled occurrences sorted by (time, node): the chronological order used
  // for splitting.
  std::vector<TemporalNodeId> labeled_occurrences_by_time() const;

 private:
  std::size_t node_index(std::int64_t node) const;  // npos when absent

  std::vector<TemporalEdge> edges_;             // non-decreasing time
  std::vector<TemporalNodeId> occurrences_;     // sorted by (node, time)
  std::vector<std::int64_t> node_ids_;          // sorted distinct node ids
  std::vector<std::size_t> node_occ_begin_;     // per node slice into occurrences_
  std::vector<std::pair<std::int64_t, std::uint32_t>> adj_;  // (time, node index)
  std::vector<std::size_t> adj_begin_;          // per node slice into adj_
  std::vector<int> labels_;                     // per occurrence, kNoLabel if none
  int num_classes_ = 2;
};

}  // namespace tempo_conformal
