#include "tempo_conformal/temporal_graph.hpp"

#include <algorithm>
#include <string>

#include "tempo_conformal/errors.hpp"

namespace tempo_conformal {

namespace {

std::string occ_str(TemporalNodeId id) {
  return "(" + std::to_string(id.node) + ", " + std::to_string(id.time) + ")";
}

// v.time - gap without underflow.
std::int64_t window_lo(std::int64_t t, std::int64_t gap) {
  if (gap == kUnboundedTimeGap) return std::numeric_limits<std::int64_t>::min();
  return t >= std::numeric_limits<std::int64_t>::min() + gap ? t - gap
                                                             : std::numeric_limits<std::int64_t>::min();
}

std::int64_t window_hi(std::int64_t t, std::int64_t gap) {
  if (gap == kUnboundedTimeGap) return std::numeric_limits<std::int64_t>::max();
  return t <= std::numeric_limits<std::int64_t>::max() - gap ? t + gap
                                                             : std::numeric_limits<std::int64_t>::max();
}

void check_params(const NeighborQueryParams& p) {
  if (p.max_hops < 1) throw ConfigError("neighbor query: max_hops must be >= 1");
  if (p.max_time_gap < 0) throw ConfigError("neighbor query: max_time_gap must be >= 0");
}

}  // namespace

TemporalGraph TemporalGraph::from_records(std::span<const EdgeRecord> edges,
                                          std::span<const LabelRecord> labels,
                                          int num_classes) {
  TemporalGraph g;

  g.edges_.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.time < 0) {
      throw ValidationError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                            "): negative timestamp " + std::to_string(e.time));
    }
    g.edges_.push_back({e.src, e.dst, e.time});
  }
  std::stable_sort(g.edges_.begin(), g.edges_.end(),
                   [](const TemporalEdge& a, const TemporalEdge& b) { return a.time < b.time; });

  g.occurrences_.reserve(2 * g.edges_.size());
  for (const auto& e : g.edges_) {
    g.occurrences_.push_back({e.src, e.time});
    g.occurrences_.push_back({e.dst, e.time});
  }
  std::sort(g.occurrences_.begin(), g.occurrences_.end());
  g.occurrences_.erase(std::unique(g.occurrences_.begin(), g.occurrences_.end()),
                       g.occurrences_.end());

  g.node_ids_.reserve(g.occurrences_.size());
  for (const auto& occ : g.occurrences_) {
    if (g.node_ids_.empty() || g.node_ids_.back() != occ.node) g.node_ids_.push_back(occ.node);
  }
  g.node_occ_begin_.assign(g.node_ids_.size() + 1, 0);
  {
    std::size_t ni = 0;
    for (std::size_t i = 0; i < g.occurrences_.size(); ++i) {
      while (g.node_ids_[ni] != g.occurrences_[i].node) g.node_occ_begin_[++ni] = i;
    }
    for (++ni; ni <= g.node_ids_.size(); ++ni) g.node_occ_begin_[ni] = g.occurrences_.size();
  }

  // Adjacency, both directions, each node's slice sorted by (time, neighbor).
  std::vector<std::size_t> degree(g.node_ids_.size() + 1, 0);
  auto nidx = [&g](std::int64_t node) { return g.node_index(node); };
  for (const auto& e : g.edges_) {
    ++degree[nidx(e.src) + 1];
    ++degree[nidx(e.dst) + 1];
  }
  for (std::size_t i = 1; i < degree.size(); ++i) degree[i] += degree[i - 1];
  g.adj_begin_ = degree;
  g.adj_.resize(2 * g.edges_.size());
  {
    std::vector<std::size_t> cursor(g.adj_begin_.begin(), g.adj_begin_.end() - 1);
    for (const auto& e : g.edges_) {
      const std::size_t si = nidx(e.src), di = nidx(e.dst);
      g.adj_[cursor[si]++] = {e.time, static_cast<std::uint32_t>(di)};
      g.adj_[cursor[di]++] = {e.time, static_cast<std::uint32_t>(si)};
    }
  }
  for (std::size_t ni2 = 0; ni2 < g.node_ids_.size(); ++ni2) {
    std::sort(g.adj_.begin() + g.adj_begin_[ni2], g.adj_.begin() + g.adj_begin_[ni2 + 1]);
  }

  // Labels reference existing occurrences; duplicates rejected.
  g.labels_.assign(g.occurrences_.size(), kNoLabel);
  int max_label = -1;
  for (const auto& r : labels) {
    if (r.time < 0) {
      throw ValidationError("label for node " + std::to_string(r.node) +
                            ": negative timestamp " + std::to_string(r.time));
    }
    const std::size_t occ = g.occurrence_index({r.node, r.time});
    if (occ == npos) {
      throw ValidationError("label references unknown occurrence " + occ_str({r.node, r.time}));
    }
    if (r.label < 0) throw ValidationError("negative class index at " + occ_str({r.node, r.time}));
    if (g.labels_[occ] != kNoLabel) {
      throw ValidationError("duplicate label for occurrence " + occ_str({r.node, r.time}));
    }
    g.labels_[occ] = r.label;
    max_label = std::max(max_label, r.label);
  }

  if (num_classes == 0) {
    g.num_classes_ = std::max(max_label + 1, 2);
  } else {
    if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
    if (max_label >= num_classes) {
      throw ValidationError("class index " + std::to_string(max_label) +
                            " out of range for num_classes=" + std::to_string(num_classes));
    }
    g.num_classes_ = num_classes;
  }
  return g;
}

std::size_t TemporalGraph::node_index(std::int64_t node) const {
  auto it = std::lower_bound(node_ids_.begin(), node_ids_.end(), node);
  if (it == node_ids_.end() || *it != node) return npos;
  return static_cast<std::size_t>(it - node_ids_.begin());
}

std::size_t TemporalGraph::occurrence_index(TemporalNodeId id) const {
  auto it = std::lower_bound(occurrences_.begin(), occurrences_.end(), id);
  if (it == occurrences_.end() || *it != id) return npos;
  return static_cast<std::size_t>(it - occurrences_.begin());
}

bool TemporalGraph::contains(TemporalNodeId id) const { return occurrence_index(id) != npos; }

int TemporalGraph::label(TemporalNodeId id) const {
  const std::size_t occ = occurrence_index(id);
  if (occ == npos) throw NotFoundError("occurrence " + occ_str(id) + " not in graph");
  return labels_[occ];
}

void TemporalGraph::topological_neighbor_indices(std::size_t occ, const NeighborQueryParams& p,
                                                 std::vector<std::uint32_t>& out) const {
  topological_neighbor_indices_unordered(occ, p, out);
  std::sort(out.begin(), out.end());
}

void TemporalGraph::topological_neighbor_indices_unordered(std::size_t occ,
                                                           const NeighborQueryParams& p,
                                                           std::vector<std::uint32_t>& out) const {
  check_params(p);
  out.clear();
  const TemporalNodeId v = occurrences_[occ];
  const std::int64_t lo = window_lo(v.time, p.max_time_gap);
  const std::int64_t hi = window_hi(v.time, p.max_time_gap);

  // BFS over node ids; message-passing style, only edges from the past window
  // [lo, v.time] define connectivity.
  thread_local std::vector<std::uint32_t> visited;
  thread_local std::vector<std::uint32_t> frontier;
  thread_local std::vector<std::uint32_t> next;
  thread_local std::vector<std::uint32_t> stamp;
  thread_local std::uint32_t generation = 0;
  if (stamp.size() < node_ids_.size()) stamp.resize(node_ids_.size(), 0);
  if (++generation == 0) {
    std::fill(stamp.begin(), stamp.end(), 0);
    generation = 1;
  }

  const std::uint32_t start = static_cast<std::uint32_t>(node_index(v.node));
  visited.clear();
  frontier.clear();
  frontier.push_back(start);
  visited.push_back(start);
  stamp[start] = generation;

  for (int depth = 0; depth < p.max_hops && !frontier.empty(); ++depth) {
    next.clear();
    for (std::uint32_t u : frontier) {
      const auto begin = adj_.begin() + adj_begin_[u];
      const auto end = adj_.begin() + adj_begin_[u + 1];
      auto it = std::lower_bound(begin, end, std::pair<std::int64_t, std::uint32_t>{lo, 0});
      for (; it != end && it->first <= v.time; ++it) {
        const std::uint32_t nb = it->second;
        if (stamp[nb] != generation) {
          stamp[nb] = generation;
          visited.push_back(nb);
          next.push_back(nb);
        }
      }
    }
    frontier.swap(next);
  }

  for (std::uint32_t ni : visited) {
    const std::size_t begin = node_occ_begin_[ni];
    const std::size_t end = node_occ_begin_[ni + 1];
    const auto first = std::lower_bound(occurrences_.begin() + begin, occurrences_.begin() + end,
                                        TemporalNodeId{node_ids_[ni], lo});
    for (auto it = first; it != occurrences_.begin() + end && it->time <= hi; ++it) {
      const std::size_t idx = static_cast<std::size_t>(it - occurrences_.begin());
      if (idx != occ) out.push_back(static_cast<std::uint32_t>(idx));
    }
  }
}

std::vector<TemporalNodeId> TemporalGraph::topological_neighbors(
    TemporalNodeId v, const NeighborQueryParams& p) const {
  const std::size_t occ = occurrence_index(v);
  if (occ == npos) throw NotFoundError("occurrence " + occ_str(v) + " not in graph");
  std::vector<std::uint32_t> idx;
  topological_neighbor_indices(occ, p, idx);
  std::vector<TemporalNodeId> out;
  out.reserve(idx.size());
  for (std::uint32_t i : idx) out.push_back(occurrences_[i]);
  return out;
}

void TemporalGraph::temporal_neighbor_indices(std::size_t occ, std::int64_t max_time_gap,
                                              std::vector<std::uint32_t>& out) const {
  if (max_time_gap < 0) throw ConfigError("temporal neighbors: max_time_gap must be >= 0");
  out.clear();
  const TemporalNodeId v = occurrences_[occ];
  const std::size_t ni = node_index(v.node);
  const std::size_t begin = node_occ_begin_[ni];
  const std::size_t end = node_occ_begin_[ni + 1];
  const std::int64_t lo = window_lo(v.time, max_time_gap);
  const auto first = std::lower_bound(occurrences_.begin() + begin, occurrences_.begin() + end,
                                      TemporalNodeId{v.node, lo});
  for (auto it = first; it != occurrences_.begin() + end && it->time < v.time; ++it) {
    out.push_back(static_cast<std::uint32_t>(it - occurrences_.begin()));
  }
}

std::vector<TemporalNodeId> TemporalGraph::temporal_neighbors(TemporalNodeId v,
                                                              std::int64_t max_time_gap) const {
  const std::size_t occ = occurrence_index(v);
  if (occ == npos) throw NotFoundError("occurrence " + occ_str(v) + " not in graph");
  std::vector<std::uint32_t> idx;
  temporal_neighbor_indices(occ, max_time_gap, idx);
  std::vector<TemporalNodeId> out;
  out.reserve(idx.size());
  for (std::uint32_t i : idx) out.push_back(occurrences_[i]);
  return out;
}

std::vector<TemporalNodeId> TemporalGraph::labeled_occurrences_by_time() const {
  std::vector<TemporalNodeId> out;
  for (std::size_t i = 0; i < occurrences_.size(); ++i) {
    if (labels_[i] != kNoLabel) out.push_back(occurrences_[i]);
  }
  std::sort(out.begin(), out.end(), [](const TemporalNodeId& a, const TemporalNodeId& b) {
    return a.time != b.time ? a.time < b.time : a.node < b.node;
  });
  return out;
}

}  // namespace tempo_conformal
