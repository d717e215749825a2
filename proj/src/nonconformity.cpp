#include "tempo_conformal/nonconformity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tempo_conformal/errors.hpp"
#include "tempo_conformal/parallel.hpp"
#include "tempo_conformal/rng.hpp"

namespace tempo_conformal {

namespace {

std::string occ_str(TemporalNodeId id) {
  return "(" + std::to_string(id.node) + ", " + std::to_string(id.time) + ")";
}

// Descending probability, ties by ascending class index.
void rank_classes(std::span<const double> probs, std::vector<int>& order) {
  order.resize(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });
}

ScoreTable adaptive_scores(const ProbabilityTable& p, bool randomize, std::uint64_t rng_seed,
                           int penalty_free_ranks, double rank_penalty) {
  const int k = p.num_classes();
  std::vector<TemporalNodeId> keys(p.keys().begin(), p.keys().end());
  std::vector<double> data(keys.size() * k, 0.0);
  std::vector<int> order;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto probs = p.row_at(i);
    rank_classes(probs, order);
    double u = 1.0;
    if (randomize) {
      std::uint64_t mix = rng_seed;
      mix ^= static_cast<std::uint64_t>(keys[i].node) * 0x9e3779b97f4a7c15ULL;
      mix ^= static_cast<std::uint64_t>(keys[i].time) + 0xbf58476d1ce4e5b9ULL + (mix << 6);
      const std::uint64_t d = splitmix64(mix);
      u = static_cast<double>(d >> 11) * 0x1.0p-53;
    }
    double cumulative = 0.0;
    double* row = data.data() + i * k;
    for (int pos = 0; pos < k; ++pos) {
      const int cls = order[pos];
      double score = cumulative + u * probs[cls];
      if (rank_penalty > 0.0) {
        score += rank_penalty * std::max(0, (pos + 1) - penalty_free_ranks);
      }
      row[cls] = score;
      cumulative += probs[cls];
    }
  }
  return ScoreTable::from_sorted(std::move(keys), std::move(data), k);
}

}  // namespace

std::size_t ScoreTable::find(TemporalNodeId id) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), id);
  if (it == keys_.end() || *it != id) return npos;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::span<const double> ScoreTable::row(TemporalNodeId id) const {
  const std::size_t i = find(id);
  if (i == npos) throw NotFoundError("no score row for occurrence " + occ_str(id));
  return row_at(i);
}

ScoreTable ScoreTable::from_sorted(std::vector<TemporalNodeId> keys, std::vector<double> data,
                                   int num_classes) {
  ScoreTable t;
  t.keys_ = std::move(keys);
  t.data_ = std::move(data);
  t.num_classes_ = num_classes;
  return t;
}

ScoreTable tps_scores(const ProbabilityTable& p) {
  const int k = p.num_classes();
  std::vector<TemporalNodeId> keys(p.keys().begin(), p.keys().end());
  std::vector<double> data(keys.size() * k);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto probs = p.row_at(i);
    for (int c = 0; c < k; ++c) data[i * k + c] = 1.0 - probs[c];
  }
  return ScoreTable::from_sorted(std::move(keys), std::move(data), k);
}

ScoreTable aps_scores(const ProbabilityTable& p, bool randomize, std::uint64_t rng_seed) {
  return adaptive_scores(p, randomize, rng_seed, 0, 0.0);
}

ScoreTable raps_scores(const ProbabilityTable& p, int penalty_free_ranks, double rank_penalty) {
  if (penalty_free_ranks < 1 || penalty_free_ranks > p.num_classes()) {
    throw ConfigError("raps: penalty_free_ranks must be in [1, num_classes]");
  }
  if (rank_penalty < 0.0) throw ConfigError("raps: rank_penalty must be >= 0");
  return adaptive_scores(p, false, 0, penalty_free_ranks, rank_penalty);
}

namespace {

// Shared mixing step for daps/diffusion. Neighbor sums accumulate in ascending
// occurrence-index order so parallel and sequential runs agree bitwise.
ScoreTable diffuse(const ScoreTable& base, const TemporalGraph& g, double topo_weight,
                   double temporal_weight, const NeighborQueryParams& nq,
                   std::int64_t temporal_window, bool use_temporal) {
  if (topo_weight < 0.0 || topo_weight > 1.0) {
    throw ConfigError("diffusion: topological weight must be in [0, 1]");
  }
  if (temporal_weight < 0.0 || temporal_weight > 1.0) {
    throw ConfigError("diffusion: temporal weight must be in [0, 1]");
  }
  if (topo_weight + temporal_weight > 1.0) {
    throw ConfigError("diffusion: weights must satisfy lambda1 + lambda2 <= 1");
  }

  const int k = base.num_classes();
  const auto keys = base.keys();
  std::vector<double> data(keys.size() * k, 0.0);

  // Row index lookup: free when the table is aligned with the graph's
  // occurrence list, binary search otherwise.
  const bool aligned = keys.size() == g.num_occurrences() &&
                       std::equal(keys.begin(), keys.end(), g.occurrences().begin());

  std::vector<std::size_t> occ_of_row(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t occ = aligned ? i : g.occurrence_index(keys[i]);
    if (occ == TemporalGraph::npos) {
      throw ValidationError("diffusion: occurrence " + occ_str(keys[i]) + " not in graph");
    }
    occ_of_row[i] = occ;
  }

  std::vector<std::size_t> row_of_occ;
  if (!aligned) {
    row_of_occ.assign(g.num_occurrences(), ScoreTable::npos);
    for (std::size_t i = 0; i < keys.size(); ++i) row_of_occ[occ_of_row[i]] = i;
  }

  parallel_for(keys.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> topo, temporal;
    std::vector<double> topo_sum(k), temporal_sum(k);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t occ = occ_of_row[i];
      g.topological_neighbor_indices_unordered(occ, nq, topo);
      if (use_temporal) {
        g.temporal_neighbor_indices(occ, temporal_window, temporal);
      } else {
        temporal.clear();
      }

      std::fill(topo_sum.begin(), topo_sum.end(), 0.0);
      std::fill(temporal_sum.begin(), temporal_sum.end(), 0.0);
      auto accumulate = [&](std::span<const std::uint32_t> nbrs, std::vector<double>& sum) {
        for (std::uint32_t nb : nbrs) {
          const std::size_t row = aligned ? nb : row_of_occ[nb];
          if (row == ScoreTable::npos) {
            throw ValidationError("diffusion: neighbor " + occ_str(g.occurrences()[nb]) +
                                  " has no base score");
          }
          const double* nrow = base.row_at(row).data();
          for (int c = 0; c < k; ++c) sum[c] += nrow[c];
        }
      };
      accumulate(topo, topo_sum);
      accumulate(temporal, temporal_sum);

      const double topo_coef = topo.empty() ? 0.0 : topo_weight;
      const double temporal_coef = temporal.empty() ? 0.0 : temporal_weight;
      const double self_coef = 1.0 - topo_coef - temporal_coef;
      const double topo_scale = topo.empty() ? 0.0 : topo_weight / static_cast<double>(topo.size());
      const double temporal_scale =
          temporal.empty() ? 0.0 : temporal_weight / static_cast<double>(temporal.size());

      const double* srow = base.row_at(i).data();
      double* drow = data.data() + i * k;
      for (int c = 0; c < k; ++c) {
        drow[c] = self_coef * srow[c] + topo_scale * topo_sum[c] + temporal_scale * temporal_sum[c];
      }
    }
  });

  return ScoreTable::from_sorted(std::vector<TemporalNodeId>(keys.begin(), keys.end()),
                                 std::move(data), k);
}

}  // namespace

ScoreTable daps_scores(const ScoreTable& base, const TemporalGraph& g, double topo_weight,
                       std::int64_t max_time_gap) {
  return diffuse(base, g, topo_weight, 0.0, {1, max_time_gap}, 0, false);
}

ScoreTable diffusion_scores(const ScoreTable& base, const TemporalGraph& g,
                            const DiffusionParams& params) {
  return diffuse(base, g, params.topo_weight, params.temporal_weight, params.neighbor_params,
                 params.temporal_window, true);
}

std::vector<double> true_label_scores(const ScoreTable& s, const TemporalGraph& g,
                                      std::span<const TemporalNodeId> ids) {
  std::vector<double> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const int label = g.label(id);
    if (label == kNoLabel) throw ValidationError("unlabeled occurrence " + occ_str(id));
    out.push_back(s.row(id)[label]);
  }
  return out;
}

}  // namespace tempo_conformal
