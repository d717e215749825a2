#include "tempo_conformal/base_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tempo_conformal/errors.hpp"

namespace tempo_conformal {

namespace {

std::string occ_str(TemporalNodeId id) {
  return "(" + std::to_string(id.node) + ", " + std::to_string(id.time) + ")";
}

}  // namespace

std::size_t ProbabilityTable::find(TemporalNodeId id) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), id);
  if (it == keys_.end() || *it != id) return npos;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::span<const double> ProbabilityTable::row(TemporalNodeId id) const {
  const std::size_t i = find(id);
  if (i == npos) throw NotFoundError("no probability row for occurrence " + occ_str(id));
  return row_at(i);
}

ProbabilityTable ProbabilityTable::from_sorted(std::vector<TemporalNodeId> keys,
                                               std::vector<double> data, int num_classes) {
  ProbabilityTable t;
  t.keys_ = std::move(keys);
  t.data_ = std::move(data);
  t.num_classes_ = num_classes;
  return t;
}

ProbabilityTable load_probabilities(std::span<const ProbabilityRecord> records) {
  if (records.empty()) throw ValidationError("probability table: no rows");
  const int k = static_cast<int>(records.front().probs.size());
  if (k < 2) throw ValidationError("probability table: need at least 2 classes");

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });

  std::vector<TemporalNodeId> keys;
  std::vector<double> data;
  keys.reserve(records.size());
  data.reserve(records.size() * k);
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const auto& r = records[order[oi]];
    if (static_cast<int>(r.probs.size()) != k) {
      throw ValidationError("probability row " + occ_str(r.id) + ": expected " + std::to_string(k) +
                            " entries, got " + std::to_string(r.probs.size()));
    }
    if (!keys.empty() && keys.back() == r.id) {
      throw ValidationError("duplicate probability row for occurrence " + occ_str(r.id));
    }
    double sum = 0.0;
    for (double p : r.probs) {
      if (!std::isfinite(p)) throw ValidationError("non-finite probability at " + occ_str(r.id));
      if (p < 0.0) throw ValidationError("negative probability at " + occ_str(r.id));
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
      throw ValidationError("probability row " + occ_str(r.id) + " sums to " + std::to_string(sum));
    }
    keys.push_back(r.id);
    for (double p : r.probs) data.push_back(sum == 1.0 ? p : p / sum);
  }
  return ProbabilityTable::from_sorted(std::move(keys), std::move(data), k);
}

ProbabilityTable frequency_classifier(const TemporalGraph& g,
                                      std::span<const TemporalNodeId> train_ids, double smoothing,
                                      const NeighborQueryParams& params) {
  if (train_ids.empty()) throw ConfigError("frequency classifier: empty training set");
  if (smoothing < 0.0) throw ConfigError("frequency classifier: smoothing must be >= 0");
  const int k = g.num_classes();

  std::vector<char> in_train(g.num_occurrences(), 0);
  std::vector<double> global(k, smoothing);
  for (const auto& id : train_ids) {
    const std::size_t occ = g.occurrence_index(id);
    if (occ == TemporalGraph::npos) {
      throw NotFoundError("training occurrence not in graph");
    }
    const int label = g.label_at(occ);
    if (label == kNoLabel) throw ValidationError("unlabeled training occurrence");
    in_train[occ] = 1;
    global[label] += 1.0;
  }
  const double global_total = std::accumulate(global.begin(), global.end(), 0.0);

  std::vector<TemporalNodeId> keys(g.occurrences().begin(), g.occurrences().end());
  std::vector<double> data(keys.size() * k, 0.0);
  std::vector<std::uint32_t> nbrs;
  std::vector<double> counts(k);
  for (std::size_t occ = 0; occ < keys.size(); ++occ) {
    g.topological_neighbor_indices_unordered(occ, params, nbrs);
    std::fill(counts.begin(), counts.end(), 0.0);
    double total = 0.0;
    for (std::uint32_t nb : nbrs) {
      if (!in_train[nb]) continue;
      counts[g.label_at(nb)] += 1.0;
      total += 1.0;
    }
    double* row = data.data() + occ * k;
    if (total > 0.0) {
      const double denom = total + k * smoothing;
      for (int c = 0; c < k; ++c) row[c] = (counts[c] + smoothing) / denom;
    } else {
      for (int c = 0; c < k; ++c) row[c] = global[c] / global_total;
    }
  }
  return ProbabilityTable::from_sorted(std::move(keys), std::move(data), k);
}

}  // namespace tempo_conformal
