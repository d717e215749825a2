#include "tempo_conformal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tempo_conformal/errors.hpp"
#include "tempo_conformal/rng.hpp"

namespace tempo_conformal {

namespace {

void check_config(const SynthConfig& cfg) {
  if (cfg.n_nodes < 2) throw ConfigError("synth: need at least 2 nodes");
  if (cfg.n_timesteps < 1) throw ConfigError("synth: need at least 1 timestep");
  if (cfg.edges_per_step < 1 && cfg.edge_density <= 0.0) {
    throw ConfigError("synth: need edges_per_step >= 1 or edge_density > 0");
  }
  if (cfg.n_classes < 2) throw ConfigError("synth: need at least 2 classes");
  if (cfg.drift_rate < 0.0 || cfg.drift_rate > 1.0) {
    throw ConfigError("synth: drift_rate must be in [0, 1]");
  }
  if (cfg.changepoint_fraction <= 0.0 || cfg.changepoint_fraction >= 1.0) {
    throw ConfigError("synth: changepoint_fraction must be in (0, 1)");
  }
  if (cfg.edge_density < 0.0 || cfg.edge_density > 1.0) {
    throw ConfigError("synth: edge_density must be in [0, 1]");
  }
}

}  // namespace

SynthData generate_temporal_graph(const SynthConfig& cfg) {
  check_config(cfg);
  Rng rng(derive_seed(cfg.seed, 11));

  const int k = cfg.n_classes;
  int edges_per_step = cfg.edges_per_step;
  if (cfg.edge_density > 0.0) {
    const double pairs = 0.5 * static_cast<double>(cfg.n_nodes) * (cfg.n_nodes - 1);
    edges_per_step = std::max(1, static_cast<int>(std::llround(cfg.edge_density * pairs)));
  }

  auto community = [k](std::int64_t node) { return static_cast<int>(node % k); };

  // Per-community node lists and endpoint logs; drawing from the log picks a
  // node proportionally to its degree.
  std::vector<std::vector<std::int64_t>> members(k);
  for (int node = 0; node < cfg.n_nodes; ++node) members[community(node)].push_back(node);
  for (int c = 0; c < k; ++c) {
    if (members[c].empty()) throw ConfigError("synth: more classes than nodes");
  }
  std::vector<std::vector<std::int64_t>> endpoint_log(k);

  auto pick_from_community = [&](int c) -> std::int64_t {
    const auto& log = endpoint_log[c];
    if (log.empty() || rng.uniform() < 0.3) {
      return members[c][rng.below(members[c].size())];
    }
    return log[rng.below(log.size())];
  };

  const int changestep =
      static_cast<int>(std::floor(cfg.changepoint_fraction * cfg.n_timesteps));
  const double mix_pre = 0.1;
  const double mix_post = std::min(1.0, mix_pre + 0.8 * cfg.drift_rate);
  const double acc_pre = cfg.accuracy_pre;
  const double acc_post =
      std::max(1.0 / k, cfg.accuracy_pre - cfg.accuracy_drop * cfg.drift_rate);

  SynthData data;
  data.edges.reserve(static_cast<std::size_t>(edges_per_step) * cfg.n_timesteps);
  for (int t = 0; t < cfg.n_timesteps; ++t) {
    const double mix = t < changestep ? mix_pre : mix_post;
    for (int e = 0; e < edges_per_step; ++e) {
      const std::int64_t src = pick_from_community(static_cast<int>(rng.below(k)));
      const int src_comm = community(src);
      int dst_comm = src_comm;
      if (k > 1 && rng.uniform() < mix) {
        dst_comm = static_cast<int>(rng.below(k - 1));
        if (dst_comm >= src_comm) ++dst_comm;
      }
      std::int64_t dst = pick_from_community(dst_comm);
      if (dst == src) dst = members[dst_comm][rng.below(members[dst_comm].size())];
      if (dst == src && cfg.n_nodes > 1) dst = (src + 1) % cfg.n_nodes;
      data.edges.push_back({src, dst, t});
      endpoint_log[src_comm].push_back(src);
      endpoint_log[community(dst)].push_back(dst);
    }
  }

  // One label per occurrence: the node's community.
  std::vector<TemporalNodeId> occurrences;
  occurrences.reserve(2 * data.edges.size());
  for (const auto& e : data.edges) {
    occurrences.push_back({e.src, e.time});
    occurrences.push_back({e.dst, e.time});
  }
  std::sort(occurrences.begin(), occurrences.end());
  occurrences.erase(std::unique(occurrences.begin(), occurrences.end()), occurrences.end());
  data.labels.reserve(occurrences.size());
  for (const auto& occ : occurrences) {
    data.labels.push_back({occ.node, occ.time, community(occ.node)});
  }

  data.graph = TemporalGraph::from_records(data.edges, data.labels, k);

  // Community-conditional probabilities with accuracy acc_pre before the
  // changepoint and acc_post after. The predictor is weakly confident: the
  // argmax sits just above 1/2, so non-conformity scores form a dense band
  // around the decision boundary, and a small fraction of grossly wrong
  // rows contributes a sparse high-score tail.
  Rng prob_rng(derive_seed(cfg.seed, 12));
  std::vector<double> prob_data(occurrences.size() * k, 0.0);
  for (std::size_t i = 0; i < occurrences.size(); ++i) {
    const auto occ = occurrences[i];
    const double acc = occ.time < changestep ? acc_pre : acc_post;
    const int label = community(occ.node);
    int target = label;
    bool gross = false;
    if (prob_rng.uniform() >= acc && k > 1) {
      target = static_cast<int>(prob_rng.below(k - 1));
      if (target >= label) ++target;
      gross = prob_rng.uniform() < 0.1;
    }
    const double confidence = gross ? prob_rng.uniform(0.93, 0.99) : prob_rng.uniform(0.51, 0.56);
    double* row = prob_data.data() + i * k;
    // Runner-up mass goes to the label's counterweight class so the two top
    // probabilities straddle the boundary; any remaining classes share eps.
    const double eps = k > 2 ? 0.02 : 0.0;
    const int runner = target == label ? (label + 1) % k : label;
    for (int c = 0; c < k; ++c) row[c] = eps / std::max(1, k - 2);
    row[target] = confidence - eps;
    row[runner] = 1.0 - confidence;
  }
  data.probabilities =
      ProbabilityTable::from_sorted(std::move(occurrences), std::move(prob_data), k);
  return data;
}

SplitPlan chronological_split(const TemporalGraph& g, const std::array<double, 5>& fractions) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f <= 0.0) throw ValidationError("split: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split: fractions sum to " + std::to_string(sum) + ", expected 1");
  }

  const std::vector<TemporalNodeId> ordered = g.labeled_occurrences_by_time();
  const std::size_t n = ordered.size();
  std::array<std::size_t, 5> sizes{};
  std::size_t assigned = 0;
  for (int i = 0; i < 4; ++i) {
    sizes[i] = static_cast<std::size_t>(std::floor(fractions[i] * static_cast<double>(n)));
    assigned += sizes[i];
  }
  sizes[4] = n - assigned;
  for (std::size_t s : sizes) {
    if (s == 0) throw ConfigError("split: a split is empty (have " + std::to_string(n) +
                                  " labeled occurrences)");
  }

  SplitPlan plan;
  auto cursor = ordered.begin();
  auto take = [&cursor](std::size_t count) {
    std::vector<TemporalNodeId> out(cursor, cursor + count);
    cursor += count;
    return out;
  };
  plan.train = take(sizes[0]);
  plan.valid = take(sizes[1]);
  plan.calib_train = take(sizes[2]);
  plan.calib_valid = take(sizes[3]);
  plan.test = take(sizes[4]);
  return plan;
}

}  // namespace tempo_conformal
