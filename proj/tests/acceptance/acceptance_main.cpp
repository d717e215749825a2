// End-to-end acceptance suite. Each criterion prints one pass/fail line; the
// process exit code is the number of failed criteria. argv[1] is the CLI
// binary used by the determinism criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tempo_conformal/coverage_analysis.hpp"
#include "tempo_conformal/csv_io.hpp"
#include "tempo_conformal/efficiency_optimizer.hpp"
#include "tempo_conformal/nonconformity.hpp"
#include "tempo_conformal/pipeline.hpp"
#include "tempo_conformal/rng.hpp"
#include "tempo_conformal/synth.hpp"
#include "tempo_conformal/weighted_quantile.hpp"

namespace tc = tempo_conformal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Split-conformal coverage on exchangeable scores.

Outcome criterion_coverage() {
  const double alpha = 0.1;
  const int n = 1000, seeds = 20;
  double total = 0.0;
  for (int seed = 0; seed < seeds; ++seed) {
    tc::Rng rng(tc::derive_seed(90001, seed));
    std::vector<double> calib(n);
    for (double& s : calib) s = rng.uniform();
    const double threshold = tc::hard_quantile(calib, alpha);
    int covered = 0;
    for (int i = 0; i < n; ++i) covered += rng.uniform() <= threshold ? 1 : 0;
    total += static_cast<double>(covered) / n;
  }
  const double mean = total / seeds;
  Outcome out;
  out.pass = mean >= 0.885 && mean <= 0.93;
  out.detail = "mean coverage " + fmt(mean) + " over " + std::to_string(seeds) +
               " seeds, target [0.885, 0.93]";
  return out;
}

// ---------------------------------------------------------------------------
// 2. Analytic gradients vs central finite differences.

Outcome criterion_gradients() {
  tc::Rng rng(90002);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));          // K <= 5
    const int n = 2 + static_cast<int>(rng.below(63));         // n <= 64
    std::vector<tc::EdgeRecord> edges;
    std::vector<tc::LabelRecord> labels;
    for (int i = 0; i < n; ++i) {
      edges.push_back({2 * i, 2 * i + 1, i});
      labels.push_back({2 * i, i, (2 * i) % k});
      labels.push_back({2 * i + 1, i, (2 * i + 1) % k});
    }
    const auto g = tc::TemporalGraph::from_records(edges, labels, k);
    std::vector<tc::TemporalNodeId> keys(g.occurrences().begin(), g.occurrences().end());
    std::vector<double> data(keys.size() * k);
    for (double& v : data) v = rng.uniform();
    const auto scores = tc::ScoreTable::from_sorted(std::move(keys), std::move(data), k);
    const auto ids = g.labeled_occurrences_by_time();
    std::vector<tc::TemporalNodeId> calib_ids(ids.begin(), ids.begin() + n);

    tc::OptimizerConfig cfg;
    cfg.alpha = rng.uniform(0.05, 0.4);
    cfg.temperature = rng.uniform(0.05, 0.5);
    cfg.sigmoid_width = rng.uniform(0.05, 0.5);

    tc::WeightVector w{std::vector<double>(n)};
    for (double& l : w.logits) l = rng.uniform(-1.0, 1.0);
    const auto calib = tc::true_label_scores(scores, g, calib_ids);

    const auto qgrad =
        tc::soft_quantile_gradient(calib, w, cfg.alpha, cfg.temperature, cfg.selector);
    const auto lgrad = tc::efficiency_loss(scores, calib_ids, w, calib, cfg);
    const double h = 1e-5;
    for (int j = 0; j < std::min(n, 5); ++j) {
      tc::WeightVector wp = w, wm = w;
      wp.logits[j] += h;
      wm.logits[j] -= h;
      const double fd_eta = (tc::soft_quantile(calib, wp, cfg.alpha, cfg.temperature).eta -
                             tc::soft_quantile(calib, wm, cfg.alpha, cfg.temperature).eta) /
                            (2.0 * h);
      const double fd_loss = (tc::efficiency_loss(scores, calib_ids, wp, calib, cfg).value -
                              tc::efficiency_loss(scores, calib_ids, wm, calib, cfg).value) /
                             (2.0 * h);
      const double eta_err = std::abs(fd_eta - qgrad.d_eta_d_logit[j]) /
                             std::max({std::abs(fd_eta), std::abs(qgrad.d_eta_d_logit[j]), 1e-8});
      const double loss_err = std::abs(fd_loss - lgrad.gradient[j]) /
                              std::max({std::abs(fd_loss), std::abs(lgrad.gradient[j]), 1e-7});
      worst = std::max({worst, eta_err, loss_err});
    }
    ++instances;
  }
  Outcome out;
  out.pass = worst < 1e-4 && instances == 100;
  out.detail = "worst relative error " + fmt(worst, 8) + " over 100 instances";
  return out;
}

// ---------------------------------------------------------------------------
// 3. Coverage-gap bound across shift magnitudes.

Outcome criterion_gap_bound() {
  const double alpha = 0.1;
  const int n_calib = 199, n_samples = 60000, n_bins = 50, seeds = 20;
  const std::vector<double> weights(n_calib, 1.0);
  const std::array<double, 4> shifts = {0.0, 0.25, 0.5, 1.0};

  Outcome out;
  out.pass = true;
  std::string detail;
  for (double shift : shifts) {
    std::vector<double> diffs, gaps, bounds;
    for (int seed = 0; seed < seeds; ++seed) {
      tc::StreamSpec calib;
      calib.pre = {0.0, 1.0};
      calib.post = {0.0, 1.0};
      const tc::SlotDistribution test{shift, 1.0 + shift};
      const auto r = tc::estimate_gap_bound(
          calib, test, weights, alpha, n_samples, n_bins,
          tc::derive_seed(90003, static_cast<std::uint64_t>(shift * 8000.0) + seed));
      diffs.push_back(r.empirical_gap - r.bound);
      gaps.push_back(r.empirical_gap);
      bounds.push_back(r.bound);
    }
    auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    auto se = [&](const std::vector<double>& v) {
      const double m = mean(v);
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::sqrt(ss / (v.size() - 1) / v.size());
    };
    const double mean_diff = mean(diffs);
    if (!(mean_diff <= 3.0 * se(diffs))) out.pass = false;
    if (shift == 0.0) {
      if (!(mean(bounds) < 0.02)) out.pass = false;
      if (!(std::abs(mean(gaps)) < 3.0 * se(gaps))) out.pass = false;
    }
    detail += " s=" + fmt(shift, 2) + ":gap " + fmt(mean(gaps), 3) + "<=bound " +
              fmt(mean(bounds), 3) + ";";
  }
  out.detail = detail;
  return out;
}

// ---------------------------------------------------------------------------
// 4. Permutation-probability disparity, exact mode vs brute force.

// Independent oracle: enumerate every calibration subset of slots and expand
// the per-slot classification products directly.
double demo_brute_force(const tc::StreamSpec& stream, int n) {
  const int n_calib = n / 2;
  const int changepoint = static_cast<int>(std::floor(stream.changepoint_fraction * n));
  const int target = std::min(changepoint, n_calib);
  const double threshold =
      0.25 * (stream.pre.lo + stream.pre.hi + stream.post.lo + stream.post.hi);
  auto q_of = [&](int slot) {
    const auto& d = slot < changepoint ? stream.pre : stream.post;
    return std::clamp((threshold - d.lo) / (d.hi - d.lo), 0.0, 1.0);
  };
  auto subset_probability = [&](const std::vector<int>& slots) {
    double total = 0.0;
    const int m = static_cast<int>(slots.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != target) continue;
      double p = 1.0;
      for (int i = 0; i < m; ++i) {
        const double q = q_of(slots[i]);
        p *= (mask >> i) & 1 ? q : 1.0 - q;
      }
      total += p;
    }
    return total;
  };
  std::vector<int> identity(n_calib);
  std::iota(identity.begin(), identity.end(), 0);
  const double p_identity = subset_probability(identity);
  double max_disparity = 0.0;
  std::vector<int> subset;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != n_calib) continue;
    subset.clear();
    for (int i = 0; i < n; ++i) {
      if ((mask >> i) & 1) subset.push_back(i);
    }
    max_disparity = std::max(max_disparity, std::abs(p_identity - subset_probability(subset)));
  }
  return max_disparity;
}

Outcome criterion_nonexchangeability() {
  tc::StreamSpec split;
  split.pre = {0.0, 1.0};
  split.post = {2.0, 3.0};
  split.changepoint_fraction = 0.5;
  const double exact = tc::nonexchangeability_demo(split, 12, 90004, true);
  const double oracle = demo_brute_force(split, 12);

  tc::StreamSpec single;
  single.pre = {0.0, 1.0};
  single.post = {0.0, 1.0};
  const int replicates = 40000;
  const double control = tc::nonexchangeability_demo(single, 12, 90004, false, replicates, 40);
  const double se = std::sqrt(0.5 / replicates);

  Outcome out;
  out.pass = exact == oracle && exact > 0.0 && control <= 3.0 * se;
  out.detail = "disparity " + fmt(exact, 6) + " == brute force " + fmt(oracle, 6) +
               ", single-regime control " + fmt(control, 4) + " <= " + fmt(3.0 * se, 4);
  return out;
}

// ---------------------------------------------------------------------------
// 5. Position-weighted swap property with the test point last.

Outcome criterion_exchange_check() {
  tc::Rng rng(90005);
  int held = 0, violations = 0, mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    std::vector<double> scores(n), weights(n);
    for (double& s : scores) s = rng.uniform();
    for (double& w : weights) w = rng.uniform(0.05, 1.0);

    const bool give_test_max_weight = trial % 2 == 0;
    if (give_test_max_weight) {
      weights[n - 1] = *std::max_element(weights.begin(), weights.end()) + 0.05;
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= sum;

    // Brute-force oracle over all swaps of a calibration position with the
    // test position, on the position-weighted linear quantile.
    auto linear = [&](const std::vector<double>& s) {
      double q = 0.0;
      for (std::size_t i = 0; i < n; ++i) q += s[i] * weights[i];
      return q;
    };
    const double q_orig = linear(scores);
    bool expect = true;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      auto swapped = scores;
      std::swap(swapped[k], swapped[n - 1]);
      if (scores[n - 1] > scores[k] && linear(swapped) > q_orig + 1e-15) expect = false;
    }
    const bool got = tc::quantile_exchange_check(scores, weights);
    if (got != expect) ++mismatches;
    if (give_test_max_weight && !got) ++mismatches;  // max weight must always pass
    held += got ? 1 : 0;
    violations += got ? 0 : 1;
  }
  Outcome out;
  out.pass = mismatches == 0 && violations > 0;
  out.detail = std::to_string(held) + " held / " + std::to_string(violations) +
               " documented violations, " + std::to_string(mismatches) + " oracle mismatches";
  return out;
}

// ---------------------------------------------------------------------------
// 6. Learned weights vs the uniform-weight pipeline on drifted data.

Outcome criterion_efficiency() {
  int reduced5 = 0, coverage_ok = 0;
  double mean_learned = 0.0, mean_uniform = 0.0, min_cov = 1.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    tc::SynthConfig scfg;
    scfg.n_nodes = 800;
    scfg.n_timesteps = 15;
    scfg.edges_per_step = 1600;
    scfg.n_classes = 2;
    scfg.drift_rate = 0.5;
    scfg.changepoint_fraction = 0.5;
    scfg.accuracy_pre = 0.85;
    scfg.accuracy_drop = 0.06;
    scfg.seed = tc::derive_seed(90006, seed);
    const auto data = tc::generate_temporal_graph(scfg);

    tc::RunConfig cfg;
    cfg.alpha = 0.05;
    cfg.lambda1 = 0.01;
    cfg.lambda2 = 0.01;
    cfg.dst = 1;
    cfg.tst = 2;
    cfg.temperature = 0.04;
    cfg.tau = 0.1;
    cfg.epochs = 200;
    cfg.lr = 0.02;
    cfg.coverage_floor = 0.955;
    cfg.score = tc::ScoreKind::diffusion;
    cfg.quantile = tc::QuantileKind::learned;
    cfg.seed = scfg.seed;
    cfg.split_fractions = {0.35, 0.05, 0.08, 0.27, 0.25};

    const auto learned = tc::run_calibration(cfg, data.graph, data.probabilities);
    tc::RunConfig uniform_cfg = cfg;
    uniform_cfg.epochs = 0;  // uniform weights: the initialization itself
    const auto uniform = tc::run_calibration(uniform_cfg, data.graph, data.probabilities);

    mean_learned += learned.report.efficiency;
    mean_uniform += uniform.report.efficiency;
    const double reduction =
        (uniform.report.efficiency - learned.report.efficiency) / uniform.report.efficiency;
    reduced5 += reduction >= 0.05 ? 1 : 0;
    coverage_ok += learned.report.coverage >= 0.94 ? 1 : 0;
    min_cov = std::min(min_cov, learned.report.coverage);
  }
  mean_learned /= seeds;
  mean_uniform /= seeds;
  Outcome out;
  out.pass = mean_learned <= mean_uniform && reduced5 >= 15 && coverage_ok == seeds;
  out.detail = "mean size " + fmt(mean_learned, 3) + " vs uniform " + fmt(mean_uniform, 3) +
               ", >=5% cut in " + std::to_string(reduced5) + "/20, min coverage " +
               fmt(min_cov, 3);
  return out;
}

// ---------------------------------------------------------------------------
// 7. Bitwise score identities.

Outcome criterion_identities() {
  tc::SynthConfig scfg;
  scfg.n_nodes = 120;
  scfg.n_timesteps = 8;
  scfg.edges_per_step = 220;
  scfg.n_classes = 3;
  scfg.drift_rate = 0.3;
  scfg.seed = 90007;
  const auto data = tc::generate_temporal_graph(scfg);
  const auto base = tc::tps_scores(data.probabilities);

  auto bitwise = [](const tc::ScoreTable& a, const tc::ScoreTable& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto ra = a.row_at(i), rb = b.row_at(i);
      if (std::memcmp(ra.data(), rb.data(), ra.size() * sizeof(double)) != 0) return false;
    }
    return true;
  };

  tc::DiffusionParams zero;
  zero.topo_weight = 0.0;
  zero.temporal_weight = 0.0;
  zero.neighbor_params = {1, 2};
  zero.temporal_window = 2;
  const bool identity_ok = bitwise(tc::diffusion_scores(base, data.graph, zero), base);

  tc::DiffusionParams one_hop;
  one_hop.topo_weight = 0.23;
  one_hop.temporal_weight = 0.0;
  one_hop.neighbor_params = {1, 3};
  one_hop.temporal_window = 3;
  const bool daps_ok = bitwise(tc::diffusion_scores(base, data.graph, one_hop),
                               tc::daps_scores(base, data.graph, 0.23, 3));

  const bool raps_ok =
      bitwise(tc::raps_scores(data.probabilities, 1, 0.0), tc::aps_scores(data.probabilities));

  Outcome out;
  out.pass = identity_ok && daps_ok && raps_ok;
  out.detail = std::string("zero-weight identity ") + (identity_ok ? "ok" : "FAIL") +
               ", daps reduction " + (daps_ok ? "ok" : "FAIL") + ", raps->aps " +
               (raps_ok ? "ok" : "FAIL");
  return out;
}

// ---------------------------------------------------------------------------
// 8. Scalability trends.

double pipeline_seconds(int nodes, double density, std::uint64_t seed) {
  tc::SynthConfig scfg;
  scfg.n_nodes = nodes;
  scfg.n_timesteps = 10;
  scfg.edges_per_step = nodes * 2;
  scfg.edge_density = density;
  scfg.n_classes = 2;
  scfg.drift_rate = 0.25;
  scfg.changepoint_fraction = 0.5;
  scfg.seed = seed;
  const auto data = tc::generate_temporal_graph(scfg);

  tc::RunConfig cfg;
  cfg.alpha = 0.05;
  cfg.lambda1 = 0.01;
  cfg.lambda2 = 0.01;
  cfg.dst = 1;
  cfg.tst = 1;
  cfg.temperature = 0.04;
  cfg.tau = 0.1;
  cfg.epochs = 30;
  cfg.lr = 0.02;
  cfg.score = tc::ScoreKind::diffusion;
  cfg.quantile = tc::QuantileKind::learned;
  cfg.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  const auto out = tc::run_calibration(cfg, data.graph, data.probabilities);
  (void)out;
  return elapsed_seconds(start);
}

Outcome criterion_scalability() {
  std::vector<double> times;
  for (int nodes : {1000, 2000, 4000, 8000}) {
    double best = 1e300;
    for (int rep = 0; rep < 4; ++rep) {
      best = std::min(best, pipeline_seconds(nodes, 0.0, 90008 + rep));
    }
    times.push_back(best);
  }
  double worst_ratio = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    worst_ratio = std::max(worst_ratio, times[i] / times[i - 1]);
  }

  double dmin = 1e300, dmax = 0.0;
  for (double density : {0.01, 0.02, 0.04}) {
    double best = 1e300;
    for (int rep = 0; rep < 5; ++rep) {
      best = std::min(best, pipeline_seconds(800, density, 90018 + rep));
    }
    dmin = std::min(dmin, best);
    dmax = std::max(dmax, best);
  }
  const double density_ratio = dmax / dmin;

  Outcome out;
  out.pass = worst_ratio <= 2.5 && density_ratio <= 1.5;
  out.detail = "worst doubling ratio " + fmt(worst_ratio, 2) + " (limit 2.5), density ratio " +
               fmt(density_ratio, 2) + " (limit 1.5); times";
  for (double t : times) out.detail += " " + fmt(t, 3) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// 9. CLI byte-identical reruns.

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_determinism(const std::string& cli) {
  Outcome out;
  if (cli.empty() || !fs::exists(cli)) {
    out.detail = "CLI binary not provided";
    return out;
  }
  const fs::path dir =
      fs::temp_directory_path() / ("tempo_conformal_acceptance_" + std::to_string(::rand()));
  fs::create_directories(dir);
  const std::string data = (dir / "data").string();
  const std::string run_out = (dir / "run").string();
  const std::string gap_out = (dir / "gap").string();

  auto shell = [&](const std::string& cmd) { return std::system(cmd.c_str()) == 0; };
  const std::string synth_cmd = cli + " --mode synth --nodes 120 --timesteps 8" +
                                " --edges-per-step 200 --drift 0.4 --seed 11 --out " + data +
                                " > /dev/null";
  const std::string calibrate_cmd =
      cli + " --mode calibrate --edges " + data + "/edges.csv --labels " + data +
      "/labels.csv --probs " + data + "/probs.csv --alpha 0.05 --epochs 30 --seed 11" +
      " --temperature 0.04 --out " + run_out + " > /dev/null";
  const std::string gap_cmd = cli + " --mode gap-analysis --gap-samples 2000 --gap-seeds 3" +
                              " --seed 11 --out " + gap_out + " > /dev/null";

  const std::vector<fs::path> artifacts = {
      fs::path(data) / "edges.csv",          fs::path(data) / "labels.csv",
      fs::path(data) / "probs.csv",          fs::path(data) / "manifest.txt",
      fs::path(run_out) / "prediction_sets.csv", fs::path(run_out) / "eval_report.txt",
      fs::path(run_out) / "training_trace.csv",  fs::path(run_out) / "learned_weights.csv",
      fs::path(run_out) / "manifest.txt",    fs::path(gap_out) / "gap_grid.csv",
      fs::path(gap_out) / "gap_report.txt"};

  std::vector<std::string> first;
  bool ok = true;
  for (int rep = 0; rep < 3 && ok; ++rep) {
    ok = shell(synth_cmd) && shell(calibrate_cmd) && shell(gap_cmd);
    if (!ok) break;
    if (rep == 0) {
      for (const auto& a : artifacts) first.push_back(slurp(a));
    } else {
      for (std::size_t i = 0; i < artifacts.size(); ++i) {
        if (slurp(artifacts[i]) != first[i]) {
          ok = false;
          out.detail = "artifact differs across reruns: " + artifacts[i].string();
        }
      }
    }
  }
  fs::remove_all(dir);
  out.pass = ok;
  if (out.detail.empty()) {
    out.detail = ok ? std::to_string(artifacts.size()) + " artifacts byte-identical over 3 runs"
                    : "CLI invocation failed";
  }
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";

  const std::vector<Criterion> criteria = {
      {1, "coverage guarantee on exchangeable scores", 5.0, criterion_coverage},
      {2, "gradient correctness vs finite differences", 10.0, criterion_gradients},
      {3, "coverage-gap bound validity across shifts", 60.0, criterion_gap_bound},
      {4, "permutation-probability disparity (exact vs brute force)", 0.0,
       criterion_nonexchangeability},
      {5, "weighted-quantile swap property", 0.0, criterion_exchange_check},
      {6, "learned weights shrink prediction sets on drifted data", 120.0, criterion_efficiency},
      {7, "diffusion and score reductions are bitwise", 0.0, criterion_identities},
      {8, "near-linear node scaling, density-insensitive runtime", 300.0, criterion_scalability},
      {9, "byte-identical CLI reruns", 0.0, [&] { return criterion_determinism(cli); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs = elapsed_seconds(start);
    if (c.time_limit > 0.0 && secs > c.time_limit) {
      outcome.pass = false;
      outcome.detail += " [exceeded " + fmt(c.time_limit, 0) + "s budget]";
    }
    std::printf("[%s] criterion %d: %s (%s, %.1fs)\n", outcome.pass ? "PASS" : "FAIL", c.id,
                c.name, outcome.detail.c_str(), secs);
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  return failures;
}
