#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tempo_conformal/coverage_analysis.hpp"
#include "tempo_conformal/efficiency_optimizer.hpp"
#include "tempo_conformal/synth.hpp"

namespace tempo_conformal {

enum class ScoreKind { tps, aps, raps, daps, diffusion };
enum class QuantileKind { hard, fixed_weight, learned };

ScoreKind parse_score_kind(const std::string& name);
QuantileKind parse_quantile_kind(const std::string& name);
const char* score_kind_name(ScoreKind kind);
const char* quantile_kind_name(QuantileKind kind);

// Flat run configuration shared by the CLI flags, key=value config files and
// the manifest. Defaults follow the paper-style operating point.
struct RunConfig {
  std::string mode;  // calibrate | evaluate | synth | gap-analysis
  std::string edges_path;
  std::string labels_path;
  std::string probs_path;  // empty: use the built-in frequency classifier
  std::string sets_path;   // evaluate mode input
  std::string out_dir = "out";

  double alpha = 0.05;
  double lambda1 = 0.01;  // diffusion topological share
  double lambda2 = 0.01;  // diffusion temporal share
  int dst = 1;            // topological radius
  std::int64_t tst = 2;   // time window for both neighbor kinds
  double temperature = 0.1;
  double tau = 0.1;
  int epochs = 100;
  double lr = 0.01;
  double decay = 0.99;
  double coverage_floor = -1.0;  // < 0: 1 - alpha
  ScoreKind score = ScoreKind::diffusion;
  ScoreKind diffusion_base = ScoreKind::tps;  // base score diffused by daps/diffusion
  QuantileKind quantile = QuantileKind::learned;
  std::uint64_t seed = 0;
  double smoothing = 1.0;  // frequency-classifier Laplace smoothing
  int num_classes = 0;     // 0: infer
  int raps_penalty_free_ranks = 1;
  double raps_rank_penalty = 0.01;
  bool aps_randomize = false;
  bool dump_scores = false;
  std::array<double, 5> split_fractions = kDefaultSplitFractions;

  // synth mode
  int synth_nodes = 100;
  int synth_timesteps = 10;
  int synth_edges_per_step = 50;
  double synth_edge_density = 0.0;
  int synth_classes = 2;
  double synth_drift = 0.0;
  double synth_changepoint = 0.5;
  double synth_accuracy_pre = 0.85;
  double synth_accuracy_drop = 0.2;

  // gap-analysis mode
  int gap_samples = 20000;
  int gap_bins = 50;
  int gap_calib = 19;
  int gap_seeds = 20;
};

// Apply "key=value" lines (comments start with '#') over the current config.
void apply_config_line(RunConfig& cfg, const std::string& line);
void load_config_file(RunConfig& cfg, const std::string& path);
std::string manifest_text(const RunConfig& cfg);

struct CalibrationOutcome {
  EvalReport report;
  double threshold = 0.0;
  std::vector<PredictionSet> test_sets;
  TrainingTrace trace;          // learned quantile only
  std::vector<double> logits;   // learned quantile only
  std::vector<double> weights;  // learned quantile only
};

// load -> base scores -> diffusion -> weight training -> frozen threshold ->
// test prediction sets -> report.
CalibrationOutcome run_calibration(const RunConfig& cfg, const TemporalGraph& g,
                                   const ProbabilityTable& probs);

// Mode dispatchers used by the CLI; artifacts land in cfg.out_dir.
EvalReport run_calibrate_mode(const RunConfig& cfg);
EvalReport run_evaluate_mode(const RunConfig& cfg);
void run_synth_mode(const RunConfig& cfg);
void run_gap_analysis_mode(const RunConfig& cfg);

int run(const RunConfig& cfg);

}  // namespace tempo_conformal
