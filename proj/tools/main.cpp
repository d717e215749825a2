#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "tempo_conformal/errors.hpp"
#include "tempo_conformal/pipeline.hpp"
#include "tempo_conformal/version.hpp"

namespace tc = tempo_conformal;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction for node classification on temporal graphs"};
  app.set_version_flag("--version", tc::kVersion);

  tc::RunConfig cfg;
  std::string config_path;

  // Config file first, flags overlay it.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  if (!config_path.empty()) {
    try {
      tc::load_config_file(cfg, config_path);
    } catch (const tc::ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return kExitConfig;
    }
  }

  std::string score_name = tc::score_kind_name(cfg.score);
  std::string quantile_name = tc::quantile_kind_name(cfg.quantile);
  std::string diffusion_base_name = tc::score_kind_name(cfg.diffusion_base);
  std::string splits;

  app.add_option("--mode", cfg.mode, "calibrate | evaluate | synth | gap-analysis");
  app.add_option("--config", config_path, "key=value config file, overridden by flags");
  app.add_option("--edges", cfg.edges_path, "edge CSV (src,dst,time)");
  app.add_option("--labels", cfg.labels_path, "label CSV (node,time,label)");
  app.add_option("--probs", cfg.probs_path, "probability CSV (node,time,p0,...)");
  app.add_option("--sets", cfg.sets_path, "prediction-set CSV for evaluate mode");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--alpha", cfg.alpha, "target mis-coverage level");
  app.add_option("--lambda1", cfg.lambda1, "diffusion weight of topological neighbors");
  app.add_option("--lambda2", cfg.lambda2, "diffusion weight of temporal neighbors");
  app.add_option("--dst", cfg.dst, "topological neighbor radius (hops)");
  app.add_option("--tst", cfg.tst, "neighbor time window");
  app.add_option("--temperature", cfg.temperature, "soft quantile temperature");
  app.add_option("--tau", cfg.tau, "efficiency-loss sigmoid width");
  app.add_option("--epochs", cfg.epochs, "weight-training epochs");
  app.add_option("--lr", cfg.lr, "weight-training learning rate");
  app.add_option("--decay", cfg.decay, "fixed-weight quantile decay");
  app.add_option("--coverage-floor", cfg.coverage_floor,
                 "validation coverage floor for weight selection (default 1-alpha)");
  app.add_option("--score", score_name, "tps | aps | raps | daps | diffusion");
  app.add_option("--diffusion-base", diffusion_base_name, "base score diffused: tps | aps | raps");
  app.add_option("--quantile", quantile_name, "hard | fixed-weight | learned");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--smoothing", cfg.smoothing, "frequency-classifier smoothing");
  app.add_option("--classes", cfg.num_classes, "number of classes (0 = infer)");
  app.add_option("--splits", splits, "five split fractions a/b/c/d/e");
  app.add_flag("--dump-scores", cfg.dump_scores, "write scores.csv next to the report");
  app.add_option("--nodes", cfg.synth_nodes, "synth: node count");
  app.add_option("--timesteps", cfg.synth_timesteps, "synth: timestep count");
  app.add_option("--edges-per-step", cfg.synth_edges_per_step, "synth: edges per step");
  app.add_option("--density", cfg.synth_edge_density, "synth: expected active pair fraction");
  app.add_option("--drift", cfg.synth_drift, "synth: regime shift magnitude");
  app.add_option("--changepoint", cfg.synth_changepoint, "synth: changepoint fraction");
  app.add_option("--gap-samples", cfg.gap_samples, "gap analysis: Monte-Carlo samples");
  app.add_option("--gap-calib", cfg.gap_calib, "gap analysis: calibration size");
  app.add_option("--gap-seeds", cfg.gap_seeds, "gap analysis: seeds per shift");

  try {
    app.parse(argc, argv);
    cfg.score = tc::parse_score_kind(score_name);
    cfg.quantile = tc::parse_quantile_kind(quantile_name);
    cfg.diffusion_base = tc::parse_score_kind(diffusion_base_name);
    if (!splits.empty()) tc::apply_config_line(cfg, "splits=" + splits);
    return tc::run(cfg);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help / --version
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return kExitParse;
  } catch (const tc::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitParse;
  } catch (const tc::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitParse;
  } catch (const tc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const tc::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
