#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tempo_conformal/base_predictor.hpp"
#include "tempo_conformal/coverage_analysis.hpp"
#include "tempo_conformal/csv_io.hpp"
#include "tempo_conformal/efficiency_optimizer.hpp"
#include "tempo_conformal/errors.hpp"
#include "tempo_conformal/nonconformity.hpp"
#include "tempo_conformal/pipeline.hpp"
#include "tempo_conformal/synth.hpp"
#include "tempo_conformal/temporal_graph.hpp"
#include "tempo_conformal/version.hpp"
#include "tempo_conformal/weighted_quantile.hpp"

namespace py = pybind11;
using namespace tempo_conformal;

namespace {

std::vector<double> row_copy(std::span<const double> row) {
  return {row.begin(), row.end()};
}

TemporalGraph graph_from_lists(
    const std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>>& edges,
    const std::vector<std::tuple<std::int64_t, std::int64_t, int>>& labels, int num_classes) {
  std::vector<EdgeRecord> e;
  e.reserve(edges.size());
  for (const auto& [src, dst, time] : edges) e.push_back({src, dst, time});
  std::vector<LabelRecord> l;
  l.reserve(labels.size());
  for (const auto& [node, time, label] : labels) l.push_back({node, time, label});
  return TemporalGraph::from_records(e, l, num_classes);
}

ProbabilityTable probabilities_from_list(
    const std::vector<std::pair<std::pair<std::int64_t, std::int64_t>, std::vector<double>>>&
        rows) {
  std::vector<ProbabilityRecord> records;
  records.reserve(rows.size());
  for (const auto& [key, probs] : rows) {
    records.push_back({{key.first, key.second}, probs});
  }
  return load_probabilities(records);
}

}  // namespace

PYBIND11_MODULE(tempo_conformal, m) {
  m.doc() = "Non-exchangeable conformal prediction for node classification on temporal graphs";
  m.attr("__version__") = kVersion;
  m.attr("UNBOUNDED_TIME_GAP") = kUnboundedTimeGap;
  m.attr("ADMIT_ALL") = kAdmitAll;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<TemporalNodeId>(m, "TemporalNodeId")
      .def(py::init<std::int64_t, std::int64_t>(), py::arg("node"), py::arg("time"))
      .def_readonly("node", &TemporalNodeId::node)
      .def_readonly("time", &TemporalNodeId::time)
      .def("__eq__", [](const TemporalNodeId& a, const TemporalNodeId& b) { return a == b; })
      .def("__hash__",
           [](const TemporalNodeId& id) { return py::hash(py::make_tuple(id.node, id.time)); })
      .def("__repr__", [](const TemporalNodeId& id) {
        return "TemporalNodeId(node=" + std::to_string(id.node) +
               ", time=" + std::to_string(id.time) + ")";
      });

  py::class_<NeighborQueryParams>(m, "NeighborQueryParams")
      .def(py::init<int, std::int64_t>(), py::arg("max_hops") = 1,
           py::arg("max_time_gap") = kUnboundedTimeGap)
      .def_readwrite("max_hops", &NeighborQueryParams::max_hops)
      .def_readwrite("max_time_gap", &NeighborQueryParams::max_time_gap);

  py::class_<TemporalGraph>(m, "TemporalGraph")
      .def(py::init(&graph_from_lists), py::arg("edges"), py::arg("labels"),
           py::arg("num_classes") = 0,
           "Build from (src, dst, time) edges and (node, time, label) labels.")
      .def_property_readonly("num_classes", &TemporalGraph::num_classes)
      .def_property_readonly("num_occurrences", &TemporalGraph::num_occurrences)
      .def_property_readonly("num_nodes", &TemporalGraph::num_nodes)
      .def("occurrences",
           [](const TemporalGraph& g) {
             return std::vector<TemporalNodeId>(g.occurrences().begin(), g.occurrences().end());
           })
      .def("contains", &TemporalGraph::contains, py::arg("id"))
      .def("label", &TemporalGraph::label, py::arg("id"))
      .def("topological_neighbors", &TemporalGraph::topological_neighbors, py::arg("id"),
           py::arg("params"))
      .def("temporal_neighbors", &TemporalGraph::temporal_neighbors, py::arg("id"),
           py::arg("max_time_gap"))
      .def("labeled_occurrences_by_time", &TemporalGraph::labeled_occurrences_by_time);

  py::class_<ProbabilityTable>(m, "ProbabilityTable")
      .def(py::init(&probabilities_from_list), py::arg("rows"),
           "Build from [((node, time), [p0, ..., pK-1]), ...] rows.")
      .def_property_readonly("num_classes", &ProbabilityTable::num_classes)
      .def("__len__", &ProbabilityTable::size)
      .def("keys",
           [](const ProbabilityTable& t) {
             return std::vector<TemporalNodeId>(t.keys().begin(), t.keys().end());
           })
      .def(
          "row", [](const ProbabilityTable& t, TemporalNodeId id) { return row_copy(t.row(id)); },
          py::arg("id"));

  py::class_<ScoreTable>(m, "ScoreTable")
      .def_property_readonly("num_classes", &ScoreTable::num_classes)
      .def("__len__", &ScoreTable::size)
      .def("keys",
           [](const ScoreTable& t) {
             return std::vector<TemporalNodeId>(t.keys().begin(), t.keys().end());
           })
      .def(
          "row", [](const ScoreTable& t, TemporalNodeId id) { return row_copy(t.row(id)); },
          py::arg("id"));

  m.def(
      "frequency_classifier",
      [](const TemporalGraph& g, const std::vector<TemporalNodeId>& train_ids, double smoothing,
         const NeighborQueryParams& params) {
        return frequency_classifier(g, train_ids, smoothing, params);
      },
      py::arg("graph"), py::arg("train_ids"), py::arg("smoothing") = 1.0,
      py::arg("params") = NeighborQueryParams{1, kUnboundedTimeGap});

  m.def("tps_scores", &tps_scores, py::arg("probabilities"));
  m.def("aps_scores", &aps_scores, py::arg("probabilities"), py::arg("randomize") = false,
        py::arg("rng_seed") = 0);
  m.def("raps_scores", &raps_scores, py::arg("probabilities"), py::arg("penalty_free_ranks"),
        py::arg("rank_penalty"));
  m.def("daps_scores", &daps_scores, py::arg("base"), py::arg("graph"), py::arg("topo_weight"),
        py::arg("max_time_gap") = kUnboundedTimeGap);

  py::class_<DiffusionParams>(m, "DiffusionParams")
      .def(py::init([](double topo_weight, double temporal_weight, NeighborQueryParams nq,
                       std::int64_t temporal_window) {
             return DiffusionParams{topo_weight, temporal_weight, nq, temporal_window};
           }),
           py::arg("topo_weight") = 0.01, py::arg("temporal_weight") = 0.01,
           py::arg("neighbor_params") = NeighborQueryParams{1, kUnboundedTimeGap},
           py::arg("temporal_window") = kUnboundedTimeGap)
      .def_readwrite("topo_weight", &DiffusionParams::topo_weight)
      .def_readwrite("temporal_weight", &DiffusionParams::temporal_weight)
      .def_readwrite("neighbor_params", &DiffusionParams::neighbor_params)
      .def_readwrite("temporal_window", &DiffusionParams::temporal_window);

  m.def("diffusion_scores", &diffusion_scores, py::arg("base"), py::arg("graph"),
        py::arg("params"));
  m.def(
      "true_label_scores",
      [](const ScoreTable& s, const TemporalGraph& g, const std::vector<TemporalNodeId>& ids) {
        return true_label_scores(s, g, ids);
      },
      py::arg("scores"), py::arg("graph"), py::arg("ids"));

  py::class_<WeightVector>(m, "WeightVector")
      .def(py::init([](std::vector<double> logits) { return WeightVector{std::move(logits)}; }),
           py::arg("logits"))
      .def_static("uniform", &WeightVector::uniform, py::arg("n"))
      .def_readwrite("logits", &WeightVector::logits)
      .def("weights", &WeightVector::weights)
      .def("__len__", &WeightVector::size);

  py::enum_<SoftSelector>(m, "SoftSelector")
      .value("cumulative_gap", SoftSelector::cumulative_gap)
      .value("raw_weight", SoftSelector::raw_weight);

  py::class_<QuantileResult>(m, "QuantileResult")
      .def_readonly("eta", &QuantileResult::eta)
      .def_readonly("selection", &QuantileResult::selection)
      .def_readonly("sorted_scores", &QuantileResult::sorted_scores);

  py::class_<SoftQuantileGradient>(m, "SoftQuantileGradient")
      .def_readonly("eta", &SoftQuantileGradient::eta)
      .def_readonly("selection", &SoftQuantileGradient::selection)
      .def_readonly("sorted_scores", &SoftQuantileGradient::sorted_scores)
      .def_readonly("d_eta_d_logit", &SoftQuantileGradient::d_eta_d_logit);

  m.def(
      "hard_quantile",
      [](const std::vector<double>& scores, double alpha) { return hard_quantile(scores, alpha); },
      py::arg("calib_scores"), py::arg("alpha"));
  m.def(
      "soft_quantile",
      [](const std::vector<double>& scores, const WeightVector& w, double alpha,
         double temperature, SoftSelector selector) {
        return soft_quantile(scores, w, alpha, temperature, selector);
      },
      py::arg("calib_scores"), py::arg("weights"), py::arg("alpha"), py::arg("temperature"),
      py::arg("selector") = SoftSelector::cumulative_gap);
  m.def(
      "soft_quantile_gradient",
      [](const std::vector<double>& scores, const WeightVector& w, double alpha,
         double temperature, SoftSelector selector) {
        return soft_quantile_gradient(scores, w, alpha, temperature, selector);
      },
      py::arg("calib_scores"), py::arg("weights"), py::arg("alpha"), py::arg("temperature"),
      py::arg("selector") = SoftSelector::cumulative_gap);
  m.def(
      "fixed_weight_quantile",
      [](const std::vector<double>& scores, double decay, double alpha) {
        return fixed_weight_quantile(scores, decay, alpha);
      },
      py::arg("scores_time_ordered"), py::arg("decay"), py::arg("alpha"));
  m.def(
      "weighted_quantile_threshold",
      [](const std::vector<double>& scores, const std::vector<double>& weights, double alpha) {
        return weighted_quantile_threshold(scores, weights, alpha);
      },
      py::arg("scores_time_ordered"), py::arg("weights"), py::arg("alpha"));
  m.def(
      "quantile_exchange_check",
      [](const std::vector<double>& scores, const std::vector<double>& weights) {
        return quantile_exchange_check(scores, weights);
      },
      py::arg("scores_with_test_last"), py::arg("weights"));

  py::class_<PredictionSet>(m, "PredictionSet")
      .def_readonly("node", &PredictionSet::node)
      .def_readonly("admitted", &PredictionSet::admitted)
      .def_readonly("quantile_used", &PredictionSet::quantile_used);

  m.def(
      "build_prediction_set",
      [](TemporalNodeId node, const std::vector<double>& scores, double threshold) {
        return build_prediction_set(node, scores, threshold);
      },
      py::arg("node"), py::arg("class_scores"), py::arg("threshold"));

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &OptimizerConfig::epochs)
      .def_readwrite("learning_rate", &OptimizerConfig::learning_rate)
      .def_readwrite("temperature", &OptimizerConfig::temperature)
      .def_readwrite("sigmoid_width", &OptimizerConfig::sigmoid_width)
      .def_readwrite("alpha", &OptimizerConfig::alpha)
      .def_readwrite("seed", &OptimizerConfig::seed)
      .def_readwrite("coverage_floor", &OptimizerConfig::coverage_floor)
      .def_readwrite("selector", &OptimizerConfig::selector);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("loss", &EpochRecord::loss)
      .def_readonly("val_coverage", &EpochRecord::val_coverage)
      .def_readonly("val_set_size", &EpochRecord::val_set_size);

  py::class_<TrainingTrace>(m, "TrainingTrace")
      .def_readonly("epochs", &TrainingTrace::epochs)
      .def_readonly("uniform_coverage", &TrainingTrace::uniform_coverage)
      .def_readonly("uniform_set_size", &TrainingTrace::uniform_set_size)
      .def_readonly("selected_epoch", &TrainingTrace::selected_epoch);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("weights", &TrainResult::weights)
      .def_readonly("trace", &TrainResult::trace)
      .def_readonly("threshold", &TrainResult::threshold);

  m.def(
      "efficiency_loss",
      [](const ScoreTable& scores, const std::vector<TemporalNodeId>& ids, const WeightVector& w,
         const std::vector<double>& calib, const OptimizerConfig& cfg) {
        const auto loss = efficiency_loss(scores, ids, w, calib, cfg);
        return py::make_tuple(loss.value, loss.gradient);
      },
      py::arg("scores"), py::arg("ids"), py::arg("weights"), py::arg("calib_scores"),
      py::arg("config"));
  m.def(
      "train_weights",
      [](const ScoreTable& scores, const TemporalGraph& g,
         const std::vector<TemporalNodeId>& calib_train,
         const std::vector<TemporalNodeId>& calib_valid, const OptimizerConfig& cfg) {
        return train_weights(scores, g, calib_train, calib_valid, cfg);
      },
      py::arg("scores"), py::arg("graph"), py::arg("calib_train_ids"), py::arg("calib_valid_ids"),
      py::arg("config"));

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("coverage", &EvalReport::coverage)
      .def_readonly("efficiency", &EvalReport::efficiency)
      .def_readonly("n_test", &EvalReport::n_test)
      .def_readonly("alpha", &EvalReport::alpha);

  m.def(
      "evaluate",
      [](const std::vector<PredictionSet>& sets, const TemporalGraph& g, double alpha) {
        return evaluate(sets, g, alpha);
      },
      py::arg("sets"), py::arg("graph"), py::arg("alpha"));
  m.def(
      "tv_distance_discrete",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        return tv_distance_discrete(p, q);
      },
      py::arg("p"), py::arg("q"));

  py::class_<SlotDistribution>(m, "SlotDistribution")
      .def(py::init<double, double>(), py::arg("lo"), py::arg("hi"))
      .def_readwrite("lo", &SlotDistribution::lo)
      .def_readwrite("hi", &SlotDistribution::hi);

  py::class_<StreamSpec>(m, "StreamSpec")
      .def(py::init([](SlotDistribution pre, SlotDistribution post, double changepoint_fraction) {
             return StreamSpec{pre, post, changepoint_fraction};
           }),
           py::arg("pre"), py::arg("post"), py::arg("changepoint_fraction") = 0.5)
      .def_readwrite("pre", &StreamSpec::pre)
      .def_readwrite("post", &StreamSpec::post)
      .def_readwrite("changepoint_fraction", &StreamSpec::changepoint_fraction);

  py::class_<GapBoundReport>(m, "GapBoundReport")
      .def_readonly("empirical_gap", &GapBoundReport::empirical_gap)
      .def_readonly("bound", &GapBoundReport::bound)
      .def_readonly("tv_terms", &GapBoundReport::tv_terms)
      .def_readonly("weights_used", &GapBoundReport::weights_used);

  m.def(
      "estimate_gap_bound",
      [](const StreamSpec& calib, const SlotDistribution& test, const std::vector<double>& weights,
         double alpha, int n_samples, int n_bins, std::uint64_t seed) {
        return estimate_gap_bound(calib, test, weights, alpha, n_samples, n_bins, seed);
      },
      py::arg("calib"), py::arg("test"), py::arg("weights"), py::arg("alpha"),
      py::arg("n_samples") = 20000, py::arg("n_bins") = 50, py::arg("seed") = 0);
  m.def("nonexchangeability_demo", &nonexchangeability_demo, py::arg("stream"), py::arg("n"),
        py::arg("seed"), py::arg("exact_mode") = false, py::arg("n_replicates") = 20000,
        py::arg("n_permutations") = 50);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_nodes", &SynthConfig::n_nodes)
      .def_readwrite("n_timesteps", &SynthConfig::n_timesteps)
      .def_readwrite("edges_per_step", &SynthConfig::edges_per_step)
      .def_readwrite("edge_density", &SynthConfig::edge_density)
      .def_readwrite("n_classes", &SynthConfig::n_classes)
      .def_readwrite("drift_rate", &SynthConfig::drift_rate)
      .def_readwrite("changepoint_fraction", &SynthConfig::changepoint_fraction)
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("accuracy_pre", &SynthConfig::accuracy_pre)
      .def_readwrite("accuracy_drop", &SynthConfig::accuracy_drop);

  py::class_<SynthData>(m, "SynthData")
      .def_readonly("graph", &SynthData::graph)
      .def_readonly("probabilities", &SynthData::probabilities);

  m.def("generate_temporal_graph", &generate_temporal_graph, py::arg("config"));

  py::class_<SplitPlan>(m, "SplitPlan")
      .def_readonly("train", &SplitPlan::train)
      .def_readonly("valid", &SplitPlan::valid)
      .def_readonly("calib_train", &SplitPlan::calib_train)
      .def_readonly("calib_valid", &SplitPlan::calib_valid)
      .def_readonly("test", &SplitPlan::test);

  m.def(
      "chronological_split",
      [](const TemporalGraph& g, const std::array<double, 5>& fractions) {
        return chronological_split(g, fractions);
      },
      py::arg("graph"), py::arg("fractions") = kDefaultSplitFractions);
}
