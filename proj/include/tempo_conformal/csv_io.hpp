#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tempo_conformal/base_predictor.hpp"
#include "tempo_conformal/temporal_graph.hpp"

namespace tempo_conformal {

class ScoreTable;
struct PredictionSet;
struct EpochRecord;

// Input timestamps may be real-valued; they are rank-mapped to dense integers
// at load (stable, deterministic). Integer inputs map through unchanged.
class TimeMapper {
 public:
  static TimeMapper identity();
  static TimeMapper rank_map(std::vector<double> distinct_sorted_times);

  std::int64_t map(double raw_time) const;
  bool is_identity() const { return identity_; }

 private:
  bool identity_ = true;
  std::vector<double> distinct_;  // ascending; rank = position
};

struct LoadedGraph {
  TemporalGraph graph;
  TimeMapper time_mapper;
};

// Edge file: header "src,dst,time". Label file: header "node,time,label".
LoadedGraph load_graph_csv(const std::string& edges_path, const std::string& labels_path,
                           int num_classes = 0);

// Probability file: header "node,time,p0,...,p{K-1}".
ProbabilityTable load_probability_csv(const std::string& path, const TimeMapper& mapper);

struct LabeledSetRow {
  TemporalNodeId id;
  std::vector<int> admitted;
  double threshold = 0.0;
};

std::vector<LabelRecord> load_label_csv(const std::string& path, const TimeMapper& mapper);
std::vector<LabeledSetRow> load_prediction_set_csv(const std::string& path);

// Shortest round-trip decimal rendering; used everywhere a double is written
// so reruns are byte-identical.
std::string format_double(double v);

void write_edge_csv(const std::string& path, std::span<const EdgeRecord> edges);
void write_label_csv(const std::string& path, std::span<const LabelRecord> labels);
void write_probability_csv(const std::string& path, const ProbabilityTable& table);
void write_score_csv(const std::string& path, const ScoreTable& table);
void write_prediction_set_csv(const std::string& path, std::span<const PredictionSet> sets);
void write_trace_csv(const std::string& path, std::span<const EpochRecord> trace);
void write_weight_csv(const std::string& path, std::span<const double> logits,
                      std::span<const double> weights);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace tempo_conformal
