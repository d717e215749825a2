#include "tempo_conformal/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tempo_conformal/efficiency_optimizer.hpp"
#include "tempo_conformal/errors.hpp"
#include "tempo_conformal/nonconformity.hpp"
#include "tempo_conformal/weighted_quantile.hpp"

namespace tempo_conformal {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& field, const std::string& path, std::size_t line_no) {
  const std::string t = strip(field);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": expected integer, got '" + field + "'");
  }
  return value;
}

double parse_double(const std::string& field, const std::string& path, std::size_t line_no) {
  const std::string t = strip(field);
  if (t.empty()) throw ParseError(path + ":" + std::to_string(line_no) + ": empty numeric field");
  char* endp = nullptr;
  const double value = std::strtod(t.c_str(), &endp);
  if (endp != t.c_str() + t.size() || !std::isfinite(value)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": expected number, got '" + field + "'");
  }
  return value;
}

struct CsvFile {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // line numbers = index + 2
};

CsvFile read_csv(const std::string& path, std::size_t min_fields) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  CsvFile file;
  file.path = path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (line_no == 1) {
      file.header = fields;
      continue;
    }
    if (fields.size() < min_fields) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected at least " +
                       std::to_string(min_fields) + " fields, got " + std::to_string(fields.size()));
    }
    file.rows.push_back(std::move(fields));
  }
  if (file.header.empty()) throw ParseError(path + ": missing header line");
  return file;
}

bool is_integral(double v) {
  return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.007199254740992e15;
}

}  // namespace

TimeMapper TimeMapper::identity() { return TimeMapper{}; }

TimeMapper TimeMapper::rank_map(std::vector<double> distinct_sorted_times) {
  TimeMapper m;
  m.identity_ = false;
  m.distinct_ = std::move(distinct_sorted_times);
  return m;
}

std::int64_t TimeMapper::map(double raw_time) const {
  if (identity_) {
    if (!is_integral(raw_time)) {
      throw ValidationError("non-integer timestamp under identity time mapping");
    }
    return static_cast<std::int64_t>(raw_time);
  }
  auto it = std::lower_bound(distinct_.begin(), distinct_.end(), raw_time);
  if (it == distinct_.end() || *it != raw_time) {
    throw ValidationError("timestamp not present in the graph's time mapping");
  }
  return static_cast<std::int64_t>(it - distinct_.begin());
}

LoadedGraph load_graph_csv(const std::string& edges_path, const std::string& labels_path,
                           int num_classes) {
  const CsvFile edges_file = read_csv(edges_path, 3);
  const CsvFile labels_file = read_csv(labels_path, 3);

  struct RawEdge {
    std::int64_t src, dst;
    double time;
  };
  struct RawLabel {
    std::int64_t node;
    double time;
    int label;
  };
  std::vector<RawEdge> raw_edges;
  raw_edges.reserve(edges_file.rows.size());
  for (std::size_t i = 0; i < edges_file.rows.size(); ++i) {
    const auto& f = edges_file.rows[i];
    const std::size_t line_no = i + 2;
    raw_edges.push_back({parse_int(f[0], edges_path, line_no), parse_int(f[1], edges_path, line_no),
                         parse_double(f[2], edges_path, line_no)});
  }
  std::vector<RawLabel> raw_labels;
  raw_labels.reserve(labels_file.rows.size());
  for (std::size_t i = 0; i < labels_file.rows.size(); ++i) {
    const auto& f = labels_file.rows[i];
    const std::size_t line_no = i + 2;
    raw_labels.push_back({parse_int(f[0], labels_path, line_no),
                          parse_double(f[1], labels_path, line_no),
                          static_cast<int>(parse_int(f[2], labels_path, line_no))});
  }

  bool all_integral = true;
  for (const auto& e : raw_edges) all_integral = all_integral && is_integral(e.time);
  for (const auto& l : raw_labels) all_integral = all_integral && is_integral(l.time);

  TimeMapper mapper = TimeMapper::identity();
  if (!all_integral) {
    std::vector<double> times;
    times.reserve(raw_edges.size() + raw_labels.size());
    for (const auto& e : raw_edges) times.push_back(e.time);
    for (const auto& l : raw_labels) times.push_back(l.time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    mapper = TimeMapper::rank_map(std::move(times));
  }

  std::vector<EdgeRecord> edges;
  edges.reserve(raw_edges.size());
  for (const auto& e : raw_edges) edges.push_back({e.src, e.dst, mapper.map(e.time)});
  std::vector<LabelRecord> labels;
  labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) labels.push_back({l.node, mapper.map(l.time), l.label});

  return {TemporalGraph::from_records(edges, labels, num_classes), std::move(mapper)};
}

std::vector<LabelRecord> load_label_csv(const std::string& path, const TimeMapper& mapper) {
  const CsvFile file = read_csv(path, 3);
  std::vector<LabelRecord> out;
  out.reserve(file.rows.size());
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto& f = file.rows[i];
    const std::size_t line_no = i + 2;
    out.push_back({parse_int(f[0], path, line_no), mapper.map(parse_double(f[1], path, line_no)),
                   static_cast<int>(parse_int(f[2], path, line_no))});
  }
  return out;
}

ProbabilityTable load_probability_csv(const std::string& path, const TimeMapper& mapper) {
  const CsvFile file = read_csv(path, 4);
  if (file.header.size() < 4) throw ParseError(path + ": expected node,time,p0,... header");
  const std::size_t k = file.header.size() - 2;
  std::vector<ProbabilityRecord> records;
  records.reserve(file.rows.size());
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto& f = file.rows[i];
    const std::size_t line_no = i + 2;
    if (f.size() != k + 2) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(k + 2) + " fields, got " + std::to_string(f.size()));
    }
    ProbabilityRecord r;
    r.id = {parse_int(f[0], path, line_no), mapper.map(parse_double(f[1], path, line_no))};
    r.probs.reserve(k);
    for (std::size_t c = 0; c < k; ++c) r.probs.push_back(parse_double(f[c + 2], path, line_no));
    records.push_back(std::move(r));
  }
  return load_probabilities(records);
}

std::vector<LabeledSetRow> load_prediction_set_csv(const std::string& path) {
  const CsvFile file = read_csv(path, 3);
  std::vector<LabeledSetRow> out;
  out.reserve(file.rows.size());
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto& f = file.rows[i];
    const std::size_t line_no = i + 2;
    LabeledSetRow row;
    row.id = {parse_int(f[0], path, line_no),
              static_cast<std::int64_t>(parse_double(f[1], path, line_no))};
    const std::string admitted = strip(f[2]);
    if (!admitted.empty()) {
      std::stringstream ss(admitted);
      std::string part;
      while (std::getline(ss, part, '|')) {
        row.admitted.push_back(static_cast<int>(parse_int(part, path, line_no)));
      }
    }
    if (f.size() > 3) {
      const std::string t = strip(f[3]);
      row.threshold = t == "inf" ? std::numeric_limits<double>::infinity()
                                 : parse_double(f[3], path, line_no);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write to " + path);
  return out;
}

}  // namespace

void write_edge_csv(const std::string& path, std::span<const EdgeRecord> edges) {
  auto out = open_out(path);
  out << "src,dst,time\n";
  for (const auto& e : edges) out << e.src << ',' << e.dst << ',' << e.time << '\n';
}

void write_label_csv(const std::string& path, std::span<const LabelRecord> labels) {
  auto out = open_out(path);
  out << "node,time,label\n";
  for (const auto& l : labels) out << l.node << ',' << l.time << ',' << l.label << '\n';
}

void write_probability_csv(const std::string& path, const ProbabilityTable& table) {
  auto out = open_out(path);
  out << "node,time";
  for (int c = 0; c < table.num_classes(); ++c) out << ",p" << c;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto id = table.keys()[i];
    out << id.node << ',' << id.time;
    for (double p : table.row_at(i)) out << ',' << format_double(p);
    out << '\n';
  }
}

void write_score_csv(const std::string& path, const ScoreTable& table) {
  auto out = open_out(path);
  out << "node,time,class,score\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto id = table.keys()[i];
    const auto row = table.row_at(i);
    for (int c = 0; c < table.num_classes(); ++c) {
      out << id.node << ',' << id.time << ',' << c << ',' << format_double(row[c]) << '\n';
    }
  }
}

void write_prediction_set_csv(const std::string& path, std::span<const PredictionSet> sets) {
  auto out = open_out(path);
  out << "node,time,admitted_classes,threshold\n";
  for (const auto& s : sets) {
    out << s.node.node << ',' << s.node.time << ',';
    for (std::size_t i = 0; i < s.admitted.size(); ++i) {
      if (i) out << '|';
      out << s.admitted[i];
    }
    out << ',' << format_double(s.quantile_used) << '\n';
  }
}

void write_trace_csv(const std::string& path, std::span<const EpochRecord> trace) {
  auto out = open_out(path);
  out << "epoch,loss,val_coverage,val_set_size\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << (i + 1) << ',' << format_double(trace[i].loss) << ','
        << format_double(trace[i].val_coverage) << ',' << format_double(trace[i].val_set_size)
        << '\n';
  }
}

void write_weight_csv(const std::string& path, std::span<const double> logits,
                      std::span<const double> weights) {
  auto out = open_out(path);
  out << "rank,logit,weight\n";
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out << (i + 1) << ',' << format_double(logits[i]) << ',' << format_double(weights[i]) << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  auto out = open_out(path);
  out << contents;
}

}  // namespace tempo_conformal
