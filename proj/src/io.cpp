#include "geomort/io.hpp"

#include "geomort/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace geomort {

namespace {

using ojson = nlohmann::ordered_json;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_failure, "cannot open " + path + " for writing");
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(Errc::malformed_record, "bad number '" + text + "' in " + context);
  }
  return v;
}

int parse_int(const std::string& text, const std::string& context) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(Errc::malformed_record, "bad integer '" + text + "' in " + context);
  }
  return v;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

void expect_header(const std::string& got, const std::string& want, const std::string& path) {
  if (got != want) {
    fail(Errc::malformed_record,
         path + ": expected header '" + want + "', got '" + got + "'");
  }
}

}  // namespace

std::string fmt_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<AdjacencyRecord> read_adjacency_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::malformed_record, path + ": empty file");
  expect_header(strip_cr(line), "fips,neighbor_fips", path);
  std::vector<AdjacencyRecord> records;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 2) fail(Errc::malformed_record, path + ": bad row '" + line + "'");
    records.push_back({RegionId::parse(cells[0]), RegionId::parse(cells[1])});
  }
  return records;
}

std::vector<CentroidRecord> read_centroid_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::malformed_record, path + ": empty file");
  expect_header(strip_cr(line), "fips,lat,lon", path);
  std::vector<CentroidRecord> records;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3) fail(Errc::malformed_record, path + ": bad row '" + line + "'");
    records.push_back({RegionId::parse(cells[0]), parse_double(cells[1], path),
                       parse_double(cells[2], path)});
  }
  return records;
}

RegionGraph load_graph_files(const std::string& adjacency_path,
                             const std::string& centroid_path) {
  return load_graph(read_adjacency_csv(adjacency_path), read_centroid_csv(centroid_path));
}

void write_adjacency_csv(const std::string& path, const RegionGraph& graph) {
  std::ofstream out = open_out(path);
  out << "fips,neighbor_fips\n";
  for (int i = 0; i < graph.size(); ++i) {
    for (int j : graph.neighbors(i)) {
      if (i < j) out << graph.regions()[i].code << ',' << graph.regions()[j].code << '\n';
    }
  }
}

void write_centroid_csv(const std::string& path, const RegionGraph& graph) {
  std::ofstream out = open_out(path);
  out << "fips,lat,lon\n";
  for (int i = 0; i < graph.size(); ++i) {
    out << graph.regions()[i].code << ',' << fmt_full(graph.lat(i)) << ','
        << fmt_full(graph.lon(i)) << '\n';
  }
}

RatePanel read_rates_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::malformed_record, path + ": empty file");
  expect_header(strip_cr(line), "fips,year,rate", path);

  struct Row {
    RegionId id;
    int year;
    double value;
  };
  std::vector<Row> rows;
  std::set<RegionId> region_set;
  int min_year = 0, max_year = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3) fail(Errc::malformed_record, path + ": bad row '" + line + "'");
    Row r;
    r.id = RegionId::parse(cells[0]);
    r.year = parse_int(cells[1], path);
    r.value = is_missing_token(cells[2]) ? kMissing : parse_double(cells[2], path);
    if (!is_missing(r.value) && r.value < 0.0) {
      fail(Errc::malformed_record, path + ": negative rate for " + r.id.code);
    }
    region_set.insert(r.id);
    if (rows.empty()) min_year = max_year = r.year;
    min_year = std::min(min_year, r.year);
    max_year = std::max(max_year, r.year);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) fail(Errc::empty_field, path + ": no data rows");

  RatePanel panel;
  panel.regions = std::make_shared<RegionList>(region_set.begin(), region_set.end());
  panel.first_year = min_year;
  panel.values.assign(max_year - min_year + 1,
                      Vec::Constant(static_cast<Eigen::Index>(panel.regions->size()), kMissing));
  for (const Row& r : rows) {
    auto it = std::lower_bound(panel.regions->begin(), panel.regions->end(), r.id);
    int i = static_cast<int>(it - panel.regions->begin());
    double& slot = panel.values[r.year - min_year][i];
    if (!is_missing(slot)) {
      fail(Errc::malformed_record,
           path + ": duplicate row for " + r.id.code + " year " + std::to_string(r.year));
    }
    slot = r.value;
  }
  return panel;
}

void write_rates_csv(const std::string& path, const RatePanel& panel) {
  std::ofstream out = open_out(path);
  out << "fips,year,rate\n";
  for (std::size_t i = 0; i < panel.regions->size(); ++i) {
    for (int y = panel.first_year; y <= panel.last_year(); ++y) {
      double v = panel.values[y - panel.first_year][static_cast<Eigen::Index>(i)];
      out << (*panel.regions)[i].code << ',' << y << ','
          << (is_missing(v) ? std::string() : fmt_full(v)) << '\n';
    }
  }
}

FeaturePanel read_features_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::malformed_record, path + ": empty file");
  std::string want = "fips,year";
  for (const std::string& f : canonical_features()) want += "," + f;
  expect_header(strip_cr(line), want, path);

  struct Row {
    RegionId id;
    int year;
    std::array<double, kFeatureCount> v;
  };
  std::vector<Row> rows;
  std::set<RegionId> region_set;
  int min_year = 0, max_year = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 2 + kFeatureCount) {
      fail(Errc::malformed_record, path + ": bad row '" + line + "'");
    }
    Row r;
    r.id = RegionId::parse(cells[0]);
    r.year = parse_int(cells[1], path);
    for (int j = 0; j < kFeatureCount; ++j) {
      const std::string& cell = cells[2 + j];
      if (is_missing_token(cell)) {
        r.v[j] = kMissing;
      } else {
        r.v[j] = parse_double(cell, path);
        if (r.v[j] < 0.0 || r.v[j] > 100.0) {
          fail(Errc::malformed_record,
               path + ": percentile outside [0,100] for " + r.id.code);
        }
      }
    }
    region_set.insert(r.id);
    if (rows.empty()) min_year = max_year = r.year;
    min_year = std::min(min_year, r.year);
    max_year = std::max(max_year, r.year);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) fail(Errc::empty_field, path + ": no data rows");

  FeaturePanel panel;
  panel.regions = std::make_shared<RegionList>(region_set.begin(), region_set.end());
  panel.first_year = min_year;
  panel.values.assign(
      max_year - min_year + 1,
      Mat::Constant(static_cast<Eigen::Index>(panel.regions->size()), kFeatureCount, kMissing));
  std::vector<std::set<int>> seen(panel.values.size());
  for (const Row& r : rows) {
    auto it = std::lower_bound(panel.regions->begin(), panel.regions->end(), r.id);
    int i = static_cast<int>(it - panel.regions->begin());
    if (!seen[r.year - min_year].insert(i).second) {
      fail(Errc::malformed_record,
           path + ": duplicate row for " + r.id.code + " year " + std::to_string(r.year));
    }
    for (int j = 0; j < kFeatureCount; ++j) panel.values[r.year - min_year](i, j) = r.v[j];
  }
  return panel;
}

void write_features_csv(const std::string& path, const FeaturePanel& panel) {
  std::ofstream out = open_out(path);
  out << "fips,year";
  for (const std::string& f : canonical_features()) out << ',' << f;
  out << '\n';
  for (std::size_t i = 0; i < panel.regions->size(); ++i) {
    for (int y = panel.first_year; y <= panel.last_year(); ++y) {
      out << (*panel.regions)[i].code << ',' << y;
      const Mat& m = panel.values[y - panel.first_year];
      for (int j = 0; j < kFeatureCount; ++j) {
        double v = m(static_cast<Eigen::Index>(i), j);
        out << ',' << (is_missing(v) ? std::string() : fmt_full(v));
      }
      out << '\n';
    }
  }
}

Crosswalk read_crosswalk_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::malformed_record, path + ": empty file");
  expect_header(strip_cr(line), "source_fips,target_fips,weight", path);
  Crosswalk cw;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3) fail(Errc::malformed_record, path + ": bad row '" + line + "'");
    CrosswalkEntry e;
    e.source = RegionId::parse(cells[0]);
    e.target = RegionId::parse(cells[1]);
    e.weight = parse_double(cells[2], path);
    if (e.weight < 0.0) fail(Errc::malformed_record, path + ": negative weight");
    cw.entries.push_back(std::move(e));
  }
  return cw;
}

void write_crosswalk_csv(const std::string& path, const Crosswalk& crosswalk) {
  std::ofstream out = open_out(path);
  out << "source_fips,target_fips,weight\n";
  for (const CrosswalkEntry& e : crosswalk.entries) {
    out << e.source.code << ',' << e.target.code << ',' << fmt_full(e.weight) << '\n';
  }
}

void write_mask_csv(const std::string& path, const CensorMask& mask) {
  std::ofstream out = open_out(path);
  out << "# seed=" << mask.seed << '\n';
  out << "# fraction=" << fmt_full(mask.fraction) << '\n';
  out << "# year=" << mask.year << '\n';
  char buf[160];
  std::snprintf(buf, sizeof buf, "# rng=splitmix64 gamma=0x%016llX mix1=0x%016llX mix2=0x%016llX\n",
                static_cast<unsigned long long>(SplitMix64::kGamma),
                static_cast<unsigned long long>(SplitMix64::kMix1),
                static_cast<unsigned long long>(SplitMix64::kMix2));
  out << buf;
  out << "fips\n";
  for (const RegionId& id : mask.masked) out << id.code << '\n';
}

CensorMask read_mask_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  CensorMask mask;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line.rfind("# seed=", 0) == 0) {
      mask.seed = std::stoull(line.substr(7));
    } else if (line.rfind("# fraction=", 0) == 0) {
      mask.fraction = parse_double(line.substr(11), path);
    } else if (line.rfind("# year=", 0) == 0) {
      mask.year = parse_int(line.substr(7), path);
    } else if (line.rfind("#", 0) == 0) {
      continue;
    } else if (!saw_header) {
      expect_header(line, "fips", path);
      saw_header = true;
    } else {
      mask.masked.push_back(RegionId::parse(line));
    }
  }
  if (!saw_header) fail(Errc::malformed_record, path + ": missing fips header");
  return mask;
}

void write_benchmark_csv(const std::string& path, const std::vector<BenchRow>& rows) {
  std::ofstream out = open_out(path);
  out << "year,method,seed_count,mae,rmse,mpe,mape,excluded_zero_truth\n";
  for (const BenchRow& r : rows) {
    out << r.year << ',' << method_name(r.method) << ',' << r.seed_count << ','
        << fmt_g6(r.metrics.mae) << ',' << fmt_g6(r.metrics.rmse) << ','
        << fmt_g6(r.metrics.mpe) << ',' << fmt_g6(r.metrics.mape) << ','
        << r.metrics.excluded_zero_truth << '\n';
  }
}

void write_anomaly_csv(const std::string& path,
                       const std::vector<AnomalyLabeling>& labelings,
                       const RegionList& regions) {
  std::ofstream out = open_out(path);
  out << "fips,year,label\n";
  auto contains = [](const std::vector<RegionId>& set, const RegionId& id) {
    return std::binary_search(set.begin(), set.end(), id);
  };
  for (const AnomalyLabeling& lab : labelings) {
    for (const RegionId& id : regions) {
      const char* label = "none";
      if (contains(lab.hot, id)) label = "hot";
      else if (contains(lab.cold, id)) label = "cold";
      else if (contains(lab.zero, id)) label = "zero";
      out << id.code << ',' << lab.year << ',' << label << '\n';
    }
  }
}

std::vector<AnomalyRow> read_anomaly_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::malformed_record, path + ": empty file");
  expect_header(strip_cr(line), "fips,year,label", path);
  std::vector<AnomalyRow> rows;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3) fail(Errc::malformed_record, path + ": bad row '" + line + "'");
    if (cells[2] != "hot" && cells[2] != "cold" && cells[2] != "zero" && cells[2] != "none") {
      fail(Errc::malformed_record, path + ": unknown label '" + cells[2] + "'");
    }
    rows.push_back({RegionId::parse(cells[0]), parse_int(cells[1], path), cells[2]});
  }
  return rows;
}

void write_feature_year_csv(const std::string& path, const std::string& value_name,
                            const std::vector<int>& years, const Mat& yearly) {
  std::ofstream out = open_out(path);
  out << "feature,year," << value_name << '\n';
  for (int j = 0; j < kFeatureCount; ++j) {
    for (std::size_t r = 0; r < years.size(); ++r) {
      out << canonical_features()[j] << ',' << years[r] << ','
          << fmt_g6(yearly(static_cast<Eigen::Index>(r), j)) << '\n';
    }
  }
}

void write_feature_rank_csv(const std::string& path, const Vec& average,
                            const std::vector<int>& order) {
  std::ofstream out = open_out(path);
  out << "feature,average,rank\n";
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out << canonical_features()[order[pos]] << ',' << fmt_g6(average[order[pos]]) << ','
        << pos + 1 << '\n';
  }
}

void write_training_log_csv(const std::string& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out = open_out(path);
  out << "epoch,train_l1,val_l1,lr,best_so_far\n";
  for (const TrainLogRow& r : log) {
    out << r.epoch << ',' << fmt_g6(r.train_l1) << ',' << fmt_g6(r.val_l1) << ','
        << fmt_g6(r.lr) << ',' << (r.best_so_far ? 1 : 0) << '\n';
  }
}

namespace {

ojson tree_node_json(const RegressionTree& tree, int node) {
  const TreeNode& n = tree.nodes[node];
  ojson j;
  j["count"] = n.count;
  if (n.leaf()) {
    j["value"] = n.value;
    return j;
  }
  j["feature"] = canonical_features()[n.feature];
  j["threshold"] = n.threshold;
  j["gain"] = n.gain;
  j["left"] = tree_node_json(tree, n.left);
  j["right"] = tree_node_json(tree, n.right);
  return j;
}

ojson matrix_json(const Mat& m) {
  ojson rows = ojson::array();
  for (int r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson vector_json(const Vec& v) {
  ojson out = ojson::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Mat matrix_from_json(const ojson& j) {
  Mat m(j.size(), j.empty() ? 0 : j.front().size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Vec vector_from_json(const ojson& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

void write_gbt_model_json(const std::string& path, const GbtEnsemble& ensemble) {
  ojson j;
  j["base_prediction"] = ensemble.base;
  j["learning_rate"] = ensemble.params.learning_rate;
  j["max_depth"] = ensemble.params.max_depth;
  j["min_leaf"] = ensemble.params.min_leaf;
  ojson trees = ojson::array();
  for (const RegressionTree& t : ensemble.trees) trees.push_back(tree_node_json(t, 0));
  j["trees"] = std::move(trees);
  std::ofstream out = open_out(path);
  out << j.dump(1) << '\n';
}

void write_checkpoint_json(const std::string& path, const NetParams& params) {
  ojson j;
  j["dims"] = {{"regions", params.n_regions()},
               {"features", static_cast<int>(params.w_conv.size())},
               {"d1", params.d1()},
               {"d2", params.d2()}};
  j["w_conv"] = vector_json(params.w_conv);
  j["b_conv"] = params.b_conv;
  j["w_e1"] = matrix_json(params.w_e1);
  j["b_e1"] = vector_json(params.b_e1);
  j["w_e2"] = matrix_json(params.w_e2);
  j["b_e2"] = vector_json(params.b_e2);
  j["w_d3"] = matrix_json(params.w_d3);
  j["b_d3"] = vector_json(params.b_d3);
  j["w_d4"] = matrix_json(params.w_d4);
  j["b_d4"] = vector_json(params.b_d4);
  std::ofstream out = open_out(path);
  out << j.dump() << '\n';
}

NetParams read_checkpoint_json(const std::string& path) {
  std::ifstream in = open_in(path);
  ojson j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(Errc::malformed_record, path + ": " + e.what());
  }
  NetParams p;
  p.w_conv = vector_from_json(j.at("w_conv"));
  p.b_conv = j.at("b_conv").get<double>();
  p.w_e1 = matrix_from_json(j.at("w_e1"));
  p.b_e1 = vector_from_json(j.at("b_e1"));
  p.w_e2 = matrix_from_json(j.at("w_e2"));
  p.b_e2 = vector_from_json(j.at("b_e2"));
  p.w_d3 = matrix_from_json(j.at("w_d3"));
  p.b_d3 = vector_from_json(j.at("b_d3"));
  p.w_d4 = matrix_from_json(j.at("w_d4"));
  p.b_d4 = vector_from_json(j.at("b_d4"));
  return p;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, std::string> out;
  std::string line;
  auto trim = [](std::string s) {
    auto a = s.find_first_not_of(" \t");
    auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(Errc::bad_config, path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string config_hash(const std::map<std::string, std::string>& config) {
  std::string canon;
  for (const auto& [k, v] : config) {
    canon += k;
    canon += '=';
    canon += v;
    canon += '\n';
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canon)));
  return buf;
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::map<std::string, std::string>& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::uint64_t>& seeds,
                    const std::map<std::string, std::string>& notes) {
  ojson j;
  j["command"] = command;
  j["version"] = kToolkitVersion;
  ojson cfg = ojson::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = std::move(cfg);
  j["config_hash"] = config_hash(config);
  j["seeds"] = seeds;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  if (!notes.empty()) {
    ojson n = ojson::object();
    for (const auto& [k, v] : notes) n[k] = v;
    j["notes"] = std::move(n);
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace geomort
