#pragma once

#include "geomort/anomaly.hpp"
#include "geomort/autoenc.hpp"
#include "geomort/benchmark.hpp"
#include "geomort/gbt.hpp"
#include "geomort/panel.hpp"
#include "geomort/region.hpp"
#include "geomort/temporal.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace geomort {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Report formatting: 6 significant digits.
std::string fmt_g6(double v);
// Data formatting: shortest string that parses back to the same double.
std::string fmt_full(double v);

// --- graph -----------------------------------------------------------------
std::vector<AdjacencyRecord> read_adjacency_csv(const std::string& path);
std::vector<CentroidRecord> read_centroid_csv(const std::string& path);
RegionGraph load_graph_files(const std::string& adjacency_path,
                             const std::string& centroid_path);
void write_adjacency_csv(const std::string& path, const RegionGraph& graph);
void write_centroid_csv(const std::string& path, const RegionGraph& graph);

// --- rates (fips,year,rate; missing = empty or NA) ---------------------------
RatePanel read_rates_csv(const std::string& path);
void write_rates_csv(const std::string& path, const RatePanel& panel);

// --- covariates (fips,year,<13 canonical columns>) ---------------------------
FeaturePanel read_features_csv(const std::string& path);
void write_features_csv(const std::string& path, const FeaturePanel& panel);

// --- crosswalk ---------------------------------------------------------------
Crosswalk read_crosswalk_csv(const std::string& path);
void write_crosswalk_csv(const std::string& path, const Crosswalk& crosswalk);

// --- censor masks ------------------------------------------------------------
// Header comments record seed, fraction, year, and the generator constants;
// the body is one fips per line.
void write_mask_csv(const std::string& path, const CensorMask& mask);
CensorMask read_mask_csv(const std::string& path);

// --- reports -----------------------------------------------------------------
void write_benchmark_csv(const std::string& path, const std::vector<BenchRow>& rows);

void write_anomaly_csv(const std::string& path,
                       const std::vector<AnomalyLabeling>& labelings,
                       const RegionList& regions);
struct AnomalyRow {
  RegionId region;
  int year = 0;
  std::string label;
};
std::vector<AnomalyRow> read_anomaly_csv(const std::string& path);

// feature,year,<value_name> rows in canonical feature order, years ascending.
void write_feature_year_csv(const std::string& path, const std::string& value_name,
                            const std::vector<int>& years, const Mat& yearly);
// feature,average,rank rows in rank order (rank is 1-based).
void write_feature_rank_csv(const std::string& path, const Vec& average,
                            const std::vector<int>& order);

void write_training_log_csv(const std::string& path, const std::vector<TrainLogRow>& log);

// --- model dumps -------------------------------------------------------------
void write_gbt_model_json(const std::string& path, const GbtEnsemble& ensemble);
void write_checkpoint_json(const std::string& path, const NetParams& params);
NetParams read_checkpoint_json(const std::string& path);

// --- run configuration and manifests ------------------------------------------
// Plain key=value lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view text);

// Hash of the resolved configuration: sorted "key=value" lines.
std::string config_hash(const std::map<std::string, std::string>& config);

void write_manifest(const std::string& path, const std::string& command,
                    const std::map<std::string, std::string>& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::uint64_t>& seeds,
                    const std::map<std::string, std::string>& notes = {});

}  // namespace geomort
