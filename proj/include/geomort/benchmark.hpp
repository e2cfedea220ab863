#pragma once

#include "geomort/impute.hpp"
#include "geomort/panel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace geomort {

// Reproducible censoring pattern: which regions of one year were masked,
// plus the generator inputs needed to regenerate it bit-for-bit.
struct CensorMask {
  int year = 0;
  std::vector<RegionId> masked;  // sorted ascending
  std::uint64_t seed = 0;
  double fraction = 0.0;
};

// Masks each region independently with probability `fraction`, in sorted
// region order, one SplitMix64 unit draw per region.
std::pair<RateField, CensorMask> censor(const RateField& field, double fraction,
                                        std::uint64_t seed);

struct MetricBundle {
  double mae = 0.0;
  double rmse = 0.0;
  double mpe = 0.0;   // signed %, (imputed - true) / true
  double mape = 0.0;  // %
  int excluded_zero_truth = 0;  // regions dropped from mpe/mape
  int scored = 0;               // masked regions scored

  MetricBundle& operator+=(const MetricBundle& o);
  MetricBundle scaled(double s) const;
};

// Scores imputed against truth over the masked regions only.
MetricBundle score(const RateField& imputed, const RateField& truth,
                   const CensorMask& mask);

enum class Method { neighbor_mean, state_mean, national_mean, idw };

const std::vector<Method>& all_methods();
std::string method_name(Method m);

RateField run_method(Method m, const RateField& censored, const RegionGraph& graph,
                     const IdwOptions& idw);

struct BenchRow {
  int year = 0;
  Method method = Method::neighbor_mean;
  int seed_count = 0;
  MetricBundle metrics;  // seed-averaged; excluded/scored counts summed
};

// For each year and seed: censor once, impute with every method on the same
// mask, score against truth. Metrics are averaged over seeds.
std::vector<BenchRow> compare_methods(const RatePanel& truth, const RegionGraph& graph,
                                      double fraction, const std::vector<std::uint64_t>& seeds,
                                      const IdwOptions& idw = {});

struct EfficacyReport {
  RegionListPtr regions;
  Vec abs_error;
  Vec accuracy;  // percent, 100*(1 - e_i/max e)
  double avg_error = 0.0;
  double max_error = 0.0;
  double avg_accuracy = 0.0;
};

// Absolute residual per region, normalized to an accuracy percentage
// against the worst region; all-zero errors score 100 everywhere.
EfficacyReport efficacy_report(const RateField& predictions, const RateField& truth);

struct SummaryStats {
  double mean = 0.0, stddev = 0.0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Sample standard deviation (n-1); quartiles by linear interpolation
// between order statistics (h = (n-1)p).
SummaryStats summary_stats(const RateField& field);

// Linear-interpolation quantile of a sorted vector, p in [0,1].
double sorted_quantile(const std::vector<double>& sorted, double p);

}  // namespace geomort
