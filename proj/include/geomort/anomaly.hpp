#pragma once

#include "geomort/dist.hpp"
#include "geomort/panel.hpp"

#include <vector>

namespace geomort {

struct AnomalyLabeling {
  int year = 0;
  double tail = 0.0;
  double q_low = 0.0;
  double q_high = 0.0;
  std::vector<RegionId> hot;   // rate > q_high
  std::vector<RegionId> cold;  // 0 < rate < q_low
  std::vector<RegionId> zero;  // rate == 0
};

// Labels a complete field against the fitted distribution's tail quantiles.
// Comparisons are strict at both thresholds; a rate exactly at a quantile
// stays unlabeled. Zeros go to their own set, never cold.
AnomalyLabeling label_anomalies(const RateField& field, const FittedDistribution& dist,
                                double tail);

// One labeling per tail size (defaults 1%, 2%, 3%).
std::vector<AnomalyLabeling> tail_sweep(const RateField& field, const FittedDistribution& dist,
                                        const std::vector<double>& tails = {0.01, 0.02, 0.03});

enum class AnomalyKind { hot, cold, zero };
std::string anomaly_kind_name(AnomalyKind k);

struct RankingReport {
  AnomalyKind kind = AnomalyKind::hot;
  std::vector<int> years;          // years that contributed
  std::vector<int> skipped_years;  // years with an empty set, skipped
  Mat yearly_means;                // years x 13 feature means within the set
  Vec average;                     // cross-year average per feature
  std::vector<int> order;          // feature indices, hot descending / cold & zero ascending
};

// Mean feature percentile within each year's anomaly set, averaged across
// years and ranked. Years whose set is empty are skipped (reported in
// skipped_years); the call fails only when every year is empty.
RankingReport rank_features(const std::vector<AnomalyLabeling>& labelings,
                            const FeaturePanel& panel, AnomalyKind kind);

}  // namespace geomort
