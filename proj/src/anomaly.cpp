#include "geomort/anomaly.hpp"

#include <algorithm>
#include <numeric>

namespace geomort {

AnomalyLabeling label_anomalies(const RateField& field, const FittedDistribution& dist,
                                double tail) {
  if (!(tail > 0.0 && tail < 0.5)) fail(Errc::bad_config, "tail must lie in (0, 0.5)");
  if (!field.complete()) fail(Errc::incomplete_input, "labeling requires a complete field");
  AnomalyLabeling lab;
  lab.year = field.year;
  lab.tail = tail;
  lab.q_low = dist_quantile(dist, tail);
  lab.q_high = dist_quantile(dist, 1.0 - tail);
  for (int i = 0; i < field.size(); ++i) {
    double v = field.values[i];
    const RegionId& id = (*field.regions)[i];
    if (v == 0.0) lab.zero.push_back(id);
    else if (v > lab.q_high) lab.hot.push_back(id);
    else if (v < lab.q_low) lab.cold.push_back(id);
  }
  return lab;
}

std::vector<AnomalyLabeling> tail_sweep(const RateField& field, const FittedDistribution& dist,
                                        const std::vector<double>& tails) {
  std::vector<AnomalyLabeling> out;
  out.reserve(tails.size());
  for (double t : tails) out.push_back(label_anomalies(field, dist, t));
  return out;
}

std::string anomaly_kind_name(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::hot: return "hot";
    case AnomalyKind::cold: return "cold";
    case AnomalyKind::zero: return "zero";
  }
  return "?";
}

RankingReport rank_features(const std::vector<AnomalyLabeling>& labelings,
                            const FeaturePanel& panel, AnomalyKind kind) {
  if (labelings.empty()) fail(Errc::bad_config, "no labelings to rank over");
  RankingReport report;
  report.kind = kind;

  std::vector<Vec> year_rows;
  for (const AnomalyLabeling& lab : labelings) {
    const std::vector<RegionId>* set = nullptr;
    switch (kind) {
      case AnomalyKind::hot: set = &lab.hot; break;
      case AnomalyKind::cold: set = &lab.cold; break;
      case AnomalyKind::zero: set = &lab.zero; break;
    }
    if (set->empty()) {
      report.skipped_years.push_back(lab.year);
      continue;
    }
    const Mat& x = panel.at_year(lab.year);
    Vec sums = Vec::Zero(kFeatureCount);
    for (const RegionId& id : *set) {
      auto it = std::lower_bound(panel.regions->begin(), panel.regions->end(), id);
      if (it == panel.regions->end() || !(*it == id)) {
        fail(Errc::region_mismatch, "labeled region " + id.code + " absent from feature panel");
      }
      int i = static_cast<int>(it - panel.regions->begin());
      for (int j = 0; j < kFeatureCount; ++j) {
        if (is_missing(x(i, j))) {
          fail(Errc::incomplete_input,
               "feature panel missing value for " + id.code + " in year " +
                   std::to_string(lab.year));
        }
        sums[j] += x(i, j);
      }
    }
    report.years.push_back(lab.year);
    year_rows.push_back(sums / static_cast<double>(set->size()));
  }

  if (year_rows.empty()) {
    fail(Errc::empty_anomaly_set,
         "no year has any " + anomaly_kind_name(kind) + " region to rank over");
  }

  report.yearly_means = Mat(static_cast<Eigen::Index>(year_rows.size()), kFeatureCount);
  for (std::size_t r = 0; r < year_rows.size(); ++r) report.yearly_means.row(r) = year_rows[r];
  report.average = Vec::Zero(kFeatureCount);
  for (int j = 0; j < kFeatureCount; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < year_rows.size(); ++r) s += report.yearly_means(r, j);
    report.average[j] = s / static_cast<double>(year_rows.size());
  }

  report.order.resize(kFeatureCount);
  std::iota(report.order.begin(), report.order.end(), 0);
  const bool descending = kind == AnomalyKind::hot;
  std::sort(report.order.begin(), report.order.end(), [&](int a, int b) {
    if (report.average[a] != report.average[b]) {
      return descending ? report.average[a] > report.average[b]
                        : report.average[a] < report.average[b];
    }
    return a < b;
  });
  return report;
}

}  // namespace geomort
