#include "geomort/temporal.hpp"

#include "geomort/impute.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>

namespace geomort {

FeaturePanel linear_gap_fill(const FeaturePanel& panel,
                             const std::vector<int>& observed_years) {
  if (observed_years.empty()) fail(Errc::bad_config, "no observed years declared");
  std::set<int> observed(observed_years.begin(), observed_years.end());
  FeaturePanel out = panel;
  const int n = panel.regions ? static_cast<int>(panel.regions->size()) : 0;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kFeatureCount; ++j) {
      std::vector<int> anchors;
      for (int y = panel.first_year; y <= panel.last_year(); ++y) {
        if (observed.count(y) && !is_missing(panel.at_year(y)(i, j))) anchors.push_back(y);
      }
      for (int y = panel.first_year; y <= panel.last_year(); ++y) {
        if (!is_missing(panel.at_year(y)(i, j))) continue;
        if (anchors.empty() || y < anchors.front() || y > anchors.back()) {
          fail(Errc::unbracketed_gap,
               "region " + (*panel.regions)[i].code + " feature " +
                   canonical_features()[j] + " year " + std::to_string(y) +
                   " has no bracketing observations");
        }
        auto hi = std::lower_bound(anchors.begin(), anchors.end(), y);
        int b = *hi;
        int a = *(hi - 1);
        double va = panel.at_year(a)(i, j);
        double vb = panel.at_year(b)(i, j);
        double v = va + (y - a) * (vb - va) / (b - a);
        out.at_year(y)(i, j) = std::clamp(v, 0.0, 100.0);
      }
    }
  }
  return out;
}

FeaturePanel impute_feature_gaps(const FeaturePanel& panel, const RegionGraph& graph) {
  if (!panel.regions || *panel.regions != graph.regions()) {
    fail(Errc::region_mismatch, "feature panel regions do not match graph regions");
  }
  FeaturePanel out = panel;
  for (int y = panel.first_year; y <= panel.last_year(); ++y) {
    Mat& m = out.at_year(y);
    for (int j = 0; j < kFeatureCount; ++j) {
      Vec col = m.col(j);
      if (!col.hasNaN()) continue;
      // A slice with no observations at all has no donors; it belongs to
      // the temporal filler, not the spatial one.
      if (col.array().isNaN().all()) continue;
      m.col(j) = neighbor_mean_impute_values(col, graph);
    }
  }
  return out;
}

RateField apply_crosswalk(const RateField& field, const Crosswalk& crosswalk) {
  if (crosswalk.entries.empty()) fail(Errc::bad_config, "crosswalk has no entries");
  if (!field.regions) fail(Errc::region_mismatch, "rate field has no aligned region list");

  // Group contributions per target in (target, source) order so sums are
  // deterministic regardless of file row order.
  std::vector<CrosswalkEntry> entries = crosswalk.entries;
  std::sort(entries.begin(), entries.end(), [](const CrosswalkEntry& x, const CrosswalkEntry& y) {
    return std::tie(x.target, x.source) < std::tie(y.target, y.source);
  });

  const RegionList& sources = *field.regions;
  auto source_value = [&](const RegionId& id) {
    auto it = std::lower_bound(sources.begin(), sources.end(), id);
    if (it == sources.end() || !(*it == id)) {
      fail(Errc::missing_source, "crosswalk source " + id.code + " absent from rate field");
    }
    double v = field.values[it - sources.begin()];
    if (is_missing(v)) {
      fail(Errc::missing_source, "crosswalk source " + id.code + " has no rate");
    }
    return v;
  };

  auto targets = std::make_shared<RegionList>();
  std::vector<double> vals;
  std::size_t i = 0;
  while (i < entries.size()) {
    const RegionId& target = entries[i].target;
    double wsum = 0.0, vsum = 0.0;
    while (i < entries.size() && entries[i].target == target) {
      if (entries[i].weight < 0.0) {
        fail(Errc::malformed_record, "negative crosswalk weight for target " + target.code);
      }
      wsum += entries[i].weight;
      vsum += entries[i].weight * source_value(entries[i].source);
      ++i;
    }
    if (wsum <= 0.0) {
      fail(Errc::zero_weight_target, "crosswalk target " + target.code + " has zero total weight");
    }
    targets->push_back(target);
    vals.push_back(vsum / wsum);
  }

  RateField out;
  out.year = field.year;
  out.regions = targets;
  out.values = Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return out;
}

}  // namespace geomort
