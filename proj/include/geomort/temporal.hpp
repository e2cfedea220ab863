#pragma once

#include "geomort/panel.hpp"
#include "geomort/region.hpp"

#include <vector>

namespace geomort {

// Fills missing years per (region, feature) by linear interpolation between
// that series' anchors: the observed years where a value is actually
// present. A value missing at an observed year (an unusable release) simply
// stops being an anchor and is interpolated across, like any other gap.
// Missing years outside the anchor span raise UnbracketedGap. Filled values
// are clamped to [0,100]; anchor values pass through unchanged.
FeaturePanel linear_gap_fill(const FeaturePanel& panel,
                             const std::vector<int>& observed_years);

// Queen-neighbor mean imputation applied independently to every
// (year, feature) slice that has both missing and present regions.
// Slices with no observations at all are left untouched — without donors
// there is nothing spatial to do; linear_gap_fill owns those years.
FeaturePanel impute_feature_gaps(const FeaturePanel& panel, const RegionGraph& graph);

struct CrosswalkEntry {
  RegionId source;
  RegionId target;
  double weight = 0.0;  // intersection area measure, >= 0
};

struct Crosswalk {
  std::vector<CrosswalkEntry> entries;
};

// Re-expresses a rate field onto the crosswalk's target regions as the
// weight-normalized mean of contributing sources (intensive-variable areal
// interpolation).
RateField apply_crosswalk(const RateField& field, const Crosswalk& crosswalk);

}  // namespace geomort
