#pragma once

#include "geomort/panel.hpp"
#include "geomort/region.hpp"

namespace geomort {

// Step-wise queen-neighbor mean imputation over a value vector aligned to
// the graph's region order. Passes impute the missing regions with the
// fewest missing (effective) neighbors among those that have at least one
// available neighbor; newly imputed values become available for subsequent
// passes only. Missing regions whose whole neighborhood is available are
// filled once no such pass remains. Islands use constructed neighborhoods.
Vec neighbor_mean_impute_values(const Vec& values, const RegionGraph& graph);

RateField neighbor_mean_impute(const RateField& field, const RegionGraph& graph);

// Every MISSING entry becomes the mean of all available rates.
RateField national_mean_impute(const RateField& field);

// Every MISSING entry becomes its state's available mean, falling back to
// the national mean for states with no available rates.
RateField state_mean_impute(const RateField& field, const RegionGraph& graph);

struct IdwOptions {
  double power = 1.0;
  // 0 means all available regions donate; otherwise only the max_donors
  // nearest (ties by ascending RegionId).
  int max_donors = 0;
};

// Inverse-distance weighting over available donor regions. A donor whose
// centroid coincides with the target's preempts the weighting: the target
// takes the mean of coincident donors.
RateField idw_impute(const RateField& field, const RegionGraph& graph,
                     const IdwOptions& options = {});

}  // namespace geomort
