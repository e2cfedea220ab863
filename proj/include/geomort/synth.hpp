#pragma once

#include "geomort/benchmark.hpp"
#include "geomort/panel.hpp"
#include "geomort/region.hpp"
#include "geomort/temporal.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace geomort {

// Deterministic lattice fixture: a queen-connected grid of counties plus a
// few offshore islands, smooth integer covariates with a handful of release
// years, right-skewed rates driven by three of the covariates, a censored
// copy of the rate panel, a small merge crosswalk, and square-polygon
// GeoJSON. Everything is a pure function of the SynthSpec.
struct SynthSpec {
  int regions = 3144;
  int cols = 56;
  int islands = 3;
  int first_year = 2010;
  int years = 13;
  std::uint64_t seed = 20240101;
  double zero_fraction = 0.01;      // exact share of zero rates per year
  double censor_fraction = 0.5;     // per-year masking of the censored panel
  double feature_missing = 0.02;    // region-row gaps in observed covariate years
};

struct SynthData {
  std::vector<AdjacencyRecord> adjacency;
  std::vector<CentroidRecord> centroids;
  RegionGraph graph;                // islands not yet wired to the mainland
  RatePanel truth;                  // complete
  RatePanel censored;               // truth with per-year masks applied
  std::vector<CensorMask> masks;    // one per year, seed*1000 + year offset
  FeaturePanel covariates_full;     // complete, every year (rate generator input)
  FeaturePanel covariates;          // release years only, with row gaps
  std::vector<int> observed_years;
  Crosswalk crosswalk;              // merges the first regions, identity elsewhere
  std::string geojson;
};

SynthData make_synthetic(const SynthSpec& spec);

}  // namespace geomort
