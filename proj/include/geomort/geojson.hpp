#pragma once

#include "geomort/benchmark.hpp"
#include "geomort/panel.hpp"

#include <map>
#include <string>

namespace geomort {

// Percentile of each entry within the vector, for map coloring: percent of
// values strictly below plus half of the remaining ties, scaled so the
// minimum lands on 0 and the maximum on 100. A single value is 100.
Vec empirical_percentiles(const Vec& values);

// Optional layers to merge into the GeoJSON properties.
struct MapOverlay {
  const RateField* field = nullptr;  // adds `rate` and `percentile`
  const std::map<std::string, std::string>* anomaly = nullptr;  // fips -> label, adds `anomaly`
};

// Parses a FeatureCollection, matches every feature's `properties.fips`
// against the overlay, and injects the requested properties. Geometry is
// left untouched. Features whose fips has no overlay value raise
// FipsMismatch naming all of them.
std::string inject_geojson(const std::string& base_text, const MapOverlay& overlay);

}  // namespace geomort
