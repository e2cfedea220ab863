#include "geomort/geojson.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace geomort {

Vec empirical_percentiles(const Vec& values) {
  const int n = static_cast<int>(values.size());
  if (n == 0) fail(Errc::empty_field, "no values to rank");
  for (int i = 0; i < n; ++i) {
    if (is_missing(values[i])) fail(Errc::incomplete_input, "cannot rank a missing value");
  }
  Vec out(n);
  if (n == 1) {
    out[0] = 100.0;
    return out;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values[a] < values[b]; });
  // Tie groups share the midpoint of their sorted positions.
  int a = 0;
  while (a < n) {
    int b = a;
    while (b + 1 < n && values[order[b + 1]] == values[order[a]]) ++b;
    double pct = 100.0 * (0.5 * (a + b)) / (n - 1);
    for (int k = a; k <= b; ++k) out[order[k]] = pct;
    a = b + 1;
  }
  return out;
}

std::string inject_geojson(const std::string& base_text, const MapOverlay& overlay) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  try {
    doc = ojson::parse(base_text);
  } catch (const std::exception& e) {
    fail(Errc::malformed_record, std::string("bad GeoJSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    fail(Errc::malformed_record, "GeoJSON must be a FeatureCollection with a features array");
  }

  Vec pct;
  if (overlay.field) {
    if (!overlay.field->complete()) {
      fail(Errc::incomplete_input, "rate layer has missing values; impute first");
    }
    pct = empirical_percentiles(overlay.field->values);
  }

  std::vector<std::string> unmatched;
  for (auto& feature : doc["features"]) {
    if (!feature.contains("properties") || !feature["properties"].is_object() ||
        !feature["properties"].contains("fips")) {
      fail(Errc::malformed_record, "GeoJSON feature without a fips property");
    }
    std::string fips = feature["properties"]["fips"].get<std::string>();
    bool matched = false;
    if (overlay.field) {
      const RegionList& regions = *overlay.field->regions;
      auto it = std::lower_bound(regions.begin(), regions.end(), RegionId{fips});
      if (it != regions.end() && it->code == fips) {
        int i = static_cast<int>(it - regions.begin());
        feature["properties"]["rate"] = overlay.field->values[i];
        feature["properties"]["percentile"] = pct[i];
        matched = true;
      }
    }
    if (overlay.anomaly) {
      auto it = overlay.anomaly->find(fips);
      if (it != overlay.anomaly->end()) {
        feature["properties"]["anomaly"] = it->second;
        matched = true;
      }
    }
    if (!matched) unmatched.push_back(fips);
  }
  if (!unmatched.empty()) {
    std::string msg = "GeoJSON regions absent from the data:";
    for (const std::string& f : unmatched) msg += " " + f;
    fail(Errc::fips_mismatch, msg);
  }
  return doc.dump() + "\n";
}

}  // namespace geomort
