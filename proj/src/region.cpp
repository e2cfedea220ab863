#include "geomort/region.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

namespace geomort {

RegionId RegionId::parse(std::string_view text) {
  if (text.size() != 5 ||
      !std::all_of(text.begin(), text.end(),
                   [](unsigned char c) { return std::isdigit(c); })) {
    fail(Errc::malformed_record,
         "region id must be exactly 5 digits, got '" + std::string(text) + "'");
  }
  return RegionId{std::string(text)};
}

int RegionGraph::index_of(const RegionId& id) const {
  auto it = std::lower_bound(regions_.begin(), regions_.end(), id);
  if (it == regions_.end() || !(*it == id)) return -1;
  return static_cast<int>(it - regions_.begin());
}

RegionGraph load_graph(const std::vector<AdjacencyRecord>& adjacency,
                       const std::vector<CentroidRecord>& centroids) {
  RegionGraph g;
  std::vector<CentroidRecord> sorted = centroids;
  std::sort(sorted.begin(), sorted.end(),
            [](const CentroidRecord& x, const CentroidRecord& y) { return x.id < y.id; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i].id == sorted[i + 1].id) {
      fail(Errc::malformed_record, "duplicate centroid record for region " + sorted[i].id.code);
    }
  }
  for (const CentroidRecord& c : sorted) {
    if (!(c.lat >= -90.0 && c.lat <= 90.0) || !(c.lon >= -180.0 && c.lon <= 180.0)) {
      fail(Errc::malformed_record,
           "centroid for region " + c.id.code + " outside valid coordinate range");
    }
    g.regions_.push_back(c.id);
    g.lat_.push_back(c.lat);
    g.lon_.push_back(c.lon);
  }
  g.neighbors_.assign(g.regions_.size(), {});
  g.constructed_.assign(g.regions_.size(), {});

  std::vector<std::set<int>> nbr(g.regions_.size());
  for (const AdjacencyRecord& e : adjacency) {
    if (e.a == e.b) {
      fail(Errc::malformed_record, "self-loop adjacency for region " + e.a.code);
    }
    int ia = g.index_of(e.a);
    int ib = g.index_of(e.b);
    if (ia < 0) fail(Errc::missing_centroid, "adjacency references region " + e.a.code + " with no centroid");
    if (ib < 0) fail(Errc::missing_centroid, "adjacency references region " + e.b.code + " with no centroid");
    nbr[ia].insert(ib);
    nbr[ib].insert(ia);
  }
  for (std::size_t i = 0; i < nbr.size(); ++i) {
    g.neighbors_[i].assign(nbr[i].begin(), nbr[i].end());
  }
  return g;
}

double geodesic_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  double phi1 = lat1 * kDegToRad;
  double phi2 = lat2 * kDegToRad;
  double dphi = (lat2 - lat1) * kDegToRad;
  double dlam = (lon2 - lon1) * kDegToRad;
  double s1 = std::sin(dphi / 2.0);
  double s2 = std::sin(dlam / 2.0);
  double a = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  a = std::clamp(a, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(a));
}

RegionGraph attach_island_neighbors(RegionGraph graph, int k) {
  if (k < 1) fail(Errc::bad_config, "island neighborhood size must be >= 1");
  std::vector<int> mainland;
  for (int i = 0; i < graph.size(); ++i) {
    if (!graph.is_island(i)) mainland.push_back(i);
  }
  for (int i = 0; i < graph.size(); ++i) {
    if (!graph.is_island(i)) continue;
    if (static_cast<int>(mainland.size()) < k) {
      fail(Errc::insufficient_mainland,
           "island " + graph.regions()[i].code + " needs " + std::to_string(k) +
               " mainland regions, only " + std::to_string(mainland.size()) + " exist");
    }
    // Rank mainland regions by distance; ties by ascending RegionId, which
    // is ascending index since the region list is sorted.
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(mainland.size());
    for (int m : mainland) {
      ranked.emplace_back(
          geodesic_km(graph.lat(i), graph.lon(i), graph.lat(m), graph.lon(m)), m);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> chosen;
    chosen.reserve(k);
    for (int j = 0; j < k; ++j) chosen.push_back(ranked[j].second);
    std::sort(chosen.begin(), chosen.end());
    graph.constructed_[i] = std::move(chosen);
  }
  return graph;
}

}  // namespace geomort
