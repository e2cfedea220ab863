#pragma once

#include "geomort/common.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace geomort {

// Zero-padded 5-digit county identifier; the first two digits name the state.
struct RegionId {
  std::string code;

  static RegionId parse(std::string_view text);

  std::string_view state() const { return std::string_view(code).substr(0, 2); }

  auto operator<=>(const RegionId&) const = default;
};

struct AdjacencyRecord {
  RegionId a, b;
};

struct CentroidRecord {
  RegionId id;
  double lat = 0.0;
  double lon = 0.0;
};

// Immutable spatial substrate: sorted region list, symmetric queen adjacency
// as sorted index lists, centroids, and (after attach_island_neighbors)
// constructed neighborhoods for island regions. Islands are regions with an
// empty adjacency list; their constructed neighborhood substitutes for
// neighbors wherever a neighborhood mean is taken.
class RegionGraph {
 public:
  int size() const { return static_cast<int>(regions_.size()); }
  const std::vector<RegionId>& regions() const { return regions_; }

  // Index in the sorted region list, or -1 when absent.
  int index_of(const RegionId& id) const;

  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  const std::vector<int>& constructed(int i) const { return constructed_[i]; }
  bool is_island(int i) const { return neighbors_[i].empty(); }

  // Neighbors for mean-taking: the constructed set when the region is an
  // island, the adjacency list otherwise. May be empty for an island that
  // has not been given a constructed neighborhood.
  const std::vector<int>& effective_neighbors(int i) const {
    return neighbors_[i].empty() ? constructed_[i] : neighbors_[i];
  }

  double lat(int i) const { return lat_[i]; }
  double lon(int i) const { return lon_[i]; }
  std::string_view state(int i) const { return regions_[i].state(); }

  friend RegionGraph load_graph(const std::vector<AdjacencyRecord>& adjacency,
                                const std::vector<CentroidRecord>& centroids);
  friend RegionGraph attach_island_neighbors(RegionGraph graph, int k);

 private:
  std::vector<RegionId> regions_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> constructed_;
  std::vector<double> lat_, lon_;
};

// Builds the graph from edge and centroid records. The centroid list defines
// the region set; every adjacency endpoint must appear in it. Edges may be
// listed once or twice and are symmetrized; self-loops are rejected.
RegionGraph load_graph(const std::vector<AdjacencyRecord>& adjacency,
                       const std::vector<CentroidRecord>& centroids);

// Haversine great-circle distance on a sphere of radius 6371.0088 km.
double geodesic_km(double lat1, double lon1, double lat2, double lon2);

// Gives every island the k nearest non-island regions (by centroid distance,
// ties broken by ascending RegionId) as its constructed neighborhood.
RegionGraph attach_island_neighbors(RegionGraph graph, int k = 5);

}  // namespace geomort
