#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geomort/impute.hpp"
#include "geomort/region.hpp"
#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <memory>
#include <random>
#include <utility>
#include <vector>

using namespace geomort;

namespace {

RegionId id(const std::string& code) { return RegionId{code}; }

RegionId code_of(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", 1001 + i);
  return RegionId{buf};
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

RateField make_field(const RegionGraph& g, Vec values, int year = 2015) {
  RateField f;
  f.year = year;
  f.regions = std::make_shared<const RegionList>(g.regions());
  f.values = std::move(values);
  return f;
}

// Queen-adjacency lattice of rows x cols regions (plus optional islands far
// to the southwest), with codes chosen so graph order equals cell order.
RegionGraph lattice(int rows, int cols, int islands = 0, int k = 3) {
  std::vector<CentroidRecord> cents;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      cents.push_back({code_of(r * cols + c), 30.0 + r, -100.0 + c});
    }
  }
  std::vector<AdjacencyRecord> adj;
  const std::initializer_list<std::pair<int, int>> steps = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (auto [dr, dc] : steps) {
        int r2 = r + dr, c2 = c + dc;
        if (r2 < 0 || r2 >= rows || c2 < 0 || c2 >= cols) continue;
        adj.push_back({code_of(r * cols + c), code_of(r2 * cols + c2)});
      }
    }
  }
  const int n = rows * cols;
  for (int s = 0; s < islands; ++s) {
    cents.push_back({code_of(n + s), 20.0 - s, -120.0 - s});
  }
  RegionGraph g = load_graph(adj, cents);
  if (islands > 0) g = attach_island_neighbors(std::move(g), k);
  return g;
}

// Literal restatement of the pass schedule, recomputed from scratch every
// pass against an explicit snapshot. Deliberately slow and naive; the
// production code must agree with it bitwise.
Vec schedule_oracle(Vec v, const RegionGraph& g) {
  const int n = g.size();
  while (true) {
    int k_star = std::numeric_limits<int>::max();
    for (int i = 0; i < n; ++i) {
      if (!is_missing(v[i])) continue;
      int miss = 0, avail = 0;
      for (int j : g.effective_neighbors(i)) {
        if (is_missing(v[j])) ++miss;
        else ++avail;
      }
      if (avail >= 1 && miss >= 1) k_star = std::min(k_star, miss);
    }
    const bool stepped = k_star != std::numeric_limits<int>::max();
    std::vector<int> pass;
    for (int i = 0; i < n; ++i) {
      if (!is_missing(v[i])) continue;
      int miss = 0, avail = 0;
      for (int j : g.effective_neighbors(i)) {
        if (is_missing(v[j])) ++miss;
        else ++avail;
      }
      if (avail >= 1 && miss == (stepped ? k_star : 0)) pass.push_back(i);
    }
    if (pass.empty()) return v;
    Vec snapshot = v;
    for (int i : pass) {
      double sum = 0.0;
      int cnt = 0;
      for (int j : g.effective_neighbors(i)) {
        if (!is_missing(snapshot[j])) {
          sum += snapshot[j];
          ++cnt;
        }
      }
      v[i] = sum / cnt;
    }
  }
}

}  // namespace

TEST_CASE("a complete field passes through every method unchanged") {
  RegionGraph g = lattice(2, 2);
  RateField f = make_field(g, vec({1.5, 2.5, 3.5, 4.5}), 2012);

  for (const RateField& out : {neighbor_mean_impute(f, g), national_mean_impute(f),
                               state_mean_impute(f, g), idw_impute(f, g)}) {
    CHECK(out.year == 2012);
    CHECK(out.regions == f.regions);
    CHECK(out.values == f.values);
  }
}

TEST_CASE("a chain fills step by step from the data end") {
  // 01001 - 01002 - 01003 - 01004 - 01005 in a path; only the head has data.
  std::vector<AdjacencyRecord> adj;
  std::vector<CentroidRecord> cents;
  for (int i = 0; i < 5; ++i) cents.push_back({code_of(i), 30.0 + i, -100.0});
  for (int i = 0; i + 1 < 5; ++i) adj.push_back({code_of(i), code_of(i + 1)});
  RegionGraph g = load_graph(adj, cents);

  Vec v = vec({32.0, kMissing, kMissing, kMissing, kMissing});
  Vec out = neighbor_mean_impute_values(v, g);
  for (int i = 0; i < 5; ++i) CHECK(out[i] == 32.0);
}

TEST_CASE("the fewest-missing-neighbors rule orders the passes") {
  // A(6)   P(miss, sees A,Q,R)   Q(miss, sees A,P)   R(miss, sees P,Z)   Z(18)
  // Pass 1 takes Q and R (one missing neighbor each); P waits with two,
  // then fills from all three of its neighbors once they hold data.
  std::vector<AdjacencyRecord> adj = {
      {id("01001"), id("01002")},  // A-P
      {id("01001"), id("01003")},  // A-Q
      {id("01002"), id("01003")},  // P-Q
      {id("01002"), id("01004")},  // P-R
      {id("01004"), id("01005")},  // R-Z
  };
  std::vector<CentroidRecord> cents;
  for (int i = 0; i < 5; ++i) cents.push_back({code_of(i), 30.0 + i, -100.0});
  RegionGraph g = load_graph(adj, cents);

  Vec out = neighbor_mean_impute_values(vec({6.0, kMissing, kMissing, kMissing, 18.0}), g);
  CHECK(out[2] == 6.0);                       // Q <- mean(A)
  CHECK(out[3] == 18.0);                      // R <- mean(Z)
  CHECK(out[1] == (6.0 + 6.0 + 18.0) / 3.0);  // P <- mean(A, Q, R) afterwards
}

TEST_CASE("regions imputed in the same pass never read each other") {
  // Square cycle 1-2-3-4; 2 and 3 are missing and mutually adjacent, each
  // with exactly one available neighbor. Both land in the same pass, so
  // each must copy only its pass-start donor.
  std::vector<AdjacencyRecord> adj = {
      {id("01001"), id("01002")},
      {id("01002"), id("01003")},
      {id("01003"), id("01004")},
      {id("01004"), id("01001")},
  };
  std::vector<CentroidRecord> cents;
  for (int i = 0; i < 4; ++i) cents.push_back({code_of(i), 30.0 + i, -100.0});
  RegionGraph g = load_graph(adj, cents);

  Vec out = neighbor_mean_impute_values(vec({10.0, kMissing, kMissing, 30.0}), g);
  CHECK(out[1] == 10.0);
  CHECK(out[2] == 30.0);
}

TEST_CASE("island neighborhoods are directed and islands wait their turn") {
  // Mainland A(10) - B(miss) - D(20); island I's constructed set is {A, B}.
  // I steps first (one missing constructed neighbor) and reads A alone;
  // B then fills from A and D. B never sees the island.
  std::vector<AdjacencyRecord> adj = {
      {id("01001"), id("01002")},
      {id("01002"), id("01003")},
  };
  std::vector<CentroidRecord> cents = {
      {id("01001"), 30.0, -100.0},
      {id("01002"), 31.0, -100.0},
      {id("01003"), 32.0, -100.0},
      {id("02001"), 30.25, -100.0},  // island, nearest two: A then B
  };
  RegionGraph g = attach_island_neighbors(load_graph(adj, cents), 2);
  REQUIRE(g.is_island(3));
  REQUIRE(g.constructed(3) == std::vector<int>{0, 1});

  Vec out = neighbor_mean_impute_values(vec({10.0, kMissing, 20.0, kMissing}), g);
  CHECK(out[3] == 10.0);  // only A was available when the island filled
  CHECK(out[1] == 15.0);  // B averages its mainland neighbors, not the island
}

TEST_CASE("an island whose donors fill late is still reached") {
  // Island I reads {B, C}, both initially missing; B and C have fully
  // available neighborhoods, so they fill in a no-step pass and the loop
  // must come back around for I.
  std::vector<AdjacencyRecord> adj = {
      {id("01001"), id("01002")},  // A-B
      {id("01003"), id("01004")},  // C-D
  };
  std::vector<CentroidRecord> cents = {
      {id("01001"), 30.0, -100.0},
      {id("01002"), 31.0, -100.0},
      {id("01003"), 33.0, -100.0},
      {id("01004"), 34.0, -100.0},
      {id("02001"), 32.0, -100.0},  // island, nearest two: B and C
  };
  RegionGraph g = attach_island_neighbors(load_graph(adj, cents), 2);
  REQUIRE(g.constructed(4) == std::vector<int>{1, 2});

  Vec out = neighbor_mean_impute_values(vec({10.0, kMissing, kMissing, 20.0, kMissing}), g);
  CHECK(out[1] == 10.0);
  CHECK(out[2] == 20.0);
  CHECK(out[4] == 15.0);
}

TEST_CASE("random lattices agree with the naive schedule bitwise") {
  std::mt19937 rng(8245);
  std::uniform_real_distribution<double> value(1.0, 100.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<std::pair<int, int>> shapes = {{5, 5}, {4, 6}, {3, 7}, {2, 5}};
  const std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8};

  for (int rep = 0; rep < 48; ++rep) {
    auto [rows, cols] = shapes[rep % shapes.size()];
    const int islands = rep % 3;  // 0, 1, or 2 islands
    RegionGraph g = lattice(rows, cols, islands);
    const int n = g.size();
    const int mainland = rows * cols;

    Vec v(n);
    for (int i = 0; i < n; ++i) {
      v[i] = unit(rng) < fractions[rep % fractions.size()] ? kMissing : value(rng);
    }
    // Mainland data must exist somewhere (islands cannot donate back).
    bool any_mainland = false;
    for (int i = 0; i < mainland; ++i) any_mainland |= !is_missing(v[i]);
    if (!any_mainland) v[0] = value(rng);

    Vec got = neighbor_mean_impute_values(v, g);
    Vec want = schedule_oracle(v, g);
    for (int i = 0; i < n; ++i) {
      CAPTURE(rep);
      CAPTURE(i);
      REQUIRE(!is_missing(got[i]));
      REQUIRE(got[i] == want[i]);
    }
  }
}

TEST_CASE("failure modes are told apart") {
  SUBCASE("a disconnected component with no data is unreachable") {
    std::vector<AdjacencyRecord> adj = {
        {id("01001"), id("01002")},
        {id("01003"), id("01004")},
    };
    std::vector<CentroidRecord> cents;
    for (int i = 0; i < 4; ++i) cents.push_back({code_of(i), 30.0 + i, -100.0});
    RegionGraph g = load_graph(adj, cents);
    Vec v = vec({1.0, 2.0, kMissing, kMissing});
    CHECK_ERRC(neighbor_mean_impute_values(v, g), Errc::unreachable_region);
  }

  SUBCASE("an unattached island outranks an unreachable component") {
    std::vector<AdjacencyRecord> adj = {
        {id("01001"), id("01002")},
        {id("01003"), id("01004")},
    };
    std::vector<CentroidRecord> cents;
    for (int i = 0; i < 4; ++i) cents.push_back({code_of(i), 30.0 + i, -100.0});
    cents.push_back({id("02001"), 20.0, -120.0});
    RegionGraph g = load_graph(adj, cents);

    Vec v = vec({1.0, 2.0, kMissing, kMissing, kMissing});
    CHECK_ERRC(neighbor_mean_impute_values(v, g), Errc::empty_neighborhood);

    // Wiring the island flips the failure to the unreachable pair.
    g = attach_island_neighbors(std::move(g), 2);
    CHECK_ERRC(neighbor_mean_impute_values(v, g), Errc::unreachable_region);
  }

  SUBCASE("an entirely missing field cannot start anywhere") {
    RegionGraph g = lattice(2, 2);
    Vec v = vec({kMissing, kMissing, kMissing, kMissing});
    CHECK_ERRC(neighbor_mean_impute_values(v, g), Errc::unreachable_region);
    CHECK_ERRC(national_mean_impute(make_field(g, v)), Errc::no_data_available);
    CHECK_ERRC(state_mean_impute(make_field(g, v), g), Errc::no_data_available);
    CHECK_ERRC(idw_impute(make_field(g, v), g), Errc::no_data_available);
  }

  SUBCASE("misaligned fields are rejected") {
    RegionGraph g = lattice(2, 2);
    CHECK_ERRC(neighbor_mean_impute_values(vec({1.0, 2.0}), g), Errc::region_mismatch);

    RateField f = make_field(g, vec({1.0, 2.0, 3.0, kMissing}));
    f.regions = nullptr;
    CHECK_ERRC(neighbor_mean_impute(f, g), Errc::region_mismatch);

    RateField other = make_field(lattice(2, 3), vec({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
    CHECK_ERRC(neighbor_mean_impute(other, g), Errc::region_mismatch);
    CHECK_ERRC(state_mean_impute(other, g), Errc::region_mismatch);
    CHECK_ERRC(idw_impute(other, g), Errc::region_mismatch);
  }
}

TEST_CASE("national mean fills every gap with one number") {
  RegionGraph g = lattice(2, 2);
  RateField out = national_mean_impute(make_field(g, vec({2.0, kMissing, 4.0, kMissing})));
  CHECK(out.values[0] == 2.0);
  CHECK(out.values[1] == 3.0);
  CHECK(out.values[2] == 4.0);
  CHECK(out.values[3] == 3.0);
}

TEST_CASE("state means fall back to the national mean for empty states") {
  std::vector<CentroidRecord> cents = {
      {id("01001"), 30.0, -100.0}, {id("01002"), 31.0, -100.0}, {id("01003"), 32.0, -100.0},
      {id("02001"), 33.0, -100.0}, {id("02002"), 34.0, -100.0}, {id("03001"), 35.0, -100.0},
  };
  RegionGraph g = load_graph({}, cents);
  RateField f = make_field(g, vec({2.0, 4.0, kMissing, kMissing, 10.0, kMissing}));
  RateField out = state_mean_impute(f, g);
  CHECK(out.values[2] == 3.0);                      // state 01 mean
  CHECK(out.values[3] == 10.0);                     // state 02 mean
  CHECK(out.values[5] == (2.0 + 4.0 + 10.0) / 3.0); // state 03 empty -> national
}

TEST_CASE("inverse-distance weighting") {
  // Donors along one meridian make every pairwise distance a pure arc.
  auto meridian_graph = [](std::vector<std::pair<std::string, double>> placed) {
    std::vector<CentroidRecord> cents;
    for (auto& [code, lat] : placed) cents.push_back({id(code), lat, -100.0});
    return load_graph({}, cents);
  };

  // Mirrors the production weighting over an explicit donor index list, in
  // the same ascending-index order, so success cases must match bitwise.
  auto weighted = [](const RateField& f, const RegionGraph& g, int target, double power,
                     const std::vector<int>& donors) {
    double wsum = 0.0, vsum = 0.0;
    for (int j : donors) {
      double d = geodesic_km(g.lat(target), g.lon(target), g.lat(j), g.lon(j));
      double w = 1.0 / std::pow(d, power);
      wsum += w;
      vsum += w * f.values[j];
    }
    return vsum / wsum;
  };

  SUBCASE("equidistant donors average") {
    RegionGraph g = meridian_graph({{"01001", 29.0}, {"01002", 30.0}, {"01003", 31.0}});
    RateField f = make_field(g, vec({10.0, kMissing, 40.0}));
    RateField out = idw_impute(f, g);
    CHECK(out.values[1] == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(out.values[1] == weighted(f, g, 1, 1.0, {0, 2}));
  }

  SUBCASE("closer donors dominate, more so at higher power") {
    RegionGraph g = meridian_graph({{"01001", 29.5}, {"01002", 30.0}, {"01003", 32.0}});
    RateField f = make_field(g, vec({10.0, kMissing, 40.0}));
    double p1 = idw_impute(f, g, {.power = 1.0}).values[1];
    double p3 = idw_impute(f, g, {.power = 3.0}).values[1];
    CHECK(p1 == weighted(f, g, 1, 1.0, {0, 2}));
    CHECK(p3 == weighted(f, g, 1, 3.0, {0, 2}));
    CHECK(p3 < p1);      // power 3 leans harder on the nearby donor
    CHECK(10.0 < p3);    // but stays inside the donor range
    CHECK(p1 < 40.0);
  }

  SUBCASE("coincident donors preempt the weighting") {
    std::vector<CentroidRecord> cents = {
        {id("01001"), 30.0, -100.0},  // coincident with target
        {id("01002"), 30.0, -100.0},  // coincident with target
        {id("01003"), 45.0, -100.0},
        {id("01004"), 30.0, -100.0},  // target
    };
    RegionGraph g = load_graph({}, cents);
    RateField f = make_field(g, vec({7.0, 9.0, 1000.0, kMissing}));
    CHECK(idw_impute(f, g).values[3] == 8.0);
  }

  SUBCASE("max_donors keeps only the nearest") {
    RegionGraph g = meridian_graph(
        {{"01001", 29.0}, {"01002", 31.5}, {"01003", 35.0}, {"01004", 30.0}});
    RateField f = make_field(g, vec({10.0, 20.0, 999.0, kMissing}));
    RateField out = idw_impute(f, g, {.power = 1.0, .max_donors = 2});
    CHECK(out.values[3] == weighted(f, g, 3, 1.0, {0, 1}));
    // All donors admitted when the cap is at least the donor count.
    RateField all = idw_impute(f, g, {.power = 1.0, .max_donors = 3});
    CHECK(all.values[3] == weighted(f, g, 3, 1.0, {0, 1, 2}));
  }

  SUBCASE("distance ties at the cap resolve by ascending region id") {
    RegionGraph g = meridian_graph(
        {{"01001", 29.0}, {"02001", 31.0}, {"03001", 32.0}, {"09001", 30.0}});
    RateField f = make_field(g, vec({5.0, 77.0, 1000.0, kMissing}));
    RateField out = idw_impute(f, g, {.power = 1.0, .max_donors = 1});
    CHECK(out.values[3] == weighted(f, g, 3, 1.0, {0}));  // 01001 beats 02001
  }

  SUBCASE("power must be positive") {
    RegionGraph g = meridian_graph({{"01001", 29.0}, {"01002", 30.0}});
    RateField f = make_field(g, vec({10.0, kMissing}));
    CHECK_ERRC(idw_impute(f, g, {.power = 0.0}), Errc::bad_config);
    CHECK_ERRC(idw_impute(f, g, {.power = -1.0}), Errc::bad_config);
  }
}
