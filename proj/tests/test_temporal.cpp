#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geomort/impute.hpp"
#include "geomort/temporal.hpp"
#include "helpers.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <random>
#include <vector>

using namespace geomort;

namespace {

RegionId code_of(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", 1001 + i);
  return RegionId{buf};
}

RegionGraph path_graph(int n) {
  std::vector<CentroidRecord> cents;
  std::vector<AdjacencyRecord> adj;
  for (int i = 0; i < n; ++i) cents.push_back({code_of(i), 30.0 + 0.5 * i, -100.0});
  for (int i = 0; i + 1 < n; ++i) adj.push_back({code_of(i), code_of(i + 1)});
  return load_graph(adj, cents);
}

FeaturePanel make_panel(const RegionGraph& g, int first_year, int years, double fill = 50.0) {
  FeaturePanel p;
  p.regions = std::make_shared<const RegionList>(g.regions());
  p.first_year = first_year;
  for (int t = 0; t < years; ++t) {
    p.values.push_back(Mat::Constant(g.size(), kFeatureCount, fill));
  }
  return p;
}

RateField make_field(std::vector<std::pair<std::string, double>> rows, int year = 2015) {
  std::sort(rows.begin(), rows.end());
  RateField f;
  f.year = year;
  auto regions = std::make_shared<RegionList>();
  f.values = Vec(static_cast<int>(rows.size()));
  int i = 0;
  for (auto& [code, v] : rows) {
    regions->push_back(RegionId{code});
    f.values[i++] = v;
  }
  f.regions = regions;
  return f;
}

}  // namespace

TEST_CASE("linear fill walks evenly between anchors") {
  RegionGraph g = path_graph(2);

  SUBCASE("four-year gap in quarter steps") {
    FeaturePanel p = make_panel(g, 2010, 5);
    p.at_year(2010)(0, 2) = 0.0;
    for (int y = 2011; y <= 2013; ++y) p.at_year(y)(0, 2) = kMissing;
    p.at_year(2014)(0, 2) = 4.0;
    FeaturePanel out = linear_gap_fill(p, {2010, 2014});
    CHECK(out.at_year(2010)(0, 2) == 0.0);
    CHECK(out.at_year(2011)(0, 2) == 1.0);
    CHECK(out.at_year(2012)(0, 2) == 2.0);
    CHECK(out.at_year(2013)(0, 2) == 3.0);
    CHECK(out.at_year(2014)(0, 2) == 4.0);
  }

  SUBCASE("two-year gap in one half step") {
    FeaturePanel p = make_panel(g, 2014, 3);
    p.at_year(2014)(1, 0) = 10.0;
    p.at_year(2015)(1, 0) = kMissing;
    p.at_year(2016)(1, 0) = 14.0;
    FeaturePanel out = linear_gap_fill(p, {2014, 2016});
    CHECK(out.at_year(2015)(1, 0) == 12.0);
  }

  SUBCASE("an unusable release stops being an anchor") {
    // 2018 is an observed year but this series is missing there, so the
    // fill spans 2016..2020 in one straight line.
    FeaturePanel p = make_panel(g, 2016, 5);
    p.at_year(2016)(0, 5) = 8.0;
    for (int y = 2017; y <= 2019; ++y) p.at_year(y)(0, 5) = kMissing;
    p.at_year(2020)(0, 5) = 16.0;
    FeaturePanel out = linear_gap_fill(p, {2016, 2018, 2020});
    CHECK(out.at_year(2017)(0, 5) == 10.0);
    CHECK(out.at_year(2018)(0, 5) == 12.0);
    CHECK(out.at_year(2019)(0, 5) == 14.0);
  }

  SUBCASE("present values off the anchor grid pass through") {
    FeaturePanel p = make_panel(g, 2010, 3);
    p.at_year(2011)(0, 1) = 77.25;  // not an observed year, still kept
    FeaturePanel out = linear_gap_fill(p, {2010, 2012});
    CHECK(out.at_year(2011)(0, 1) == 77.25);
  }
}

TEST_CASE("gaps outside the anchor span are refused") {
  RegionGraph g = path_graph(2);

  SUBCASE("missing before the first anchor") {
    FeaturePanel p = make_panel(g, 2010, 3);
    p.at_year(2010)(0, 0) = kMissing;
    CHECK_ERRC(linear_gap_fill(p, {2011, 2012}), Errc::unbracketed_gap);
  }

  SUBCASE("missing after the last anchor") {
    FeaturePanel p = make_panel(g, 2010, 3);
    p.at_year(2012)(1, 4) = kMissing;
    CHECK_ERRC(linear_gap_fill(p, {2010, 2011}), Errc::unbracketed_gap);
  }

  SUBCASE("a series with no anchors at all") {
    FeaturePanel p = make_panel(g, 2010, 2);
    p.at_year(2010)(0, 3) = kMissing;
    p.at_year(2011)(0, 3) = kMissing;
    CHECK_ERRC(linear_gap_fill(p, {2010, 2011}), Errc::unbracketed_gap);
  }

  SUBCASE("no observed years declared") {
    FeaturePanel p = make_panel(g, 2010, 2);
    CHECK_ERRC(linear_gap_fill(p, {}), Errc::bad_config);
  }
}

TEST_CASE("spatial feature fill matches the single-slice imputer") {
  RegionGraph g = path_graph(5);
  FeaturePanel p = make_panel(g, 2012, 2);
  // Year 2013, feature 7: a partial gap the spatial pass owns.
  Vec col(5);
  col << 10.0, kMissing, kMissing, 40.0, 50.0;
  for (int i = 0; i < 5; ++i) p.at_year(2013)(i, 7) = col[i];
  // Year 2012, feature 3: nobody reported; the temporal pass owns it.
  for (int i = 0; i < 5; ++i) p.at_year(2012)(i, 3) = kMissing;

  FeaturePanel out = impute_feature_gaps(p, g);

  Vec want = neighbor_mean_impute_values(col, g);
  for (int i = 0; i < 5; ++i) CHECK(out.at_year(2013)(i, 7) == want[i]);
  for (int i = 0; i < 5; ++i) CHECK(is_missing(out.at_year(2012)(i, 3)));
  // Untouched slices come back bitwise identical.
  CHECK(out.at_year(2012).col(0) == p.at_year(2012).col(0));
  CHECK(out.at_year(2013).col(8) == p.at_year(2013).col(8));

  FeaturePanel complete = make_panel(g, 2012, 2);
  FeaturePanel same = impute_feature_gaps(complete, g);
  for (int y = 2012; y <= 2013; ++y) CHECK(same.at_year(y) == complete.at_year(y));

  CHECK_ERRC(impute_feature_gaps(p, path_graph(4)), Errc::region_mismatch);
}

TEST_CASE("crosswalk reaggregates as weighted means") {
  RateField f = make_field({{"01001", 10.0}, {"01002", 30.0}, {"01003", 8.0}, {"01004", 0.0}},
                           2018);

  SUBCASE("half-and-half merge") {
    Crosswalk cw;
    cw.entries = {{RegionId{"01001"}, RegionId{"90001"}, 0.5},
                  {RegionId{"01002"}, RegionId{"90001"}, 0.5}};
    RateField out = apply_crosswalk(f, cw);
    REQUIRE(out.size() == 1);
    CHECK((*out.regions)[0].code == "90001");
    CHECK(out.values[0] == 20.0);
    CHECK(out.year == 2018);
  }

  SUBCASE("one-to-three weighting") {
    Crosswalk cw;
    cw.entries = {{RegionId{"01004"}, RegionId{"90002"}, 1.0},
                  {RegionId{"01003"}, RegionId{"90002"}, 3.0}};
    CHECK(apply_crosswalk(f, cw).values[0] == 6.0);
  }

  SUBCASE("identity crosswalk reproduces the field") {
    Crosswalk cw;
    for (const RegionId& id : *f.regions) cw.entries.push_back({id, id, 1.0});
    RateField out = apply_crosswalk(f, cw);
    CHECK(*out.regions == *f.regions);
    CHECK(out.values == f.values);
  }

  SUBCASE("entry order does not matter") {
    Crosswalk cw;
    cw.entries = {{RegionId{"01002"}, RegionId{"90001"}, 0.5},
                  {RegionId{"01003"}, RegionId{"90002"}, 3.0},
                  {RegionId{"01001"}, RegionId{"90001"}, 0.5},
                  {RegionId{"01004"}, RegionId{"90002"}, 1.0}};
    Crosswalk shuffled;
    shuffled.entries = {cw.entries[3], cw.entries[0], cw.entries[2], cw.entries[1]};
    RateField a = apply_crosswalk(f, cw);
    RateField b = apply_crosswalk(f, shuffled);
    CHECK(*a.regions == *b.regions);
    CHECK(a.values == b.values);
    // Targets come out sorted.
    CHECK((*a.regions)[0].code == "90001");
    CHECK((*a.regions)[1].code == "90002");
  }

  SUBCASE("zero-weight entries contribute nothing") {
    Crosswalk cw;
    cw.entries = {{RegionId{"01001"}, RegionId{"90001"}, 0.0},
                  {RegionId{"01002"}, RegionId{"90001"}, 2.0}};
    CHECK(apply_crosswalk(f, cw).values[0] == 30.0);
  }
}

TEST_CASE("crosswalk outputs stay inside the convex hull of their sources") {
  std::mt19937 rng(4412);
  std::uniform_real_distribution<double> value(0.0, 100.0);
  std::uniform_real_distribution<double> weight(0.0, 2.0);
  std::uniform_int_distribution<int> n_sources(3, 8);
  std::uniform_int_distribution<int> n_targets(1, 4);

  for (int rep = 0; rep < 40; ++rep) {
    const int n = n_sources(rng);
    std::vector<std::pair<std::string, double>> rows;
    for (int i = 0; i < n; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%05d", 2001 + i);
      rows.push_back({buf, value(rng)});
    }
    RateField f = make_field(rows);

    Crosswalk cw;
    const int t = n_targets(rng);
    std::vector<std::vector<std::pair<double, double>>> contributions(t);  // (weight, value)
    for (int k = 0; k < t; ++k) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%05d", 90001 + k);
      std::uniform_int_distribution<int> cnt(1, n);
      int m = cnt(rng);
      for (int c = 0; c < m; ++c) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        int src = pick(rng);
        double w = c == 0 ? weight(rng) + 0.1 : weight(rng);
        cw.entries.push_back({(*f.regions)[src], RegionId{buf}, w});
        contributions[k].push_back({w, f.values[src]});
      }
    }

    RateField out = apply_crosswalk(f, cw);
    REQUIRE(out.size() == t);
    for (int k = 0; k < t; ++k) {
      double lo = 1e9, hi = -1e9;
      for (auto [w, v] : contributions[k]) {
        if (w > 0.0) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      CAPTURE(rep);
      CAPTURE(k);
      CHECK(out.values[k] >= lo - 1e-12);
      CHECK(out.values[k] <= hi + 1e-12);
    }
  }
}

TEST_CASE("crosswalk rejects bad inputs") {
  RateField f = make_field({{"01001", 10.0}, {"01002", kMissing}});

  CHECK_ERRC(apply_crosswalk(f, Crosswalk{}), Errc::bad_config);

  Crosswalk absent;
  absent.entries = {{RegionId{"77777"}, RegionId{"90001"}, 1.0}};
  CHECK_ERRC(apply_crosswalk(f, absent), Errc::missing_source);

  Crosswalk holed;
  holed.entries = {{RegionId{"01002"}, RegionId{"90001"}, 1.0}};
  CHECK_ERRC(apply_crosswalk(f, holed), Errc::missing_source);

  Crosswalk negative;
  negative.entries = {{RegionId{"01001"}, RegionId{"90001"}, -0.25}};
  CHECK_ERRC(apply_crosswalk(f, negative), Errc::malformed_record);

  Crosswalk weightless;
  weightless.entries = {{RegionId{"01001"}, RegionId{"90001"}, 0.0}};
  CHECK_ERRC(apply_crosswalk(f, weightless), Errc::zero_weight_target);
}
