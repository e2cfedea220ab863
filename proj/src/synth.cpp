#include "geomort/synth.hpp"

#include "geomort/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace geomort {

namespace {

constexpr double kTau = 6.283185307179586;

std::string fips_code(int state, int within) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02d%03d", state, within);
  return buf;
}

// Smooth integer covariate surface: a per-feature plane wave over the grid
// plus a slow drift in time and a little seeded jitter, rounded and clamped
// to percentile range. Integer values keep the number of distinct split
// thresholds small.
double covariate_value(int feature, int row, int col, int year_offset, double jitter) {
  static const double amp[kFeatureCount] = {32, 24, 28, 20, 22, 26, 18, 30, 21, 25, 27, 23, 19};
  static const double px[kFeatureCount] = {19, 11, 23, 7, 13, 17, 29, 9, 15, 21, 25, 27, 31};
  static const double py[kFeatureCount] = {13, 23, 7, 19, 29, 9, 11, 25, 31, 15, 17, 21, 27};
  static const double drift[kFeatureCount] = {0.6, -0.4, 0.5, 0.2, -0.3, 0.4,
                                              -0.2, 0.3, 0.1, -0.5, 0.45, -0.35, 0.25};
  double wave = amp[feature] * std::sin(kTau * (row / px[feature] + col / py[feature]) +
                                        0.7 * feature);
  double v = 50.0 + wave + drift[feature] * year_offset + jitter;
  v = std::round(v);
  return std::min(100.0, std::max(0.0, v));
}

}  // namespace

SynthData make_synthetic(const SynthSpec& spec) {
  if (spec.regions < 16 || spec.cols < 4 || spec.islands < 0 ||
      spec.islands > spec.regions - 8 || spec.years < 2) {
    fail(Errc::bad_config, "synthetic spec out of range");
  }
  const int mainland = spec.regions - spec.islands;
  const int cols = spec.cols;
  const int rows = (mainland + cols - 1) / cols;

  SynthData data;

  // Region codes: three lattice rows per state, islands in their own state.
  std::vector<RegionId> ids(spec.regions);
  std::vector<int> cell_row(mainland), cell_col(mainland);
  {
    std::vector<int> within_state;
    for (int c = 0; c < mainland; ++c) {
      int r = c / cols, q = c % cols;
      int state = r / 3 + 1;
      if (static_cast<int>(within_state.size()) < state) within_state.resize(state, 0);
      ids[c] = RegionId{fips_code(state, ++within_state[state - 1])};
      cell_row[c] = r;
      cell_col[c] = q;
    }
    for (int k = 0; k < spec.islands; ++k) {
      ids[mainland + k] = RegionId{fips_code(72, k + 1)};
    }
  }

  // Centroids on a fixed geographic window; islands offshore to the southwest.
  const double lat0 = 25.0, lat_span = 23.0, lon0 = -115.0, lon_span = 25.0;
  for (int c = 0; c < mainland; ++c) {
    double lat = lat0 + lat_span * cell_row[c] / std::max(1, rows - 1);
    double lon = lon0 + lon_span * cell_col[c] / std::max(1, cols - 1);
    data.centroids.push_back({ids[c], lat, lon});
  }
  for (int k = 0; k < spec.islands; ++k) {
    data.centroids.push_back({ids[mainland + k], 24.0 - 0.5 * k, -118.0 - 1.5 * k});
  }

  // Queen adjacency over the lattice, one record per undirected edge.
  auto cell_at = [&](int r, int q) { return r * cols + q; };
  for (int c = 0; c < mainland; ++c) {
    int r = cell_row[c], q = cell_col[c];
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dq = -1; dq <= 1; ++dq) {
        if (dr == 0 && dq == 0) continue;
        int rr = r + dr, qq = q + dq;
        if (rr < 0 || qq < 0 || qq >= cols) continue;
        int other = cell_at(rr, qq);
        if (other >= mainland) continue;
        if (other > c) data.adjacency.push_back({ids[c], ids[other]});
      }
    }
  }

  data.graph = load_graph(data.adjacency, data.centroids);
  RegionListPtr regions = std::make_shared<RegionList>(data.graph.regions());
  const int n = static_cast<int>(regions->size());

  // Sorted-region index of each construction cell (codes sort like cells here,
  // but look them up to stay honest).
  std::vector<int> at(spec.regions);
  for (int c = 0; c < spec.regions; ++c) {
    at[c] = data.graph.index_of(ids[c]);
  }

  // Full covariate panel, every year, complete.
  data.covariates_full.regions = regions;
  data.covariates_full.first_year = spec.first_year;
  data.covariates_full.values.assign(spec.years, Mat::Zero(n, kFeatureCount));
  {
    SplitMix64 rng(spec.seed ^ 0x5eedF00dull);
    for (int t = 0; t < spec.years; ++t) {
      Mat& m = data.covariates_full.values[t];
      for (int c = 0; c < spec.regions; ++c) {
        int r = c < mainland ? cell_row[c] : rows + 2 + (c - mainland);
        int q = c < mainland ? cell_col[c] : 0;
        for (int j = 0; j < kFeatureCount; ++j) {
          double jitter = rng.next_in(-2.0, 2.0);
          m(at[c], j) = covariate_value(j, r, q, t, jitter);
        }
      }
    }
  }

  // Rates: shifted exponential of a covariate mix plus a smooth spatial wave
  // and bounded noise, with an exact count of zeroed regions per year.
  data.truth.regions = regions;
  data.truth.first_year = spec.first_year;
  data.truth.values.assign(spec.years, Vec::Zero(n));
  {
    SplitMix64 rng(spec.seed ^ 0x7a7e0eull);
    for (int t = 0; t < spec.years; ++t) {
      const Mat& f = data.covariates_full.values[t];
      Vec& v = data.truth.values[t];
      for (int c = 0; c < spec.regions; ++c) {
        int r = c < mainland ? cell_row[c] : 0;
        int q = c < mainland ? cell_col[c] : 0;
        double wave = 0.25 * std::sin(kTau * (r + q) / 17.0);
        double mix = 2.2 + 0.010 * f(at[c], 0) + 0.006 * f(at[c], 5) - 0.004 * f(at[c], 10);
        v[at[c]] = 0.5 + std::exp(mix + wave + rng.next_in(-0.25, 0.25));
      }
      int zeros = static_cast<int>(spec.zero_fraction * n);
      if (zeros > 0) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        SplitMix64 zrng(spec.seed + 7700 + static_cast<std::uint64_t>(t));
        fisher_yates(order, zrng);
        for (int k = 0; k < zeros; ++k) v[order[k]] = 0.0;
      }
    }
  }

  // Censored copy: one deterministic mask per year.
  data.censored = data.truth;
  for (int t = 0; t < spec.years; ++t) {
    auto [masked_field, mask] =
        censor(data.truth.field(spec.first_year + t), spec.censor_fraction,
               spec.seed * 1000 + static_cast<std::uint64_t>(t));
    data.censored.set_field(masked_field);
    data.masks.push_back(std::move(mask));
  }

  // Release years: first, first+4, then every other year through the last.
  // The last year is always released so gaps stay bracketed.
  data.observed_years.push_back(spec.first_year);
  for (int y = spec.first_year + 4; y <= data.truth.last_year(); y += 2) {
    data.observed_years.push_back(y);
  }
  if (data.observed_years.back() != data.truth.last_year()) {
    data.observed_years.push_back(data.truth.last_year());
  }

  // Published covariates: release years only, with whole-region row gaps.
  data.covariates.regions = regions;
  data.covariates.first_year = spec.first_year;
  data.covariates.values.assign(spec.years, Mat::Constant(n, kFeatureCount, kMissing));
  {
    SplitMix64 rng(spec.seed ^ 0x6a9955ull);
    for (int y : data.observed_years) {
      Mat& m = data.covariates.values[y - spec.first_year];
      m = data.covariates_full.values[y - spec.first_year];
      for (int i = 0; i < n; ++i) {
        if (rng.next_unit() < spec.feature_missing) {
          m.row(i).setConstant(kMissing);
        }
      }
    }
  }

  // Crosswalk: merge the first 20 sorted regions pairwise into fresh targets
  // (unequal weights), pass everything else through unchanged.
  {
    int merged = std::min(20, n - 1) & ~1;  // even count
    for (int i = 0; i < merged; ++i) {
      CrosswalkEntry e;
      e.source = (*regions)[i];
      e.target = RegionId{fips_code(90, i / 2 + 1)};
      e.weight = (i % 2 == 0) ? 1.0 : 2.0;
      data.crosswalk.entries.push_back(e);
    }
    for (int i = merged; i < n; ++i) {
      data.crosswalk.entries.push_back({(*regions)[i], (*regions)[i], 1.0});
    }
  }

  // Square polygons around each centroid, fips carried as a property.
  {
    std::string& g = data.geojson;
    g = "{\"type\":\"FeatureCollection\",\"features\":[";
    double half_lat = 0.5 * lat_span / std::max(1, rows - 1);
    double half_lon = 0.5 * lon_span / std::max(1, cols - 1);
    std::vector<const CentroidRecord*> by_index(n, nullptr);
    for (const CentroidRecord& c : data.centroids) by_index[data.graph.index_of(c.id)] = &c;
    for (int i = 0; i < n; ++i) {
      const CentroidRecord* cr = by_index[i];
      char buf[512];
      std::snprintf(buf, sizeof buf,
                    "%s{\"type\":\"Feature\",\"properties\":{\"fips\":\"%s\"},"
                    "\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[[%.4f,%.4f],"
                    "[%.4f,%.4f],[%.4f,%.4f],[%.4f,%.4f],[%.4f,%.4f]]]}}",
                    i ? "," : "", (*regions)[i].code.c_str(), cr->lon - half_lon,
                    cr->lat - half_lat, cr->lon + half_lon, cr->lat - half_lat,
                    cr->lon + half_lon, cr->lat + half_lat, cr->lon - half_lon,
                    cr->lat + half_lat, cr->lon - half_lon, cr->lat - half_lat);
      g += buf;
    }
    g += "]}\n";
  }

  return data;
}

}  // namespace geomort
