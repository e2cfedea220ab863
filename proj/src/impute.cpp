#include "geomort/impute.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace geomort {

namespace {

void check_alignment(const RateField& field, const RegionGraph& graph) {
  if (!field.regions || static_cast<int>(field.regions->size()) != field.size()) {
    fail(Errc::region_mismatch, "rate field has no aligned region list");
  }
  if (field.size() != graph.size() || *field.regions != graph.regions()) {
    fail(Errc::region_mismatch, "rate field regions do not match graph regions");
  }
}

}  // namespace

Vec neighbor_mean_impute_values(const Vec& values, const RegionGraph& graph) {
  const int n = graph.size();
  if (static_cast<int>(values.size()) != n) {
    fail(Errc::region_mismatch, "value vector size does not match graph");
  }
  Vec out = values;

  std::vector<char> missing(n, 0);
  std::vector<int> missing_set;  // kept in ascending index order
  for (int i = 0; i < n; ++i) {
    if (is_missing(out[i])) {
      missing[i] = 1;
      missing_set.push_back(i);
    }
  }
  if (missing_set.empty()) return out;

  // Reverse influence lists: filling region p changes the missing/available
  // counts of every missing region that looks at p. With symmetric
  // adjacency that is neighbors(p); island constructed neighborhoods are
  // directed, so register islands on their constructed regions too.
  std::vector<std::vector<int>> watchers(n);
  for (int i = 0; i < n; ++i) {
    for (int j : graph.neighbors(i)) watchers[j].push_back(i);
    if (graph.is_island(i)) {
      for (int j : graph.constructed(i)) watchers[j].push_back(i);
    }
  }

  std::vector<int> missing_nbrs(n, 0), avail_nbrs(n, 0);
  for (int m : missing_set) {
    for (int j : graph.effective_neighbors(m)) {
      if (missing[j]) ++missing_nbrs[m];
      else ++avail_nbrs[m];
    }
  }

  // Imputed regions within one pass never read each other: a pass only
  // fills regions whose read set is available at pass start, so writing
  // into `out` directly preserves pass-start snapshot semantics.
  auto fill_from_available = [&](int m) {
    double sum = 0.0;
    int cnt = 0;
    for (int j : graph.effective_neighbors(m)) {
      if (!missing[j]) {
        sum += out[j];
        ++cnt;
      }
    }
    out[m] = sum / cnt;
  };

  while (!missing_set.empty()) {
    // Smallest missing-neighbor count among regions with data to read.
    int k_star = std::numeric_limits<int>::max();
    for (int m : missing_set) {
      if (avail_nbrs[m] >= 1 && missing_nbrs[m] >= 1) k_star = std::min(k_star, missing_nbrs[m]);
    }
    std::vector<int> pass;
    if (k_star != std::numeric_limits<int>::max()) {
      for (int m : missing_set) {
        if (avail_nbrs[m] >= 1 && missing_nbrs[m] == k_star) pass.push_back(m);
      }
    } else {
      // No stepped work left: fill regions whose whole neighborhood is
      // available. These never reference one another, so one pass suffices
      // unless a directed island edge re-opens stepped work afterwards.
      for (int m : missing_set) {
        if (avail_nbrs[m] >= 1 && missing_nbrs[m] == 0) pass.push_back(m);
      }
      if (pass.empty()) break;
    }
    for (int m : pass) fill_from_available(m);
    for (int m : pass) {
      missing[m] = 0;
      for (int w : watchers[m]) {
        if (missing[w]) {
          --missing_nbrs[w];
          ++avail_nbrs[w];
        }
      }
    }
    std::erase_if(missing_set, [&](int m) { return !missing[m]; });
  }

  for (int m : missing_set) {
    if (graph.effective_neighbors(m).empty()) {
      fail(Errc::empty_neighborhood,
           "island region " + graph.regions()[m].code + " has no constructed neighborhood");
    }
  }
  if (!missing_set.empty()) {
    fail(Errc::unreachable_region,
         "region " + graph.regions()[missing_set.front()].code +
             " is missing and its connected component holds no available data");
  }
  return out;
}

RateField neighbor_mean_impute(const RateField& field, const RegionGraph& graph) {
  check_alignment(field, graph);
  RateField out = field;
  out.values = neighbor_mean_impute_values(field.values, graph);
  return out;
}

RateField national_mean_impute(const RateField& field) {
  double sum = 0.0;
  int cnt = 0;
  for (int i = 0; i < field.size(); ++i) {
    if (!is_missing(field.values[i])) {
      sum += field.values[i];
      ++cnt;
    }
  }
  if (cnt == 0) fail(Errc::no_data_available, "all rates missing; no national mean exists");
  double mean = sum / cnt;
  RateField out = field;
  for (int i = 0; i < out.size(); ++i) {
    if (is_missing(out.values[i])) out.values[i] = mean;
  }
  return out;
}

RateField state_mean_impute(const RateField& field, const RegionGraph& graph) {
  check_alignment(field, graph);
  double nat_sum = 0.0;
  int nat_cnt = 0;
  std::map<std::string_view, std::pair<double, int>> by_state;
  for (int i = 0; i < field.size(); ++i) {
    if (is_missing(field.values[i])) continue;
    nat_sum += field.values[i];
    ++nat_cnt;
    auto& acc = by_state[graph.state(i)];
    acc.first += field.values[i];
    acc.second += 1;
  }
  if (nat_cnt == 0) fail(Errc::no_data_available, "all rates missing; no state means exist");
  double national = nat_sum / nat_cnt;
  RateField out = field;
  for (int i = 0; i < out.size(); ++i) {
    if (!is_missing(out.values[i])) continue;
    auto it = by_state.find(graph.state(i));
    out.values[i] = (it == by_state.end()) ? national : it->second.first / it->second.second;
  }
  return out;
}

RateField idw_impute(const RateField& field, const RegionGraph& graph,
                     const IdwOptions& options) {
  check_alignment(field, graph);
  if (!(options.power > 0.0)) fail(Errc::bad_config, "idw power must be > 0");

  std::vector<int> donors;
  for (int i = 0; i < field.size(); ++i) {
    if (!is_missing(field.values[i])) donors.push_back(i);
  }
  if (donors.empty()) fail(Errc::no_data_available, "all rates missing; idw has no donors");

  RateField out = field;
  std::vector<std::pair<double, int>> ranked;
  for (int i = 0; i < field.size(); ++i) {
    if (!is_missing(field.values[i])) continue;
    ranked.clear();
    ranked.reserve(donors.size());
    for (int j : donors) {
      ranked.emplace_back(geodesic_km(graph.lat(i), graph.lon(i), graph.lat(j), graph.lon(j)), j);
    }
    if (options.max_donors > 0 && static_cast<int>(ranked.size()) > options.max_donors) {
      std::sort(ranked.begin(), ranked.end());
      ranked.resize(options.max_donors);
      std::sort(ranked.begin(), ranked.end(),
                [](const auto& x, const auto& y) { return x.second < y.second; });
    }
    // Coincident donors preempt weighting (1/0 is not a weight).
    double co_sum = 0.0;
    int co_cnt = 0;
    for (const auto& [d, j] : ranked) {
      if (d == 0.0) {
        co_sum += field.values[j];
        ++co_cnt;
      }
    }
    if (co_cnt > 0) {
      out.values[i] = co_sum / co_cnt;
      continue;
    }
    double wsum = 0.0, vsum = 0.0;
    for (const auto& [d, j] : ranked) {
      double w = 1.0 / std::pow(d, options.power);
      wsum += w;
      vsum += w * field.values[j];
    }
    out.values[i] = vsum / wsum;
  }
  return out;
}

}  // namespace geomort
