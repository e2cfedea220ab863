#include "geomort/benchmark.hpp"

#include "geomort/rng.hpp"

#include <algorithm>
#include <cmath>

namespace geomort {

std::pair<RateField, CensorMask> censor(const RateField& field, double fraction,
                                        std::uint64_t seed) {
  if (!field.complete()) {
    fail(Errc::incomplete_input, "cannot censor a field that already has missing rates");
  }
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    fail(Errc::bad_config, "censor fraction must lie in [0,1]");
  }
  RateField out = field;
  CensorMask mask{field.year, {}, seed, fraction};
  SplitMix64 rng(seed);
  for (int i = 0; i < field.size(); ++i) {
    if (rng.next_unit() < fraction) {
      out.values[i] = kMissing;
      mask.masked.push_back((*field.regions)[i]);
    }
  }
  return {std::move(out), std::move(mask)};
}

MetricBundle& MetricBundle::operator+=(const MetricBundle& o) {
  mae += o.mae;
  rmse += o.rmse;
  mpe += o.mpe;
  mape += o.mape;
  excluded_zero_truth += o.excluded_zero_truth;
  scored += o.scored;
  return *this;
}

MetricBundle MetricBundle::scaled(double s) const {
  MetricBundle b = *this;
  b.mae *= s;
  b.rmse *= s;
  b.mpe *= s;
  b.mape *= s;
  return b;
}

MetricBundle score(const RateField& imputed, const RateField& truth,
                   const CensorMask& mask) {
  if (mask.masked.empty()) fail(Errc::empty_mask, "mask selects no regions to score");
  if (!imputed.regions || !truth.regions || *imputed.regions != *truth.regions) {
    fail(Errc::region_mismatch, "imputed and truth fields cover different regions");
  }
  if (!imputed.complete() || !truth.complete()) {
    fail(Errc::incomplete_input, "scoring requires complete imputed and truth fields");
  }
  MetricBundle b;
  double se = 0.0;
  int pct_n = 0;
  const RegionList& regions = *truth.regions;
  for (const RegionId& id : mask.masked) {
    auto it = std::lower_bound(regions.begin(), regions.end(), id);
    if (it == regions.end() || !(*it == id)) {
      fail(Errc::region_mismatch, "mask region " + id.code + " absent from field");
    }
    int i = static_cast<int>(it - regions.begin());
    double e = imputed.values[i] - truth.values[i];
    b.mae += std::abs(e);
    se += e * e;
    if (truth.values[i] == 0.0) {
      ++b.excluded_zero_truth;
    } else {
      b.mpe += e / truth.values[i];
      b.mape += std::abs(e) / truth.values[i];
      ++pct_n;
    }
    ++b.scored;
  }
  b.mae /= b.scored;
  b.rmse = std::sqrt(se / b.scored);
  if (pct_n > 0) {
    b.mpe = 100.0 * b.mpe / pct_n;
    b.mape = 100.0 * b.mape / pct_n;
  } else {
    b.mpe = kMissing;
    b.mape = kMissing;
  }
  return b;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> ms = {Method::neighbor_mean, Method::state_mean,
                                         Method::national_mean, Method::idw};
  return ms;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::neighbor_mean: return "neighbor_mean";
    case Method::state_mean: return "state_mean";
    case Method::national_mean: return "national_mean";
    case Method::idw: return "idw";
  }
  return "?";
}

RateField run_method(Method m, const RateField& censored, const RegionGraph& graph,
                     const IdwOptions& idw) {
  switch (m) {
    case Method::neighbor_mean: return neighbor_mean_impute(censored, graph);
    case Method::state_mean: return state_mean_impute(censored, graph);
    case Method::national_mean: return national_mean_impute(censored);
    case Method::idw: return idw_impute(censored, graph, idw);
  }
  fail(Errc::bad_config, "unknown method");
}

std::vector<BenchRow> compare_methods(const RatePanel& truth, const RegionGraph& graph,
                                      double fraction, const std::vector<std::uint64_t>& seeds,
                                      const IdwOptions& idw) {
  if (seeds.empty()) fail(Errc::bad_config, "compare_methods needs at least one seed");
  std::vector<BenchRow> rows;
  for (int y = truth.first_year; y <= truth.last_year(); ++y) {
    RateField truth_field = truth.field(y);
    std::vector<MetricBundle> acc(all_methods().size());
    for (std::uint64_t seed : seeds) {
      auto [censored, mask] = censor(truth_field, fraction, seed);
      for (std::size_t m = 0; m < all_methods().size(); ++m) {
        RateField imputed = run_method(all_methods()[m], censored, graph, idw);
        acc[m] += score(imputed, truth_field, mask);
      }
    }
    for (std::size_t m = 0; m < all_methods().size(); ++m) {
      BenchRow row;
      row.year = y;
      row.method = all_methods()[m];
      row.seed_count = static_cast<int>(seeds.size());
      row.metrics = acc[m].scaled(1.0 / static_cast<double>(seeds.size()));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

EfficacyReport efficacy_report(const RateField& predictions, const RateField& truth) {
  if (!predictions.regions || !truth.regions || *predictions.regions != *truth.regions) {
    fail(Errc::region_mismatch, "prediction and truth fields cover different regions");
  }
  if (!predictions.complete() || !truth.complete()) {
    fail(Errc::incomplete_input, "efficacy report requires complete fields");
  }
  if (predictions.size() == 0) fail(Errc::empty_field, "no regions to report on");
  EfficacyReport r;
  r.regions = truth.regions;
  int n = truth.size();
  r.abs_error = (predictions.values - truth.values).cwiseAbs();
  r.max_error = 0.0;
  for (int i = 0; i < n; ++i) r.max_error = std::max(r.max_error, r.abs_error[i]);
  r.accuracy = Vec(n);
  for (int i = 0; i < n; ++i) {
    r.accuracy[i] = r.max_error == 0.0 ? 100.0 : 100.0 * (1.0 - r.abs_error[i] / r.max_error);
  }
  double esum = 0.0, asum = 0.0;
  for (int i = 0; i < n; ++i) {
    esum += r.abs_error[i];
    asum += r.accuracy[i];
  }
  r.avg_error = esum / n;
  r.avg_accuracy = asum / n;
  return r;
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const int n = static_cast<int>(sorted.size());
  if (n == 0) fail(Errc::empty_field, "quantile of empty sample");
  double h = (n - 1) * p;
  int lo = static_cast<int>(std::floor(h));
  if (lo >= n - 1) return sorted[n - 1];
  double frac = h - lo;
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

SummaryStats summary_stats(const RateField& field) {
  if (field.size() == 0) fail(Errc::empty_field, "summary of empty field");
  if (!field.complete()) fail(Errc::incomplete_input, "summary requires a complete field");
  const int n = field.size();
  std::vector<double> sorted(field.values.data(), field.values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  SummaryStats s;
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.stddev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = sorted_quantile(sorted, 0.25);
  s.median = sorted_quantile(sorted, 0.5);
  s.q3 = sorted_quantile(sorted, 0.75);
  return s;
}

}  // namespace geomort
