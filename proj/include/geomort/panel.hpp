#pragma once

#include "geomort/common.hpp"
#include "geomort/region.hpp"

#include <memory>
#include <string>
#include <vector>

namespace geomort {

using RegionList = std::vector<RegionId>;
using RegionListPtr = std::shared_ptr<const RegionList>;

// One year of rates, aligned to a sorted region list. NaN marks MISSING.
struct RateField {
  int year = 0;
  RegionListPtr regions;
  Vec values;

  int size() const { return static_cast<int>(values.size()); }

  int missing_count() const {
    int n = 0;
    for (int i = 0; i < size(); ++i) n += is_missing(values[i]) ? 1 : 0;
    return n;
  }

  bool complete() const { return missing_count() == 0; }
};

// Rates for a contiguous range of years over one region list.
struct RatePanel {
  RegionListPtr regions;
  int first_year = 0;
  std::vector<Vec> values;  // one vector per year

  int year_count() const { return static_cast<int>(values.size()); }
  int last_year() const { return first_year + year_count() - 1; }
  bool has_year(int year) const { return year >= first_year && year <= last_year(); }

  RateField field(int year) const {
    if (!has_year(year)) fail(Errc::bad_config, "panel has no year " + std::to_string(year));
    return RateField{year, regions, values[year - first_year]};
  }

  void set_field(const RateField& f) {
    if (!has_year(f.year)) fail(Errc::bad_config, "panel has no year " + std::to_string(f.year));
    values[f.year - first_year] = f.values;
  }
};

// The thirteen covariate columns, in canonical order. These are the CSV
// column names; readers reject files whose header deviates.
const std::vector<std::string>& canonical_features();
constexpr int kFeatureCount = 13;

// Covariate percentile ranks in [0,100] per (year, region, feature).
// NaN marks MISSING. One n x 13 matrix per year.
struct FeaturePanel {
  RegionListPtr regions;
  int first_year = 0;
  std::vector<Mat> values;

  int year_count() const { return static_cast<int>(values.size()); }
  int last_year() const { return first_year + year_count() - 1; }
  bool has_year(int year) const { return year >= first_year && year <= last_year(); }

  const Mat& at_year(int year) const {
    if (!has_year(year)) fail(Errc::bad_config, "panel has no year " + std::to_string(year));
    return values[year - first_year];
  }
  Mat& at_year(int year) {
    if (!has_year(year)) fail(Errc::bad_config, "panel has no year " + std::to_string(year));
    return values[year - first_year];
  }
};

}  // namespace geomort
