#include "geomort/panel.hpp"

namespace geomort {

const std::vector<std::string>& canonical_features() {
  static const std::vector<std::string> names = {
      "below_poverty",
      "unemployment",
      "no_high_school_diploma",
      "age_65_and_older",
      "age_17_and_younger",
      "single_parent_households",
      "limited_english_ability",
      "minority_status",
      "multi_unit_structures",
      "mobile_homes",
      "crowding",
      "no_vehicle",
      "group_quarters",
  };
  return names;
}

}  // namespace geomort
