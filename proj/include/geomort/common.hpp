#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace geomort {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Missing observations are carried as quiet NaN inside dense vectors.
// File formats encode them as an empty field or "NA"; never 0.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

enum class Errc {
  // geo-core
  malformed_record,
  missing_centroid,
  insufficient_mainland,
  // imputation
  unreachable_region,
  empty_neighborhood,
  no_data_available,
  // benchmark
  incomplete_input,
  empty_mask,
  region_mismatch,
  empty_field,
  // temporal
  unbracketed_gap,
  missing_source,
  zero_weight_target,
  // anomaly
  degenerate_sample,
  non_positive_sample,
  no_convergence,
  all_fits_failed,
  empty_anomaly_set,
  // gbt
  empty_data,
  insufficient_data,
  no_splits,
  // autoenc
  dimension_mismatch,
  stale_cache,
  empty_training_set,
  empty_baseline,
  // cli
  fips_mismatch,
  bad_config,
  io_failure,
};

enum class ErrorKind { config, data, numeric };

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const { return code_; }

  // Exit-status category for the CLI: config 1, data 2, numeric 3.
  ErrorKind kind() const {
    switch (code_) {
      case Errc::bad_config:
        return ErrorKind::config;
      case Errc::no_convergence:
      case Errc::all_fits_failed:
      case Errc::degenerate_sample:
        return ErrorKind::numeric;
      default:
        return ErrorKind::data;
    }
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace geomort
