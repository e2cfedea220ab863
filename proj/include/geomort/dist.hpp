#pragma once

#include <string>
#include <vector>

namespace geomort {

// Positive-support candidate families, in fixed tie-break order.
enum class Family { lognormal, gamma, weibull, inverse_gaussian };

const std::vector<Family>& all_families();
std::string family_name(Family f);

struct FittedDistribution {
  Family family = Family::lognormal;
  // Family-specific parameters:
  //   lognormal         p1 = mu,    p2 = sigma
  //   gamma             p1 = shape, p2 = scale
  //   weibull           p1 = shape, p2 = scale
  //   inverse_gaussian  p1 = mean,  p2 = lambda
  double p1 = 0.0;
  double p2 = 0.0;
  int n = 0;
  double log_likelihood = 0.0;
  double ks = 0.0;
  double aic = 0.0;  // 2p - 2 LL, p = 2
  double bic = 0.0;  // p ln n - 2 LL
};

// Maximum-likelihood fit. Lognormal and inverse-Gaussian use closed forms;
// gamma solves its digamma equation by Newton from the Minka-style
// initializer; Weibull solves its profile equation by bisection-safeguarded
// Newton. Root finding runs to relative tolerance 1e-10 within a budget of
// 200 iterations. Requires n >= 8, all samples > 0, nonzero variance.
FittedDistribution fit_mle(const std::vector<double>& samples, Family family);

double dist_log_pdf(const FittedDistribution& d, double x);
double dist_cdf(const FittedDistribution& d, double x);
double dist_quantile(const FittedDistribution& d, double p);

// D = max over sorted samples of max(i/n - F(x_i), F(x_i) - (i-1)/n).
double ks_statistic(const std::vector<double>& samples, const FittedDistribution& d);

struct FitDiagnostics {
  std::vector<FittedDistribution> fits;  // converged fits, family order
  std::vector<Family> failed;
  std::vector<std::string> failure_reasons;
  // Rank position of fits[i] under each criterion (0 = best). Ties break
  // by family order: lognormal, gamma, weibull, inverse_gaussian.
  std::vector<int> aic_rank, bic_rank, ks_rank;
  int best_index = -1;  // AIC winner
};

// Fits all four families, ranks by AIC with KS/BIC ranks alongside, and
// flags families that failed to fit.
FitDiagnostics select_best(const std::vector<double>& samples);

}  // namespace geomort
