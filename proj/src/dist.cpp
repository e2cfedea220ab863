#include "geomort/dist.hpp"

#include "geomort/common.hpp"
#include "geomort/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geomort {

namespace {

constexpr int kMinSamples = 8;
constexpr int kIterBudget = 200;
constexpr double kRelTol = 1e-10;

struct LogStats {
  std::vector<double> sorted;  // ascending
  std::vector<double> logs;    // logs of sorted
  double mean = 0.0;
  double mean_log = 0.0;
};

LogStats prepare(const std::vector<double>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n < kMinSamples) {
    fail(Errc::degenerate_sample,
         "fitting needs at least " + std::to_string(kMinSamples) + " samples, got " +
             std::to_string(n));
  }
  LogStats s;
  s.sorted = samples;
  std::sort(s.sorted.begin(), s.sorted.end());
  if (!(s.sorted.front() > 0.0)) {
    fail(Errc::non_positive_sample, "positive-support fitting given a sample <= 0");
  }
  if (s.sorted.front() == s.sorted.back()) {
    fail(Errc::degenerate_sample, "all samples equal; no spread to fit");
  }
  s.logs.reserve(s.sorted.size());
  double sum = 0.0, lsum = 0.0;
  for (double x : s.sorted) {
    s.logs.push_back(std::log(x));
    sum += x;
    lsum += s.logs.back();
  }
  s.mean = sum / n;
  s.mean_log = lsum / n;
  return s;
}

// Weibull profile equation g(k) = sum x^k ln x / sum x^k - 1/k - mean(ln x),
// evaluated in shifted-exponent form so large x^k cannot overflow.
struct WeibullProfile {
  const std::vector<double>& logs;
  double mean_log;

  void moments(double k, double& A, double& B, double& C) const {
    double m = *std::max_element(logs.begin(), logs.end());
    A = B = C = 0.0;
    for (double lx : logs) {
      double e = std::exp(k * (lx - m));
      A += e;
      B += e * lx;
      C += e * lx * lx;
    }
  }
  double g(double k) const {
    double A, B, C;
    moments(k, A, B, C);
    return B / A - 1.0 / k - mean_log;
  }
  double g_prime(double k) const {
    double A, B, C;
    moments(k, A, B, C);
    return (C * A - B * B) / (A * A) + 1.0 / (k * k);
  }
};

void fit_params(const LogStats& s, Family family, double& p1, double& p2) {
  const int n = static_cast<int>(s.sorted.size());
  switch (family) {
    case Family::lognormal: {
      double ss = 0.0;
      for (double lx : s.logs) ss += (lx - s.mean_log) * (lx - s.mean_log);
      p1 = s.mean_log;
      p2 = std::sqrt(ss / n);  // MLE (population) variance of logs
      return;
    }
    case Family::gamma: {
      double d = std::log(s.mean) - s.mean_log;  // > 0 by Jensen unless constant
      if (!(d > 0.0)) fail(Errc::degenerate_sample, "gamma fit: no log-spread in sample");
      double a = (3.0 - d + std::sqrt((d - 3.0) * (d - 3.0) + 24.0 * d)) / (12.0 * d);
      bool converged = false;
      for (int it = 0; it < kIterBudget; ++it) {
        double f = std::log(a) - digamma(a) - d;
        double fp = 1.0 / a - trigamma(a);
        double step = f / fp;
        double next = a - step;
        if (next <= 0.0) next = a / 2.0;
        double delta = std::abs(next - a);
        a = next;
        if (delta <= kRelTol * std::max(1.0, std::abs(a))) {
          converged = true;
          break;
        }
      }
      if (!converged) fail(Errc::no_convergence, "gamma shape iteration exhausted its budget");
      p1 = a;
      p2 = s.mean / a;
      return;
    }
    case Family::weibull: {
      WeibullProfile prof{s.logs, s.mean_log};
      double sd_log = 0.0;
      for (double lx : s.logs) sd_log += (lx - s.mean_log) * (lx - s.mean_log);
      sd_log = std::sqrt(sd_log / n);
      double k = (std::numbers::pi / std::sqrt(6.0)) / sd_log;  // moment start
      // g is increasing in k; establish a sign-changing bracket around it.
      double lo = k, hi = k;
      int guard = 0;
      while (prof.g(lo) > 0.0 && ++guard < kIterBudget) lo /= 2.0;
      guard = 0;
      while (prof.g(hi) < 0.0 && ++guard < kIterBudget) hi *= 2.0;
      if (prof.g(lo) > 0.0 || prof.g(hi) < 0.0) {
        fail(Errc::no_convergence, "weibull shape bracket not found");
      }
      k = std::clamp(k, lo, hi);
      bool converged = false;
      for (int it = 0; it < kIterBudget; ++it) {
        double gv = prof.g(k);
        if (gv > 0.0) hi = k;
        else lo = k;
        double next = k - gv / prof.g_prime(k);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        double delta = std::abs(next - k);
        k = next;
        if (delta <= kRelTol * std::max(1.0, std::abs(k))) {
          converged = true;
          break;
        }
      }
      if (!converged) fail(Errc::no_convergence, "weibull shape iteration exhausted its budget");
      // lambda = (mean of x^k)^(1/k), in the same shifted-exponent form.
      double m = *std::max_element(s.logs.begin(), s.logs.end());
      double A = 0.0;
      for (double lx : s.logs) A += std::exp(k * (lx - m));
      p1 = k;
      p2 = std::exp(m + std::log(A / n) / k);
      return;
    }
    case Family::inverse_gaussian: {
      double recip = 0.0;
      for (double x : s.sorted) recip += 1.0 / x - 1.0 / s.mean;
      if (!(recip > 0.0)) fail(Errc::degenerate_sample, "inverse-gaussian fit: no spread");
      p1 = s.mean;
      p2 = n / recip;
      return;
    }
  }
  fail(Errc::bad_config, "unknown family");
}

}  // namespace

const std::vector<Family>& all_families() {
  static const std::vector<Family> fs = {Family::lognormal, Family::gamma, Family::weibull,
                                         Family::inverse_gaussian};
  return fs;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::lognormal: return "lognormal";
    case Family::gamma: return "gamma";
    case Family::weibull: return "weibull";
    case Family::inverse_gaussian: return "inverse_gaussian";
  }
  return "?";
}

double dist_log_pdf(const FittedDistribution& d, double x) {
  if (!(x > 0.0)) fail(Errc::non_positive_sample, "log-pdf defined on (0, inf)");
  switch (d.family) {
    case Family::lognormal: {
      double z = (std::log(x) - d.p1) / d.p2;
      return -std::log(x) - std::log(d.p2) - 0.5 * std::log(2.0 * std::numbers::pi) -
             0.5 * z * z;
    }
    case Family::gamma:
      return (d.p1 - 1.0) * std::log(x) - x / d.p2 - d.p1 * std::log(d.p2) -
             std::lgamma(d.p1);
    case Family::weibull: {
      double t = x / d.p2;
      return std::log(d.p1) - std::log(d.p2) + (d.p1 - 1.0) * std::log(t) -
             std::pow(t, d.p1);
    }
    case Family::inverse_gaussian: {
      double dev = x - d.p1;
      return 0.5 * (std::log(d.p2) - std::log(2.0 * std::numbers::pi) - 3.0 * std::log(x)) -
             d.p2 * dev * dev / (2.0 * d.p1 * d.p1 * x);
    }
  }
  fail(Errc::bad_config, "unknown family");
}

double dist_cdf(const FittedDistribution& d, double x) {
  if (x <= 0.0) return 0.0;
  switch (d.family) {
    case Family::lognormal:
      return norm_cdf((std::log(x) - d.p1) / d.p2);
    case Family::gamma:
      return gamma_p(d.p1, x / d.p2);
    case Family::weibull:
      return -std::expm1(-std::pow(x / d.p2, d.p1));
    case Family::inverse_gaussian: {
      double rt = std::sqrt(d.p2 / x);
      double a = rt * (x / d.p1 - 1.0);
      double b = -rt * (x / d.p1 + 1.0);
      // The second term's huge exp factor and tiny CDF factor are combined
      // in log space to avoid inf * 0.
      return norm_cdf(a) + std::exp(2.0 * d.p2 / d.p1 + log_norm_cdf(b));
    }
  }
  fail(Errc::bad_config, "unknown family");
}

namespace {

// Bracketed Newton inversion of a CDF; falls back to bisection whenever the
// Newton step leaves the bracket.
template <typename Cdf, typename LogPdf>
double invert_cdf(Cdf cdf, LogPdf log_pdf, double p, double x0) {
  double lo = x0, hi = x0;
  int guard = 0;
  while (cdf(lo) > p && ++guard < 2000) lo /= 2.0;
  guard = 0;
  while (cdf(hi) < p && ++guard < 2000) hi *= 2.0;
  double x = std::clamp(x0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    double f = cdf(x) - p;
    if (f > 0.0) hi = x;
    else lo = x;
    double next = x - f / std::exp(log_pdf(x));
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(next))) return next;
    x = next;
  }
  return x;
}

}  // namespace

double dist_quantile(const FittedDistribution& d, double p) {
  if (!(p > 0.0 && p < 1.0)) fail(Errc::bad_config, "quantile requires p in (0,1)");
  switch (d.family) {
    case Family::lognormal:
      return std::exp(d.p1 + d.p2 * inv_norm_cdf(p));
    case Family::weibull:
      return d.p2 * std::pow(-std::log1p(-p), 1.0 / d.p1);
    case Family::gamma: {
      // Wilson-Hilferty starting point.
      double z = inv_norm_cdf(p);
      double a = d.p1;
      double c = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
      double y = a * c * c * c;
      if (!(y > 0.0)) y = a;
      return invert_cdf([&](double x) { return dist_cdf(d, x); },
                        [&](double x) { return dist_log_pdf(d, x); }, p, y * d.p2);
    }
    case Family::inverse_gaussian:
      return invert_cdf([&](double x) { return dist_cdf(d, x); },
                        [&](double x) { return dist_log_pdf(d, x); }, p, d.p1);
  }
  fail(Errc::bad_config, "unknown family");
}

double ks_statistic(const std::vector<double>& samples, const FittedDistribution& d) {
  if (samples.empty()) fail(Errc::degenerate_sample, "ks statistic of empty sample");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const int n = static_cast<int>(sorted.size());
  double dmax = 0.0;
  for (int i = 1; i <= n; ++i) {
    double f = dist_cdf(d, sorted[i - 1]);
    dmax = std::max(dmax, static_cast<double>(i) / n - f);
    dmax = std::max(dmax, f - static_cast<double>(i - 1) / n);
  }
  return dmax;
}

FittedDistribution fit_mle(const std::vector<double>& samples, Family family) {
  LogStats s = prepare(samples);
  FittedDistribution d;
  d.family = family;
  d.n = static_cast<int>(s.sorted.size());
  fit_params(s, family, d.p1, d.p2);
  double ll = 0.0;
  for (double x : s.sorted) ll += dist_log_pdf(d, x);
  d.log_likelihood = ll;
  constexpr double kFreeParams = 2.0;
  d.aic = 2.0 * kFreeParams - 2.0 * ll;
  d.bic = kFreeParams * std::log(static_cast<double>(d.n)) - 2.0 * ll;
  d.ks = ks_statistic(s.sorted, d);
  return d;
}

FitDiagnostics select_best(const std::vector<double>& samples) {
  FitDiagnostics diag;
  for (Family f : all_families()) {
    try {
      diag.fits.push_back(fit_mle(samples, f));
    } catch (const Error& e) {
      diag.failed.push_back(f);
      diag.failure_reasons.push_back(e.what());
    }
  }
  if (diag.fits.empty()) {
    fail(Errc::all_fits_failed, "no candidate family produced a fit");
  }
  auto rank_by = [&](auto key) {
    std::vector<int> idx(diag.fits.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) {
      double kx = key(diag.fits[x]), ky = key(diag.fits[y]);
      if (kx != ky) return kx < ky;
      return diag.fits[x].family < diag.fits[y].family;
    });
    std::vector<int> rank(idx.size());
    for (std::size_t pos = 0; pos < idx.size(); ++pos) rank[idx[pos]] = static_cast<int>(pos);
    return rank;
  };
  diag.aic_rank = rank_by([](const FittedDistribution& f) { return f.aic; });
  diag.bic_rank = rank_by([](const FittedDistribution& f) { return f.bic; });
  diag.ks_rank = rank_by([](const FittedDistribution& f) { return f.ks; });
  for (std::size_t i = 0; i < diag.fits.size(); ++i) {
    if (diag.aic_rank[i] == 0) diag.best_index = static_cast<int>(i);
  }
  return diag;
}

}  // namespace geomort
