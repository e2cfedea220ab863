#pragma once

namespace geomort {

// Digamma via upward recurrence into the asymptotic region.
double digamma(double x);

// Trigamma via upward recurrence into the asymptotic region.
double trigamma(double x);

// Regularized lower incomplete gamma P(a, x): series expansion below the
// a+1 crossover, continued fraction above.
double gamma_p(double a, double x);

// Scaled complementary error function exp(u^2) erfc(u), u >= 0.
double erfcx(double u);

// Standard normal CDF, log-CDF (stable deep into the left tail), and
// inverse CDF (rational approximation polished by Halley steps).
double norm_cdf(double z);
double log_norm_cdf(double z);
double inv_norm_cdf(double p);

}  // namespace geomort
