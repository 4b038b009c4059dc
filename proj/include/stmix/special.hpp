#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "stmix/common.hpp"

// Scalar special functions shared by the model math and the samplers.

namespace stmix {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// Upper tail P(Z > z), full relative precision out to z ~ 37.
inline double normal_sf(double z) { return 0.5 * std::erfc(z * M_SQRT1_2); }

// log P(Z > z); switches to the continued-fraction asymptotic once erfc underflows.
inline double log_normal_sf(double z) {
  if (z < 35.0) {
    double s = normal_sf(z);
    if (s > 0.0) return std::log(s);
  }
  const double z2 = 1.0 / (z * z);
  return -0.5 * z * z - kLogSqrt2Pi - std::log(z) +
         std::log1p(-z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2)));
}

inline double log_normal_cdf(double z) { return log_normal_sf(-z); }

// P(a < Z <= b) for standardised endpoints, avoiding cancellation when both
// endpoints sit in the same tail.
inline double normal_interval_prob(double za, double zb) {
  if (!(za <= zb)) return 0.0;
  if (za > 0.0) return normal_sf(za) - normal_sf(zb);
  if (zb < 0.0) return normal_sf(-zb) - normal_sf(-za);
  return normal_cdf(zb) - normal_cdf(za);
}

// log P(a < Z <= b); finite whenever the interval has any representable mass,
// falling back to the asymptotic log-tail difference far out.
inline double log_normal_interval_prob(double za, double zb) {
  if (!(za <= zb)) return -kInf;
  double p = normal_interval_prob(za, zb);
  if (p > 0.0) return std::log(p);
  // Both endpoints deep in one tail: work with log survival functions.
  double lo = za, hi = zb;
  if (zb < 0.0) {
    lo = -zb;
    hi = -za;
  }
  const double la = log_normal_sf(lo);
  const double lb = (hi == kInf) ? -kInf : log_normal_sf(hi);
  const double d = lb - la;
  if (d >= 0.0) return -kInf;
  return la + std::log1p(-std::exp(d));
}

// CDF of LN(loc, scale2) at y >= 0.
inline double lognormal_cdf(double y, double loc, double scale2) {
  if (!std::isfinite(loc) || !(scale2 > 0.0))
    throw invalid_parameter_error("lognormal_cdf: loc must be finite and scale2 > 0");
  if (!(y >= 0.0)) throw invalid_parameter_error("lognormal_cdf: y must be >= 0");
  if (y == 0.0) return 0.0;
  if (y == kInf) return 1.0;
  return normal_cdf((std::log(y) - loc) / std::sqrt(scale2));
}

inline double lognormal_pdf(double y, double loc, double scale2) {
  if (!std::isfinite(loc) || !(scale2 > 0.0))
    throw invalid_parameter_error("lognormal_pdf: loc must be finite and scale2 > 0");
  if (!(y >= 0.0)) throw invalid_parameter_error("lognormal_pdf: y must be >= 0");
  if (y == 0.0 || y == kInf) return 0.0;
  const double s = std::sqrt(scale2);
  const double z = (std::log(y) - loc) / s;
  return normal_pdf(z) / (s * y);
}

// P(a < Y <= b) for Y ~ LN(loc, scale2) with 0 <= a < b <= inf.
inline double lognormal_interval_prob(double a, double b, double loc, double scale2) {
  const double s = std::sqrt(scale2);
  const double za = (a <= 0.0) ? -kInf : (std::log(a) - loc) / s;
  const double zb = (b == kInf) ? kInf : (std::log(b) - loc) / s;
  return normal_interval_prob(za, zb);
}

inline double log_lognormal_interval_prob(double a, double b, double loc, double scale2) {
  const double s = std::sqrt(scale2);
  const double za = (a <= 0.0) ? -kInf : (std::log(a) - loc) / s;
  const double zb = (b == kInf) ? kInf : (std::log(b) - loc) / s;
  return log_normal_interval_prob(za, zb);
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace stmix
