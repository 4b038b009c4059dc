#pragma once

#include <cmath>

#include "stmix/common.hpp"
#include "stmix/rng.hpp"
#include "stmix/special.hpp"

// Polya-gamma sampling. PG(1, c) uses the exact alternating-series sampler of
// Devroye / Polson-Scott-Windle; integer b up to a crossover is drawn as a sum
// of b independent PG(1, c) variates, and larger b falls back to a Gaussian
// matched to the exact mean and variance (clamped to stay positive).

namespace stmix {

inline double pg_mean(double b, double c) {
  const double ac = std::abs(c);
  if (ac < 1e-8) return 0.25 * b;
  return (b / (2.0 * c)) * std::tanh(0.5 * c);
}

inline double pg_variance(double b, double c) {
  const double ac = std::abs(c);
  if (ac < 1e-4) return b / 24.0;
  const double ch = std::cosh(0.5 * ac);
  double sech2;
  if (ac < 700.0) {
    sech2 = 1.0 / (ch * ch);
  } else {
    const double e = std::exp(-0.5 * ac);
    sech2 = 4.0 * e * e;  // limiting form once cosh overflows
  }
  return b * (2.0 * std::tanh(0.5 * ac) - ac * sech2) / (4.0 * ac * ac * ac);
}

namespace detail {

inline constexpr double kPgTrunc = 0.64;

// Piecewise coefficients a_n(x) of the alternating series for J*(1, 0).
inline double pg_series_coef(int n, double x) {
  const double np = (n + 0.5) * kPi;
  if (x > kPgTrunc) {
    return np * std::exp(-0.5 * np * np * x);
  }
  const double h = n + 0.5;
  return std::pow(2.0 / (kPi * x), 1.5) * kPi * h * std::exp(-2.0 * h * h / x);
}

// P(proposal falls in the exponential right piece), i.e. p / (p + q).
inline double pg_right_mass(double z) {
  const double t = kPgTrunc;
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_normal_cdf(b);
  const double xa = x0 + z + log_normal_cdf(a);
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse-Gaussian(mu = 1/z, lambda = 1) truncated to (0, t].
inline double pg_rtigauss(RngStream& rng, double z) {
  const double t = kPgTrunc;
  double x = t + 1.0;
  if (z < 1.0 / t) {  // mu > t: one-over-chi-square proposal with exp tilt
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (rng.uniform01() < std::exp(-0.5 * z * z * x)) return x;
    }
  }
  const double mu = 1.0 / z;
  while (x > t) {
    const double v = rng.normal();
    const double y = v * v;
    const double muy = mu * y;
    x = mu + 0.5 * mu * muy - 0.5 * mu * std::sqrt(4.0 * muy + muy * muy);
    if (x <= 0.0) x = mu * mu / (mu + 0.5 * muy);  // numeric guard
    if (rng.uniform01() > mu / (mu + x)) x = mu * mu / x;
  }
  return x;
}

// Exact PG(1, c) draw.
inline double pg_draw_one(RngStream& rng, double c) {
  const double z = 0.5 * std::abs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double right_mass = pg_right_mass(z);
  for (;;) {
    double x;
    if (rng.uniform01() < right_mass) {
      x = kPgTrunc + rng.exponential() / fz;
    } else {
      x = pg_rtigauss(rng, z);
    }
    double s = pg_series_coef(0, x);
    const double y = rng.uniform01() * s;
    int n = 0;
    for (;;) {
      ++n;
      if (n % 2 == 1) {
        s -= pg_series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += pg_series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace detail

// Draw from PG(b, c) for integer b >= 1. Exact for b <= b_exact, Gaussian
// moment-matched above; the approximate branch resamples until positive.
inline double sample_polya_gamma(RngStream& rng, long long b, double c,
                                 long long b_exact = 50) {
  if (b <= 0) throw invalid_parameter_error("sample_polya_gamma: b must be >= 1");
  if (b <= b_exact) {
    double s = 0.0;
    for (long long i = 0; i < b; ++i) s += detail::pg_draw_one(rng, c);
    return s;
  }
  const double m = pg_mean(static_cast<double>(b), c);
  const double sd = std::sqrt(pg_variance(static_cast<double>(b), c));
  for (;;) {
    const double x = m + sd * rng.normal();
    if (x > 0.0) return x;
  }
}

}  // namespace stmix
