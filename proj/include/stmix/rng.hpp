#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stmix/common.hpp"
#include "stmix/special.hpp"

// Random-sampling kernels for the Gibbs sweep. Every sampler draws through
// RngStream so that a run is reproducible bit-for-bit from its 64-bit seed;
// distribution transforms are implemented here rather than taken from
// <random>, whose distributions are not specified across platforms.

namespace stmix {

namespace detail {
// SplitMix64 finaliser, used to derive independent child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent child stream; deterministic in (seed, id). Streams are not
  // shareable across threads; split once per worker instead.
  RngStream split(std::uint64_t id) const {
    return RngStream(detail::mix64(seed_ ^ detail::mix64(id + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform01(); }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double exponential() { return -std::log(uniform_pos()); }

  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    return r * std::cos(2.0 * kPi * uniform01());
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline double sample_normal(RngStream& rng, double mean, double var) {
  if (!(var >= 0.0) || !std::isfinite(mean))
    throw invalid_parameter_error("sample_normal: need finite mean, var >= 0");
  if (var == 0.0) return mean;
  return mean + std::sqrt(var) * rng.normal();
}

// Gamma(shape, rate) by Marsaglia-Tsang squeeze, boosted for shape < 1.
inline double sample_gamma(RngStream& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw invalid_parameter_error("sample_gamma: shape and rate must be > 0");
  if (shape < 1.0) {
    const double u = rng.uniform_pos();
    return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_pos();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

// IG(a, b): reciprocal of Gamma(a, rate = b); mean b / (a - 1) for a > 1.
inline double sample_inverse_gamma(RngStream& rng, double shape, double scale) {
  return 1.0 / sample_gamma(rng, shape, scale);
}

// Exact Binomial(n, p): CDF inversion for small n*p, Hormann's BTRS
// transformed rejection otherwise.
inline long long sample_binomial(RngStream& rng, long long n, double p) {
  if (n < 0 || !(p >= 0.0) || !(p <= 1.0))
    throw invalid_parameter_error("sample_binomial: need n >= 0, p in [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - sample_binomial(rng, n, 1.0 - p);

  const double np = static_cast<double>(n) * p;
  if (np < 10.0) {
    const double s = p / (1.0 - p);
    double f = std::pow(1.0 - p, static_cast<double>(n));
    double u = rng.uniform01();
    long long x = 0;
    while (u > f && x < n) {
      u -= f;
      ++x;
      f *= s * static_cast<double>(n - x + 1) / static_cast<double>(x);
    }
    return x;
  }

  // BTRS (Hormann 1993).
  const double nd = static_cast<double>(n);
  const double spq = std::sqrt(np * (1.0 - p));
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = np + 0.5;
  const double vr = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / (1.0 - p));
  const double m = std::floor((nd + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  for (;;) {
    const double u = rng.uniform01() - 0.5;
    double v = rng.uniform01();
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > nd) continue;
    if (us >= 0.07 && v <= vr) return static_cast<long long>(kd);
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound = h - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                         (kd - m) * lpq;
    if (v <= bound) return static_cast<long long>(kd);
  }
}

// Multinomial(n, p) by sequential binomial conditioning; p is normalised
// internally so callers may pass unnormalised non-negative weights.
inline std::vector<long long> sample_multinomial(RngStream& rng, long long n,
                                                 const Eigen::VectorXd& p) {
  const Eigen::Index k = p.size();
  if (k == 0) throw invalid_parameter_error("sample_multinomial: empty weights");
  std::vector<long long> out(static_cast<std::size_t>(k), 0);
  double rest = p.sum();
  if (!(rest > 0.0) || !std::isfinite(rest))
    throw invalid_parameter_error("sample_multinomial: weights must sum to > 0");
  long long remaining = n;
  for (Eigen::Index j = 0; j + 1 < k && remaining > 0; ++j) {
    if (!(p[j] >= 0.0))
      throw invalid_parameter_error("sample_multinomial: negative weight");
    double pj = p[j] / rest;
    if (pj > 1.0) pj = 1.0;
    const long long x = sample_binomial(rng, remaining, pj);
    out[static_cast<std::size_t>(j)] = x;
    remaining -= x;
    rest -= p[j];
    if (!(rest > 0.0)) break;
  }
  out[static_cast<std::size_t>(k - 1)] += remaining;
  return out;
}

// Categorical index sampled from unnormalised log-weights.
inline Eigen::Index sample_categorical_log(RngStream& rng, const Eigen::VectorXd& logw) {
  const double lse = log_sum_exp(logw);
  if (!std::isfinite(lse))
    throw numerical_error("sample_categorical_log: all weights are zero");
  const double u = rng.uniform01();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < logw.size(); ++i) {
    acc += std::exp(logw[i] - lse);
    if (u < acc) return i;
  }
  return logw.size() - 1;
}

namespace detail {

// Standard normal truncated to [lo, hi), hi > 0 guaranteed by the caller.
inline double truncnorm_std(RngStream& rng, double lo, double hi) {
  constexpr double kTailCut = 1.0;
  constexpr int kMaxAttempts = 100000;
  if (lo >= kTailCut) {
    // Tail region: exponential tilting (Robert 1995), with a uniform
    // proposal when the window is too narrow for the exponential to land.
    const double lambda = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
    if (hi - lo >= 1.5 / lambda) {
      for (int it = 0; it < kMaxAttempts; ++it) {
        const double x = lo + rng.exponential() / lambda;
        if (x >= hi) continue;
        const double d = x - lambda;
        if (rng.uniform01() < std::exp(-0.5 * d * d)) return x;
      }
    } else {
      for (int it = 0; it < kMaxAttempts; ++it) {
        const double x = rng.uniform(lo, hi);
        if (rng.uniform01() < std::exp(0.5 * (lo * lo - x * x))) return x;
      }
    }
    throw numerical_error("truncnorm: rejection cap hit in tail region");
  }
  const double pmass = normal_interval_prob(lo, hi);
  if (pmass >= 0.15 || hi == kInf || lo == -kInf) {
    for (int it = 0; it < kMaxAttempts; ++it) {
      const double z = rng.normal();
      if (z >= lo && z < hi) return z;
    }
    throw numerical_error("truncnorm: rejection cap hit in bulk region");
  }
  // Narrow finite window in the bulk: uniform proposal against the mode.
  const double z0 = std::clamp(0.0, lo, hi);
  for (int it = 0; it < kMaxAttempts; ++it) {
    const double x = rng.uniform(lo, hi);
    if (rng.uniform01() < std::exp(0.5 * (z0 * z0 - x * x))) return x;
  }
  throw numerical_error("truncnorm: rejection cap hit in narrow region");
}

}  // namespace detail

// Exact draw from N(mean, sd^2) truncated to [lo, hi); lo may be -inf and
// hi may be +inf.
inline double sample_truncnorm(RngStream& rng, double mean, double sd, double lo,
                               double hi) {
  if (!(sd > 0.0)) throw invalid_parameter_error("sample_truncnorm: sd must be > 0");
  if (!(lo < hi)) throw invalid_parameter_error("sample_truncnorm: need lo < hi");
  double zlo = (lo == -kInf) ? -kInf : (lo - mean) / sd;
  double zhi = (hi == kInf) ? kInf : (hi - mean) / sd;
  double z;
  if (zhi <= 0.0) {
    z = -detail::truncnorm_std(rng, -zhi, -zlo);
  } else {
    z = detail::truncnorm_std(rng, zlo, zhi);
  }
  double x = mean + sd * z;
  // Guard against round-off pushing the draw onto a boundary.
  if (x < lo) x = lo;
  if (x >= hi) x = std::nextafter(hi, lo);
  return x;
}

// Draw from N(P^{-1} h, P^{-1}) given the precision matrix P, via one
// Cholesky factorisation and triangular solves; P is never inverted.
inline Eigen::VectorXd sample_mvn_precision(RngStream& rng, const Eigen::VectorXd& h,
                                            const Eigen::MatrixXd& P) {
  const Eigen::Index d = h.size();
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    // Re-run a plain Cholesky to report which pivot failed.
    Eigen::MatrixXd A = P;
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = j; i < d; ++i) {
        double s = A(i, j);
        for (Eigen::Index q = 0; q < j; ++q) s -= A(i, q) * A(j, q);
        if (i == j) {
          if (!(s > 0.0))
            throw numerical_error("sample_mvn_precision: Cholesky failed at pivot " +
                                  std::to_string(j));
          A(j, j) = std::sqrt(s);
        } else {
          A(i, j) = s / A(j, j);
        }
      }
    }
    throw numerical_error("sample_mvn_precision: Cholesky failed");
  }
  Eigen::VectorXd mean = llt.solve(h);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
  return mean + llt.matrixU().solve(z);
}

}  // namespace stmix
