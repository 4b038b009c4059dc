#pragma once

#include <array>
#include <cmath>
#include <cstdlib>

#include "stmix/common.hpp"

namespace stmix {

struct QuadratureConfig {
  double rel_tol = 1e-7;
  int max_depth = 50;
};

namespace detail {

template <class F>
double simpson(F&& f, double a, double fa, double b, double fb, double& fm) {
  const double m = 0.5 * (a + b);
  fm = f(m);
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(F&& f, double a, double fa, double m, double fm, double b, double fb,
             double whole, double eps, int depth) {
  double fl, fr;
  const double left = simpson(f, a, fa, m, fm, fl);
  const double right = simpson(f, m, fm, b, fb, fr);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
    return left + right + delta / 15.0;
  }
  const double ml = 0.5 * (a + m), mr = 0.5 * (m + b);
  return adapt(f, a, fa, ml, fl, m, fm, left, 0.5 * eps, depth - 1) +
         adapt(f, m, fm, mr, fr, b, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace detail

// Adaptive Simpson on a finite interval, seeded with 32 panels so interior
// features narrower than the interval are still found. The tolerance is
// relative to the coarse estimate of the total integral.
template <class F>
double integrate_adaptive(F&& f, double a, double b, const QuadratureConfig& cfg = {}) {
  if (!(a < b)) return 0.0;
  constexpr int n0 = 32;
  const double h = (b - a) / n0;
  std::array<double, n0 + 1> fx;
  std::array<double, n0> fm, s;
  for (int i = 0; i <= n0; ++i) fx[static_cast<std::size_t>(i)] = f(a + h * i);
  double total = 0.0, absTotal = 0.0;
  for (int i = 0; i < n0; ++i) {
    s[static_cast<std::size_t>(i)] =
        detail::simpson(f, a + h * i, fx[static_cast<std::size_t>(i)], a + h * (i + 1),
                        fx[static_cast<std::size_t>(i + 1)], fm[static_cast<std::size_t>(i)]);
    total += s[static_cast<std::size_t>(i)];
    absTotal += std::abs(s[static_cast<std::size_t>(i)]);
  }
  const double eps =
      (cfg.rel_tol * std::max(absTotal, std::abs(total)) + 1e-300) / n0;
  double result = 0.0;
  for (int i = 0; i < n0; ++i) {
    const double pa = a + h * i, pb = a + h * (i + 1);
    result += detail::adapt(f, pa, fx[static_cast<std::size_t>(i)], 0.5 * (pa + pb),
                            fm[static_cast<std::size_t>(i)], pb,
                            fx[static_cast<std::size_t>(i + 1)],
                            s[static_cast<std::size_t>(i)], eps, cfg.max_depth);
  }
  return result;
}

}  // namespace stmix
