#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "stmix/common.hpp"
#include "stmix/quadrature.hpp"
#include "stmix/special.hpp"
#include "stmix/types.hpp"

// Deterministic model mathematics: mixing proportions, the log-normal mixture
// CDF/PDF, the grouped-data likelihood, and the posterior income measures.

namespace stmix {

// Component locations and scales for one cell: loc_k = x' beta_k.
struct CellMixture {
  Eigen::VectorXd loc;
  Eigen::VectorXd scale2;
};

inline CellMixture cell_mixture(const ParamState& s, const Eigen::VectorXd& x) {
  const int K = s.components();
  CellMixture cm;
  cm.loc.resize(K);
  cm.scale2 = s.sigma2;
  for (int k = 0; k < K; ++k) cm.loc[k] = s.beta[static_cast<std::size_t>(k)].dot(x);
  return cm;
}

// Softmax with max subtraction; pred[0] is the pinned reference predictor.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& pred) {
  const double m = pred.maxCoeff();
  Eigen::VectorXd p = (pred.array() - m).exp();
  return p / p.sum();
}

// Linear predictors of the mixing proportions for a sampled area; the
// centred spatial effect already carries mu_k, and component 1 is pinned at 0.
inline Eigen::VectorXd mixing_predictors(const ParamState& s, int area, int period) {
  const int K = s.components();
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(K);
  for (int k = 1; k < K; ++k) pred[k] = s.u(area, k - 1) + s.eta(period, k - 1);
  return pred;
}

inline Eigen::VectorXd mixing_proportions(const ParamState& s, int area, int period) {
  return softmax(mixing_predictors(s, area, period));
}

// Same, with spatial effects supplied explicitly (interpolated areas).
inline Eigen::VectorXd mixing_proportions_with_effects(const ParamState& s,
                                                       const Eigen::VectorXd& u_row,
                                                       const Eigen::VectorXd& eta_row) {
  const int K = s.components();
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(K);
  for (int k = 1; k < K; ++k) pred[k] = u_row[k - 1] + eta_row[k - 1];
  return softmax(pred);
}

inline double mixture_cdf(const CellMixture& cm, const Eigen::VectorXd& pi, double y) {
  double f = 0.0;
  for (Eigen::Index k = 0; k < pi.size(); ++k)
    f += pi[k] * lognormal_cdf(y, cm.loc[k], cm.scale2[k]);
  return f;
}

inline double mixture_pdf(const CellMixture& cm, const Eigen::VectorXd& pi, double y) {
  double f = 0.0;
  for (Eigen::Index k = 0; k < pi.size(); ++k)
    f += pi[k] * lognormal_pdf(y, cm.loc[k], cm.scale2[k]);
  return f;
}

// P(a < Y <= b) under the mixture, tail-safe per component.
inline double mixture_interval_prob(const CellMixture& cm, const Eigen::VectorXd& pi,
                                    double a, double b) {
  double p = 0.0;
  for (Eigen::Index k = 0; k < pi.size(); ++k)
    p += pi[k] * lognormal_interval_prob(a, b, cm.loc[k], cm.scale2[k]);
  return p;
}

// Average income: exact closed form, no quadrature.
inline double average_income(const CellMixture& cm, const Eigen::VectorXd& pi) {
  double ai = 0.0;
  for (Eigen::Index k = 0; k < pi.size(); ++k)
    ai += pi[k] * std::exp(cm.loc[k] + 0.5 * cm.scale2[k]);
  return ai;
}

// Quantile of the mixture by bracketing + bisection in log income. The
// initial bracket comes from the component quantiles (9 sd covers any
// probability the callers ask for); tol is relative precision on the result.
inline double mixture_quantile(const CellMixture& cm, const Eigen::VectorXd& pi,
                               double prob, double tol = 1e-11) {
  if (!(tol > 0.0)) throw invalid_parameter_error("mixture_quantile: tol must be > 0");
  if (!(prob > 0.0) || !(prob < 1.0))
    throw invalid_parameter_error("mixture_quantile: prob must lie in (0,1)");
  double llo = kInf, lhi = -kInf;
  for (Eigen::Index k = 0; k < pi.size(); ++k) {
    const double sd = std::sqrt(cm.scale2[k]);
    llo = std::min(llo, cm.loc[k] - 9.0 * sd);
    lhi = std::max(lhi, cm.loc[k] + 9.0 * sd);
  }
  auto at = [&](double ly) { return mixture_cdf(cm, pi, std::exp(ly)); };
  int expand = 0;
  while (at(llo) >= prob || at(lhi) <= prob) {
    const double w = lhi - llo;
    llo -= w;
    lhi += w;
    if (++expand > 60)
      throw numerical_error("mixture_quantile: bracket failure after expansion, prob=" +
                            std::to_string(prob));
  }
  while (lhi - llo > tol) {
    const double mid = 0.5 * (llo + lhi);
    if (at(mid) < prob)
      llo = mid;
    else
      lhi = mid;
  }
  return std::exp(0.5 * (llo + lhi));
}

inline double median_income(const CellMixture& cm, const Eigen::VectorXd& pi,
                            double tol = 1e-11) {
  return mixture_quantile(cm, pi, 0.5, tol);
}

// Gini index: AI^{-1} * integral of F(1-F) over (0, z_max), with z_max the
// mixture quantile at 1 - 1e-9 so the neglected tail mass is below 1e-9 of
// the integrand scale. The integration is segmented at mixture quantiles so
// each adaptive pass sees a well-scaled piece even when the CDF is nearly a
// step (tiny component scales).
inline double gini_index(const CellMixture& cm, const Eigen::VectorXd& pi,
                         const QuadratureConfig& quad = {}) {
  const double ai = average_income(cm, pi);
  if (!std::isfinite(ai) || !(ai > 0.0))
    throw numerical_error("gini_index: average income not finite and positive");
  auto integrand = [&](double z) {
    const double f = mixture_cdf(cm, pi, z);
    return f * (1.0 - f);
  };
  const double anchor_probs[] = {1e-6,  0.001, 0.01, 0.05, 0.25, 0.5,
                                 0.75,  0.95,  0.99, 0.999, 1.0 - 1e-6,
                                 1.0 - 1e-9};
  double total = 0.0;
  double lo = 0.0;
  for (double p : anchor_probs) {
    const double hi = mixture_quantile(cm, pi, p, 1e-9);
    if (hi > lo) {
      total += integrate_adaptive(integrand, lo, hi, quad);
      lo = hi;
    }
  }
  // Above z_max the integrand is (1 - F) to within 1e-9 relative; its
  // integral is the mixture's partial expectation E[(Y - z_max)+], closed
  // form per component. Heavy-tailed scales would otherwise lose ~1e-5.
  const double zmax = lo;
  const double lz = std::log(zmax);
  for (Eigen::Index k = 0; k < pi.size(); ++k) {
    const double sd = std::sqrt(cm.scale2[k]);
    const double d = (lz - cm.loc[k]) / sd;
    total += pi[k] * (std::exp(cm.loc[k] + 0.5 * cm.scale2[k]) * normal_cdf(sd - d) -
                      zmax * normal_sf(d));
  }
  return total / ai;
}

// Sum over observed cells of N_itg * log bin mass. A bin holding positive
// count but zero mass yields -inf (flagged value, not a throw); missing cells
// contribute nothing.
inline double grouped_log_likelihood(const GroupedPanel& panel, const ParamState& state) {
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  double ll = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < T; ++t) {
      const CellCounts& c = panel.cell(i, t);
      if (!c.observed || c.total == 0) continue;
      const CellMixture cm = cell_mixture(state, panel.covariates(i, t));
      const Eigen::VectorXd pi = mixing_proportions(state, i, t);
      const int G = panel.classes().bins(t);
      for (int g = 0; g < G; ++g) {
        const long long n = c.counts[static_cast<std::size_t>(g)];
        if (n == 0) continue;
        const double p = mixture_interval_prob(cm, pi, panel.classes().lower(t, g),
                                               panel.classes().upper(t, g));
        if (!(p > 0.0)) return -kInf;
        ll += static_cast<double>(n) * std::log(p);
      }
    }
  }
  return ll;
}

}  // namespace stmix
