#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stmix/common.hpp"
#include "stmix/mixture.hpp"
#include "stmix/polya_gamma.hpp"
#include "stmix/rho_grid.hpp"
#include "stmix/rng.hpp"
#include "stmix/special.hpp"
#include "stmix/types.hpp"

// The Gibbs sweep under the centred parameterisation, with the ρ-grid
// precomputation and the three effect-structure variants. Update order within
// a sweep: s -> omega -> u -> eta -> mu -> tau -> alpha -> eta0 -> rho ->
// latent incomes / beta / sigma2.

namespace stmix {

namespace detail {

inline int cell_index(int area, int period, int T) { return area * T + period; }

// Mixing predictors for every component at one sampled cell, reference first.
inline void fill_predictors(const ParamState& st, int i, int t, Eigen::VectorXd& pred) {
  const int K = st.components();
  pred.resize(K);
  pred[0] = 0.0;
  for (int k = 1; k < K; ++k) pred[k] = st.u(i, k - 1) + st.eta(t, k - 1);
}

// C_itk = log sum_{l != k} exp(pred_l).
inline double log_sum_exp_excluding(const Eigen::VectorXd& pred, int k) {
  double m = -kInf;
  for (Eigen::Index l = 0; l < pred.size(); ++l)
    if (l != k && pred[l] > m) m = pred[l];
  double s = 0.0;
  for (Eigen::Index l = 0; l < pred.size(); ++l)
    if (l != k) s += std::exp(pred[l] - m);
  return m + std::log(s);
}

}  // namespace detail

inline LatentState make_latent_state(const GroupedPanel& panel, int K) {
  LatentState lat;
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  lat.s.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(T));
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < T; ++t) {
      const CellCounts& c = panel.cell(i, t);
      auto& s = lat.s[static_cast<std::size_t>(detail::cell_index(i, t, T))];
      if (c.observed) s = Eigen::MatrixXd::Zero(panel.classes().bins(t), K);
    }
  }
  lat.s_cell = Eigen::MatrixXd::Zero(m * T, K);
  lat.omega = Eigen::MatrixXd::Zero(m * T, K - 1);
  return lat;
}

// Component allocation counts: s_itg ~ M(N_itg, p_itg) with
// p_itgk proportional to pi_itk * bin mass under component k.
inline void update_component_counts(RngStream& rng, const GroupedPanel& panel,
                                    const ParamState& st, LatentState& lat) {
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  const int K = st.components();
  Eigen::VectorXd pred, logw(K);
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < T; ++t) {
      const CellCounts& c = panel.cell(i, t);
      const int cell = detail::cell_index(i, t, T);
      if (!c.observed) continue;
      auto& s = lat.s[static_cast<std::size_t>(cell)];
      s.setZero();
      lat.s_cell.row(cell).setZero();
      if (c.total == 0) continue;
      const Eigen::VectorXd x = panel.covariates(i, t);
      const CellMixture cm = cell_mixture(st, x);
      detail::fill_predictors(st, i, t, pred);
      const double lse = log_sum_exp(pred);
      const int G = panel.classes().bins(t);
      for (int g = 0; g < G; ++g) {
        const long long n = c.counts[static_cast<std::size_t>(g)];
        if (n == 0) continue;
        if (K == 1) {
          s(g, 0) = static_cast<double>(n);
          lat.s_cell(cell, 0) += static_cast<double>(n);
          continue;
        }
        const double lo = panel.classes().lower(t, g);
        const double hi = panel.classes().upper(t, g);
        for (int k = 0; k < K; ++k)
          logw[k] = (pred[k] - lse) +
                    log_lognormal_interval_prob(lo, hi, cm.loc[k], cm.scale2[k]);
        if (!std::isfinite(logw.maxCoeff()))
          throw numerical_error(
              "update_component_counts: no component carries mass in cell (area " +
              std::to_string(panel.area_ids()[static_cast<std::size_t>(i)]) +
              ", period " + std::to_string(t + 1) + ", bin " + std::to_string(g + 1) +
              ")");
        const double lm = logw.maxCoeff();
        Eigen::VectorXd w = (logw.array() - lm).exp();
        const std::vector<long long> draw = sample_multinomial(rng, n, w);
        for (int k = 0; k < K; ++k) {
          s(g, k) = static_cast<double>(draw[static_cast<std::size_t>(k)]);
          lat.s_cell(cell, k) += s(g, k);
        }
      }
    }
  }
}

// omega_itk ~ PG(N_it, u_ik + eta_tk - C_itk); cells with N_it = 0 skipped.
inline void update_omega(RngStream& rng, const GroupedPanel& panel, const ParamState& st,
                         LatentState& lat, long long pg_exact_max) {
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  const int K = st.components();
  Eigen::VectorXd pred;
  for (int k = 1; k < K; ++k) {
    for (int i = 0; i < m; ++i) {
      for (int t = 0; t < T; ++t) {
        const CellCounts& c = panel.cell(i, t);
        const int cell = detail::cell_index(i, t, T);
        if (!c.observed || c.total == 0) {
          lat.omega(cell, k - 1) = 0.0;
          continue;
        }
        detail::fill_predictors(st, i, t, pred);
        const double psi = pred[k] - detail::log_sum_exp_excluding(pred, k);
        lat.omega(cell, k - 1) = sample_polya_gamma(rng, c.total, psi, pg_exact_max);
      }
    }
  }
}

// Joint draw of the centred spatial effects u_k.
inline void update_u(RngStream& rng, const GroupedPanel& panel, ParamState& st,
                     const LatentState& lat, const RhoGrid* grid, EffectVariant variant) {
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  const int K = st.components();
  Eigen::VectorXd pred;
  for (int k = 1; k < K; ++k) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
      for (int t = 0; t < T; ++t) {
        const CellCounts& c = panel.cell(i, t);
        if (!c.observed || c.total == 0) continue;
        const int cell = detail::cell_index(i, t, T);
        const double w = lat.omega(cell, k - 1);
        detail::fill_predictors(st, i, t, pred);
        const double cit = detail::log_sum_exp_excluding(pred, k);
        diag[i] += w;
        h[i] += (lat.s_cell(cell, k) - 0.5 * static_cast<double>(c.total)) -
                w * (st.eta(t, k - 1) - cit);
      }
    }
    Eigen::MatrixXd P;
    if (variant == EffectVariant::two_way) {
      P = (st.tau[k - 1] * Eigen::VectorXd::Ones(m) + diag).asDiagonal();
      h.array() += st.mu[k - 1] * st.tau[k - 1];
    } else {
      const int j = grid->nearest_index(st.rho[k - 1]);
      P = st.tau[k - 1] * grid->q11(j);
      P.diagonal() += diag;
      h += st.mu[k - 1] * st.tau[k - 1] * grid->q11_row_sums(j);
    }
    st.u.col(k - 1) = sample_mvn_precision(rng, h, P);
  }
}

// Single-site temporal-effect updates, t = 1..T in order. Random-walk prior
// for the proposed variant, iid zero-mean for two-way; the spatial variant
// has no temporal block.
inline void update_eta(RngStream& rng, const GroupedPanel& panel, ParamState& st,
                       const LatentState& lat, EffectVariant variant) {
  if (variant == EffectVariant::spatial_only) return;
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  const int K = st.components();
  Eigen::VectorXd pred;
  for (int k = 1; k < K; ++k) {
    const double alpha = st.alpha[k - 1];
    for (int t = 0; t < T; ++t) {
      double sw = 0.0, sd = 0.0;
      for (int i = 0; i < m; ++i) {
        const CellCounts& c = panel.cell(i, t);
        if (!c.observed || c.total == 0) continue;
        const int cell = detail::cell_index(i, t, T);
        const double w = lat.omega(cell, k - 1);
        detail::fill_predictors(st, i, t, pred);
        const double cit = detail::log_sum_exp_excluding(pred, k);
        sw += w;
        sd += (lat.s_cell(cell, k) - 0.5 * static_cast<double>(c.total)) -
              w * (st.u(i, k - 1) - cit);
      }
      double prec, num;
      if (variant == EffectVariant::two_way) {
        prec = sw + 1.0 / alpha;
        num = sd;
      } else {
        const bool last = (t == T - 1);
        prec = sw + (last ? 1.0 : 2.0) / alpha;
        double e;
        if (t == 0) {
          e = st.eta0[k - 1] + (T > 1 ? st.eta(1, k - 1) : 0.0);
        } else if (last) {
          e = st.eta(t - 1, k - 1);
        } else {
          e = st.eta(t - 1, k - 1) + st.eta(t + 1, k - 1);
        }
        num = sd + e / alpha;
      }
      const double v = 1.0 / prec;
      st.eta(t, k - 1) = sample_normal(rng, v * num, v);
    }
  }
}

inline void update_mu(RngStream& rng, const GroupedPanel& panel, ParamState& st,
                      const RhoGrid* grid, const PriorConfig& prior,
                      EffectVariant variant) {
  const int m = panel.sampled_areas();
  const int K = st.components();
  for (int k = 1; k < K; ++k) {
    double qsum, uq;
    if (variant == EffectVariant::two_way) {
      qsum = static_cast<double>(m);
      uq = st.u.col(k - 1).sum();
    } else {
      const int j = grid->nearest_index(st.rho[k - 1]);
      qsum = grid->q11_total(j);
      uq = st.u.col(k - 1).dot(grid->q11_row_sums(j));
    }
    const double v = 1.0 / (st.tau[k - 1] * qsum + 1.0 / prior.c_mu);
    st.mu[k - 1] = sample_normal(rng, v * st.tau[k - 1] * uq, v);
  }
}

inline void update_tau(RngStream& rng, const GroupedPanel& panel, ParamState& st,
                       const RhoGrid* grid, const PriorConfig& prior,
                       EffectVariant variant) {
  const int m = panel.sampled_areas();
  const int K = st.components();
  for (int k = 1; k < K; ++k) {
    const Eigen::VectorXd v =
        st.u.col(k - 1).array() - st.mu[k - 1];
    double qf;
    if (variant == EffectVariant::two_way) {
      qf = v.squaredNorm();
    } else {
      double a1, a2, a3;
      grid->quad_form_parts(v, &a1, &a2, &a3);
      qf = grid->quad_form(grid->nearest_index(st.rho[k - 1]), a1, a2, a3);
    }
    st.tau[k - 1] = sample_gamma(rng, prior.a_tau + 0.5 * m, prior.b_tau + 0.5 * qf);
  }
}

// Random-walk innovation variance; squared increments, eta_0k the initial
// location (two-way: iid effects around zero).
inline void update_alpha(RngStream& rng, ParamState& st, const PriorConfig& prior,
                         EffectVariant variant) {
  if (variant == EffectVariant::spatial_only) return;
  const int K = st.components();
  const int T = static_cast<int>(st.eta.rows());
  for (int k = 1; k < K; ++k) {
    double ss = 0.0;
    if (variant == EffectVariant::two_way) {
      ss = st.eta.col(k - 1).squaredNorm();
    } else {
      double prev = st.eta0[k - 1];
      for (int t = 0; t < T; ++t) {
        const double d = st.eta(t, k - 1) - prev;
        ss += d * d;
        prev = st.eta(t, k - 1);
      }
    }
    st.alpha[k - 1] =
        sample_inverse_gamma(rng, prior.a_alpha + 0.5 * T, prior.b_alpha + 0.5 * ss);
  }
}

inline void update_eta0(RngStream& rng, ParamState& st, const PriorConfig& prior,
                        EffectVariant variant) {
  if (variant != EffectVariant::proposed) return;
  const int K = st.components();
  for (int k = 1; k < K; ++k) {
    const double v = 1.0 / (1.0 / st.alpha[k - 1] + 1.0 / prior.c_eta);
    st.eta0[k - 1] = sample_normal(rng, v * st.eta(0, k - 1) / st.alpha[k - 1], v);
  }
}

// Griddy Gibbs for the SAR correlation: categorical over the grid with
// log-weights 0.5 log|Q11(r)| - tau/2 (u - mu)' Q11(r) (u - mu).
inline void update_rho(RngStream& rng, ParamState& st, const RhoGrid* grid,
                       EffectVariant variant) {
  if (variant == EffectVariant::two_way) return;
  const int K = st.components();
  const int R = grid->points();
  Eigen::VectorXd logw(R);
  for (int k = 1; k < K; ++k) {
    const Eigen::VectorXd v = st.u.col(k - 1).array() - st.mu[k - 1];
    double a1, a2, a3;
    grid->quad_form_parts(v, &a1, &a2, &a3);
    for (int j = 0; j < R; ++j) {
      logw[j] = 0.5 * grid->log_det_q11(j) -
                0.5 * st.tau[k - 1] * grid->quad_form(j, a1, a2, a3);
    }
    const Eigen::Index j = sample_categorical_log(rng, logw);
    st.rho[k - 1] = grid->value(static_cast<int>(j));
  }
}

// Latent log-incomes (streamed into sufficient statistics, never stored)
// followed by the conjugate draws of beta_k and sigma2_k.
inline void update_regression(RngStream& rng, const GroupedPanel& panel, ParamState& st,
                              const LatentState& lat, const PriorConfig& prior) {
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  const int K = st.components();
  const int p1 = panel.covariate_dim();
  std::vector<Eigen::MatrixXd> ss_xx(static_cast<std::size_t>(K),
                                     Eigen::MatrixXd::Zero(p1, p1));
  std::vector<Eigen::VectorXd> ss_xy(static_cast<std::size_t>(K),
                                     Eigen::VectorXd::Zero(p1));
  Eigen::VectorXd ss_yy = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd s_count = Eigen::VectorXd::Zero(K);
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < T; ++t) {
      const CellCounts& c = panel.cell(i, t);
      if (!c.observed || c.total == 0) continue;
      const int cell = detail::cell_index(i, t, T);
      const auto& s = lat.s[static_cast<std::size_t>(cell)];
      const Eigen::VectorXd x = panel.covariates(i, t);
      const int G = panel.classes().bins(t);
      for (int k = 0; k < K; ++k) {
        const double loc = st.beta[static_cast<std::size_t>(k)].dot(x);
        const double sd = std::sqrt(st.sigma2[k]);
        double cell_n = 0.0, cell_y = 0.0, cell_y2 = 0.0;
        for (int g = 0; g < G; ++g) {
          const long long n = static_cast<long long>(s(g, k));
          if (n == 0) continue;
          const double zl = panel.classes().lower(t, g);
          const double zu = panel.classes().upper(t, g);
          const double llo = (zl <= 0.0) ? -kInf : std::log(zl);
          const double lhi = (zu == kInf) ? kInf : std::log(zu);
          for (long long q = 0; q < n; ++q) {
            const double y = sample_truncnorm(rng, loc, sd, llo, lhi);
            cell_y += y;
            cell_y2 += y * y;
          }
          cell_n += static_cast<double>(n);
        }
        if (cell_n > 0.0) {
          ss_xx[static_cast<std::size_t>(k)].noalias() += cell_n * (x * x.transpose());
          ss_xy[static_cast<std::size_t>(k)].noalias() += cell_y * x;
          ss_yy[k] += cell_y2;
          s_count[k] += cell_n;
        }
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd P = ss_xx[static_cast<std::size_t>(k)] / st.sigma2[k];
    P.diagonal().array() += 1.0 / prior.c_beta;
    const Eigen::VectorXd h = ss_xy[static_cast<std::size_t>(k)] / st.sigma2[k];
    st.beta[static_cast<std::size_t>(k)] = sample_mvn_precision(rng, h, P);
    const Eigen::VectorXd& b = st.beta[static_cast<std::size_t>(k)];
    double rss = ss_yy[k] - 2.0 * b.dot(ss_xy[static_cast<std::size_t>(k)]) +
                 b.dot(ss_xx[static_cast<std::size_t>(k)] * b);
    if (rss < 0.0) rss = 0.0;
    st.sigma2[k] = sample_inverse_gamma(rng, prior.a_sigma + 0.5 * s_count[k],
                                        prior.b_sigma + 0.5 * rss);
  }
}

inline void gibbs_sweep(RngStream& rng, const GroupedPanel& panel, ParamState& st,
                        LatentState& lat, const RhoGrid* grid, const ModelConfig& cfg) {
  update_component_counts(rng, panel, st, lat);
  update_omega(rng, panel, st, lat, cfg.mcmc.pg_exact_max);
  update_u(rng, panel, st, lat, grid, cfg.variant);
  update_eta(rng, panel, st, lat, cfg.variant);
  update_mu(rng, panel, st, grid, cfg.prior, cfg.variant);
  update_tau(rng, panel, st, grid, cfg.prior, cfg.variant);
  update_alpha(rng, st, cfg.prior, cfg.variant);
  update_eta0(rng, st, cfg.prior, cfg.variant);
  update_rho(rng, st, grid, cfg.variant);
  update_regression(rng, panel, st, lat, cfg.prior);
}

// Deterministic starting point: intercepts from a coarse quantile spread of
// the pooled bin log-midpoints, diffuse-but-sane scales, zero effects.
inline ParamState initial_state(const GroupedPanel& panel, const ModelConfig& cfg,
                                const RhoGrid* grid) {
  const int K = cfg.components;
  const int p1 = panel.covariate_dim();
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  ParamState st = ParamState::zeros(K, p1, m, T);
  std::vector<std::pair<double, double>> mids;  // (log mid, weight)
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < T; ++t) {
      const CellCounts& c = panel.cell(i, t);
      if (!c.observed) continue;
      for (int g = 0; g < panel.classes().bins(t); ++g) {
        const long long n = c.counts[static_cast<std::size_t>(g)];
        if (n == 0) continue;
        const double lo = panel.classes().lower(t, g);
        const double hi = panel.classes().upper(t, g);
        double mid;
        if (hi == kInf) {
          mid = (lo > 0.0) ? lo * 4.0 / 3.0 : 1.0;
        } else {
          mid = 0.5 * (lo + hi);
        }
        if (mid <= 0.0) mid = 0.5 * hi;
        mids.emplace_back(std::log(mid), static_cast<double>(n));
      }
    }
  }
  std::sort(mids.begin(), mids.end());
  double wtot = 0.0;
  for (const auto& mw : mids) wtot += mw.second;
  for (int k = 0; k < K; ++k) {
    double target = (k + 0.5) / K * wtot;
    double acc = 0.0;
    double q = mids.empty() ? 0.0 : mids.back().first;
    for (const auto& mw : mids) {
      acc += mw.second;
      if (acc >= target) {
        q = mw.first;
        break;
      }
    }
    st.beta[static_cast<std::size_t>(k)][0] = q;
  }
  st.sigma2.setConstant(0.5);
  if (K > 1) {
    st.tau.setOnes();
    const double am = (cfg.prior.a_alpha > 1.0)
                          ? cfg.prior.b_alpha / (cfg.prior.a_alpha - 1.0)
                          : 1.0;
    st.alpha.setConstant(am);
    const double rho0 =
        (grid != nullptr) ? grid->value(grid->nearest_index(0.5)) : 0.5;
    st.rho.setConstant(rho0);
  }
  return st;
}

// Run one chain: burn-in, then `samples` sweeps keeping every `thin`-th state.
// The caller may pass a prebuilt grid; otherwise one is built here (not needed
// for the two-way variant).
inline PosteriorDraws run_chain(const GroupedPanel& panel, const ModelConfig& cfg,
                                const SpatialGraph& graph, const RhoGrid* grid = nullptr) {
  cfg.validate();
  if (cfg.variant == EffectVariant::spatial_only && panel.periods() != 1)
    throw configuration_error(
        "run_chain: the spatial-only variant fits one period per chain; "
        "use run_spatial_only");
  if (graph.total_areas() != panel.total_areas() ||
      graph.sampled_areas() != panel.sampled_areas())
    throw data_error("run_chain: graph and panel shapes disagree");
  RhoGrid local_grid_storage = [&] {
    if (grid == nullptr && cfg.variant != EffectVariant::two_way && cfg.components > 1)
      return RhoGrid(graph, cfg.rho_grid);
    return RhoGrid(SpatialGraph(1, 1, {{}}, {0}), RhoGridConfig{1, 0.5, 0.5});
  }();
  if (grid == nullptr && cfg.variant != EffectVariant::two_way && cfg.components > 1)
    grid = &local_grid_storage;

  RngStream rng(cfg.mcmc.seed);
  ParamState st = initial_state(panel, cfg, grid);
  LatentState lat = make_latent_state(panel, cfg.components);
  PosteriorDraws out;
  out.config = cfg;
  out.m = panel.sampled_areas();
  out.T = panel.periods();
  out.p1 = panel.covariate_dim();
  const long long total = cfg.mcmc.burn_in + cfg.mcmc.samples;
  for (long long it = 1; it <= total; ++it) {
    try {
      gibbs_sweep(rng, panel, st, lat, grid, cfg);
    } catch (const numerical_error& e) {
      throw numerical_error("sweep " + std::to_string(it) + ": " + e.what());
    }
    if (it > cfg.mcmc.burn_in && (it - cfg.mcmc.burn_in) % cfg.mcmc.thin == 0)
      out.states.push_back(st);
  }
  return out;
}

// Spatial-only: one independent chain per period, sharing the configuration.
inline std::vector<PosteriorDraws> run_spatial_only(const GroupedPanel& panel,
                                                    const ModelConfig& cfg,
                                                    const SpatialGraph& graph,
                                                    const RhoGrid* grid = nullptr) {
  std::vector<PosteriorDraws> out;
  RngStream seeder(cfg.mcmc.seed);
  for (int t = 0; t < panel.periods(); ++t) {
    ModelConfig c = cfg;
    c.variant = EffectVariant::spatial_only;
    c.mcmc.seed = seeder.split(static_cast<std::uint64_t>(t) + 1).seed();
    out.push_back(run_chain(panel.single_period(t), c, graph, grid));
  }
  return out;
}

// Log joint density (likelihood + priors) up to additive constants; used for
// the finiteness diagnostics over stored draws.
inline double log_posterior(const GroupedPanel& panel, const ParamState& st,
                            const ModelConfig& cfg, const RhoGrid* grid) {
  const int K = st.components();
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  double lp = grouped_log_likelihood(panel, st);
  const PriorConfig& pr = cfg.prior;
  for (int k = 0; k < K; ++k) {
    lp += -0.5 * st.beta[static_cast<std::size_t>(k)].squaredNorm() / pr.c_beta;
    lp += -(pr.a_sigma + 1.0) * std::log(st.sigma2[k]) - pr.b_sigma / st.sigma2[k];
  }
  for (int k = 1; k < K; ++k) {
    const double mu = st.mu[k - 1], tau = st.tau[k - 1];
    lp += -0.5 * mu * mu / pr.c_mu;
    lp += (pr.a_tau - 1.0) * std::log(tau) - pr.b_tau * tau;
    const Eigen::VectorXd v = st.u.col(k - 1).array() - mu;
    if (cfg.variant == EffectVariant::two_way) {
      lp += 0.5 * m * std::log(tau) - 0.5 * tau * v.squaredNorm();
    } else {
      const int j = grid->nearest_index(st.rho[k - 1]);
      double a1, a2, a3;
      grid->quad_form_parts(v, &a1, &a2, &a3);
      lp += 0.5 * (m * std::log(tau) + grid->log_det_q11(j)) -
            0.5 * tau * grid->quad_form(j, a1, a2, a3);
    }
    if (cfg.variant != EffectVariant::spatial_only) {
      const double alpha = st.alpha[k - 1];
      lp += -(pr.a_alpha + 1.0) * std::log(alpha) - pr.b_alpha / alpha;
      if (cfg.variant == EffectVariant::proposed) {
        const double e0 = st.eta0[k - 1];
        lp += -0.5 * e0 * e0 / pr.c_eta;
        double prev = e0;
        for (int t = 0; t < T; ++t) {
          const double d = st.eta(t, k - 1) - prev;
          lp += -0.5 * std::log(alpha) - 0.5 * d * d / alpha;
          prev = st.eta(t, k - 1);
        }
      } else {
        for (int t = 0; t < T; ++t) {
          const double e = st.eta(t, k - 1);
          lp += -0.5 * std::log(alpha) - 0.5 * e * e / alpha;
        }
      }
    }
  }
  return lp;
}

// Draw a full parameter state from the prior (rho uniform over the grid, u
// from the centred SAR prior). Used by the model-validation simulators.
inline ParamState draw_state_from_prior(RngStream& rng, const ModelConfig& cfg, int p1,
                                        int m, int T, const RhoGrid* grid) {
  const int K = cfg.components;
  const PriorConfig& pr = cfg.prior;
  ParamState st = ParamState::zeros(K, p1, m, T);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < p1; ++j)
      st.beta[static_cast<std::size_t>(k)][j] = sample_normal(rng, 0.0, pr.c_beta);
    st.sigma2[k] = sample_inverse_gamma(rng, pr.a_sigma, pr.b_sigma);
  }
  for (int k = 1; k < K; ++k) {
    st.mu[k - 1] = sample_normal(rng, 0.0, pr.c_mu);
    st.tau[k - 1] = sample_gamma(rng, pr.a_tau, pr.b_tau);
    if (cfg.variant == EffectVariant::two_way) {
      for (int i = 0; i < m; ++i)
        st.u(i, k - 1) = sample_normal(rng, st.mu[k - 1], 1.0 / st.tau[k - 1]);
    } else {
      const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(grid->points()));
      st.rho[k - 1] = grid->value(j);
      const Eigen::MatrixXd P = st.tau[k - 1] * grid->q11(j);
      const Eigen::VectorXd h =
          P * Eigen::VectorXd::Constant(m, st.mu[k - 1]);
      st.u.col(k - 1) = sample_mvn_precision(rng, h, P);
    }
    if (cfg.variant != EffectVariant::spatial_only) {
      st.alpha[k - 1] = sample_inverse_gamma(rng, pr.a_alpha, pr.b_alpha);
      if (cfg.variant == EffectVariant::proposed) {
        st.eta0[k - 1] = sample_normal(rng, 0.0, pr.c_eta);
        double prev = st.eta0[k - 1];
        for (int t = 0; t < T; ++t) {
          prev = sample_normal(rng, prev, st.alpha[k - 1]);
          st.eta(t, k - 1) = prev;
        }
      } else {
        for (int t = 0; t < T; ++t)
          st.eta(t, k - 1) = sample_normal(rng, 0.0, st.alpha[k - 1]);
      }
    }
  }
  return st;
}

// Redraw the observed counts from the model at the current state, keeping
// cell totals fixed.
inline GroupedPanel draw_panel_counts(RngStream& rng, const GroupedPanel& panel,
                                      const ParamState& st) {
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  std::vector<CellCounts> cells(static_cast<std::size_t>(m) * static_cast<std::size_t>(T));
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < T; ++t) {
      const CellCounts& c = panel.cell(i, t);
      CellCounts& o = cells[static_cast<std::size_t>(detail::cell_index(i, t, T))];
      if (!c.observed) continue;
      o.observed = true;
      o.total = c.total;
      const int G = panel.classes().bins(t);
      o.counts.assign(static_cast<std::size_t>(G), 0);
      if (c.total == 0) continue;
      const CellMixture cm = cell_mixture(st, panel.covariates(i, t));
      const Eigen::VectorXd pi = mixing_proportions(st, i, t);
      Eigen::VectorXd probs(G);
      for (int g = 0; g < G; ++g)
        probs[g] = mixture_interval_prob(cm, pi, panel.classes().lower(t, g),
                                         panel.classes().upper(t, g));
      const std::vector<long long> draw = sample_multinomial(rng, c.total, probs);
      o.counts = draw;
    }
  }
  Eigen::MatrixXd x(panel.total_areas() * panel.covariate_periods(), panel.covariate_dim());
  for (int i = 0; i < panel.total_areas(); ++i)
    for (int t = 0; t < panel.covariate_periods(); ++t)
      x.row(static_cast<Eigen::Index>(i) * panel.covariate_periods() + t) =
          panel.covariates(i, t).transpose();
  std::vector<std::vector<double>> bounds;
  for (int t = 0; t < panel.classes().periods(); ++t)
    bounds.push_back(panel.classes().boundaries(t));
  return GroupedPanel(panel.total_areas(), m, T, IncomeClasses(bounds), std::move(cells),
                      std::move(x), panel.covariate_periods(), panel.area_ids());
}

}  // namespace stmix
