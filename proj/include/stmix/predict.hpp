#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stmix/common.hpp"
#include "stmix/gibbs.hpp"
#include "stmix/mixture.hpp"
#include "stmix/rho_grid.hpp"
#include "stmix/rng.hpp"
#include "stmix/types.hpp"

// Spatial interpolation of non-sampled areas, temporal prediction, and
// posterior summaries of the income measures.

namespace stmix {

// One conditional Gaussian draw of the non-sampled spatial effects per stored
// draw: u* ~ N(mu iota - Q22^{-1} Q21 (u - mu iota), tau^{-1} Q22^{-1}) at
// that draw's rho. Returns one (M - m) x (K-1) matrix per stored draw.
inline std::vector<Eigen::MatrixXd> interpolate_spatial(RngStream& rng,
                                                        const PosteriorDraws& draws,
                                                        const SpatialGraph& graph,
                                                        const RhoGrid* grid) {
  const int ms = graph.non_sampled_areas();
  const int K = draws.config.components;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(draws.states.size());
  const bool two_way = draws.config.variant == EffectVariant::two_way;
  if (!two_way && ms > 0 && grid == nullptr)
    throw invalid_parameter_error("interpolate_spatial: grid required for SAR variants");
  Eigen::VectorXd z(ms);
  for (const ParamState& st : draws.states) {
    Eigen::MatrixXd ustar(ms, K - 1);
    for (int k = 1; k < K; ++k) {
      if (ms == 0) continue;
      const double mu = st.mu[k - 1];
      const double tau = st.tau[k - 1];
      if (two_way) {
        for (int j = 0; j < ms; ++j)
          ustar(j, k - 1) = sample_normal(rng, mu, 1.0 / tau);
        continue;
      }
      const int gi = grid->nearest_index(st.rho[k - 1]);
      const Eigen::VectorXd dev = st.u.col(k - 1).array() - mu;
      Eigen::VectorXd mean =
          Eigen::VectorXd::Constant(ms, mu) - grid->cond_factor(gi) * dev;
      for (int j = 0; j < ms; ++j) z[j] = rng.normal();
      // cov = tau^{-1} Q22^{-1}; with Q22 = L L', draw = mean + L'^{-1} z / sqrt(tau).
      ustar.col(k - 1) =
          mean + grid->chol22(gi).transpose().triangularView<Eigen::Upper>().solve(z) /
                     std::sqrt(tau);
    }
    out.push_back(std::move(ustar));
  }
  return out;
}

// Temporal prediction eta_{T+delta,k} ~ N(eta_Tk, delta * alpha_k) per stored
// draw; the two-way variant's iid effects predict as N(0, alpha_k).
inline std::vector<Eigen::VectorXd> predict_temporal(RngStream& rng,
                                                     const PosteriorDraws& draws,
                                                     double horizon_fraction) {
  if (!(horizon_fraction > 0.0))
    throw invalid_parameter_error("predict_temporal: horizon fraction must be > 0");
  if (draws.config.variant == EffectVariant::spatial_only)
    throw invalid_parameter_error(
        "predict_temporal: the spatial-only variant has no temporal structure");
  const int K = draws.config.components;
  std::vector<Eigen::VectorXd> out;
  out.reserve(draws.states.size());
  for (const ParamState& st : draws.states) {
    Eigen::VectorXd eta(K - 1);
    for (int k = 1; k < K; ++k) {
      if (draws.config.variant == EffectVariant::two_way) {
        eta[k - 1] = sample_normal(rng, 0.0, st.alpha[k - 1]);
      } else {
        const double last = st.eta(st.eta.rows() - 1, k - 1);
        eta[k - 1] = sample_normal(rng, last, horizon_fraction * st.alpha[k - 1]);
      }
    }
    out.push_back(std::move(eta));
  }
  return out;
}

struct SummaryRow {
  long long area_id = 0;
  int period = 0;  // 1-based; T+1 labels the prediction horizon
  std::string quantity;
  int bin = 0;  // 1-based for counts, 0 otherwise
  double mean = 0, sd = 0, lower = 0, upper = 0;
};

struct SummaryTable {
  double level = 0.95;
  std::vector<SummaryRow> rows;
};

struct SummarizeRequest {
  bool ai = true;
  bool mi = true;
  bool gini = true;
  bool counts = false;
  double level = 0.95;
  double horizon = 0.0;            // > 0 appends the prediction period T+1
  bool include_fit_periods = true;
  double median_tol = 1e-9;
  QuadratureConfig quad;
  std::uint64_t seed = 1;
  // Cell totals for predictive counts, keyed by (area_id, 1-based period);
  // sampled cells fall back to the panel's totals.
  std::map<std::pair<long long, int>, long long> totals;
};

namespace detail {

inline double sample_quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= x.size()) return x.back();
  const double w = h - static_cast<double>(i);
  return (1.0 - w) * x[i] + w * x[i + 1];
}

inline SummaryRow summarise_column(const std::vector<double>& v, double level) {
  SummaryRow r;
  double s = 0.0, s2 = 0.0;
  for (double x : v) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(v.size());
  r.mean = s / n;
  r.sd = (n > 1) ? std::sqrt(std::max(0.0, (s2 - n * r.mean * r.mean) / (n - 1.0))) : 0.0;
  const double a = 0.5 * (1.0 - level);
  r.lower = sample_quantile(v, a);
  r.upper = sample_quantile(v, 1.0 - a);
  return r;
}

}  // namespace detail

// Per-draw evaluation of AI / MI / Gini / predictive bin counts with
// equal-tailed sample-quantile intervals. Non-sampled areas use interpolated
// spatial effects, the prediction period uses predicted temporal effects, and
// both make the intervals prediction intervals.
inline SummaryTable summarize(const PosteriorDraws& draws, const GroupedPanel& panel,
                              const SpatialGraph& graph, const RhoGrid* grid,
                              const SummarizeRequest& req) {
  if (draws.states.empty()) throw invalid_parameter_error("summarize: empty draw set");
  const int S = static_cast<int>(draws.states.size());
  const int K = draws.config.components;
  const int M = panel.total_areas();
  const int m = panel.sampled_areas();
  const int T = panel.periods();
  const bool spatial_only = draws.config.variant == EffectVariant::spatial_only;
  if (draws.m != m || draws.T != T)
    throw data_error("summarize: draws and panel shapes disagree");

  RngStream base(req.seed);
  std::vector<Eigen::MatrixXd> ustar;
  if (M > m) {
    RngStream r = base.split(1);
    ustar = interpolate_spatial(r, draws, graph, grid);
  }
  std::vector<Eigen::VectorXd> eta_pred;
  const bool predict = req.horizon > 0.0;
  if (predict) {
    if (spatial_only)
      throw invalid_parameter_error("summarize: spatial-only cannot predict forward");
    RngStream r = base.split(2);
    eta_pred = predict_temporal(r, draws, req.horizon);
    if (panel.covariate_periods() < T + 1)
      throw data_error("summarize: prediction horizon needs covariates for period T+1");
  }
  RngStream count_rng = base.split(3);

  SummaryTable table;
  table.level = req.level;
  std::vector<int> periods;
  if (req.include_fit_periods)
    for (int t = 0; t < T; ++t) periods.push_back(t);
  if (predict) periods.push_back(T);

  std::vector<double> v_ai(S), v_mi(S), v_gini(S);
  Eigen::VectorXd zero_eta = Eigen::VectorXd::Zero(K - 1);
  for (int i = 0; i < M; ++i) {
    const long long id = panel.area_ids()[static_cast<std::size_t>(i)];
    for (int t : periods) {
      const bool future = (t == T);
      const Eigen::VectorXd x = panel.covariates(i, t);
      // Totals for predictive counts, if requested and known.
      long long total = -1;
      if (req.counts) {
        const auto it = req.totals.find({id, t + 1});
        if (it != req.totals.end()) {
          total = it->second;
        } else if (!future && i < m && panel.cell(i, t).observed) {
          total = panel.cell(i, t).total;
        }
      }
      const int G = (t < panel.classes().periods()) ? panel.classes().bins(t) : 0;
      Eigen::MatrixXd count_draws;
      Eigen::VectorXd count_mean;
      if (req.counts && total >= 0 && G > 0) {
        count_draws.setZero(S, G);
        count_mean.setZero(G);
      }
      for (int s = 0; s < S; ++s) {
        const ParamState& st = draws.states[static_cast<std::size_t>(s)];
        Eigen::VectorXd u_row(K - 1), eta_row(K - 1);
        for (int k = 1; k < K; ++k) {
          u_row[k - 1] = (i < m) ? st.u(i, k - 1)
                                 : ustar[static_cast<std::size_t>(s)](i - m, k - 1);
          if (spatial_only)
            eta_row[k - 1] = 0.0;
          else
            eta_row[k - 1] = future ? eta_pred[static_cast<std::size_t>(s)][k - 1]
                                    : st.eta(t, k - 1);
        }
        const Eigen::VectorXd pi = mixing_proportions_with_effects(st, u_row, eta_row);
        const CellMixture cm = cell_mixture(st, x);
        if (req.ai) v_ai[static_cast<std::size_t>(s)] = average_income(cm, pi);
        if (req.mi)
          v_mi[static_cast<std::size_t>(s)] = median_income(cm, pi, req.median_tol);
        if (req.gini) v_gini[static_cast<std::size_t>(s)] = gini_index(cm, pi, req.quad);
        if (count_mean.size() > 0) {
          Eigen::VectorXd probs(G);
          for (int g = 0; g < G; ++g)
            probs[g] = mixture_interval_prob(cm, pi, panel.classes().lower(t, g),
                                             panel.classes().upper(t, g));
          count_mean += static_cast<double>(total) * probs;
          const std::vector<long long> cd = sample_multinomial(count_rng, total, probs);
          for (int g = 0; g < G; ++g)
            count_draws(s, g) = static_cast<double>(cd[static_cast<std::size_t>(g)]);
        }
      }
      auto push = [&](const std::string& q, const std::vector<double>& v) {
        SummaryRow r = detail::summarise_column(v, req.level);
        r.area_id = id;
        r.period = t + 1;
        r.quantity = q;
        table.rows.push_back(std::move(r));
      };
      if (req.ai) push("AI", v_ai);
      if (req.mi) push("MI", v_mi);
      if (req.gini) push("Gini", v_gini);
      if (count_mean.size() > 0) {
        for (int g = 0; g < G; ++g) {
          std::vector<double> col(static_cast<std::size_t>(S));
          for (int s = 0; s < S; ++s) col[static_cast<std::size_t>(s)] = count_draws(s, g);
          SummaryRow r = detail::summarise_column(col, req.level);
          r.mean = count_mean[g] / static_cast<double>(S);  // exact predictive mean
          r.area_id = id;
          r.period = t + 1;
          r.quantity = "counts";
          r.bin = g + 1;
          table.rows.push_back(std::move(r));
        }
      }
    }
  }
  return table;
}

}  // namespace stmix
