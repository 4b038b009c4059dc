#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stmix/common.hpp"
#include "stmix/special.hpp"

namespace stmix {

// Ordered income class boundaries per period, in currency units. Each period
// holds Z_t0 = 0 < Z_t1 < ... < Z_tG; only the top boundary may be infinite.
class IncomeClasses {
 public:
  IncomeClasses() = default;

  explicit IncomeClasses(std::vector<std::vector<double>> boundaries)
      : z_(std::move(boundaries)) {
    for (std::size_t t = 0; t < z_.size(); ++t) {
      const auto& z = z_[t];
      const std::string where = "income classes, period " + std::to_string(t + 1);
      if (z.size() < 2) throw data_error(where + ": needs at least one class");
      if (z.front() != 0.0) throw data_error(where + ": first boundary must be 0");
      for (std::size_t g = 1; g < z.size(); ++g) {
        if (!(z[g] > z[g - 1]))
          throw data_error(where + ": boundaries not strictly increasing at index " +
                           std::to_string(g));
        if (z[g] == kInf && g + 1 != z.size())
          throw data_error(where + ": only the last boundary may be infinite");
      }
    }
  }

  int periods() const { return static_cast<int>(z_.size()); }
  int bins(int t) const { return static_cast<int>(z_[static_cast<std::size_t>(t)].size()) - 1; }
  double lower(int t, int g) const { return z_[static_cast<std::size_t>(t)][static_cast<std::size_t>(g)]; }
  double upper(int t, int g) const { return z_[static_cast<std::size_t>(t)][static_cast<std::size_t>(g + 1)]; }
  const std::vector<double>& boundaries(int t) const { return z_[static_cast<std::size_t>(t)]; }

 private:
  std::vector<std::vector<double>> z_;
};

// Counts for one sampled (area, period) cell; a cell may be missing entirely.
struct CellCounts {
  std::vector<long long> counts;
  long long total = 0;
  bool observed = false;
};

// Observed grouped counts over the sampled areas plus covariates for every
// area (including periods past the fitting window, for prediction). Areas are
// ordered with the sampled block first.
class GroupedPanel {
 public:
  GroupedPanel() = default;

  GroupedPanel(int total_areas, int sampled_areas, int periods, IncomeClasses classes,
               std::vector<CellCounts> cells, Eigen::MatrixXd covariates,
               int covariate_periods, std::vector<long long> area_ids)
      : M_(total_areas),
        m_(sampled_areas),
        T_(periods),
        cov_periods_(covariate_periods),
        classes_(std::move(classes)),
        cells_(std::move(cells)),
        x_(std::move(covariates)),
        area_ids_(std::move(area_ids)) {
    if (M_ < 1 || m_ < 1 || m_ > M_) throw data_error("panel: need 1 <= m <= M");
    if (T_ < 1) throw data_error("panel: need at least one period");
    if (classes_.periods() < T_) throw data_error("panel: income classes missing periods");
    if (cov_periods_ < T_) throw data_error("panel: covariates missing fit periods");
    if (cells_.size() != static_cast<std::size_t>(m_) * static_cast<std::size_t>(T_))
      throw data_error("panel: cell table has wrong shape");
    if (x_.rows() != static_cast<Eigen::Index>(M_) * cov_periods_)
      throw data_error("panel: covariate table has wrong shape");
    if (x_.cols() < 1) throw data_error("panel: covariates need the leading 1");
    if (area_ids_.size() != static_cast<std::size_t>(M_))
      throw data_error("panel: area id list has wrong length");
    if (!x_.allFinite()) throw data_error("panel: covariates must be finite");
    for (Eigen::Index r = 0; r < x_.rows(); ++r) {
      if (x_(r, 0) != 1.0) throw data_error("panel: covariate rows must lead with 1");
    }
    for (int i = 0; i < m_; ++i) {
      for (int t = 0; t < T_; ++t) {
        const CellCounts& c = cell(i, t);
        if (!c.observed) continue;
        if (c.counts.size() != static_cast<std::size_t>(classes_.bins(t)))
          throw data_error("panel: cell (" + std::to_string(area_ids_[static_cast<std::size_t>(i)]) +
                           ", " + std::to_string(t + 1) + ") has wrong bin count");
        long long s = 0;
        for (long long n : c.counts) {
          if (n < 0)
            throw data_error("panel: negative count in cell (" +
                             std::to_string(area_ids_[static_cast<std::size_t>(i)]) + ", " +
                             std::to_string(t + 1) + ")");
          s += n;
        }
        if (s != c.total)
          throw data_error("panel: declared total mismatch in cell (" +
                           std::to_string(area_ids_[static_cast<std::size_t>(i)]) + ", " +
                           std::to_string(t + 1) + ")");
      }
    }
  }

  int total_areas() const { return M_; }
  int sampled_areas() const { return m_; }
  int non_sampled_areas() const { return M_ - m_; }
  int periods() const { return T_; }
  int covariate_periods() const { return cov_periods_; }
  int covariate_dim() const { return static_cast<int>(x_.cols()); }
  const IncomeClasses& classes() const { return classes_; }
  const std::vector<long long>& area_ids() const { return area_ids_; }

  const CellCounts& cell(int area, int period) const {
    return cells_[static_cast<std::size_t>(area) * static_cast<std::size_t>(T_) +
                  static_cast<std::size_t>(period)];
  }

  // Covariate row for any area (0..M-1) and period (0..cov_periods-1).
  Eigen::VectorXd covariates(int area, int period) const {
    return x_.row(static_cast<Eigen::Index>(area) * cov_periods_ + period).transpose();
  }

  // Single-period view, used by the per-period chains of the spatial variant.
  GroupedPanel single_period(int period) const {
    std::vector<CellCounts> cells(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) cells[static_cast<std::size_t>(i)] = cell(i, period);
    Eigen::MatrixXd x(M_, x_.cols());
    for (int i = 0; i < M_; ++i)
      x.row(i) = x_.row(static_cast<Eigen::Index>(i) * cov_periods_ + period);
    return GroupedPanel(M_, m_, 1, IncomeClasses({classes_.boundaries(period)}),
                        std::move(cells), std::move(x), 1, area_ids_);
  }

 private:
  int M_ = 0, m_ = 0, T_ = 0, cov_periods_ = 0;
  IncomeClasses classes_;
  std::vector<CellCounts> cells_;
  Eigen::MatrixXd x_;
  std::vector<long long> area_ids_;
};

// Row-standardised adjacency over all M areas, sampled block first.
class SpatialGraph {
 public:
  SpatialGraph() = default;

  SpatialGraph(int total_areas, int sampled_areas,
               std::vector<std::vector<int>> neighbors, std::vector<long long> area_ids)
      : M_(total_areas),
        m_(sampled_areas),
        neighbors_(std::move(neighbors)),
        area_ids_(std::move(area_ids)) {
    if (M_ < 1 || m_ < 1 || m_ > M_) throw data_error("graph: need 1 <= m <= M");
    if (neighbors_.size() != static_cast<std::size_t>(M_))
      throw data_error("graph: neighbor list has wrong length");
    if (area_ids_.size() != static_cast<std::size_t>(M_))
      throw data_error("graph: area id list has wrong length");
    w_ = Eigen::MatrixXd::Zero(M_, M_);
    for (int i = 0; i < M_; ++i) {
      const auto& nb = neighbors_[static_cast<std::size_t>(i)];
      for (int j : nb) {
        if (j < 0 || j >= M_) throw data_error("graph: neighbor index out of range");
        if (j == i)
          throw data_error("graph: self loop at area " +
                           std::to_string(area_ids_[static_cast<std::size_t>(i)]));
      }
      if (!nb.empty()) {
        const double w = 1.0 / static_cast<double>(nb.size());
        for (int j : nb) w_(i, j) = w;
      }
    }
    // Adjacency must be structurally symmetric before row standardisation.
    for (int i = 0; i < M_; ++i) {
      for (int j : neighbors_[static_cast<std::size_t>(i)]) {
        const auto& back = neighbors_[static_cast<std::size_t>(j)];
        if (std::find(back.begin(), back.end(), i) == back.end())
          throw data_error("graph: edge " + std::to_string(area_ids_[static_cast<std::size_t>(i)]) +
                           " -> " + std::to_string(area_ids_[static_cast<std::size_t>(j)]) +
                           " has no reverse edge");
      }
    }
  }

  int total_areas() const { return M_; }
  int sampled_areas() const { return m_; }
  int non_sampled_areas() const { return M_ - m_; }
  const Eigen::MatrixXd& weights() const { return w_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  const std::vector<long long>& area_ids() const { return area_ids_; }

 private:
  int M_ = 0, m_ = 0;
  std::vector<std::vector<int>> neighbors_;
  std::vector<long long> area_ids_;
  Eigen::MatrixXd w_;
};

enum class EffectVariant { proposed, two_way, spatial_only };

inline std::string to_string(EffectVariant v) {
  switch (v) {
    case EffectVariant::proposed: return "proposed";
    case EffectVariant::two_way: return "two-way";
    case EffectVariant::spatial_only: return "spatial-only";
  }
  return "proposed";
}

inline EffectVariant effect_variant_from_string(const std::string& s) {
  if (s == "proposed") return EffectVariant::proposed;
  if (s == "two-way") return EffectVariant::two_way;
  if (s == "spatial-only") return EffectVariant::spatial_only;
  throw data_error("unknown effect variant: " + s);
}

struct PriorConfig {
  double c_beta = 100.0;
  double a_sigma = 0.1;
  double b_sigma = 0.1;
  double c_mu = 10.0;
  double a_tau = 1.0;
  double b_tau = 1.0;
  double c_eta = 10.0;
  double a_alpha = 3.0;
  double b_alpha = 1.0;
};

struct RhoGridConfig {
  int points = 99;
  double lo = 0.01;
  double hi = 0.99;
};

struct McmcConfig {
  long long burn_in = 10000;
  long long samples = 20000;
  long long thin = 1;
  std::uint64_t seed = 1;
  long long pg_exact_max = 50;
};

struct ModelConfig {
  int components = 3;
  EffectVariant variant = EffectVariant::proposed;
  PriorConfig prior;
  RhoGridConfig rho_grid;
  McmcConfig mcmc;

  void validate() const {
    if (components < 1) throw configuration_error("config: components must be >= 1");
    const double hp[] = {prior.c_beta, prior.a_sigma, prior.b_sigma, prior.c_mu,
                         prior.a_tau,  prior.b_tau,   prior.c_eta,   prior.a_alpha,
                         prior.b_alpha};
    for (double v : hp)
      if (!(v > 0.0)) throw configuration_error("config: hyperparameters must be > 0");
    if (rho_grid.points < 1) throw configuration_error("config: rho grid needs points");
    if (!(rho_grid.lo > 0.0) || !(rho_grid.hi < 1.0) || !(rho_grid.lo <= rho_grid.hi))
      throw configuration_error("config: rho grid must lie inside (0,1)");
    if (mcmc.burn_in < 0 || mcmc.samples < 0 || mcmc.thin < 1)
      throw configuration_error("config: bad MCMC controls");
    if (mcmc.pg_exact_max < 1)
      throw configuration_error("config: pg_exact_max must be >= 1");
  }
};

// One full parameter configuration. Component k = 0 is the fixed reference
// with zero mixing effects; spatial effects are stored centred, so
// E[u(i, k-1)] = mu[k-1]. Mixing-effect fields hold K-1 entries for
// components 2..K.
struct ParamState {
  std::vector<Eigen::VectorXd> beta;  // K vectors of length p+1
  Eigen::VectorXd sigma2;             // K
  Eigen::VectorXd mu, tau, alpha, rho, eta0;  // K-1
  Eigen::MatrixXd u;                  // m x (K-1)
  Eigen::MatrixXd eta;                // T x (K-1)

  int components() const { return static_cast<int>(beta.size()); }

  static ParamState zeros(int K, int p1, int m, int T) {
    ParamState s;
    s.beta.assign(static_cast<std::size_t>(K), Eigen::VectorXd::Zero(p1));
    s.sigma2 = Eigen::VectorXd::Ones(K);
    s.mu = Eigen::VectorXd::Zero(K - 1);
    s.tau = Eigen::VectorXd::Ones(K - 1);
    s.alpha = Eigen::VectorXd::Ones(K - 1);
    s.rho = Eigen::VectorXd::Constant(K - 1, 0.5);
    s.eta0 = Eigen::VectorXd::Zero(K - 1);
    s.u = Eigen::MatrixXd::Zero(m, K - 1);
    s.eta = Eigen::MatrixXd::Zero(T, K - 1);
    return s;
  }

  void validate() const {
    const int K = components();
    if (K < 1) throw data_error("state: needs at least one component");
    if (sigma2.size() != K) throw data_error("state: sigma2 size mismatch");
    for (int k = 0; k < K; ++k) {
      if (!(sigma2[k] > 0.0)) throw data_error("state: sigma2 must be > 0");
      if (!beta[static_cast<std::size_t>(k)].allFinite())
        throw data_error("state: beta must be finite");
    }
    const Eigen::Index Km1 = K - 1;
    if (mu.size() != Km1 || tau.size() != Km1 || alpha.size() != Km1 ||
        rho.size() != Km1 || eta0.size() != Km1 || u.cols() != Km1 || eta.cols() != Km1)
      throw data_error("state: mixing-effect shapes inconsistent");
    for (Eigen::Index k = 0; k < Km1; ++k) {
      if (!(tau[k] > 0.0) || !(alpha[k] > 0.0))
        throw data_error("state: tau and alpha must be > 0");
      if (!(rho[k] > 0.0) || !(rho[k] < 1.0))
        throw data_error("state: rho must lie in (0,1)");
    }
    if (!u.allFinite() || !eta.allFinite() || !mu.allFinite() || !eta0.allFinite())
      throw data_error("state: effects must be finite");
  }
};

// Augmentation variables for one sweep.
struct LatentState {
  std::vector<Eigen::MatrixXd> s;  // per cell: G_t x K component counts
  Eigen::MatrixXd s_cell;          // (m*T) x K, s_itk
  Eigen::MatrixXd omega;           // (m*T) x (K-1)
};

// Stored MCMC output.
struct PosteriorDraws {
  std::vector<ParamState> states;
  ModelConfig config;
  int m = 0, T = 0, p1 = 0;
};

}  // namespace stmix
