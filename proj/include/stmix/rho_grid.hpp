#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "stmix/common.hpp"
#include "stmix/types.hpp"

namespace stmix {

// SAR precision for the full area set: (I - rho W)(I - rho W)^t.
inline Eigen::MatrixXd sar_precision(const Eigen::MatrixXd& w, double rho) {
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::Identity(w.rows(), w.cols()) - rho * w;
  return a * a.transpose();
}

// Everything the sweep needs from the SAR precision, precomputed per grid
// point. Q_all(r) = I - r (W + W^t) + r^2 W W^t, so the sampled-block
// quadratic form at any grid point collapses to three cached scalars, and the
// interpolation factors Q22^{-1} Q21 and chol(Q22) are stored per point.
class RhoGrid {
 public:
  RhoGrid(const SpatialGraph& graph, const RhoGridConfig& cfg) {
    const int M = graph.total_areas();
    const int m = graph.sampled_areas();
    const int ms = M - m;
    m_ = m;
    const Eigen::MatrixXd& w = graph.weights();
    const Eigen::MatrixXd s = w + w.transpose();
    const Eigen::MatrixXd p = w * w.transpose();
    s11_ = s.topLeftCorner(m, m);
    p11_ = p.topLeftCorner(m, m);
    const int R = cfg.points;
    values_.resize(static_cast<std::size_t>(R));
    log_det_.resize(static_cast<std::size_t>(R));
    row_sums_.resize(static_cast<std::size_t>(R));
    totals_.resize(static_cast<std::size_t>(R));
    cond_factor_.resize(static_cast<std::size_t>(R));
    chol22_.resize(static_cast<std::size_t>(R));
    const Eigen::MatrixXd s21 = s.bottomLeftCorner(ms, m);
    const Eigen::MatrixXd p21 = p.bottomLeftCorner(ms, m);
    const Eigen::MatrixXd s22 = s.bottomRightCorner(ms, ms);
    const Eigen::MatrixXd p22 = p.bottomRightCorner(ms, ms);
    for (int j = 0; j < R; ++j) {
      const double r =
          (R == 1) ? cfg.lo : cfg.lo + (cfg.hi - cfg.lo) * j / (R - 1);
      values_[static_cast<std::size_t>(j)] = r;
      const Eigen::MatrixXd q11 = build_q11(r);
      Eigen::LLT<Eigen::MatrixXd> llt(q11);
      if (llt.info() != Eigen::Success)
        throw configuration_error("rho grid: Q11 not positive definite at r = " +
                                  std::to_string(r) + " (malformed graph?)");
      const Eigen::MatrixXd L = llt.matrixL();
      log_det_[static_cast<std::size_t>(j)] = 2.0 * L.diagonal().array().log().sum();
      row_sums_[static_cast<std::size_t>(j)] = q11.rowwise().sum();
      totals_[static_cast<std::size_t>(j)] = row_sums_[static_cast<std::size_t>(j)].sum();
      if (ms > 0) {
        const Eigen::MatrixXd q21 = -r * s21 + r * r * p21;
        const Eigen::MatrixXd q22 =
            Eigen::MatrixXd::Identity(ms, ms) - r * s22 + r * r * p22;
        Eigen::LLT<Eigen::MatrixXd> llt22(q22);
        if (llt22.info() != Eigen::Success)
          throw configuration_error("rho grid: Q22 not positive definite at r = " +
                                    std::to_string(r));
        cond_factor_[static_cast<std::size_t>(j)] = llt22.solve(q21);
        chol22_[static_cast<std::size_t>(j)] = llt22.matrixL();
      }
    }
  }

  int points() const { return static_cast<int>(values_.size()); }
  double value(int j) const { return values_[static_cast<std::size_t>(j)]; }
  int sampled_areas() const { return m_; }

  int nearest_index(double r) const {
    int best = 0;
    double bd = std::abs(values_[0] - r);
    for (int j = 1; j < points(); ++j) {
      const double d = std::abs(values_[static_cast<std::size_t>(j)] - r);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    return best;
  }

  Eigen::MatrixXd q11(int j) const { return build_q11(value(j)); }
  double log_det_q11(int j) const { return log_det_[static_cast<std::size_t>(j)]; }
  const Eigen::VectorXd& q11_row_sums(int j) const {
    return row_sums_[static_cast<std::size_t>(j)];
  }
  double q11_total(int j) const { return totals_[static_cast<std::size_t>(j)]; }

  // v' Q11(r) v decomposed as a1 - r a2 + r^2 a3.
  void quad_form_parts(const Eigen::VectorXd& v, double* a1, double* a2,
                       double* a3) const {
    *a1 = v.squaredNorm();
    *a2 = v.dot(s11_ * v);
    *a3 = v.dot(p11_ * v);
  }
  double quad_form(int j, double a1, double a2, double a3) const {
    const double r = value(j);
    return a1 - r * a2 + r * r * a3;
  }

  // Q22(r_j)^{-1} Q21(r_j), (M - m) x m.
  const Eigen::MatrixXd& cond_factor(int j) const {
    return cond_factor_[static_cast<std::size_t>(j)];
  }
  // Lower Cholesky factor of Q22(r_j).
  const Eigen::MatrixXd& chol22(int j) const {
    return chol22_[static_cast<std::size_t>(j)];
  }

 private:
  Eigen::MatrixXd build_q11(double r) const {
    return Eigen::MatrixXd::Identity(m_, m_) - r * s11_ + r * r * p11_;
  }

  int m_ = 0;
  Eigen::MatrixXd s11_, p11_;
  std::vector<double> values_;
  std::vector<double> log_det_;
  std::vector<Eigen::VectorXd> row_sums_;
  std::vector<double> totals_;
  std::vector<Eigen::MatrixXd> cond_factor_;
  std::vector<Eigen::MatrixXd> chol22_;
};

}  // namespace stmix
