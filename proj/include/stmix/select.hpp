#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "stmix/common.hpp"
#include "stmix/gibbs.hpp"
#include "stmix/rng.hpp"
#include "stmix/types.hpp"

// Choosing K through the k-means relabeling matching fraction.

namespace stmix {

struct KMeansResult {
  Eigen::MatrixXd centroids;  // K x d
  std::vector<int> labels;
  double inertia = 0.0;
  bool converged = false;
};

// Plain Lloyd iterations with k-means++ seeding, best of `restarts` runs.
inline KMeansResult kmeans(RngStream& rng, const Eigen::MatrixXd& points, int K,
                           int restarts = 20, int max_iter = 100, double tol = 1e-8) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < K) throw invalid_parameter_error("kmeans: fewer points than clusters");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  Eigen::VectorXd dist2(n);
  for (int rep = 0; rep < restarts; ++rep) {
    Eigen::MatrixXd c(K, d);
    // k-means++ seeding.
    c.row(0) = points.row(static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(n)));
    dist2 = (points.rowwise() - c.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
      const double total = dist2.sum();
      Eigen::Index pick = 0;
      if (total > 0.0) {
        double u = rng.uniform01() * total;
        for (Eigen::Index i = 0; i < n; ++i) {
          u -= dist2[i];
          if (u <= 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
      }
      c.row(k) = points.row(pick);
      dist2 = dist2.cwiseMin((points.rowwise() - c.row(k)).rowwise().squaredNorm());
    }
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    double inertia = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double bd = kInf;
        int bk = 0;
        for (int k = 0; k < K; ++k) {
          const double dd = (points.row(i) - c.row(k)).squaredNorm();
          if (dd < bd) {
            bd = dd;
            bk = k;
          }
        }
        labels[static_cast<std::size_t>(i)] = bk;
        inertia += bd;
      }
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, d);
      Eigen::VectorXd cnt = Eigen::VectorXd::Zero(K);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        cnt[labels[static_cast<std::size_t>(i)]] += 1.0;
      }
      for (int k = 0; k < K; ++k) {
        if (cnt[k] > 0.0) {
          c.row(k) = sums.row(k) / cnt[k];
        } else {
          // Empty cluster: reseed at the point farthest from its centroid.
          Eigen::Index far = 0;
          double fd = -1.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double dd =
                (points.row(i) - c.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
            if (dd > fd) {
              fd = dd;
              far = i;
            }
          }
          c.row(k) = points.row(far);
        }
      }
      if (prev - inertia <= tol * std::max(1.0, std::abs(prev)) && it > 0) {
        converged = true;
        break;
      }
      prev = inertia;
    }
    if (inertia < best.inertia) {
      best.centroids = c;
      best.labels = labels;
      best.inertia = inertia;
      best.converged = converged;
    }
  }
  return best;
}

struct MatchingReport {
  int components = 0;
  double fraction_sum = 0.0;    // the paper's sum criterion (primary)
  double fraction_exact = 0.0;  // exact is-permutation check
  std::vector<std::uint8_t> valid_sum;
  std::vector<std::uint8_t> valid_exact;
  Eigen::MatrixXd centroids;
  bool degenerate = false;
};

// Pool all S*K beta draws, cluster with K means, and report the fraction of
// sweeps whose labels match a permutation: the paper's sum criterion
// I{sum_k r_k = K(K+1)/2} as primary, the exact permutation check alongside.
inline MatchingReport matching_fraction(const PosteriorDraws& draws,
                                        std::uint64_t kmeans_seed = 977) {
  const int K = draws.config.components;
  const int S = static_cast<int>(draws.states.size());
  if (S < 2) throw invalid_parameter_error("matching_fraction: need at least 2 draws");
  MatchingReport rep;
  rep.components = K;
  if (K == 1) {
    rep.fraction_sum = 1.0;
    rep.fraction_exact = 1.0;
    rep.valid_sum.assign(static_cast<std::size_t>(S), 1);
    rep.valid_exact.assign(static_cast<std::size_t>(S), 1);
    return rep;
  }
  const int d = draws.p1;
  Eigen::MatrixXd pts(S * K, d);
  for (int s = 0; s < S; ++s)
    for (int k = 0; k < K; ++k)
      pts.row(s * K + k) =
          draws.states[static_cast<std::size_t>(s)].beta[static_cast<std::size_t>(k)].transpose();
  // Degenerate output (all draws identical) cannot seed K distinct clusters.
  int distinct = 1;
  for (Eigen::Index i = 1; i < pts.rows() && distinct < K; ++i) {
    bool seen = false;
    for (Eigen::Index j = 0; j < i; ++j) {
      if ((pts.row(i) - pts.row(j)).cwiseAbs().maxCoeff() == 0.0) {
        seen = true;
        break;
      }
    }
    if (!seen) ++distinct;
  }
  if (distinct < K) {
    rep.degenerate = true;
    rep.fraction_sum = std::numeric_limits<double>::quiet_NaN();
    rep.fraction_exact = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  RngStream rng(kmeans_seed);
  const KMeansResult km = kmeans(rng, pts, K);
  rep.centroids = km.centroids;
  rep.valid_sum.resize(static_cast<std::size_t>(S));
  rep.valid_exact.resize(static_cast<std::size_t>(S));
  const long long target = static_cast<long long>(K) * (K + 1) / 2;
  long long n_sum = 0, n_exact = 0;
  std::vector<int> seen(static_cast<std::size_t>(K));
  for (int s = 0; s < S; ++s) {
    long long acc = 0;
    std::fill(seen.begin(), seen.end(), 0);
    bool exact = true;
    for (int k = 0; k < K; ++k) {
      const int r = km.labels[static_cast<std::size_t>(s * K + k)] + 1;
      acc += r;
      if (seen[static_cast<std::size_t>(r - 1)]++) exact = false;
    }
    rep.valid_sum[static_cast<std::size_t>(s)] = (acc == target) ? 1 : 0;
    rep.valid_exact[static_cast<std::size_t>(s)] = exact ? 1 : 0;
    n_sum += rep.valid_sum[static_cast<std::size_t>(s)];
    n_exact += rep.valid_exact[static_cast<std::size_t>(s)];
  }
  rep.fraction_sum = static_cast<double>(n_sum) / S;
  rep.fraction_exact = static_cast<double>(n_exact) / S;
  return rep;
}

struct SelectKReport {
  std::vector<MatchingReport> reports;
  int recommended = 0;  // 0 when no K reaches the threshold
};

// One chain per K in [k_min, k_max]; recommendation is the largest K whose
// matching fraction reaches the threshold. Chains run concurrently up to
// `jobs` workers with split seeds, so results do not depend on scheduling.
inline SelectKReport select_k(const GroupedPanel& panel, const SpatialGraph& graph,
                              const ModelConfig& base, int k_min, int k_max,
                              int jobs = 1, double threshold = 0.999) {
  if (k_min < 1 || k_max < k_min)
    throw invalid_parameter_error("select_k: bad K range");
  const int n = k_max - k_min + 1;
  std::vector<MatchingReport> reports(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  RngStream seeder(base.mcmc.seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    seeds[static_cast<std::size_t>(j)] =
        seeder.split(static_cast<std::uint64_t>(k_min + j)).seed();
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= n) return;
      try {
        ModelConfig cfg = base;
        cfg.components = k_min + j;
        cfg.mcmc.seed = seeds[static_cast<std::size_t>(j)];
        const PosteriorDraws draws = run_chain(panel, cfg, graph);
        reports[static_cast<std::size_t>(j)] = matching_fraction(draws);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(j)] = e.what();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(jobs, n); ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (int j = 0; j < n; ++j)
    if (!errors[static_cast<std::size_t>(j)].empty())
      throw numerical_error("select_k: K=" + std::to_string(k_min + j) + ": " +
                            errors[static_cast<std::size_t>(j)]);
  SelectKReport out;
  out.reports = std::move(reports);
  for (int j = 0; j < n; ++j) {
    const MatchingReport& r = out.reports[static_cast<std::size_t>(j)];
    if (!r.degenerate && r.fraction_sum >= threshold) out.recommended = k_min + j;
  }
  return out;
}

}  // namespace stmix
