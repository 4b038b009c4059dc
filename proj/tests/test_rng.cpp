#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "stmix/rng.hpp"

using namespace stmix;

TEST(RngStream, SameSeedSameSequence) {
  RngStream a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  RngStream c(12345), d(12345);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c.uniform01(), d.uniform01());
}

TEST(RngStream, SplitStreamsAreDistinctAndReproducible) {
  RngStream base(7);
  RngStream s1 = base.split(1);
  RngStream s2 = base.split(2);
  RngStream s1b = base.split(1);
  EXPECT_NE(s1.next_u64(), s2.next_u64());
  RngStream s1c = base.split(1);
  EXPECT_EQ(s1b.next_u64(), s1c.next_u64());
}

TEST(Normal, MomentCheck) {
  RngStream rng(42);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Normal, DegenerateVarianceIsExact) {
  RngStream rng(1);
  EXPECT_EQ(sample_normal(rng, 3.25, 0.0), 3.25);
}

TEST(Gamma, ExponentialMean) {
  RngStream rng(9);
  const int n = 100000;
  const double lambda = 2.0;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += sample_gamma(rng, 1.0, lambda);
  const double se = std::sqrt(1.0 / (lambda * lambda) / n);
  EXPECT_NEAR(s / n, 1.0 / lambda, 3.0 * se);
}

TEST(Gamma, ShapeBelowOne) {
  RngStream rng(10);
  const int n = 100000;
  const double a = 0.4, b = 1.5;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_gamma(rng, a, b);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, a / b, 4.0 * std::sqrt(a / (b * b) / n));
  EXPECT_NEAR(var, a / (b * b), 0.02);
}

TEST(InverseGamma, MeanBOverAMinus1) {
  RngStream rng(11);
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += sample_inverse_gamma(rng, 3.0, 1.0);
  // IG(3,1): mean 0.5, variance 0.25 / (a - 2) = 0.25.
  EXPECT_NEAR(s / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(Binomial, EdgeCases) {
  RngStream rng(2);
  EXPECT_EQ(sample_binomial(rng, 0, 0.5), 0);
  EXPECT_EQ(sample_binomial(rng, 10, 0.0), 0);
  EXPECT_EQ(sample_binomial(rng, 10, 1.0), 10);
}

TEST(Binomial, ChiSquareAgainstExactPmfBothPaths) {
  // Small-np inversion path and BTRS path, each against the exact pmf.
  struct Case {
    long long n;
    double p;
  };
  for (const Case& cs : {Case{12, 0.35}, Case{60, 0.45}, Case{250, 0.12}}) {
    RngStream rng(1000 + cs.n);
    const int draws = 100000;
    std::vector<long long> freq(cs.n + 1, 0);
    for (int i = 0; i < draws; ++i) ++freq[sample_binomial(rng, cs.n, cs.p)];
    // Exact pmf.
    std::vector<double> pmf(cs.n + 1);
    for (long long k = 0; k <= cs.n; ++k) {
      const double lp = std::lgamma(cs.n + 1.0) - std::lgamma(k + 1.0) -
                        std::lgamma(cs.n - k + 1.0) + k * std::log(cs.p) +
                        (cs.n - k) * std::log1p(-cs.p);
      pmf[k] = std::exp(lp);
    }
    // Merge cells with small expectation.
    double chi2 = 0.0, eacc = 0.0;
    long long oacc = 0;
    int cells = 0;
    for (long long k = 0; k <= cs.n; ++k) {
      eacc += pmf[k] * draws;
      oacc += freq[k];
      if (eacc >= 10.0 || k == cs.n) {
        if (eacc > 0.0) {
          chi2 += (oacc - eacc) * (oacc - eacc) / eacc;
          ++cells;
        }
        eacc = 0.0;
        oacc = 0;
      }
    }
    const double crit = oracle::chisq_critical(cells - 1, 3.0902);  // alpha = 0.001
    EXPECT_LT(chi2, crit) << "n=" << cs.n << " p=" << cs.p;
  }
}

TEST(Multinomial, DegenerateAndZero) {
  RngStream rng(3);
  Eigen::VectorXd p(3);
  p << 1.0, 0.0, 0.0;
  auto v = sample_multinomial(rng, 10, p);
  EXPECT_EQ(v[0], 10);
  EXPECT_EQ(v[1], 0);
  EXPECT_EQ(v[2], 0);
  p << 0.2, 0.5, 0.3;
  v = sample_multinomial(rng, 0, p);
  EXPECT_EQ(v[0] + v[1] + v[2], 0);
}

TEST(Multinomial, ComponentMeans) {
  RngStream rng(4);
  Eigen::VectorXd p(3);
  p << 0.5, 0.3, 0.2;
  const int n = 100000;
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    auto v = sample_multinomial(rng, 6, p);
    ASSERT_EQ(v[0] + v[1] + v[2], 6);
    s += Eigen::Vector3d(v[0], v[1], v[2]);
  }
  for (int j = 0; j < 3; ++j) {
    const double se = std::sqrt(6.0 * p[j] * (1 - p[j]) / n);
    EXPECT_NEAR(s[j] / n, 6.0 * p[j], 3.0 * se);
  }
}

TEST(TruncNorm, SupportProperty) {
  RngStream rng(5);
  const double configs[][4] = {
      {0.0, 1.0, 0.0, kInf},  {2.0, 0.5, 1.0, 1.2},  {-1.0, 2.0, -kInf, 0.0},
      {0.0, 1.0, 5.0, 6.0},   {3.0, 1.0, -2.0, -1.0}, {0.0, 1.0, -0.01, 0.015},
      {10.0, 4.0, 30.0, kInf}};
  for (const auto& c : configs) {
    for (int i = 0; i < 2000; ++i) {
      const double x = sample_truncnorm(rng, c[0], c[1], c[2], c[3]);
      ASSERT_GE(x, c[2]);
      ASSERT_LT(x, c[3]);
    }
  }
}

TEST(TruncNorm, HalfNormalMean) {
  RngStream rng(6);
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += sample_truncnorm(rng, 0.0, 1.0, 0.0, kInf);
  const double target = std::sqrt(2.0 / kPi);
  const double var = 1.0 - 2.0 / kPi;
  EXPECT_NEAR(s / n, target, 3.0 * std::sqrt(var / n));
}

TEST(TruncNorm, FarTailWindowMatchesQuadratureOracle) {
  // Frozen by the quadrature oracle: mean of N(0,1) on [5,6) = 5.18315 (not
  // the looser 5.1865 sometimes quoted).
  double om, ov;
  oracle::truncnorm_moments(5.0, 6.0, &om, &ov);
  EXPECT_NEAR(om, 5.1831477, 1e-6);
  RngStream rng(7);
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += sample_truncnorm(rng, 0.0, 1.0, 5.0, 6.0);
  EXPECT_NEAR(s / n, om, 3.0 * std::sqrt(ov / n));
}

TEST(TruncNorm, KolmogorovSmirnovSuite) {
  // 12 (mean, sd, lo, hi) configurations at alpha = 0.001.
  const double configs[][4] = {
      {0, 1, 0, kInf},     {0, 1, -kInf, 0},   {0, 1, -1, 1},     {0, 1, 3, kInf},
      {0, 1, 5, 6},        {2, 3, -1, 4},      {-2, 0.5, -2.2, -1.9},
      {0, 1, -0.05, 0.05}, {1, 2, 8, kInf},    {0, 1, 1.5, 1.6},  {5, 1, -kInf, 3},
      {0, 10, -5, 80}};
  int idx = 0;
  for (const auto& c : configs) {
    RngStream rng(100 + idx++);
    const std::size_t n = 20000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = sample_truncnorm(rng, c[0], c[1], c[2], c[3]);
    const double zlo = (c[2] == -kInf) ? -kInf : (c[2] - c[0]) / c[1];
    const double zhi = (c[3] == kInf) ? kInf : (c[3] - c[0]) / c[1];
    const double mass = normal_interval_prob(zlo, zhi);
    auto cdf = [&](double v) {
      const double zv = (v - c[0]) / c[1];
      return normal_interval_prob(zlo, std::min(zv, zhi)) / mass;
    };
    const double d = oracle::ks_statistic(x, cdf);
    EXPECT_LT(d, oracle::ks_critical(n, 0.001)) << "config " << idx;
  }
}

TEST(MvnPrecision, ScalarCase) {
  RngStream rng(8);
  Eigen::VectorXd h(1);
  h << 0.0;
  Eigen::MatrixXd P(1, 1);
  P << 4.0;
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_mvn_precision(rng, h, P)[0];
    s += x;
    s2 += x * x;
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var, 0.25, 4.0 * 0.25 * std::sqrt(2.0 / n));
}

TEST(MvnPrecision, MeanReproduction) {
  RngStream rng(9);
  Eigen::MatrixXd P(3, 3);
  P << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  Eigen::VectorXd mu0(3);
  mu0 << 1.0, -2.0, 0.5;
  const Eigen::VectorXd h = P * mu0;
  const int n = 50000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) s += sample_mvn_precision(rng, h, P);
  const Eigen::MatrixXd cov = P.inverse();
  for (int j = 0; j < 3; ++j)
    EXPECT_NEAR(s[j] / n, mu0[j], 4.0 * std::sqrt(cov(j, j) / n));
}

TEST(MvnPrecision, TwoByTwoCovarianceOracle) {
  RngStream rng(10);
  Eigen::MatrixXd P(2, 2);
  P << 2, 1, 1, 2;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(2);
  const int n = 100000;
  double s00 = 0, s01 = 0, s11 = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = sample_mvn_precision(rng, h, P);
    s00 += x[0] * x[0];
    s01 += x[0] * x[1];
    s11 += x[1] * x[1];
  }
  // Hand inverse: (1/3) [[2, -1], [-1, 2]].
  const double c00 = 2.0 / 3.0, c01 = -1.0 / 3.0;
  EXPECT_NEAR(s00 / n, c00, 4.0 * c00 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s11 / n, c00, 4.0 * c00 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s01 / n, c01, 4.0 * std::sqrt((c00 * c00 + c01 * c01) / n));
}

TEST(MvnPrecision, EmpiricalPrecisionRecovery) {
  RngStream rng(11);
  const int d = 4;
  Eigen::MatrixXd P(d, d);
  P << 5, 1, 0.5, 0, 1, 4, 1, 0.2, 0.5, 1, 6, 1, 0, 0.2, 1, 3;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
  const int n = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = sample_mvn_precision(rng, h, P);
    acc += x * x.transpose();
  }
  const Eigen::MatrixXd emp_prec = (acc / n).inverse();
  const double rel = (emp_prec - P).norm() / P.norm();
  EXPECT_LT(rel, 0.05);
}

TEST(MvnPrecision, CholeskyFailureNamesPivot) {
  RngStream rng(12);
  Eigen::MatrixXd P(2, 2);
  P << 1, 2, 2, 1;  // indefinite
  Eigen::VectorXd h = Eigen::VectorXd::Zero(2);
  try {
    sample_mvn_precision(rng, h, P);
    FAIL() << "expected numerical_error";
  } catch (const numerical_error& e) {
    EXPECT_NE(std::string(e.what()).find("pivot 1"), std::string::npos);
  }
}
