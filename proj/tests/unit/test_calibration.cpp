#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "smc2/calibration.hpp"
#include "smc2/errors.hpp"
#include "smc2/rng.hpp"
#include "stats.hpp"

using smc2::Rng;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::MatrixXd normal_matrix(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST(EstimateNx, ArithmeticAndClamping) {
  EXPECT_EQ(smc2::estimate_nx(0.25, 1.0, 2, 100000), 4u);
  EXPECT_EQ(smc2::estimate_nx(100.0, 1.0, 50, 5000), 50u);
  EXPECT_EQ(smc2::estimate_nx(1e-12, 1.0, 10, 5000), 5000u);
  EXPECT_EQ(smc2::estimate_nx(0.0, 1.0, 10, 5000), 5000u);
  EXPECT_EQ(smc2::estimate_nx(0.3, 1.0, 2, 5000), 4u);  // ceil(3.33)
  EXPECT_EQ(smc2::estimate_nx(0.25, 2.0, 2, 100000), 8u);
  EXPECT_THROW(smc2::estimate_nx(1.0, 1.0, 1, 10), smc2::ParameterError);
  EXPECT_THROW(smc2::estimate_nx(1.0, 1.0, 20, 10), smc2::ParameterError);
  EXPECT_THROW(smc2::estimate_nx(1.0, 0.0, 2, 10), smc2::ParameterError);
  EXPECT_THROW(smc2::estimate_nx(-1.0, 1.0, 2, 10), smc2::ParameterError);
}

TEST(EstimateNx, MonotoneInSigmaAndTau) {
  std::size_t prev = smc2::estimate_nx(1e-6, 1.0, 2, 1000000);
  for (double s = 1e-5; s < 10.0; s *= 1.7) {
    const std::size_t cur = smc2::estimate_nx(s, 1.0, 2, 1000000);
    EXPECT_LE(cur, prev);
    prev = cur;
  }
  prev = 0;
  for (double tau = 0.1; tau < 5.0; tau += 0.3) {
    const std::size_t cur = smc2::estimate_nx(0.05, tau, 2, 1000000);
    EXPECT_GE(cur, prev);
    prev = cur;
  }
}

TEST(Pca, MatchesJacobiOracleOnCorrelationMatrix) {
  Rng rng(5);
  Eigen::MatrixXd mix = normal_matrix(5, 5, rng);
  const Eigen::MatrixXd thetas = normal_matrix(400, 5, rng) * mix;
  const auto pca = smc2::principal_components(thetas);
  // oracle on the standardised data's correlation matrix
  const Eigen::RowVectorXd mean = thetas.colwise().mean();
  Eigen::MatrixXd z = thetas.rowwise() - mean;
  for (Eigen::Index j = 0; j < 5; ++j) z.col(j) /= std::sqrt(z.col(j).squaredNorm() / 399.0);
  const Eigen::MatrixXd corr = z.transpose() * z / 399.0;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  testsupport::jacobi_eigen(corr, values, vectors);
  for (Eigen::Index k = 0; k < 5; ++k) {
    EXPECT_NEAR(pca.basis.explained_variance(k), values(k), 1e-8);
    const double sign = pca.basis.components.col(k).dot(vectors.col(k)) > 0 ? 1.0 : -1.0;
    EXPECT_LT((pca.basis.components.col(k) - sign * vectors.col(k)).cwiseAbs().maxCoeff(), 1e-8);
  }
  const Eigen::MatrixXd gram = pca.basis.components.transpose() * pca.basis.components;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index k = 1; k < 5; ++k) EXPECT_GE(pca.basis.explained_variance(k - 1), pca.basis.explained_variance(k));
  // covariates are uncorrelated
  const Eigen::MatrixXd c = pca.covariates.rowwise() - pca.covariates.colwise().mean();
  const Eigen::MatrixXd cc = c.transpose() * c;
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      if (i != j) EXPECT_LT(std::abs(cc(i, j)) / std::sqrt(cc(i, i) * cc(j, j)), 1e-8);
}

TEST(Pca, CollinearAndConstantColumns) {
  Eigen::MatrixXd line(50, 2);
  for (int i = 0; i < 50; ++i) line.row(i) << i, 3.0 - 2.0 * i;
  const auto a = smc2::principal_components(line);
  EXPECT_GT(a.basis.explained_variance(0) / a.basis.explained_variance.sum(), 0.999);
  EXPECT_LT(a.covariates.col(1).cwiseAbs().maxCoeff(), 1e-8);

  Eigen::MatrixXd with_const(20, 2);
  for (int i = 0; i < 20; ++i) with_const.row(i) << i * 0.5, 7.0;
  const auto b = smc2::principal_components(with_const);
  EXPECT_EQ(b.covariates.col(1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(b.basis.explained_variance.minCoeff(), 0.0);
}

TEST(Backfit, ExactLinearTruthHasNoResidual) {
  Rng rng(1);
  const Eigen::MatrixXd c = normal_matrix(200, 2, rng);
  std::vector<double> r(200);
  for (int i = 0; i < 200; ++i) r[static_cast<std::size_t>(i)] = 1.5 + 2.0 * c(i, 0);
  const auto fit = smc2::backfit_gam(r, c);
  EXPECT_LT(fit.residual_variance, 1e-10);
  EXPECT_FALSE(fit.linear_fallback);
  double mean = 0.0;
  for (double v : r) mean += v / 200.0;
  EXPECT_NEAR(fit.intercept, mean, 1e-10);
}

TEST(Backfit, ConstantResponses) {
  Rng rng(2);
  const Eigen::MatrixXd c = normal_matrix(100, 3, rng);
  const std::vector<double> r(100, -4.0);
  const auto fit = smc2::backfit_gam(r, c);
  EXPECT_DOUBLE_EQ(fit.intercept, -4.0);
  EXPECT_EQ(fit.residual_variance, 0.0);
  for (const auto& f : fit.components) EXPECT_NEAR(f(0.3), 0.0, 1e-12);
}

// sin(C1) + 0.5 C2^2 + N(0, 0.09). With df = 4 the smoother is only adequate
// when the covariates have bounded support; unit-variance uniform covariates
// are used here, and df = 6 with Gaussian covariates.
static double median_recovered_variance(bool gaussian, double df) {
  std::vector<double> est;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    Eigen::MatrixXd c(500, 2);
    for (Eigen::Index i = 0; i < 500; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) c(i, j) = gaussian ? rng.normal() : std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
    std::vector<double> r(500);
    for (int i = 0; i < 500; ++i) {
      r[static_cast<std::size_t>(i)] = std::sin(c(i, 0)) + 0.5 * c(i, 1) * c(i, 1) + 0.3 * rng.normal();
    }
    smc2::BackfitOptions opt;
    opt.df = df;
    const auto fit = smc2::backfit_gam(r, c, opt);
    EXPECT_TRUE(fit.converged);
    // identifiability: components average to zero over the training covariates
    for (std::size_t j = 0; j < 2; ++j) {
      double m = 0.0;
      for (int i = 0; i < 500; ++i) m += fit.components[j](c(i, static_cast<Eigen::Index>(j)));
      EXPECT_LT(std::abs(m / 500.0), 1e-8);
    }
    est.push_back(fit.residual_variance);
  }
  return median(est);
}

TEST(Backfit, RecoversInjectedNoiseVariance) {
  EXPECT_NEAR(median_recovered_variance(false, 4.0), 0.09, 0.2 * 0.09);
  EXPECT_NEAR(median_recovered_variance(true, 6.0), 0.09, 0.2 * 0.09);
}

TEST(Backfit, ResidualVarianceInvariantToAddedLinearTerms) {
  Rng rng(4);
  const Eigen::MatrixXd c = normal_matrix(300, 3, rng);
  std::vector<double> r(300), shifted(300);
  for (int i = 0; i < 300; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r[k] = std::cos(c(i, 1)) + rng.normal();
    shifted[k] = r[k] + 4.0 - 3.0 * c(i, 0) + 0.5 * c(i, 2);
  }
  const double a = smc2::backfit_gam(r, c).residual_variance;
  const double b = smc2::backfit_gam(shifted, c).residual_variance;
  EXPECT_NEAR(a, b, 1e-6 * a);
}

TEST(Backfit, SmallSampleUsesLeastSquares) {
  Rng rng(6);
  const Eigen::MatrixXd c = normal_matrix(15, 2, rng);
  std::vector<double> r(15);
  for (int i = 0; i < 15; ++i) r[static_cast<std::size_t>(i)] = 1.0 + c(i, 0) - c(i, 1) + 0.1 * rng.normal();
  const auto fit = smc2::backfit_gam(r, c);
  EXPECT_TRUE(fit.linear_fallback);
  // oracle: normal equations with an intercept column
  Eigen::MatrixXd x(15, 3);
  x.col(0).setOnes();
  x.rightCols(2) = c;
  const Eigen::VectorXd y = Eigen::VectorXd::Map(r.data(), 15);
  const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  const Eigen::VectorXd resid = y - x * beta;
  const double mean = resid.mean();
  EXPECT_NEAR(fit.residual_variance, (resid.array() - mean).square().sum() / 14.0, 1e-10);
  const std::vector<double> point{0.2, -0.7};
  EXPECT_NEAR(fit.predict(point), beta(0) + 0.2 * beta(1) - 0.7 * beta(2), 1e-10);
}

TEST(Backfit, RejectsBadInput) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 1);
  EXPECT_THROW(smc2::backfit_gam(std::vector<double>{1, 2}, c), smc2::InputError);
  EXPECT_THROW(smc2::backfit_gam(std::vector<double>{1, NAN, 2}, c), smc2::InputError);
}

TEST(Calibrate, DuplicatedThetaUsesRawVariance) {
  Eigen::MatrixXd thetas = Eigen::MatrixXd::Constant(40, 3, 0.5);
  Rng rng(7);
  std::vector<double> r(40);
  for (auto& v : r) v = rng.normal() * 0.5;
  const auto out = smc2::calibrate(thetas, r);
  EXPECT_TRUE(out.degenerate_pca);
  EXPECT_TRUE(out.linear_fallback);
  EXPECT_NEAR(out.sigma2_hat, testsupport::mean_se(r).var, 1e-12);
}

TEST(Calibrate, NoiseIndependentOfThetaGivesInverseVariance) {
  Rng rng(8);
  const Eigen::MatrixXd thetas = normal_matrix(1000, 3, rng);
  std::vector<double> r(1000);
  const double v = 0.04;
  for (auto& x : r) x = -50.0 + std::sqrt(v) * rng.normal();
  smc2::CalibrationOptions opt;
  opt.tau = 1.0;
  opt.n_min = 2;
  const auto out = smc2::calibrate(thetas, r, opt);
  EXPECT_NEAR(static_cast<double>(out.n_x_new), std::ceil(1.0 / v), 0.2 * std::ceil(1.0 / v));
  opt.tau = 2.0;
  const auto doubled = smc2::calibrate(thetas, r, opt);
  EXPECT_EQ(doubled.sigma2_hat, out.sigma2_hat);
  EXPECT_EQ(doubled.n_x_new, static_cast<std::size_t>(std::ceil(2.0 / out.sigma2_hat)));
  EXPECT_EQ(out.explained_variance.size(), 3);
}

TEST(Calibrate, WinsorisesOutlyingResponse) {
  Rng rng(9);
  const Eigen::MatrixXd thetas = normal_matrix(100, 2, rng);
  std::vector<double> r(100);
  for (auto& x : r) x = rng.normal();
  r[17] = -1e6;
  const auto out = smc2::calibrate(thetas, r);
  EXPECT_EQ(out.winsorized, 1u);
  EXPECT_LT(out.sigma2_hat, testsupport::mean_se(r).var);
  r[3] = INFINITY;
  EXPECT_THROW(smc2::calibrate(thetas, r), smc2::InputError);
}

TEST(Calibrate, IsDeterministic) {
  Rng rng(10);
  const Eigen::MatrixXd thetas = normal_matrix(200, 3, rng);
  std::vector<double> r(200);
  for (auto& x : r) x = rng.normal();
  const auto a = smc2::calibrate(thetas, r);
  const auto b = smc2::calibrate(thetas, r);
  EXPECT_EQ(a.sigma2_hat, b.sigma2_hat);
  EXPECT_EQ(a.n_x_new, b.n_x_new);
}
