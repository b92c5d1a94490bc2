#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "smc2/smoothing_spline.hpp"

namespace smc2 {

/// Principal axes of standardised theta-particles.
struct PcaBasis {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;               ///< column sd (1 for constant columns)
  Eigen::MatrixXd components;          ///< d x d, orthonormal columns
  Eigen::VectorXd explained_variance;  ///< nonincreasing, >= 0
};

struct PcaResult {
  PcaBasis basis;
  Eigen::MatrixXd covariates;  ///< n x d projections on `components`
};

/// Centres and unit-scales each column, then projects on the eigenvectors of
/// the resulting correlation matrix. Directions with (numerically) zero
/// variance yield identically zero covariates. Requires n >= 2.
PcaResult principal_components(const Eigen::MatrixXd& thetas);

struct BackfitOptions {
  double df = 4.0;
  std::size_t max_iter = 20;
  double tol = 1e-6;
};

/// R = alpha + sum_j f_j(C_j) + eps, fitted by backfitting.
struct GamFit {
  double intercept = 0.0;
  std::vector<SmoothComponent> components;
  double residual_variance = 0.0;  ///< denominator n - 1
  std::size_t n_obs = 0;
  std::size_t iterations = 0;
  bool converged = false;
  bool linear_fallback = false;  ///< n < 10 d: ordinary least squares instead of splines
  std::vector<double> fitted;

  double predict(std::span<const double> covariates) const;
};

/// Cyclic backfitting with cubic smoothing splines of fixed equivalent df.
/// Each pass refits f_j to the partial residual and recentres it to mean
/// zero; stops when the relative change of the fitted components drops below
/// `tol` or after `max_iter` passes. Non-finite responses are an InputError.
GamFit backfit_gam(std::span<const double> responses, const Eigen::MatrixXd& covariates,
                   const BackfitOptions& options = {});

/// ceil(tau / sigma2) clamped to [n_min, n_max]; sigma2 == 0 maps to n_max.
std::size_t estimate_nx(double sigma2_hat, double tau, std::size_t n_min, std::size_t n_max);

struct CalibrationOptions {
  double tau = 1.0;
  std::size_t n_min = 10;
  std::size_t n_max = 5000;
  BackfitOptions backfit;
  double winsor_sd = 5.0;
};

struct CalibrationResult {
  std::size_t n_x_new = 0;
  double sigma2_hat = 0.0;
  Eigen::VectorXd explained_variance;
  std::size_t backfit_iterations = 0;
  bool linear_fallback = false;
  bool degenerate_pca = false;  ///< fewer than d+1 distinct theta rows
  std::size_t winsorized = 0;
};

/// Variance of log-likelihood estimates across resampled theta-particles,
/// from the residuals of an additive model on their principal components,
/// mapped to a new particle count. `thetas` is n x d, `log_likelihoods` the
/// matching log L_t values.
CalibrationResult calibrate(const Eigen::MatrixXd& thetas, std::span<const double> log_likelihoods,
                            const CalibrationOptions& options = {});

}  // namespace smc2
