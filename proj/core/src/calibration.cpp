#include "smc2/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smc2/errors.hpp"

namespace smc2 {

namespace {

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

std::size_t distinct_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

GamFit least_squares_fit(std::span<const double> y, const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  const auto d = x.cols();
  GamFit fit;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.linear_fallback = true;
  fit.iterations = 1;
  fit.converged = true;
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  fit.intercept = yv.mean();
  const Eigen::RowVectorXd means = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - means;
  const Eigen::VectorXd yc = yv.array() - fit.intercept;
  const Eigen::VectorXd beta = xc.completeOrthogonalDecomposition().solve(yc);
  for (Eigen::Index j = 0; j < d; ++j) {
    fit.components.push_back(SmoothComponent::linear(-beta(j) * means(j), beta(j)));
  }
  const Eigen::VectorXd fitted = fit.intercept + (xc * beta).array();
  fit.fitted.assign(fitted.data(), fitted.data() + n);
  std::vector<double> resid(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) resid[static_cast<std::size_t>(i)] = yv(i) - fitted(i);
  fit.residual_variance = sample_variance(resid);
  return fit;
}

}  // namespace

PcaResult principal_components(const Eigen::MatrixXd& thetas) {
  const auto n = thetas.rows();
  const auto d = thetas.cols();
  if (n < 2 || d < 1) throw InputError("principal_components: need at least two rows");
  PcaResult out;
  out.basis.mean = thetas.colwise().mean().transpose();
  Eigen::MatrixXd z = thetas.rowwise() - out.basis.mean.transpose();
  out.basis.scale = Eigen::VectorXd::Ones(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n - 1));
    const double floor = 1e-12 * std::max(1.0, std::abs(out.basis.mean(j)));
    if (sd > floor) {
      out.basis.scale(j) = sd;
      z.col(j) /= sd;
    } else {
      z.col(j).setZero();
    }
  }
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  out.basis.components.resize(d, d);
  out.basis.explained_variance.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index src = d - 1 - k;  // eigenvalues come ascending
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0.0) v = -v;
    out.basis.components.col(k) = v;
    out.basis.explained_variance(k) = std::max(0.0, eig.eigenvalues()(src));
  }
  out.covariates = z * out.basis.components;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (out.basis.explained_variance(k) <= 1e-10) {
      out.basis.explained_variance(k) = 0.0;
      out.covariates.col(k).setZero();
    }
  }
  return out;
}

double GamFit::predict(std::span<const double> covariates) const {
  double v = intercept;
  for (std::size_t j = 0; j < components.size(); ++j) v += components[j](covariates[j]);
  return v;
}

GamFit backfit_gam(std::span<const double> responses, const Eigen::MatrixXd& covariates,
                   const BackfitOptions& options) {
  const auto n = static_cast<std::size_t>(covariates.rows());
  const auto d = static_cast<std::size_t>(covariates.cols());
  if (responses.size() != n) throw InputError("backfit_gam: responses and covariates differ in length");
  if (n < 2) throw InputError("backfit_gam: need at least two observations");
  for (double r : responses) {
    if (!std::isfinite(r)) throw InputError("backfit_gam: non-finite response");
  }
  if (n < 10 * d) return least_squares_fit(responses, covariates);

  std::vector<SplineSmoother> smoothers;
  smoothers.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    const Eigen::VectorXd col = covariates.col(static_cast<Eigen::Index>(j));
    smoothers.emplace_back(std::span<const double>(col.data(), n), options.df);
  }

  GamFit fit;
  fit.n_obs = n;
  fit.intercept = std::accumulate(responses.begin(), responses.end(), 0.0) / static_cast<double>(n);
  fit.components.assign(d, SmoothComponent::constant(0.0));
  std::vector<std::vector<double>> f(d, std::vector<double>(n, 0.0));
  std::vector<double> total(n, 0.0);
  std::vector<double> partial(n);

  double response_scale = 0.0;
  for (double r : responses) response_scale += (r - fit.intercept) * (r - fit.intercept);
  response_scale = std::sqrt(response_scale);

  for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
    double change_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) partial[i] = responses[i] - fit.intercept - (total[i] - f[j][i]);
      SplineSmoother::Result res = smoothers[j].smooth(partial);
      const double mean = std::accumulate(res.fitted.begin(), res.fitted.end(), 0.0) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double updated = res.fitted[i] - mean;
        const double delta = updated - f[j][i];
        change_sq += delta * delta;
        total[i] += delta;
        f[j][i] = updated;
      }
      res.component.shift(mean);
      fit.components[j] = std::move(res.component);
    }
    double norm_sq = 0.0;
    for (const auto& fj : f) {
      for (double v : fj) norm_sq += v * v;
    }
    fit.iterations = iter;
    const double denom = std::max(std::sqrt(norm_sq), 1e-12 * response_scale);
    const double rel = denom > 0.0 ? std::sqrt(change_sq) / denom : 0.0;
    if (rel < options.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.fitted.resize(n);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.fitted[i] = fit.intercept + total[i];
    resid[i] = responses[i] - fit.fitted[i];
  }
  fit.residual_variance = sample_variance(resid);
  return fit;
}

std::size_t estimate_nx(double sigma2_hat, double tau, std::size_t n_min, std::size_t n_max) {
  if (n_min < 2 || n_min > n_max) throw ParameterError("estimate_nx: need 2 <= n_min <= n_max");
  if (!(tau > 0.0)) throw ParameterError("estimate_nx: tau must be positive");
  if (!(sigma2_hat >= 0.0)) throw ParameterError("estimate_nx: sigma2 must be >= 0");
  if (sigma2_hat == 0.0) return n_max;
  const double raw = tau / sigma2_hat;
  if (!(raw < static_cast<double>(n_max))) return n_max;
  const auto n = static_cast<std::size_t>(std::ceil(raw));
  return std::clamp(n, n_min, n_max);
}

CalibrationResult calibrate(const Eigen::MatrixXd& thetas, std::span<const double> log_likelihoods,
                            const CalibrationOptions& options) {
  const auto n = static_cast<std::size_t>(thetas.rows());
  const auto d = static_cast<std::size_t>(thetas.cols());
  if (log_likelihoods.size() != n) throw InputError("calibrate: one response per theta row is required");
  if (n < 2) throw InputError("calibrate: need at least two islands");

  std::vector<double> responses(log_likelihoods.begin(), log_likelihoods.end());
  for (double r : responses) {
    if (!std::isfinite(r)) throw InputError("calibrate: non-finite log-likelihood");
  }
  CalibrationResult out;
  {
    const double mean = std::accumulate(responses.begin(), responses.end(), 0.0) / static_cast<double>(n);
    const double sd = std::sqrt(sample_variance(responses));
    const double lo = mean - options.winsor_sd * sd;
    const double hi = mean + options.winsor_sd * sd;
    for (double& r : responses) {
      if (r < lo || r > hi) {
        r = std::clamp(r, lo, hi);
        ++out.winsorized;
      }
    }
  }

  if (distinct_rows(thetas) < d + 1) {
    out.degenerate_pca = true;
    out.linear_fallback = true;
    out.explained_variance = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    out.sigma2_hat = sample_variance(responses);
  } else {
    const PcaResult pca = principal_components(thetas);
    const GamFit fit = backfit_gam(responses, pca.covariates, options.backfit);
    out.explained_variance = pca.basis.explained_variance;
    out.backfit_iterations = fit.iterations;
    out.linear_fallback = fit.linear_fallback;
    out.sigma2_hat = fit.residual_variance;
  }
  out.n_x_new = estimate_nx(out.sigma2_hat, options.tau, options.n_min, options.n_max);
  return out;
}

}  // namespace smc2
