#pragma once

#include <memory>
#include <span>
#include <vector>

#include "smc2/model.hpp"

namespace smc2 {

/// x_0 ~ N(0, sx^2/(1-rho^2)), x_t = rho x_{t-1} + sx e_t, y_t = x_t + sy n_t.
///
/// theta = (rho) with a Uniform(-1, 1) prior; sx and sy are fixed at
/// construction. The exact likelihood comes from the Kalman filter, which
/// makes this the reference model for everything that claims unbiasedness.
class LinearGaussianModel final : public StateSpaceModel {
 public:
  LinearGaussianModel(double sigma_x, double sigma_y);

  /// Validated parameter point; |rho| >= 1 is a ParameterError.
  static Theta theta(double rho);

  double sigma_x() const noexcept { return sigma_x_; }
  double sigma_y() const noexcept { return sigma_y_; }

  std::string_view name() const override { return "lgssm"; }
  std::size_t theta_dim() const override { return 1; }
  std::vector<std::string> theta_names() const override { return {"rho"}; }

  bool in_support(const Theta& theta) const override;
  double log_prior(const Theta& theta) const override;
  Theta sample_prior(Rng& rng) const override;

  double log_initial(const Theta& theta, std::span<const double> x) const override;
  double log_transition(const Theta& theta, std::span<const double> prev, std::span<const double> x) const override;
  double log_observation(const Theta& theta, double y, std::span<const double> x) const override;

  void sample_initial(const Theta& theta, Rng& rng, std::span<double> out) const override;
  void sample_transition(const Theta& theta, std::span<const double> prev, Rng& rng,
                         std::span<double> out) const override;
  double sample_observation(const Theta& theta, std::span<const double> x, Rng& rng) const override;

  std::optional<double> exact_loglik(const Theta& theta, std::span<const double> y) const override;

  bool has_gibbs_theta() const override { return true; }
  Theta gibbs_theta(const Theta& theta, std::span<const double> path, std::span<const double> y,
                    Rng& rng) const override;

 private:
  double sigma_x_;
  double sigma_y_;
};

struct KalmanResult {
  double loglik = 0.0;
  std::vector<double> step_loglik;  ///< log p(y_t | y_{0:t-1})
  std::vector<double> filter_mean;  ///< E[x_t | y_{0:t}]
  std::vector<double> filter_var;
};

KalmanResult kalman_filter(const LinearGaussianModel& model, const Theta& theta, std::span<const double> y);

/// Exact log p(y_{0:T}); UnsupportedModelError unless `model` is linear-Gaussian.
double kalman_loglik(const StateSpaceModel& model, const Theta& theta, std::span<const double> y);

/// Priors of the stochastic volatility model. sigma^2 ~ IG(shape, scale) in
/// the shape-scale convention: density proportional to v^{-shape-1} e^{-scale/v},
/// so E[sigma^2] = scale / (shape - 1).
struct SvPrior {
  double mu_mean = 0.0;
  double mu_sd = 2.0;
  double ig_shape = 3.0;
  double ig_scale = 0.5;
};

/// x_0 ~ N(mu, s^2/(1-rho^2)), x_t - mu = rho (x_{t-1} - mu) + s e_t,
/// y_t | x_t ~ N(0, exp(x_t)).
///
/// theta = (mu, rho, sigma). The prior is placed on sigma^2 and log_prior()
/// includes the Jacobian of sigma -> sigma^2.
class StochasticVolatilityModel final : public StateSpaceModel {
 public:
  explicit StochasticVolatilityModel(SvPrior prior = {});

  const SvPrior& prior() const noexcept { return prior_; }

  std::string_view name() const override { return "sv"; }
  std::size_t theta_dim() const override { return 3; }
  std::vector<std::string> theta_names() const override { return {"mu", "rho", "sigma"}; }

  bool in_support(const Theta& theta) const override;
  double log_prior(const Theta& theta) const override;
  Theta sample_prior(Rng& rng) const override;

  double log_initial(const Theta& theta, std::span<const double> x) const override;
  double log_transition(const Theta& theta, std::span<const double> prev, std::span<const double> x) const override;
  double log_observation(const Theta& theta, double y, std::span<const double> x) const override;

  void sample_initial(const Theta& theta, Rng& rng, std::span<double> out) const override;
  void sample_transition(const Theta& theta, std::span<const double> prev, Rng& rng,
                         std::span<double> out) const override;
  double sample_observation(const Theta& theta, std::span<const double> x, Rng& rng) const override;

  bool has_gibbs_theta() const override { return true; }
  /// Sweeps mu | rho, sigma^2, then rho | mu, sigma^2, then sigma^2 | mu, rho.
  Theta gibbs_theta(const Theta& theta, std::span<const double> path, std::span<const double> y,
                    Rng& rng) const override;

 private:
  SvPrior prior_;
};

std::shared_ptr<const StochasticVolatilityModel> sv_spec(SvPrior prior = {});
std::shared_ptr<const LinearGaussianModel> lgssm_spec(double sigma_x, double sigma_y);

// Full conditionals of the AR(1) latent process with stationary start.
// `path` is x_{0:t}. Exposed for testing against quadrature.

double sv_sample_mu(std::span<const double> path, double rho, double sigma2, const SvPrior& prior, Rng& rng);
double sv_sample_rho(std::span<const double> path, double mu, double sigma2, Rng& rng);
double sv_sample_sigma2(std::span<const double> path, double mu, double rho, const SvPrior& prior, Rng& rng);

/// Draws rho from the density on (-1, 1) proportional to
///   prior(rho) * sqrt(1 - rho^2) * exp(-(1-rho^2) z_0^2 / (2 s2)) * prod_t N(z_t; rho z_{t-1}, s2)
/// where prior(rho) is N(prior_mean, 1/prior_precision) (flat when the
/// precision is zero). The Gaussian part is sampled exactly from its
/// truncation to (-1, 1); the sqrt(1 - rho^2) factor is handled by rejection.
double sample_ar1_coefficient(std::span<const double> centered, double sigma2, double prior_precision,
                              double prior_mean, Rng& rng);

/// N(mean, sd^2) truncated to (lo, hi). Rejection from the untruncated law
/// while the acceptance probability is at least 1%, inverse-cdf otherwise.
double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

}  // namespace smc2
