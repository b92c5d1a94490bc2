#include "smc2/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "smc2/errors.hpp"

namespace smc2 {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}

double log_inv_gamma_pdf(double v, double shape, double scale) {
  if (!(v > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - scale / v;
}

// Standard normal cdf and upper tail.
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double norm_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }
double norm_sf_inv(double p) { return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }
double norm_cdf_inv(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

// Standard normal truncated to (a, b), by inverse cdf. Works in whichever
// tail keeps the cdf differences well conditioned.
double truncated_std_normal_inverse(double a, double b, Rng& rng) {
  const double u = rng.uniform();
  if (a > 0.0) {
    const double qa = norm_sf(a);
    const double qb = norm_sf(b);
    const double z = norm_sf_inv(qa - u * (qa - qb));
    return std::clamp(z, a, b);
  }
  if (b < 0.0) {
    const double qa = norm_sf(-b);
    const double qb = norm_sf(-a);
    const double z = norm_sf_inv(qa - u * (qa - qb));
    return std::clamp(-z, a, b);
  }
  const double pa = norm_cdf(a);
  const double pb = norm_cdf(b);
  const double z = norm_cdf_inv(pa + u * (pb - pa));
  return std::clamp(z, a, b);
}

// Sufficient statistics of an AR(1) path in the coefficient.
struct Ar1Stats {
  double lagged_sq = 0.0;  // sum_{t=1}^{T} z_{t-1}^2
  double cross = 0.0;      // sum_{t=1}^{T} z_t z_{t-1}
};

Ar1Stats ar1_stats(std::span<const double> z) {
  Ar1Stats s;
  for (std::size_t t = 1; t < z.size(); ++t) {
    s.lagged_sq += z[t - 1] * z[t - 1];
    s.cross += z[t] * z[t - 1];
  }
  return s;
}

double ar1_sum_sq(std::span<const double> z, double rho) {
  double s = (1.0 - rho * rho) * z[0] * z[0];
  for (std::size_t t = 1; t < z.size(); ++t) {
    const double e = z[t] - rho * z[t - 1];
    s += e * e;
  }
  return s;
}

}  // namespace

Theta StateSpaceModel::gibbs_theta(const Theta&, std::span<const double>, std::span<const double>, Rng&) const {
  throw UnsupportedModelError(std::string(name()) + ": no conditional theta sampler");
}

Simulation simulate(const StateSpaceModel& model, const Theta& theta, std::size_t T, Rng& rng) {
  if (!model.in_support(theta)) throw ParameterError("simulate: theta outside the prior support");
  const std::size_t dim = model.state_dim();
  Simulation sim;
  sim.path.resize((T + 1) * dim);
  sim.data.y.resize(T + 1);
  std::span<double> path(sim.path);
  model.sample_initial(theta, rng, path.subspan(0, dim));
  sim.data.y[0] = model.sample_observation(theta, path.subspan(0, dim), rng);
  for (std::size_t t = 1; t <= T; ++t) {
    model.sample_transition(theta, path.subspan((t - 1) * dim, dim), rng, path.subspan(t * dim, dim));
    sim.data.y[t] = model.sample_observation(theta, path.subspan(t * dim, dim), rng);
  }
  return sim;
}

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  const double acceptance = a > 0.0 ? norm_sf(a) - norm_sf(b) : norm_cdf(b) - norm_cdf(a);
  if (acceptance >= 0.01) {
    for (;;) {
      const double x = rng.normal(mean, sd);
      if (x > lo && x < hi) return x;
    }
  }
  double x = mean + sd * truncated_std_normal_inverse(a, b, rng);
  // Keep the draw strictly inside the open interval.
  if (!(x > lo)) x = std::nextafter(lo, hi);
  if (!(x < hi)) x = std::nextafter(hi, lo);
  return x;
}

double sample_ar1_coefficient(std::span<const double> z, double sigma2, double prior_precision,
                              double prior_mean, Rng& rng) {
  const Ar1Stats s = ar1_stats(z);
  const double z0sq = z[0] * z[0];
  // log h(rho) = -P rho^2 / 2 + b rho + log sqrt(1 - rho^2) + const
  const double precision = prior_precision + (s.lagged_sq - z0sq) / sigma2;
  const double linear = prior_precision * prior_mean + s.cross / sigma2;

  constexpr int kMaxTries = 100000;
  if (precision > 0.0) {
    const double mean = linear / precision;
    const double sd = 1.0 / std::sqrt(precision);
    for (int i = 0; i < kMaxTries; ++i) {
      const double rho = sample_truncated_normal(mean, sd, -1.0, 1.0, rng);
      if (rng.uniform() < std::sqrt(1.0 - rho * rho)) return rho;
    }
  } else {
    // exp(-P rho^2/2 + b rho) is convex on [-1, 1]; bound it by its endpoint max.
    const double g_max = std::max(-0.5 * precision + linear, -0.5 * precision - linear);
    for (int i = 0; i < kMaxTries; ++i) {
      const double rho = 2.0 * rng.uniform() - 1.0;
      if (rho <= -1.0) continue;
      const double log_accept = -0.5 * precision * rho * rho + linear * rho - g_max + 0.5 * std::log1p(-rho * rho);
      if (std::log(rng.uniform_positive()) < log_accept) return rho;
    }
  }
  // Pathological posterior mass pinned at +-1: fall back to the mode of the
  // Gaussian part, kept strictly inside the interval.
  const double fallback = precision > 0.0 ? linear / precision : (linear >= 0.0 ? 1.0 : -1.0);
  return std::clamp(fallback, std::nextafter(-1.0, 0.0), std::nextafter(1.0, 0.0));
}

// ---------------------------------------------------------------------------
// Linear-Gaussian model

LinearGaussianModel::LinearGaussianModel(double sigma_x, double sigma_y) : sigma_x_(sigma_x), sigma_y_(sigma_y) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || !std::isfinite(sigma_x) || !std::isfinite(sigma_y)) {
    throw ParameterError("lgssm: sigma_x and sigma_y must be positive and finite");
  }
}

Theta LinearGaussianModel::theta(double rho) {
  if (!(std::abs(rho) < 1.0)) throw ParameterError("lgssm: |rho| must be < 1");
  return Theta{rho};
}

bool LinearGaussianModel::in_support(const Theta& theta) const {
  return theta.size() == 1 && std::abs(theta[0]) < 1.0;
}

double LinearGaussianModel::log_prior(const Theta& theta) const {
  return in_support(theta) ? -std::numbers::ln2 : kNegInf;
}

Theta LinearGaussianModel::sample_prior(Rng& rng) const {
  for (;;) {
    const double rho = 2.0 * rng.uniform() - 1.0;
    if (rho > -1.0) return Theta{rho};
  }
}

double LinearGaussianModel::log_initial(const Theta& theta, std::span<const double> x) const {
  const double rho = theta[0];
  return log_normal_pdf(x[0], 0.0, sigma_x_ * sigma_x_ / (1.0 - rho * rho));
}

double LinearGaussianModel::log_transition(const Theta& theta, std::span<const double> prev,
                                           std::span<const double> x) const {
  return log_normal_pdf(x[0], theta[0] * prev[0], sigma_x_ * sigma_x_);
}

double LinearGaussianModel::log_observation(const Theta&, double y, std::span<const double> x) const {
  return log_normal_pdf(y, x[0], sigma_y_ * sigma_y_);
}

void LinearGaussianModel::sample_initial(const Theta& theta, Rng& rng, std::span<double> out) const {
  const double rho = theta[0];
  out[0] = rng.normal() * sigma_x_ / std::sqrt(1.0 - rho * rho);
}

void LinearGaussianModel::sample_transition(const Theta& theta, std::span<const double> prev, Rng& rng,
                                            std::span<double> out) const {
  out[0] = theta[0] * prev[0] + sigma_x_ * rng.normal();
}

double LinearGaussianModel::sample_observation(const Theta&, std::span<const double> x, Rng& rng) const {
  return x[0] + sigma_y_ * rng.normal();
}

std::optional<double> LinearGaussianModel::exact_loglik(const Theta& theta, std::span<const double> y) const {
  return kalman_filter(*this, theta, y).loglik;
}

Theta LinearGaussianModel::gibbs_theta(const Theta&, std::span<const double> path, std::span<const double>,
                                       Rng& rng) const {
  return Theta{sample_ar1_coefficient(path, sigma_x_ * sigma_x_, 0.0, 0.0, rng)};
}

KalmanResult kalman_filter(const LinearGaussianModel& model, const Theta& theta, std::span<const double> y) {
  if (!model.in_support(theta)) throw ParameterError("kalman_filter: theta outside support");
  const double rho = theta[0];
  const double q = model.sigma_x() * model.sigma_x();
  const double r = model.sigma_y() * model.sigma_y();
  KalmanResult out;
  out.step_loglik.reserve(y.size());
  out.filter_mean.reserve(y.size());
  out.filter_var.reserve(y.size());
  double m = 0.0;
  double p = q / (1.0 - rho * rho);
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t > 0) {
      m = rho * m;
      p = rho * rho * p + q;
    }
    const double s = p + r;
    const double term = log_normal_pdf(y[t], m, s);
    out.step_loglik.push_back(term);
    out.loglik += term;
    const double k = p / s;
    m += k * (y[t] - m);
    p *= (1.0 - k);
    out.filter_mean.push_back(m);
    out.filter_var.push_back(p);
  }
  return out;
}

double kalman_loglik(const StateSpaceModel& model, const Theta& theta, std::span<const double> y) {
  const auto* lg = dynamic_cast<const LinearGaussianModel*>(&model);
  if (lg == nullptr) throw UnsupportedModelError("kalman_loglik requires a linear-Gaussian model");
  return kalman_filter(*lg, theta, y).loglik;
}

// ---------------------------------------------------------------------------
// Stochastic volatility model

StochasticVolatilityModel::StochasticVolatilityModel(SvPrior prior) : prior_(prior) {
  if (!(prior.mu_sd > 0.0) || !(prior.ig_shape > 0.0) || !(prior.ig_scale > 0.0)) {
    throw ParameterError("sv: prior scales must be positive");
  }
}

bool StochasticVolatilityModel::in_support(const Theta& theta) const {
  return theta.size() == 3 && std::isfinite(theta[0]) && std::abs(theta[1]) < 1.0 && theta[2] > 0.0 &&
         std::isfinite(theta[2]);
}

double StochasticVolatilityModel::log_prior(const Theta& theta) const {
  if (!in_support(theta)) return kNegInf;
  const double mu = theta[0];
  const double rho = theta[1];
  const double sigma = theta[2];
  // N(0,1) restricted to [-1, 1], normalised.
  static const double log_trunc_mass = std::log(norm_cdf(1.0) - norm_cdf(-1.0));
  const double lp_mu = log_normal_pdf(mu, prior_.mu_mean, prior_.mu_sd * prior_.mu_sd);
  const double lp_rho = log_normal_pdf(rho, 0.0, 1.0) - log_trunc_mass;
  const double lp_sigma = log_inv_gamma_pdf(sigma * sigma, prior_.ig_shape, prior_.ig_scale) + std::log(2.0 * sigma);
  return lp_mu + lp_rho + lp_sigma;
}

Theta StochasticVolatilityModel::sample_prior(Rng& rng) const {
  const double mu = rng.normal(prior_.mu_mean, prior_.mu_sd);
  double rho;
  do {
    rho = rng.normal();
  } while (!(std::abs(rho) < 1.0));
  const double sigma2 = prior_.ig_scale / rng.gamma(prior_.ig_shape);
  return Theta{mu, rho, std::sqrt(sigma2)};
}

double StochasticVolatilityModel::log_initial(const Theta& theta, std::span<const double> x) const {
  const double rho = theta[1];
  const double sigma = theta[2];
  return log_normal_pdf(x[0], theta[0], sigma * sigma / (1.0 - rho * rho));
}

double StochasticVolatilityModel::log_transition(const Theta& theta, std::span<const double> prev,
                                                 std::span<const double> x) const {
  const double mu = theta[0];
  const double sigma = theta[2];
  return log_normal_pdf(x[0], mu + theta[1] * (prev[0] - mu), sigma * sigma);
}

double StochasticVolatilityModel::log_observation(const Theta&, double y, std::span<const double> x) const {
  // y == 0 with x -> -inf would otherwise give 0 * inf.
  const double scaled_sq = y == 0.0 ? 0.0 : y * y * std::exp(-x[0]);
  return -kLogSqrt2Pi - 0.5 * x[0] - 0.5 * scaled_sq;
}

void StochasticVolatilityModel::sample_initial(const Theta& theta, Rng& rng, std::span<double> out) const {
  const double rho = theta[1];
  out[0] = theta[0] + rng.normal() * theta[2] / std::sqrt(1.0 - rho * rho);
}

void StochasticVolatilityModel::sample_transition(const Theta& theta, std::span<const double> prev, Rng& rng,
                                                  std::span<double> out) const {
  const double mu = theta[0];
  out[0] = mu + theta[1] * (prev[0] - mu) + theta[2] * rng.normal();
}

double StochasticVolatilityModel::sample_observation(const Theta&, std::span<const double> x, Rng& rng) const {
  return std::exp(0.5 * x[0]) * rng.normal();
}

Theta StochasticVolatilityModel::gibbs_theta(const Theta& theta, std::span<const double> path,
                                             std::span<const double>, Rng& rng) const {
  double mu = theta[0];
  double rho = theta[1];
  double sigma2 = theta[2] * theta[2];
  mu = sv_sample_mu(path, rho, sigma2, prior_, rng);
  rho = sv_sample_rho(path, mu, sigma2, rng);
  sigma2 = sv_sample_sigma2(path, mu, rho, prior_, rng);
  return Theta{mu, rho, std::sqrt(sigma2)};
}

double sv_sample_mu(std::span<const double> path, double rho, double sigma2, const SvPrior& prior, Rng& rng) {
  const double c = 1.0 - rho;
  double precision = 1.0 / (prior.mu_sd * prior.mu_sd) + (1.0 - rho * rho) / sigma2;
  double linear = prior.mu_mean / (prior.mu_sd * prior.mu_sd) + (1.0 - rho * rho) * path[0] / sigma2;
  for (std::size_t t = 1; t < path.size(); ++t) {
    precision += c * c / sigma2;
    linear += c * (path[t] - rho * path[t - 1]) / sigma2;
  }
  return rng.normal(linear / precision, 1.0 / std::sqrt(precision));
}

double sv_sample_rho(std::span<const double> path, double mu, double sigma2, Rng& rng) {
  std::vector<double> z(path.begin(), path.end());
  for (double& v : z) v -= mu;
  return sample_ar1_coefficient(z, sigma2, 1.0, 0.0, rng);
}

double sv_sample_sigma2(std::span<const double> path, double mu, double rho, const SvPrior& prior, Rng& rng) {
  std::vector<double> z(path.begin(), path.end());
  for (double& v : z) v -= mu;
  const double shape = prior.ig_shape + 0.5 * static_cast<double>(path.size());
  const double scale = prior.ig_scale + 0.5 * ar1_sum_sq(z, rho);
  return scale / rng.gamma(shape);
}

std::shared_ptr<const StochasticVolatilityModel> sv_spec(SvPrior prior) {
  return std::make_shared<const StochasticVolatilityModel>(prior);
}

std::shared_ptr<const LinearGaussianModel> lgssm_spec(double sigma_x, double sigma_y) {
  return std::make_shared<const LinearGaussianModel>(sigma_x, sigma_y);
}

}  // namespace smc2
