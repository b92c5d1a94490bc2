#include "smc2/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "smc2/errors.hpp"

namespace smc2 {

namespace {

void require_prefix(const Island& island, std::span<const double> y, const char* who) {
  if (y.size() != island.frontier.t + 1) {
    throw InputError(std::string(who) + ": data must cover exactly y_0..y_t for the island's time t");
  }
}

}  // namespace

void island_start(Island& island, const StateSpaceModel& model, std::size_t n_x, double y0) {
  const RngState before = island.rng.snapshot();
  island.frontier = pf_init(model, island.theta, n_x, y0, island.rng);
  island.journal = SliceJournal{};
  island.journal.record({before, StepTag::InitPF, static_cast<std::uint32_t>(n_x), 0});
}

void island_extend(Island& island, const StateSpaceModel& model, double yt) {
  const RngState before = island.rng.snapshot();
  island.frontier = pf_step(model, island.theta, island.frontier, yt, island.rng);
  island.journal.record({before, StepTag::ExtendPF, static_cast<std::uint32_t>(island.frontier.n_x),
                         static_cast<std::uint32_t>(island.frontier.t)});
}

FilterPass fresh_pass(const StateSpaceModel& model, const Theta& theta, std::size_t n_x, std::span<const double> y,
                      Rng& rng) {
  const RngState before = rng.snapshot();
  FilterPass pass;
  pass.frontier = run_pf(model, theta, n_x, y, rng);
  pass.journal.record({before, StepTag::FreshPF, static_cast<std::uint32_t>(n_x),
                       static_cast<std::uint32_t>(y.size() - 1)});
  return pass;
}

ProposalCov proposal_covariance(const Eigen::MatrixXd& thetas, double scale) {
  if (!(scale > 0.0)) throw ParameterError("proposal_covariance: scale must be positive");
  const auto n = thetas.rows();
  const auto d = thetas.cols();
  ProposalCov out;
  auto fallback = [&] {
    out.sigma = scale * 1e-4 * Eigen::MatrixXd::Identity(d, d);
    out.chol = out.sigma.llt().matrixL();
    out.fallback = true;
    return out;
  };
  if (n < 2) return fallback();
  const Eigen::RowVectorXd mean = thetas.colwise().mean();
  const Eigen::MatrixXd centered = thetas.rowwise() - mean;
  Eigen::MatrixXd cov = scale * (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    out.sigma = cov;
    out.chol = llt.matrixL();
    return out;
  }
  const double trace = cov.trace();
  if (!(trace > 0.0)) return fallback();
  double jitter = 1e-9 * trace / static_cast<double>(d);
  for (int attempt = 0; attempt < 10; ++attempt, jitter *= 2.0) {
    Eigen::MatrixXd jittered = cov;
    jittered.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> retry(jittered);
    if (retry.info() == Eigen::Success) {
      out.sigma = jittered;
      out.chol = retry.matrixL();
      return out;
    }
  }
  return fallback();
}

ProposalCov proposal_covariance(std::span<const Theta> thetas, double scale) {
  if (thetas.empty()) throw ParameterError("proposal_covariance: no particles");
  const auto d = static_cast<Eigen::Index>(thetas.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(thetas.size()), d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = thetas[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return proposal_covariance(m, scale);
}

PmmhOutcome pmmh_step(Island& island, const ProposalCov& cov, const StateSpaceModel& model,
                      std::span<const double> y, std::size_t n_x_prop) {
  const auto d = cov.chol.rows();
  Eigen::VectorXd z(d);
  for (Eigen::Index j = 0; j < d; ++j) z(j) = island.rng.normal();
  const Eigen::VectorXd step = cov.chol * z;
  Theta proposal = island.theta;
  for (Eigen::Index j = 0; j < d; ++j) proposal[static_cast<std::size_t>(j)] += step(j);
  return pmmh_step_to(island, proposal, model, y, n_x_prop);
}

PmmhOutcome pmmh_step_to(Island& island, const Theta& proposal, const StateSpaceModel& model,
                         std::span<const double> y, std::size_t n_x_prop) {
  require_prefix(island, y, "pmmh_step");
  PmmhOutcome out;
  if (!model.in_support(proposal)) {
    out.in_support = false;
    out.log_ratio = -std::numeric_limits<double>::infinity();
    return out;
  }
  FilterPass pass;
  try {
    pass = fresh_pass(model, proposal, n_x_prop, y, island.rng);
  } catch (const DegenerateWeightsError&) {
    out.log_ratio = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.log_ratio = (model.log_prior(proposal) + pass.frontier.cum_loglik) -
                  (model.log_prior(island.theta) + island.frontier.cum_loglik);
  const double log_u = std::log(island.rng.uniform());
  if (log_u < out.log_ratio) {
    out.accepted = true;
    island.theta = proposal;
    island.frontier = std::move(pass.frontier);
    island.journal = std::move(pass.journal);
  }
  return out;
}

SelectedTrajectory select_trajectory(const ParticleHistory& history, Rng& rng) {
  const std::size_t steps = history.steps();
  if (steps == 0) throw InputError("select_trajectory: empty history");
  const std::size_t dim = history.state_dim;
  std::vector<double> w(history.n_x);
  normalize_log_weights(history.log_weights.back(), w);
  SelectedTrajectory out;
  out.indices.resize(steps);
  out.path.resize(steps * dim);
  std::uint32_t b = 0;
  multinomial_resample(w, rng, std::span<std::uint32_t>(&b, 1));
  for (std::size_t s = steps; s-- > 0;) {
    out.indices[s] = b;
    const auto& xs = history.particles[s];
    std::copy_n(xs.begin() + static_cast<std::ptrdiff_t>(b * dim), dim,
                out.path.begin() + static_cast<std::ptrdiff_t>(s * dim));
    if (s > 0) b = history.ancestors[s][b];
  }
  return out;
}

FilterPass csmc_regenerate(const StateSpaceModel& model, const Theta& theta, std::span<const double> pinned,
                           std::size_t n_x_new, std::span<const double> y, Rng& rng) {
  if (n_x_new < 2) throw ParameterError("csmc_regenerate: n_x_new must be >= 2");
  const RngState before = rng.snapshot();
  FilterPass pass;
  pass.frontier = run_csmc(model, theta, pinned, n_x_new, y, rng);
  pass.journal.record({before, StepTag::CsmcRegen, static_cast<std::uint32_t>(n_x_new),
                       static_cast<std::uint32_t>(y.size() - 1)},
                      std::vector<double>(pinned.begin(), pinned.end()));
  return pass;
}

void particle_gibbs(Island& island, const StateSpaceModel& model, std::span<const double> y, ThetaUpdate update,
                    std::size_t n_x_new, std::size_t gibbs_sweeps) {
  if (update == ThetaUpdate::Full && !model.has_gibbs_theta()) {
    throw ConfigError("full particle Gibbs requested but model '" + std::string(model.name()) +
                      "' has no conditional theta sampler");
  }
  require_prefix(island, y, "particle_gibbs");
  const ParticleHistory history = rebuild_history(island.journal, model, island.theta, y);
  SelectedTrajectory selected = select_trajectory(history, island.rng);
  Theta theta = island.theta;
  if (update == ThetaUpdate::Full) {
    for (std::size_t i = 0; i < gibbs_sweeps; ++i) theta = model.gibbs_theta(theta, selected.path, y, island.rng);
  }
  FilterPass pass = csmc_regenerate(model, theta, selected.path, n_x_new, y, island.rng);
  island.theta = std::move(theta);
  island.frontier = std::move(pass.frontier);
  island.journal = std::move(pass.journal);
}

}  // namespace smc2
