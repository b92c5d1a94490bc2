#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "smc2/journal.hpp"
#include "smc2/model.hpp"
#include "smc2/particle_filter.hpp"
#include "smc2/rng.hpp"

namespace smc2 {

/// One theta-particle of the outer sampler together with its filter.
///
/// Invariant: frontier.cum_loglik equals the value recomputed by replaying
/// `journal` under `theta`. The island's stream `rng` is the only source of
/// randomness for its filter and its moves.
struct Island {
  Theta theta;
  double log_weight = 0.0;
  Frontier frontier;
  SliceJournal journal;
  Rng rng;
  bool alive = true;  ///< false once its filter produced all-zero weights

  std::size_t footprint_bytes() const noexcept { return frontier.footprint_bytes() + journal.footprint_bytes(); }
};

/// A filter pass together with the journal that regenerates it.
struct FilterPass {
  Frontier frontier;
  SliceJournal journal;
};

/// Time-0 slice for the island (journalled InitPF).
void island_start(Island& island, const StateSpaceModel& model, std::size_t n_x, double y0);
/// One step t-1 -> t (journalled ExtendPF).
void island_extend(Island& island, const StateSpaceModel& model, double yt);

/// Unconditional pass over y_{0:t} journalled as one FreshPF record.
FilterPass fresh_pass(const StateSpaceModel& model, const Theta& theta, std::size_t n_x, std::span<const double> y,
                      Rng& rng);

/// Random-walk proposal covariance Sigma_t and its Cholesky factor.
struct ProposalCov {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd chol;  ///< lower triangular, sigma = chol * chol^T
  bool fallback = false;  ///< true when scale * diag(1e-4) was used
};

/// scale * sample covariance (denominator n-1) of the rows of `thetas`.
/// If the Cholesky factorisation fails, jitter 1e-9 * trace / d is added to
/// the diagonal and doubled up to 10 times; after that (or with fewer than
/// two distinct rows) the result is scale * diag(1e-4).
ProposalCov proposal_covariance(const Eigen::MatrixXd& thetas, double scale);
ProposalCov proposal_covariance(std::span<const Theta> thetas, double scale);

struct PmmhOutcome {
  bool accepted = false;
  bool in_support = true;
  double log_ratio = 0.0;
};

/// Random-walk PMMH: theta* = theta + z, z ~ N(0, Sigma); a fresh filter of
/// size n_x_prop is run for theta* and accepted with probability 1 ^ r,
/// r = p(theta*) L* / (p(theta) L). `y` is y_{0:t}. The island's log-weight
/// never changes.
PmmhOutcome pmmh_step(Island& island, const ProposalCov& cov, const StateSpaceModel& model,
                      std::span<const double> y, std::size_t n_x_prop);
/// Same with the proposed point given explicitly.
PmmhOutcome pmmh_step_to(Island& island, const Theta& proposal, const StateSpaceModel& model,
                         std::span<const double> y, std::size_t n_x_prop);

struct SelectedTrajectory {
  StatePath path;                     ///< x*_{0:t}, time-major
  std::vector<std::uint32_t> indices;  ///< b_0..b_t
};

/// Draws b_t ~ M(W_t) and follows ancestor links back to time 0.
SelectedTrajectory select_trajectory(const ParticleHistory& history, Rng& rng);

/// Conditional SMC of size n_x_new around `pinned` (x_{0:t}) under theta.
/// Journal is reset to a single CsmcRegen record storing the trajectory.
FilterPass csmc_regenerate(const StateSpaceModel& model, const Theta& theta, std::span<const double> pinned,
                           std::size_t n_x_new, std::span<const double> y, Rng& rng);

enum class ThetaUpdate { Full, Partial };

/// Particle Gibbs: rebuild history from the journal, select a trajectory,
/// update theta given it (Full: `gibbs_sweeps` conditional sweeps; Partial:
/// unchanged), then regenerate a conditional system of size n_x_new.
/// The island's log-weight is left untouched. ConfigError when Full is
/// requested for a model without a conditional sampler.
void particle_gibbs(Island& island, const StateSpaceModel& model, std::span<const double> y, ThetaUpdate update,
                    std::size_t n_x_new, std::size_t gibbs_sweeps = 1);

}  // namespace smc2
