#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "smc2/journal.hpp"
#include "smc2/model.hpp"
#include "smc2/rng.hpp"

namespace smc2 {

/// Current time slice of a bootstrap/guided particle filter.
struct Frontier {
  std::size_t n_x = 0;
  std::size_t t = 0;
  std::size_t state_dim = 1;
  std::vector<double> particles;    ///< n_x * state_dim, particle-major
  std::vector<double> log_weights;  ///< unnormalised log w_t^n
  std::vector<double> weights;      ///< normalised W_t^n
  double log_increment = 0.0;       ///< log l_t
  double cum_loglik = 0.0;          ///< log L_t = sum_s log l_s

  std::span<const double> particle(std::size_t n) const {
    return std::span<const double>(particles).subspan(n * state_dim, state_dim);
  }
  std::size_t footprint_bytes() const noexcept;

  friend bool operator==(const Frontier&, const Frontier&) = default;
};

/// Every variable a filter generated up to time t. Produced on demand by
/// rebuild_history(); ancestors[0] is empty. Indices are 0-based.
struct ParticleHistory {
  std::size_t n_x = 0;
  std::size_t state_dim = 1;
  std::vector<std::vector<double>> particles;
  std::vector<std::vector<std::uint32_t>> ancestors;
  std::vector<std::vector<double>> log_weights;

  std::size_t steps() const noexcept { return particles.size(); }
  std::size_t footprint_bytes() const noexcept;

  friend bool operator==(const ParticleHistory&, const ParticleHistory&) = default;
};

/// Effective sample size (sum w)^2 / sum w^2 of nonnegative weights.
/// All-zero weights throw DegenerateWeightsError.
double ess(std::span<const double> weights);
/// Same, from log-weights (max-shifted before exponentiating).
double ess_from_log(std::span<const double> log_weights);

/// log sum exp with max-subtraction; -inf when every term is -inf.
double log_sum_exp(std::span<const double> log_values);

/// Writes W = exp(lw) / sum exp(lw) and returns log sum exp(lw).
double normalize_log_weights(std::span<const double> log_weights, std::span<double> normalized);

/// i.i.d. categorical draws from `weights` (nonnegative, need not sum to 1
/// exactly). Consumes exactly one uniform per draw, in output order.
std::vector<std::uint32_t> multinomial_resample(std::span<const double> weights, std::size_t n_draws, Rng& rng);
void multinomial_resample(std::span<const double> weights, Rng& rng, std::span<std::uint32_t> out);

// Particle filter. RNG consumption per slice is frozen: at time 0 the
// proposals for n = 0..N-1; at t > 0 all ancestors first, then all
// proposals. Conditional passes skip particle 0, which is pinned.
// A non-null `history` receives every slice as it is generated.

Frontier pf_init(const StateSpaceModel& model, const Theta& theta, std::size_t n_x, double y0, Rng& rng,
                 ParticleHistory* history = nullptr);
Frontier pf_step(const StateSpaceModel& model, const Theta& theta, const Frontier& prev, double yt, Rng& rng,
                 ParticleHistory* history = nullptr);
/// Unconditional pass over y[0..y.size()-1] from one stream.
Frontier run_pf(const StateSpaceModel& model, const Theta& theta, std::size_t n_x, std::span<const double> y,
                Rng& rng, ParticleHistory* history = nullptr);
/// Conditional SMC pass: particle 0 is `pinned` at every time with ancestor 0.
/// Requires n_x >= 2 and pinned.size() == y.size() * state_dim.
Frontier run_csmc(const StateSpaceModel& model, const Theta& theta, std::span<const double> pinned,
                  std::size_t n_x, std::span<const double> y, Rng& rng, ParticleHistory* history = nullptr);

/// Regenerates the full history described by `journal`. `theta` must be the
/// parameter the journal was recorded under. Throws JournalError for an
/// empty or malformed journal and InputError if `y` is too short.
ParticleHistory rebuild_history(const SliceJournal& journal, const StateSpaceModel& model, const Theta& theta,
                                std::span<const double> y, Frontier* frontier = nullptr);

}  // namespace smc2
