#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smc2/calibration.hpp"
#include "smc2/kernels.hpp"
#include "smc2/model.hpp"
#include "smc2/rng.hpp"

namespace smc2 {

/// How the sampler rejuvenates islands and adapts N_x.
///   A: PMMH, then exchange to 2 N_x when mean acceptance is low.
///   B: PMMH, then exchange to the calibrated N_x.
///   C: full particle Gibbs with the calibrated N_x.
///   D: partial particle Gibbs with the calibrated N_x, then PMMH.
enum class Variant { A_StandardExchange, B_ExchangeWithGam, C_FullPG, D_PartialPG_PMMH };

std::string_view to_string(Variant v) noexcept;
/// Single-letter label "a".."d".
std::string_view variant_letter(Variant v) noexcept;
/// Accepts "a".."d" (either case) or the full enumerator names.
Variant variant_from_string(std::string_view s);

/// Wall: elapsed_s is monotonic wall time. Work: elapsed_s is the number of
/// particle moves performed so far times 1e-9, which is reproducible.
enum class ClockMode { Wall, Work };

struct Smc2Config {
  std::size_t n_theta = 500;
  std::size_t n_x_init = 100;
  double ess_min_frac = 0.5;  ///< 0 disables resampling entirely
  Variant variant = Variant::C_FullPG;
  double tau = 1.0;
  std::size_t pmmh_steps_after_pg = 3;
  double pmmh_accept_threshold = 0.2;
  std::optional<double> proposal_scale;  ///< default 2.38^2 / d
  std::uint64_t seed = 1;
  std::size_t n_x_min = 10;
  std::size_t n_x_max = 5000;
  std::size_t pmmh_passes = 1;  ///< PMMH passes per move for variants A and B
  std::size_t gibbs_sweeps = 1;
  std::size_t workers = 1;  ///< 0 means std::thread::hardware_concurrency()
  ClockMode clock = ClockMode::Wall;
  BackfitOptions backfit;
  double winsor_sd = 5.0;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
  double scale_for(std::size_t theta_dim) const;
  CalibrationOptions calibration_options() const;
};

/// Diagnostics for one time step. Optional quantities are NaN when absent.
struct TraceRow {
  std::size_t t = 0;
  double ess = 0.0;             ///< after the weight update, before any move
  std::size_t n_x = 0;          ///< particle count at the end of the step
  bool resampled = false;
  bool pg_applied = false;
  std::size_t pmmh_attempts = 0;
  std::size_t pmmh_accepts = 0;
  double sigma2_hat = 0.0;      ///< NaN unless calibrated at this step
  double log_evidence = 0.0;
  double elapsed_s = 0.0;
  double ess_after_move = 0.0;  ///< NaN unless resampled
  bool exchanged = false;
  std::size_t backfit_iterations = 0;
  std::uint64_t work = 0;       ///< particle moves so far
};

struct Smc2State {
  std::vector<Island> islands;
  std::size_t steps = 0;  ///< observations absorbed; the last one is y_{steps-1}
  double log_evidence = 0.0;
  std::size_t n_x = 0;    ///< particle count new filters are started with
  std::uint64_t epoch = 0;
  Rng sampler_rng;
  std::uint64_t work = 0;
  std::vector<TraceRow> trace;

  std::vector<double> log_weights() const;
  std::vector<double> normalized_weights() const;
  double ess() const;
};

/// N_theta prior draws with zero log-weights; island m gets spawn_stream(seed, m, 0).
Smc2State smc2_init(const Smc2Config& config, const StateSpaceModel& model);

/// log sum_m W_m l_m from per-island log increments and the normalised
/// weights that were current before the update.
double evidence_increment(std::span<const double> log_increments, std::span<const double> pre_weights);

/// Absorbs y.back(); `y` is y_{0:t} with t = state.steps. Runs the ESS test
/// and, if triggered, resample_move. Appends one TraceRow.
void smc2_step(Smc2State& state, const Smc2Config& config, const StateSpaceModel& model, std::span<const double> y);

struct MoveReport {
  std::size_t pmmh_attempts = 0;
  std::size_t pmmh_accepts = 0;
  bool pg_applied = false;
  bool exchanged = false;
  std::optional<double> sigma2_hat;
  std::size_t backfit_iterations = 0;
  std::size_t n_x_after = 0;
  std::uint64_t work = 0;
};

/// Multinomial resampling of islands, weights reset to zero, then the
/// variant's move. `y` is y_{0:t}.
MoveReport resample_move(Smc2State& state, const Smc2Config& config, const StateSpaceModel& model,
                         std::span<const double> y);

/// Replaces the island's filter by a fresh one of size n_x_new over y and
/// adds the log-likelihood difference to its weight. A degenerate new
/// filter kills the island (weight -inf).
void exchange_step(Island& island, const StateSpaceModel& model, std::span<const double> y, std::size_t n_x_new);

struct RunResult {
  Smc2State state;
  bool completed = true;
  std::string failure;  ///< set when the sampler degenerated; trace is partial
};

using StepObserver = std::function<void(const Smc2State&)>;

/// Full pass over `data`.
RunResult run(const Smc2Config& config, const StateSpaceModel& model, const Dataset& data,
              const StepObserver& observer = {});

/// Calls fn(i) for i in [0, n) on up to `workers` threads. If any call
/// throws, the exception of the lowest index is rethrown after all finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace smc2
