#include "smc2/smc2.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "smc2/errors.hpp"
#include "smc2/particle_filter.hpp"

namespace smc2 {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t resolve_workers(std::size_t workers) {
  if (workers != 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void kill(Island& island) {
  island.alive = false;
  island.log_weight = kNegInf;
}

Eigen::MatrixXd theta_matrix(const std::vector<Island>& islands) {
  const auto d = static_cast<Eigen::Index>(islands.front().theta.size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(islands.size()), d);
  for (std::size_t i = 0; i < islands.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), j) = islands[i].theta[static_cast<std::size_t>(j)];
  }
  return m;
}

struct PassTally {
  std::size_t attempts = 0;
  std::size_t accepts = 0;
  std::uint64_t work = 0;
};

// `passes` PMMH steps on every live island, filters of size n_x.
PassTally pmmh_passes(std::vector<Island>& islands, const ProposalCov& cov, const StateSpaceModel& model,
                      std::span<const double> y, std::size_t n_x, std::size_t passes, std::size_t workers) {
  std::vector<PassTally> per(islands.size());
  parallel_for(islands.size(), workers, [&](std::size_t m) {
    Island& island = islands[m];
    if (!island.alive) return;
    for (std::size_t p = 0; p < passes; ++p) {
      const PmmhOutcome out = pmmh_step(island, cov, model, y, n_x);
      ++per[m].attempts;
      if (out.accepted) ++per[m].accepts;
      if (out.in_support) per[m].work += static_cast<std::uint64_t>(n_x) * y.size();
    }
  });
  PassTally total;
  for (const auto& p : per) {
    total.attempts += p.attempts;
    total.accepts += p.accepts;
    total.work += p.work;
  }
  return total;
}

std::uint64_t exchange_all(std::vector<Island>& islands, const StateSpaceModel& model, std::span<const double> y,
                           std::size_t n_x_new, std::size_t workers) {
  parallel_for(islands.size(), workers, [&](std::size_t m) {
    if (islands[m].alive) exchange_step(islands[m], model, y, n_x_new);
  });
  return static_cast<std::uint64_t>(islands.size()) * n_x_new * y.size();
}

std::uint64_t gibbs_all(std::vector<Island>& islands, const StateSpaceModel& model, std::span<const double> y,
                        ThetaUpdate update, std::size_t n_x_new, std::size_t sweeps, std::size_t workers) {
  std::vector<std::uint64_t> per(islands.size(), 0);
  parallel_for(islands.size(), workers, [&](std::size_t m) {
    Island& island = islands[m];
    if (!island.alive) return;
    per[m] = static_cast<std::uint64_t>(island.frontier.n_x + n_x_new) * y.size();
    try {
      particle_gibbs(island, model, y, update, n_x_new, sweeps);
    } catch (const DegenerateWeightsError&) {
      kill(island);
    }
  });
  std::uint64_t total = 0;
  for (auto w : per) total += w;
  return total;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::A_StandardExchange: return "A_StandardExchange";
    case Variant::B_ExchangeWithGam: return "B_ExchangeWithGam";
    case Variant::C_FullPG: return "C_FullPG";
    case Variant::D_PartialPG_PMMH: return "D_PartialPG_PMMH";
  }
  return "?";
}

std::string_view variant_letter(Variant v) noexcept {
  switch (v) {
    case Variant::A_StandardExchange: return "a";
    case Variant::B_ExchangeWithGam: return "b";
    case Variant::C_FullPG: return "c";
    case Variant::D_PartialPG_PMMH: return "d";
  }
  return "?";
}

Variant variant_from_string(std::string_view s) {
  for (Variant v : {Variant::A_StandardExchange, Variant::B_ExchangeWithGam, Variant::C_FullPG,
                    Variant::D_PartialPG_PMMH}) {
    const std::string_view letter = variant_letter(v);
    if (s == to_string(v) || s == letter || (s.size() == 1 && std::tolower(s[0]) == letter[0])) return v;
  }
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected a, b, c or d)");
}

void Smc2Config::validate() const {
  if (n_theta < 1) throw ConfigError("n_theta must be >= 1");
  if (n_x_init < 1) throw ConfigError("n_x_init must be >= 1");
  if (!(ess_min_frac >= 0.0 && ess_min_frac <= 1.0)) throw ConfigError("ess_min_frac must lie in [0, 1]");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(pmmh_accept_threshold >= 0.0 && pmmh_accept_threshold <= 1.0)) {
    throw ConfigError("pmmh_accept_threshold must lie in [0, 1]");
  }
  if (proposal_scale && !(*proposal_scale > 0.0)) throw ConfigError("proposal_scale must be positive");
  if (n_x_min < 2 || n_x_min > n_x_max) throw ConfigError("n_x_bounds must satisfy 2 <= min <= max");
  if (gibbs_sweeps < 1) throw ConfigError("gibbs_sweeps must be >= 1");
  if (!(winsor_sd > 0.0)) throw ConfigError("winsor_sd must be positive");
  if (!(backfit.df >= 1.0)) throw ConfigError("backfit.df must be >= 1");
  const bool uses_csmc = variant == Variant::C_FullPG || variant == Variant::D_PartialPG_PMMH;
  if (uses_csmc && n_x_init < 2) throw ConfigError("particle Gibbs variants need n_x_init >= 2");
}

double Smc2Config::scale_for(std::size_t theta_dim) const {
  return proposal_scale.value_or(2.38 * 2.38 / static_cast<double>(theta_dim));
}

CalibrationOptions Smc2Config::calibration_options() const {
  CalibrationOptions o;
  o.tau = tau;
  o.n_min = n_x_min;
  o.n_max = n_x_max;
  o.backfit = backfit;
  o.winsor_sd = winsor_sd;
  return o;
}

std::vector<double> Smc2State::log_weights() const {
  std::vector<double> lw(islands.size());
  for (std::size_t m = 0; m < islands.size(); ++m) lw[m] = islands[m].log_weight;
  return lw;
}

std::vector<double> Smc2State::normalized_weights() const {
  const auto lw = log_weights();
  std::vector<double> w(lw.size());
  normalize_log_weights(lw, w);
  return w;
}

double Smc2State::ess() const { return ess_from_log(log_weights()); }

Smc2State smc2_init(const Smc2Config& config, const StateSpaceModel& model) {
  config.validate();
  Smc2State state;
  state.n_x = config.n_x_init;
  state.sampler_rng = spawn_stream(config.seed, kSamplerStream, 0);
  state.islands.resize(config.n_theta);
  for (std::size_t m = 0; m < config.n_theta; ++m) {
    Island& island = state.islands[m];
    island.rng = spawn_stream(config.seed, m, 0);
    island.theta = model.sample_prior(island.rng);
    island.log_weight = 0.0;
  }
  return state;
}

double evidence_increment(std::span<const double> log_increments, std::span<const double> pre_weights) {
  std::vector<double> terms(log_increments.size());
  for (std::size_t m = 0; m < terms.size(); ++m) {
    terms[m] = pre_weights[m] > 0.0 ? std::log(pre_weights[m]) + log_increments[m] : kNegInf;
  }
  return log_sum_exp(terms);
}

void exchange_step(Island& island, const StateSpaceModel& model, std::span<const double> y, std::size_t n_x_new) {
  FilterPass pass;
  try {
    pass = fresh_pass(model, island.theta, n_x_new, y, island.rng);
  } catch (const DegenerateWeightsError&) {
    kill(island);
    return;
  }
  island.log_weight += pass.frontier.cum_loglik - island.frontier.cum_loglik;
  island.frontier = std::move(pass.frontier);
  island.journal = std::move(pass.journal);
}

MoveReport resample_move(Smc2State& state, const Smc2Config& config, const StateSpaceModel& model,
                         std::span<const double> y) {
  const std::size_t workers = resolve_workers(config.workers);
  const std::size_t n = state.islands.size();
  const std::vector<double> w = state.normalized_weights();
  const auto idx = multinomial_resample(w, n, state.sampler_rng);

  std::vector<Island> next;
  next.reserve(n);
  ++state.epoch;
  for (std::size_t m = 0; m < n; ++m) {
    next.push_back(state.islands[idx[m]]);
    next.back().log_weight = 0.0;
    next.back().rng = spawn_stream(config.seed, m, state.epoch);
  }
  state.islands = std::move(next);

  MoveReport report;
  const double scale = config.scale_for(model.theta_dim());
  const bool calibrates = config.variant != Variant::A_StandardExchange;
  std::size_t target = state.n_x;
  if (calibrates && n >= 2) {
    std::vector<double> ll(n);
    for (std::size_t m = 0; m < n; ++m) ll[m] = state.islands[m].frontier.cum_loglik;
    const CalibrationResult cal = calibrate(theta_matrix(state.islands), ll, config.calibration_options());
    report.sigma2_hat = cal.sigma2_hat;
    report.backfit_iterations = cal.backfit_iterations;
    target = cal.n_x_new;
  }

  switch (config.variant) {
    case Variant::A_StandardExchange: {
      const ProposalCov cov = proposal_covariance(theta_matrix(state.islands), scale);
      const PassTally tally = pmmh_passes(state.islands, cov, model, y, state.n_x, config.pmmh_passes, workers);
      report.pmmh_attempts = tally.attempts;
      report.pmmh_accepts = tally.accepts;
      report.work += tally.work;
      const double rate =
          tally.attempts > 0 ? static_cast<double>(tally.accepts) / static_cast<double>(tally.attempts) : 1.0;
      if (rate < config.pmmh_accept_threshold && state.n_x < config.n_x_max) {
        state.n_x = std::min(2 * state.n_x, config.n_x_max);
        report.work += exchange_all(state.islands, model, y, state.n_x, workers);
        report.exchanged = true;
      }
      break;
    }
    case Variant::B_ExchangeWithGam: {
      const ProposalCov cov = proposal_covariance(theta_matrix(state.islands), scale);
      const PassTally tally = pmmh_passes(state.islands, cov, model, y, state.n_x, config.pmmh_passes, workers);
      report.pmmh_attempts = tally.attempts;
      report.pmmh_accepts = tally.accepts;
      report.work += tally.work;
      state.n_x = target;
      report.work += exchange_all(state.islands, model, y, state.n_x, workers);
      report.exchanged = true;
      break;
    }
    case Variant::C_FullPG: {
      state.n_x = target;
      report.work += gibbs_all(state.islands, model, y, ThetaUpdate::Full, state.n_x, config.gibbs_sweeps, workers);
      report.pg_applied = true;
      break;
    }
    case Variant::D_PartialPG_PMMH: {
      const ProposalCov cov = proposal_covariance(theta_matrix(state.islands), scale);
      state.n_x = target;
      report.work += gibbs_all(state.islands, model, y, ThetaUpdate::Partial, state.n_x, 1, workers);
      report.pg_applied = true;
      const PassTally tally =
          pmmh_passes(state.islands, cov, model, y, state.n_x, config.pmmh_steps_after_pg, workers);
      report.pmmh_attempts = tally.attempts;
      report.pmmh_accepts = tally.accepts;
      report.work += tally.work;
      break;
    }
  }
  report.n_x_after = state.n_x;
  return report;
}

void smc2_step(Smc2State& state, const Smc2Config& config, const StateSpaceModel& model, std::span<const double> y) {
  const std::size_t t = state.steps;
  if (y.size() != t + 1) throw InputError("smc2_step: data must cover exactly y_0..y_t");
  const std::size_t workers = resolve_workers(config.workers);
  const std::vector<double> pre = state.normalized_weights();

  std::vector<std::uint64_t> work(state.islands.size(), 0);
  parallel_for(state.islands.size(), workers, [&](std::size_t m) {
    Island& island = state.islands[m];
    if (!island.alive) return;
    try {
      if (t == 0) {
        island_start(island, model, state.n_x, y[0]);
      } else {
        island_extend(island, model, y[t]);
      }
      work[m] = island.frontier.n_x;
    } catch (const DegenerateWeightsError&) {
      kill(island);
    }
  });
  for (auto w : work) state.work += w;

  std::vector<double> inc(state.islands.size());
  bool any_alive = false;
  for (std::size_t m = 0; m < inc.size(); ++m) {
    const Island& island = state.islands[m];
    inc[m] = island.alive ? island.frontier.log_increment : kNegInf;
    any_alive = any_alive || island.alive;
  }
  if (!any_alive) throw SamplerDegeneracyError("every island degenerated at t=" + std::to_string(t));
  state.log_evidence += evidence_increment(inc, pre);
  for (std::size_t m = 0; m < inc.size(); ++m) state.islands[m].log_weight += inc[m];
  state.steps = t + 1;

  TraceRow row;
  row.t = t;
  row.ess = state.ess();
  row.sigma2_hat = kNaN;
  row.ess_after_move = kNaN;
  if (row.ess <= config.ess_min_frac * static_cast<double>(state.islands.size())) {
    const MoveReport report = resample_move(state, config, model, y);
    state.work += report.work;
    row.resampled = true;
    row.pg_applied = report.pg_applied;
    row.exchanged = report.exchanged;
    row.pmmh_attempts = report.pmmh_attempts;
    row.pmmh_accepts = report.pmmh_accepts;
    if (report.sigma2_hat) row.sigma2_hat = *report.sigma2_hat;
    row.backfit_iterations = report.backfit_iterations;
    bool alive = false;
    for (const Island& island : state.islands) alive = alive || island.alive;
    if (!alive) throw SamplerDegeneracyError("every island degenerated during the move at t=" + std::to_string(t));
    row.ess_after_move = state.ess();
  }
  row.n_x = state.n_x;
  row.log_evidence = state.log_evidence;
  row.work = state.work;
  row.elapsed_s = static_cast<double>(state.work) * 1e-9;
  state.trace.push_back(row);
}

RunResult run(const Smc2Config& config, const StateSpaceModel& model, const Dataset& data,
              const StepObserver& observer) {
  if (data.empty()) throw InputError("run: empty dataset");
  RunResult result;
  result.state = smc2_init(config, model);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < data.size(); ++t) {
    try {
      smc2_step(result.state, config, model, data.prefix(t));
    } catch (const SamplerDegeneracyError& e) {
      result.completed = false;
      result.failure = e.what();
      break;
    }
    if (config.clock == ClockMode::Wall) {
      result.state.trace.back().elapsed_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    if (observer) observer(result.state);
  }
  return result;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::min(resolve_workers(workers), n);
  if (workers <= 1) {
    // Same semantics as the threaded path: run everything, rethrow lowest index.
    std::exception_ptr first;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace smc2
