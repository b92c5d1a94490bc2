#include "smc2/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smc2/errors.hpp"

namespace smc2 {

DegenerateWeightsError::DegenerateWeightsError(std::vector<double> theta, std::size_t t)
    : std::runtime_error("degenerate particle weights at t=" + std::to_string(t)),
      theta_(std::move(theta)),
      t_(t) {}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double weight_initial(const StateSpaceModel& model, const Theta& theta, double y, std::span<const double> x) {
  double lw = model.log_observation(theta, y, x);
  if (!model.bootstrap_proposal()) {
    lw += model.log_initial(theta, x) - model.log_proposal_initial(theta, y, x);
  }
  return std::isnan(lw) ? kNegInf : lw;
}

double weight_step(const StateSpaceModel& model, const Theta& theta, std::size_t t, double y,
                   std::span<const double> prev, std::span<const double> x) {
  double lw = model.log_observation(theta, y, x);
  if (!model.bootstrap_proposal()) {
    lw += model.log_transition(theta, prev, x) - model.log_proposal(theta, t, y, prev, x);
  }
  return std::isnan(lw) ? kNegInf : lw;
}

void finalize(const Theta& theta, Frontier& f, double prev_cum) {
  const double lse = normalize_log_weights(f.log_weights, f.weights);
  if (!std::isfinite(lse)) throw DegenerateWeightsError(theta.vector(), f.t);
  f.log_increment = lse - std::log(static_cast<double>(f.n_x));
  f.cum_loglik = prev_cum + f.log_increment;
}

// Time-0 slice. With a pinned state, particle 0 is set to it and draws
// start at particle 1.
Frontier init_slice(const StateSpaceModel& model, const Theta& theta, std::size_t n_x, double y0, Rng& rng,
                    std::span<const double> pinned, ParticleHistory* history) {
  const std::size_t dim = model.state_dim();
  Frontier f;
  f.n_x = n_x;
  f.t = 0;
  f.state_dim = dim;
  f.particles.resize(n_x * dim);
  f.log_weights.resize(n_x);
  f.weights.resize(n_x);
  std::span<double> xs(f.particles);
  std::size_t first = 0;
  if (!pinned.empty()) {
    std::copy(pinned.begin(), pinned.end(), xs.begin());
    first = 1;
  }
  for (std::size_t n = first; n < n_x; ++n) model.propose_initial(theta, y0, rng, xs.subspan(n * dim, dim));
  for (std::size_t n = 0; n < n_x; ++n) f.log_weights[n] = weight_initial(model, theta, y0, xs.subspan(n * dim, dim));
  if (history != nullptr) {
    history->n_x = n_x;
    history->state_dim = dim;
    history->particles.assign(1, f.particles);
    history->ancestors.assign(1, {});
    history->log_weights.assign(1, f.log_weights);
  }
  finalize(theta, f, 0.0);
  return f;
}

Frontier extend_slice(const StateSpaceModel& model, const Theta& theta, const Frontier& prev, double yt, Rng& rng,
                      std::span<const double> pinned, ParticleHistory* history) {
  const std::size_t n_x = prev.n_x;
  const std::size_t dim = prev.state_dim;
  const std::size_t t = prev.t + 1;
  Frontier f;
  f.n_x = n_x;
  f.t = t;
  f.state_dim = dim;
  f.particles.resize(n_x * dim);
  f.log_weights.resize(n_x);
  f.weights.resize(n_x);
  std::vector<std::uint32_t> ancestors(n_x);
  std::span<double> xs(f.particles);
  std::size_t first = 0;
  if (!pinned.empty()) {
    ancestors[0] = 0;
    std::copy(pinned.begin(), pinned.end(), xs.begin());
    first = 1;
  }
  multinomial_resample(prev.weights, rng, std::span<std::uint32_t>(ancestors).subspan(first));
  for (std::size_t n = first; n < n_x; ++n) {
    model.propose(theta, t, yt, prev.particle(ancestors[n]), rng, xs.subspan(n * dim, dim));
  }
  for (std::size_t n = 0; n < n_x; ++n) {
    f.log_weights[n] = weight_step(model, theta, t, yt, prev.particle(ancestors[n]), xs.subspan(n * dim, dim));
  }
  if (history != nullptr) {
    history->particles.push_back(f.particles);
    history->ancestors.push_back(std::move(ancestors));
    history->log_weights.push_back(f.log_weights);
  }
  finalize(theta, f, prev.cum_loglik);
  return f;
}

}  // namespace

std::size_t Frontier::footprint_bytes() const noexcept {
  return (particles.capacity() + log_weights.capacity() + weights.capacity()) * sizeof(double);
}

std::size_t ParticleHistory::footprint_bytes() const noexcept {
  std::size_t bytes = 0;
  for (const auto& v : particles) bytes += v.capacity() * sizeof(double);
  for (const auto& v : ancestors) bytes += v.capacity() * sizeof(std::uint32_t);
  for (const auto& v : log_weights) bytes += v.capacity() * sizeof(double);
  return bytes;
}

double log_sum_exp(std::span<const double> log_values) {
  double m = kNegInf;
  for (double v : log_values) {
    if (std::isnan(v)) return std::numeric_limits<double>::quiet_NaN();
    m = std::max(m, v);
  }
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : log_values) s += std::exp(v - m);
  return m + std::log(s);
}

double normalize_log_weights(std::span<const double> log_weights, std::span<double> normalized) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) {
    std::fill(normalized.begin(), normalized.end(), 0.0);
    return lse;
  }
  for (std::size_t i = 0; i < log_weights.size(); ++i) normalized[i] = std::exp(log_weights[i] - lse);
  return lse;
}

double ess(std::span<const double> weights) {
  double m = 0.0;
  for (double w : weights) m = std::max(m, w);
  if (!(m > 0.0)) throw DegenerateWeightsError({}, 0);
  // Scale by the largest weight so tiny weights do not underflow when squared.
  double s = 0.0;
  double s2 = 0.0;
  for (double w : weights) {
    s += w / m;
    s2 += (w / m) * (w / m);
  }
  return s * s / s2;
}

double ess_from_log(std::span<const double> log_weights) {
  double m = kNegInf;
  for (double v : log_weights) m = std::max(m, v);
  if (!std::isfinite(m)) throw DegenerateWeightsError({}, 0);
  double s = 0.0;
  double s2 = 0.0;
  for (double v : log_weights) {
    const double w = std::exp(v - m);
    s += w;
    s2 += w * w;
  }
  return s * s / s2;
}

void multinomial_resample(std::span<const double> weights, Rng& rng, std::span<std::uint32_t> out) {
  std::vector<double> cumulative(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cumulative[i] = acc;
  }
  const std::size_t last = weights.size() - 1;
  for (auto& a : out) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    idx = std::min(idx, last);
    // Never land on a zero-weight index because of rounding at the top end.
    while (weights[idx] <= 0.0 && idx > 0) --idx;
    a = static_cast<std::uint32_t>(idx);
  }
}

std::vector<std::uint32_t> multinomial_resample(std::span<const double> weights, std::size_t n_draws, Rng& rng) {
  if (weights.empty()) throw ParameterError("multinomial_resample: empty weight vector");
  std::vector<std::uint32_t> out(n_draws);
  multinomial_resample(weights, rng, out);
  return out;
}

Frontier pf_init(const StateSpaceModel& model, const Theta& theta, std::size_t n_x, double y0, Rng& rng,
                 ParticleHistory* history) {
  if (n_x == 0) throw ParameterError("pf_init: n_x must be >= 1");
  return init_slice(model, theta, n_x, y0, rng, {}, history);
}

Frontier pf_step(const StateSpaceModel& model, const Theta& theta, const Frontier& prev, double yt, Rng& rng,
                 ParticleHistory* history) {
  return extend_slice(model, theta, prev, yt, rng, {}, history);
}

Frontier run_pf(const StateSpaceModel& model, const Theta& theta, std::size_t n_x, std::span<const double> y,
                Rng& rng, ParticleHistory* history) {
  if (y.empty()) throw InputError("run_pf: empty data");
  Frontier f = pf_init(model, theta, n_x, y[0], rng, history);
  for (std::size_t t = 1; t < y.size(); ++t) f = pf_step(model, theta, f, y[t], rng, history);
  return f;
}

Frontier run_csmc(const StateSpaceModel& model, const Theta& theta, std::span<const double> pinned,
                  std::size_t n_x, std::span<const double> y, Rng& rng, ParticleHistory* history) {
  if (n_x < 2) throw ParameterError("csmc: n_x must be >= 2 (particle 1 is pinned)");
  const std::size_t dim = model.state_dim();
  if (y.empty() || pinned.size() != y.size() * dim) {
    throw ParameterError("csmc: pinned trajectory length must equal (t+1) * state_dim");
  }
  Frontier f = init_slice(model, theta, n_x, y[0], rng, pinned.subspan(0, dim), history);
  for (std::size_t t = 1; t < y.size(); ++t) {
    f = extend_slice(model, theta, f, y[t], rng, pinned.subspan(t * dim, dim), history);
  }
  return f;
}

ParticleHistory rebuild_history(const SliceJournal& journal, const StateSpaceModel& model, const Theta& theta,
                                std::span<const double> y, Frontier* frontier) {
  if (journal.empty()) throw JournalError("rebuild_history: journal has no records");
  if (journal.last_time() >= y.size()) {
    throw InputError("rebuild_history: journal reaches t=" + std::to_string(journal.last_time()) +
                     " but data has " + std::to_string(y.size()) + " observations");
  }
  const auto records = journal.records();
  const SliceRecord& base = records.front();
  ParticleHistory history;
  Rng rng = Rng::from_state(base.rng_before);
  Frontier f;
  const std::size_t t0 = base.time_index;
  switch (base.tag) {
    case StepTag::InitPF:
      f = pf_init(model, theta, base.n_x, y[0], rng, &history);
      break;
    case StepTag::FreshPF:
      f = run_pf(model, theta, base.n_x, y.first(t0 + 1), rng, &history);
      break;
    case StepTag::CsmcRegen:
      f = run_csmc(model, theta, journal.pinned_trajectory(), base.n_x, y.first(t0 + 1), rng, &history);
      break;
    case StepTag::ExtendPF:
      throw JournalError("rebuild_history: journal starts with ExtendPF");
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    const SliceRecord& rec = records[i];
    if (rec.tag != StepTag::ExtendPF) throw JournalError("rebuild_history: reset record after the base");
    rng.restore(rec.rng_before);
    f = pf_step(model, theta, f, y[rec.time_index], rng, &history);
  }
  if (frontier != nullptr) *frontier = std::move(f);
  return history;
}

}  // namespace smc2
