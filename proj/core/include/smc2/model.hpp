#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smc2/rng.hpp"

namespace smc2 {

/// A point in parameter space. Coordinates are model-specific; see
/// StateSpaceModel::theta_names().
class Theta {
 public:
  Theta() = default;
  explicit Theta(std::vector<double> values) : values_(std::move(values)) {}
  Theta(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  friend bool operator==(const Theta&, const Theta&) = default;

 private:
  std::vector<double> values_;
};

/// Observations y_0..y_T, one scalar per time.
struct Dataset {
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }
  bool empty() const noexcept { return y.empty(); }
  /// Final time index T (requires a nonempty dataset).
  std::size_t last_time() const noexcept { return y.size() - 1; }
  std::span<const double> prefix(std::size_t t) const { return std::span<const double>(y).first(t + 1); }
};

/// A state path x_0..x_t stored time-major, state_dim values per time.
using StatePath = std::vector<double>;

/// Interface every state-space model provides. Densities are in log space.
/// States are opaque vectors of length state_dim(); spans passed in and out
/// always have exactly that length.
///
/// The default proposal is the bootstrap one (q = f^X, q_0 = mu). A model
/// with a guided proposal overrides the propose_* / log_proposal_* members
/// and returns false from bootstrap_proposal().
///
/// Implementations are immutable after construction; all members are safe to
/// call concurrently.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t theta_dim() const = 0;
  virtual std::vector<std::string> theta_names() const = 0;
  virtual std::size_t state_dim() const { return 1; }

  virtual bool in_support(const Theta& theta) const = 0;
  virtual double log_prior(const Theta& theta) const = 0;
  virtual Theta sample_prior(Rng& rng) const = 0;

  virtual double log_initial(const Theta& theta, std::span<const double> x) const = 0;
  virtual double log_transition(const Theta& theta, std::span<const double> prev,
                                std::span<const double> x) const = 0;
  virtual double log_observation(const Theta& theta, double y, std::span<const double> x) const = 0;

  virtual void sample_initial(const Theta& theta, Rng& rng, std::span<double> out) const = 0;
  virtual void sample_transition(const Theta& theta, std::span<const double> prev, Rng& rng,
                                 std::span<double> out) const = 0;
  virtual double sample_observation(const Theta& theta, std::span<const double> x, Rng& rng) const = 0;

  virtual bool bootstrap_proposal() const { return true; }
  virtual void propose_initial(const Theta& theta, double /*y0*/, Rng& rng, std::span<double> out) const {
    sample_initial(theta, rng, out);
  }
  virtual double log_proposal_initial(const Theta& theta, double /*y0*/, std::span<const double> x) const {
    return log_initial(theta, x);
  }
  virtual void propose(const Theta& theta, std::size_t /*t*/, double /*yt*/, std::span<const double> prev,
                       Rng& rng, std::span<double> out) const {
    sample_transition(theta, prev, rng, out);
  }
  virtual double log_proposal(const Theta& theta, std::size_t /*t*/, double /*yt*/,
                              std::span<const double> prev, std::span<const double> x) const {
    return log_transition(theta, prev, x);
  }

  /// Exact log p(y_{0:T} | theta) when available.
  virtual std::optional<double> exact_loglik(const Theta& /*theta*/, std::span<const double> /*y*/) const {
    return std::nullopt;
  }

  virtual bool has_gibbs_theta() const { return false; }
  /// One sweep of an MCMC kernel leaving p(theta | x_{0:t}, y_{0:t}) invariant.
  virtual Theta gibbs_theta(const Theta& theta, std::span<const double> path, std::span<const double> y,
                            Rng& rng) const;
};

struct Simulation {
  StatePath path;
  Dataset data;
};

/// Draws x_{0:T} and y_{0:T} from the model laws.
Simulation simulate(const StateSpaceModel& model, const Theta& theta, std::size_t T, Rng& rng);

}  // namespace smc2
