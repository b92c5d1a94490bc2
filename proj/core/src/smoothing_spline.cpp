#include "smc2/smoothing_spline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smc2/errors.hpp"

namespace smc2 {

SmoothComponent SmoothComponent::constant(double value) {
  SmoothComponent c;
  c.kind_ = Kind::Constant;
  c.intercept_ = value;
  return c;
}

SmoothComponent SmoothComponent::linear(double intercept, double slope) {
  SmoothComponent c;
  c.kind_ = Kind::Linear;
  c.intercept_ = intercept;
  c.slope_ = slope;
  return c;
}

SmoothComponent SmoothComponent::spline(double x_min, double x_scale, std::vector<double> knots,
                                        std::vector<double> values, std::vector<double> second) {
  SmoothComponent c;
  c.kind_ = Kind::Spline;
  c.x_min_ = x_min;
  c.x_scale_ = x_scale;
  c.knots_ = std::move(knots);
  c.values_ = std::move(values);
  c.second_ = std::move(second);
  return c;
}

double SmoothComponent::operator()(double x) const { return eval_raw(x) - offset_; }

double SmoothComponent::eval_raw(double x) const {
  switch (kind_) {
    case Kind::Constant:
      return intercept_;
    case Kind::Linear:
      return intercept_ + slope_ * x;
    case Kind::Spline:
      break;
  }
  const double u = (x - x_min_) / x_scale_;
  const auto& k = knots_;
  const auto& g = values_;
  const auto& gam = second_;
  const std::size_t m = k.size();
  if (u <= k.front()) {
    const double h = k[1] - k[0];
    const double slope = (g[1] - g[0]) / h - h * gam[1] / 6.0;
    return g[0] + (u - k[0]) * slope;
  }
  if (u >= k.back()) {
    const double h = k[m - 1] - k[m - 2];
    const double slope = (g[m - 1] - g[m - 2]) / h + h * gam[m - 2] / 6.0;
    return g[m - 1] + (u - k[m - 1]) * slope;
  }
  const auto it = std::upper_bound(k.begin(), k.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - k.begin()) - 1;
  const double h = k[i + 1] - k[i];
  const double a = u - k[i];
  const double b = k[i + 1] - u;
  return (a * g[i + 1] + b * g[i]) / h - a * b / 6.0 * ((1.0 + a / h) * gam[i + 1] + (1.0 + b / h) * gam[i]);
}

SplineSmoother::SplineSmoother(std::span<const double> x, double df) : n_(x.size()) {
  if (x.empty()) throw InputError("smoothing spline: no observations");
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("smoothing spline: non-finite covariate");
  }
  std::vector<std::size_t> order(n_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  x_min_ = x[order.front()];
  const double range = x[order.back()] - x_min_;
  group_.assign(n_, 0);
  if (!(range > 0.0)) {
    mode_ = Mode::Constant;
    knots_ = {0.0};
    weights_ = {static_cast<double>(n_)};
    effective_df_ = 1.0;
    return;
  }
  x_scale_ = range;
  // Merge values closer than a tiny fraction of the range.
  const double tie_tol = 1e-9;
  double group_start = 0.0;
  double sum_u = 0.0;
  double count = 0.0;
  for (std::size_t j = 0; j < n_; ++j) {
    const double u = (x[order[j]] - x_min_) / x_scale_;
    if (j > 0 && u - group_start > tie_tol) {
      knots_.push_back(sum_u / count);
      weights_.push_back(count);
      sum_u = 0.0;
      count = 0.0;
    }
    if (count == 0.0) group_start = u;
    sum_u += u;
    count += 1.0;
    group_[order[j]] = knots_.size();
  }
  knots_.push_back(sum_u / count);
  weights_.push_back(count);

  const std::size_t m = knots_.size();
  h_.resize(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) h_[i] = knots_[i + 1] - knots_[i];

  if (m == 2 || df <= 2.0) {
    mode_ = Mode::Linear;
    effective_df_ = 2.0;
    return;
  }
  mode_ = Mode::Spline;
  if (df >= static_cast<double>(m)) {
    factorize(0.0);
    effective_df_ = static_cast<double>(m);
    return;
  }
  // df(lambda) decreases monotonically from m (lambda = 0) to 2; bisect in log lambda.
  double lo = -30.0;
  double hi = 30.0;
  while (trace_at(std::pow(10.0, hi)) > df && hi < 300.0) hi += 30.0;
  while (trace_at(std::pow(10.0, lo)) < df && lo > -300.0) lo -= 30.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (trace_at(std::pow(10.0, mid)) > df) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  effective_df_ = trace_at(std::pow(10.0, 0.5 * (lo + hi)));
}

void SplineSmoother::factorize(double lambda) {
  lambda_ = lambda;
  const std::size_t m = knots_.size();
  const std::size_t k = m - 2;
  // Q is m x (m-2) with column c supported on rows c, c+1, c+2.
  auto q = [&](std::size_t r, std::size_t c) -> double {
    if (r == c) return 1.0 / h_[c];
    if (r == c + 1) return -1.0 / h_[c] - 1.0 / h_[c + 1];
    if (r == c + 2) return 1.0 / h_[c + 1];
    return 0.0;
  };
  // A = R + lambda Q^T W^{-1} Q, pentadiagonal: a0 diag, a1 first, a2 second off-diagonal.
  std::vector<double> a0(k), a1(k, 0.0), a2(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < std::min(i + 3, k); ++j) {
      double b = 0.0;
      for (std::size_t r = j; r <= i + 2; ++r) b += q(r, i) * q(r, j) / weights_[r];
      double rij = 0.0;
      if (j == i) rij = (h_[i] + h_[i + 1]) / 3.0;
      if (j == i + 1) rij = h_[i + 1] / 6.0;
      const double v = rij + lambda * b;
      if (j == i) a0[i] = v;
      if (j == i + 1) a1[i] = v;
      if (j == i + 2) a2[i] = v;
    }
  }
  d_.assign(k, 0.0);
  l1_.assign(k, 0.0);
  l2_.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double di = a0[i];
    if (i >= 1) di -= l1_[i - 1] * l1_[i - 1] * d_[i - 1];
    if (i >= 2) di -= l2_[i - 2] * l2_[i - 2] * d_[i - 2];
    d_[i] = di;
    if (i + 1 < k) {
      double v = a1[i];
      if (i >= 1) v -= l2_[i - 1] * l1_[i - 1] * d_[i - 1];
      l1_[i] = v / di;
    }
    if (i + 2 < k) l2_[i] = a2[i] / di;
  }
}

double SplineSmoother::trace_at(double lambda) {
  factorize(lambda);
  const std::size_t k = d_.size();
  // Band of A^{-1} by the Takahashi recursion, then df = 2 + tr(A^{-1} R).
  std::vector<double> s0(k, 0.0), s1(k, 0.0), s2(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    const double s11 = i + 1 < k ? s0[i + 1] : 0.0;
    const double s22 = i + 2 < k ? s0[i + 2] : 0.0;
    const double s12 = i + 1 < k ? s1[i + 1] : 0.0;
    s2[i] = -l1_[i] * s12 - l2_[i] * s22;
    s1[i] = -l1_[i] * s11 - l2_[i] * s12;
    s0[i] = 1.0 / d_[i] - l1_[i] * s1[i] - l2_[i] * s2[i];
  }
  double tr = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    tr += s0[i] * (h_[i] + h_[i + 1]) / 3.0;
    if (i + 1 < k) tr += 2.0 * s1[i] * h_[i + 1] / 6.0;
  }
  return 2.0 + tr;
}

std::vector<double> SplineSmoother::solve(std::span<const double> rhs) const {
  const std::size_t k = d_.size();
  std::vector<double> z(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < k; ++i) {
    if (i >= 1) z[i] -= l1_[i - 1] * z[i - 1];
    if (i >= 2) z[i] -= l2_[i - 2] * z[i - 2];
  }
  for (std::size_t i = 0; i < k; ++i) z[i] /= d_[i];
  for (std::size_t i = k; i-- > 0;) {
    if (i + 1 < k) z[i] -= l1_[i] * z[i + 1];
    if (i + 2 < k) z[i] -= l2_[i] * z[i + 2];
  }
  return z;
}

std::vector<double> SplineSmoother::knot_means(std::span<const double> r) const {
  std::vector<double> sums(knots_.size(), 0.0);
  for (std::size_t j = 0; j < n_; ++j) sums[group_[j]] += r[j];
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= weights_[i];
  return sums;
}

SplineSmoother::Result SplineSmoother::smooth(std::span<const double> r) const {
  if (r.size() != n_) throw InputError("smoothing spline: response length mismatch");
  const std::vector<double> ybar = knot_means(r);
  const std::size_t m = knots_.size();
  std::vector<double> g(m);
  Result out;

  switch (mode_) {
    case Mode::Constant: {
      const double mean = ybar[0];
      out.fitted.assign(n_, mean);
      out.component = SmoothComponent::constant(mean);
      return out;
    }
    case Mode::Linear: {
      double sw = 0.0, su = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sw += weights_[i];
        su += weights_[i] * knots_[i];
        sy += weights_[i] * ybar[i];
      }
      const double ubar = su / sw;
      const double ymean = sy / sw;
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sxy += weights_[i] * (knots_[i] - ubar) * (ybar[i] - ymean);
        sxx += weights_[i] * (knots_[i] - ubar) * (knots_[i] - ubar);
      }
      const double slope_u = sxy / sxx;
      for (std::size_t i = 0; i < m; ++i) g[i] = ymean + slope_u * (knots_[i] - ubar);
      out.fitted.resize(n_);
      for (std::size_t j = 0; j < n_; ++j) out.fitted[j] = g[group_[j]];
      // Back to original covariate units.
      const double slope_x = slope_u / x_scale_;
      const double intercept = ymean - slope_u * ubar - slope_x * x_min_;
      out.component = SmoothComponent::linear(intercept, slope_x);
      return out;
    }
    case Mode::Spline:
      break;
  }

  const std::size_t k = m - 2;
  std::vector<double> qty(k);
  for (std::size_t i = 0; i < k; ++i) {
    qty[i] = ybar[i] / h_[i] - ybar[i + 1] * (1.0 / h_[i] + 1.0 / h_[i + 1]) + ybar[i + 2] / h_[i + 1];
  }
  const std::vector<double> gamma = solve(qty);
  for (std::size_t r = 0; r < m; ++r) {
    double qg = 0.0;
    if (r < k) qg += gamma[r] / h_[r];
    if (r >= 1 && r - 1 < k) qg += gamma[r - 1] * (-1.0 / h_[r - 1] - 1.0 / h_[r]);
    if (r >= 2 && r - 2 < k) qg += gamma[r - 2] / h_[r - 1];
    g[r] = ybar[r] - lambda_ * qg / weights_[r];
  }
  out.fitted.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) out.fitted[j] = g[group_[j]];
  std::vector<double> second(m, 0.0);
  std::copy(gamma.begin(), gamma.end(), second.begin() + 1);
  out.component = SmoothComponent::spline(x_min_, x_scale_, knots_, std::move(g), std::move(second));
  return out;
}

}  // namespace smc2
