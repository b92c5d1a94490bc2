#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smc2 {

/// A fitted univariate function: constant, straight line, or natural cubic
/// spline (linear beyond the boundary knots). Evaluates to f(x) - offset.
class SmoothComponent {
 public:
  enum class Kind { Constant, Linear, Spline };

  SmoothComponent() = default;
  static SmoothComponent constant(double value);
  static SmoothComponent linear(double intercept, double slope);
  /// Natural cubic spline through (knots, values) with second derivatives
  /// `second` (zero at both ends). Knots are in scaled units
  /// u = (x - x_min) / x_scale.
  static SmoothComponent spline(double x_min, double x_scale, std::vector<double> knots, std::vector<double> values,
                                std::vector<double> second);

  double operator()(double x) const;
  Kind kind() const noexcept { return kind_; }
  double offset() const noexcept { return offset_; }
  void shift(double delta) noexcept { offset_ += delta; }

 private:
  double eval_raw(double x) const;

  Kind kind_ = Kind::Constant;
  double offset_ = 0.0;
  double intercept_ = 0.0;
  double slope_ = 0.0;
  double x_min_ = 0.0;
  double x_scale_ = 1.0;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> second_;
};

/// Cubic smoothing spline operator for one covariate, with the penalty
/// chosen so that the smoother matrix has trace `df` (equivalent degrees of
/// freedom). Tied covariate values are merged into weighted knots.
///
/// Minimises sum_i (r_i - g(x_i))^2 + lambda * int g''(u)^2 du with u the
/// covariate rescaled to [0, 1], using the Reinsch banded formulation. The
/// operator depends only on the covariate, so it is built once and applied
/// to many responses during backfitting.
///
/// Degenerate cases: one distinct value fits a constant; two distinct values
/// or df <= 2 fit a weighted straight line; df >= number of distinct values
/// interpolates the knot means.
class SplineSmoother {
 public:
  SplineSmoother(std::span<const double> x, double df);

  struct Result {
    std::vector<double> fitted;  ///< g(x_i) at every training point
    SmoothComponent component;
  };

  Result smooth(std::span<const double> r) const;

  double lambda() const noexcept { return lambda_; }
  /// trace of the smoother matrix at the chosen lambda.
  double effective_df() const noexcept { return effective_df_; }
  std::size_t unique_count() const noexcept { return knots_.size(); }

 private:
  enum class Mode { Constant, Linear, Spline };

  void factorize(double lambda);
  double trace_at(double lambda);
  std::vector<double> solve(std::span<const double> rhs) const;
  std::vector<double> knot_means(std::span<const double> r) const;

  Mode mode_ = Mode::Spline;
  std::size_t n_ = 0;
  double x_min_ = 0.0;
  double x_scale_ = 1.0;
  std::vector<std::size_t> group_;  ///< observation -> knot index
  std::vector<double> knots_;       ///< scaled, strictly increasing
  std::vector<double> weights_;     ///< observations per knot
  std::vector<double> h_;
  double lambda_ = 0.0;
  double effective_df_ = 0.0;
  // LDL^T of the pentadiagonal Reinsch matrix R + lambda Q^T W^{-1} Q.
  std::vector<double> d_;
  std::vector<double> l1_;
  std::vector<double> l2_;
};

}  // namespace smc2
