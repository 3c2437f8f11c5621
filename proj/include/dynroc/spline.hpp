#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "dynroc/error.hpp"

namespace dynroc {

/// Knots of a natural cubic spline. The basis has df = interior knots + 1
/// columns and no intercept.
struct SplineBasis {
  std::vector<double> interior_knots;
  double lower_boundary = 0.0;
  double upper_boundary = 1.0;

  int df() const { return static_cast<int>(interior_knots.size()) + 1; }

  /// Throws unless lower < knots... < upper strictly.
  void validate() const;

  friend bool operator==(const SplineBasis&, const SplineBasis&) = default;
};

/// Boundary knots at the 2.5th/97.5th percentiles of `training`; the df - 1
/// interior knots sit at its j/df quantiles (quartiles for df = 4).
SplineBasis quantile_spline_basis(std::span<const double> training, int df);

namespace detail {

// Clamped cubic knot sequence in the boundary-normalized coordinate.
std::vector<double> normalized_knots(const SplineBasis& basis);

// Maps the B-spline columns (first one dropped) onto the subspace with zero
// second derivative at both boundaries. (n_bsplines - 1) x df.
Eigen::MatrixXd natural_projection(const SplineBasis& basis);

// r-th derivative of B-spline i of order k at u, where u lies in knot span `span`.
template <typename Scalar>
Scalar bspline(const std::vector<double>& t, std::size_t i, int k, int r, Scalar u, std::size_t span) {
  if (r == 0 && k == 1) return i == span ? Scalar(1) : Scalar(0);
  if (k == 1) return Scalar(0);
  const double left = t[i + k - 1] - t[i];
  const double right = t[i + k] - t[i + 1];
  Scalar a(0);
  Scalar b(0);
  if (r == 0) {
    if (left > 0) a = (u - Scalar(t[i])) / Scalar(left) * bspline(t, i, k - 1, 0, u, span);
    if (right > 0) b = (Scalar(t[i + k]) - u) / Scalar(right) * bspline(t, i + 1, k - 1, 0, u, span);
    return a + b;
  }
  if (left > 0) a = bspline(t, i, k - 1, r - 1, u, span) / Scalar(left);
  if (right > 0) b = bspline(t, i + 1, k - 1, r - 1, u, span) / Scalar(right);
  return Scalar(k - 1) * (a - b);
}

// Row of B-spline derivatives (order 4, first column dropped) at u in [0, 1].
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> bspline_row(const std::vector<double>& t, Scalar u, int r) {
  const std::size_t n = t.size() - 4;
  std::size_t span = 3;
  while (span + 1 < n && Scalar(t[span + 1]) <= u) ++span;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row(static_cast<Eigen::Index>(n - 1));
  for (std::size_t i = 1; i < n; ++i) row(static_cast<Eigen::Index>(i - 1)) = bspline(t, i, 4, r, u, span);
  return row;
}

}  // namespace detail

/// Natural cubic spline basis evaluated at `x`: cubic B-splines on the
/// boundary and interior knots, constrained to zero curvature at both
/// boundaries and extended linearly outside them. Computed in the
/// coordinate u = (x - lower) / (upper - lower), so every column vanishes at
/// the lower boundary and the basis is unchanged when x and the knots are
/// rescaled together.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> natural_spline_basis(Scalar x, const SplineBasis& basis) {
  using std::isfinite;
  if (!isfinite(x)) throw Error(ErrorKind::invalid_argument, "spline basis evaluated at non-finite value");
  const Scalar u = (x - Scalar(basis.lower_boundary)) / Scalar(basis.upper_boundary - basis.lower_boundary);
  const auto t = detail::normalized_knots(basis);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> projection = detail::natural_projection(basis).cast<Scalar>();

  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row;
  if (u < Scalar(0)) {
    row = detail::bspline_row(t, Scalar(0), 0) + u * detail::bspline_row(t, Scalar(0), 1);
  } else if (u > Scalar(1)) {
    row = detail::bspline_row(t, Scalar(1), 0) + (u - Scalar(1)) * detail::bspline_row(t, Scalar(1), 1);
  } else {
    row = detail::bspline_row(t, u, 0);
  }
  return (row * projection).transpose();
}

/// Basis rows for every value in `x`.
Eigen::MatrixXd natural_spline_design(std::span<const double> x, const SplineBasis& basis);

}  // namespace dynroc
