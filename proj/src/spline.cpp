#include "dynroc/spline.hpp"

#include <algorithm>
#include <string>

#include "dynroc/stats.hpp"

namespace dynroc {

void SplineBasis::validate() const {
  if (!(std::isfinite(lower_boundary) && std::isfinite(upper_boundary) && lower_boundary < upper_boundary)) {
    throw Error(ErrorKind::invalid_argument, "spline boundary knots must be finite and increasing");
  }
  double previous = lower_boundary;
  for (double k : interior_knots) {
    if (!(k > previous)) throw Error(ErrorKind::invalid_argument, "spline knots must be strictly increasing inside the boundary");
    previous = k;
  }
  if (!(upper_boundary > previous)) {
    throw Error(ErrorKind::invalid_argument, "spline knots must be strictly increasing inside the boundary");
  }
}

SplineBasis quantile_spline_basis(std::span<const double> training, int df) {
  if (df < 1) throw Error(ErrorKind::invalid_argument, "spline df must be at least 1");
  std::vector<double> sorted(training.begin(), training.end());
  std::sort(sorted.begin(), sorted.end());
  SplineBasis basis;
  basis.lower_boundary = quantile_sorted(sorted, 0.025);
  basis.upper_boundary = quantile_sorted(sorted, 0.975);
  for (int j = 1; j < df; ++j) {
    basis.interior_knots.push_back(quantile_sorted(sorted, static_cast<double>(j) / df));
  }
  try {
    basis.validate();
  } catch (const Error&) {
    throw Error(ErrorKind::invalid_argument,
                "training values too concentrated for a df=" + std::to_string(df) + " spline (tied quantile knots)");
  }
  return basis;
}

namespace detail {

std::vector<double> normalized_knots(const SplineBasis& basis) {
  const double width = basis.upper_boundary - basis.lower_boundary;
  std::vector<double> t(4, 0.0);
  for (double k : basis.interior_knots) t.push_back((k - basis.lower_boundary) / width);
  t.insert(t.end(), 4, 1.0);
  return t;
}

Eigen::MatrixXd natural_projection(const SplineBasis& basis) {
  const auto t = normalized_knots(basis);
  Eigen::MatrixXd constraints(t.size() - 5, 2);
  constraints.col(0) = bspline_row(t, 0.0, 2).transpose();
  constraints.col(1) = bspline_row(t, 1.0, 2).transpose();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(constraints);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd projection = q.rightCols(q.cols() - 2);
  // Householder signs are arbitrary: orient each column upward at the upper
  // boundary, and with no interior knots make the single column exactly u.
  const Eigen::RowVectorXd at_upper = bspline_row(t, 1.0, 0) * projection;
  for (Eigen::Index j = 0; j < projection.cols(); ++j) {
    if (projection.cols() == 1) {
      projection.col(j) /= at_upper(j);
    } else if (at_upper(j) < 0) {
      projection.col(j) = -projection.col(j);
    }
  }
  return projection;
}

}  // namespace detail

Eigen::MatrixXd natural_spline_design(std::span<const double> x, const SplineBasis& basis) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), basis.df());
  for (std::size_t i = 0; i < x.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = natural_spline_basis(x[i], basis).transpose();
  return out;
}

}  // namespace dynroc
