#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace dynroc {

enum class TieMethod { efron, breslow };

/// Log partial likelihood with its gradient (score) and observed information
/// (negative Hessian).
template <typename Scalar>
struct PartialLikelihood {
  Scalar log_likelihood = Scalar(0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> score;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> information;
};

/// Cox partial likelihood at `beta` for design rows `x`, follow-up `time` and
/// death indicator `died`. Tied deaths use Efron's or Breslow's correction.
template <typename DerivedX, typename DerivedB>
PartialLikelihood<typename DerivedX::Scalar> cox_partial_likelihood(const Eigen::MatrixBase<DerivedX>& x,
                                                                    std::span<const double> time,
                                                                    std::span<const bool> died,
                                                                    const Eigen::MatrixBase<DerivedB>& beta,
                                                                    TieMethod ties = TieMethod::efron) {
  using Scalar = typename DerivedX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Vector eta = x * beta;
  const Scalar shift = n > 0 ? eta.maxCoeff() : Scalar(0);
  const Vector weight = (eta.array() - shift).exp().matrix();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return time[static_cast<std::size_t>(a)] > time[static_cast<std::size_t>(b)]; });

  PartialLikelihood<Scalar> out;
  out.score = Vector::Zero(p);
  out.information = Matrix::Zero(p, p);

  Scalar risk0 = Scalar(0);
  Vector risk1 = Vector::Zero(p);
  Matrix risk2 = Matrix::Zero(p, p);

  std::size_t k = 0;
  while (k < order.size()) {
    const double t = time[static_cast<std::size_t>(order[k])];
    Scalar dead0 = Scalar(0);
    Vector dead1 = Vector::Zero(p);
    Matrix dead2 = Matrix::Zero(p, p);
    int deaths = 0;
    for (; k < order.size() && time[static_cast<std::size_t>(order[k])] == t; ++k) {
      const Eigen::Index i = order[k];
      const auto xi = x.row(i).transpose();
      const Scalar w = weight(i);
      risk0 += w;
      risk1 += w * xi;
      risk2.noalias() += w * xi * xi.transpose();
      if (died[static_cast<std::size_t>(i)]) {
        ++deaths;
        dead0 += w;
        dead1 += w * xi;
        dead2.noalias() += w * xi * xi.transpose();
        out.log_likelihood += eta(i) - shift;
        out.score += xi;
      }
    }
    for (int l = 0; l < deaths; ++l) {
      const Scalar f = ties == TieMethod::efron ? Scalar(l) / Scalar(deaths) : Scalar(0);
      const Scalar a0 = risk0 - f * dead0;
      const Vector a1 = risk1 - f * dead1;
      const Matrix a2 = risk2 - f * dead2;
      out.log_likelihood -= std::log(a0);
      out.score -= a1 / a0;
      out.information += a2 / a0 - (a1 * a1.transpose()) / (a0 * a0);
    }
  }
  return out;
}

}  // namespace dynroc
