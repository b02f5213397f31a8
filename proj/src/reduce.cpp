#include "mmgp/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mmgp {

PodBasis fit_pod(const Eigen::MatrixXd& snapshots, int r) {
  const auto n = snapshots.rows();
  const auto m = snapshots.cols();
  if (m < 2) throw Error(Errc::InvalidArgument, "POD needs at least two snapshots");
  if (r < 0 || r > std::min<Eigen::Index>(m, n))
    throw Error(Errc::RankTooHigh, "requested rank " + std::to_string(r) + " exceeds min(m, n)");

  PodBasis b;
  b.mean = snapshots.rowwise().mean();
  const Eigen::MatrixXd Xc = snapshots.colwise() - b.mean;
  const Eigen::MatrixXd G = Xc.transpose() * Xc;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const Eigen::MatrixXd V = eig.eigenvectors();

  // Descending order; stable so equal values keep their original column order.
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto c) { return lambda[a] > lambda[c]; });

  const double smax = std::sqrt(std::max(lambda[order[0]], 0.0));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < r; ++k) {
    const double s = std::sqrt(std::max(lambda[order[k]], 0.0));
    if (smax > 0.0 && s > 1e-12 * smax && s > 0.0) keep.push_back(order[k]);
  }

  const auto rr = static_cast<Eigen::Index>(keep.size());
  b.modes.resize(n, rr);
  b.singular_values.resize(rr);
  for (Eigen::Index k = 0; k < rr; ++k) {
    const double s = std::sqrt(lambda[keep[k]]);
    b.singular_values[k] = s;
    b.modes.col(k) = Xc * V.col(keep[k]) / s;
  }
  // Modified Gram-Schmidt clean-up; the snapshot method loses orthogonality on small modes.
  for (Eigen::Index k = 0; k < rr; ++k) {
    for (Eigen::Index j = 0; j < k; ++j) b.modes.col(k) -= b.modes.col(j).dot(b.modes.col(k)) * b.modes.col(j);
    b.modes.col(k).normalize();
    Eigen::Index imax = 0;
    b.modes.col(k).cwiseAbs().maxCoeff(&imax);
    if (b.modes(imax, k) < 0.0) b.modes.col(k) *= -1.0;
  }
  return b;
}

Eigen::VectorXd PodBasis::project(const Eigen::VectorXd& field) const {
  if (field.size() != mean.size()) throw Error(Errc::DimensionMismatch, "field length does not match basis");
  return modes.transpose() * (field - mean);
}

Eigen::VectorXd PodBasis::reconstruct(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != modes.cols())
    throw Error(Errc::DimensionMismatch, "coefficient count does not match basis rank");
  return mean + modes * coefficients;
}

}  // namespace mmgp
