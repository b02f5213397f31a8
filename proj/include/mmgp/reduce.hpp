#pragma once

#include "mmgp/core.hpp"

namespace mmgp {

struct PodBasis {
  Eigen::VectorXd mean;
  Eigen::MatrixXd modes;  // n x r, orthonormal columns
  Eigen::VectorXd singular_values;

  int rank() const { return static_cast<int>(modes.cols()); }
  Eigen::Index size() const { return mean.size(); }
  Eigen::VectorXd project(const Eigen::VectorXd& field) const;
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& coefficients) const;
};

/// Snapshot POD. Columns of `snapshots` are samples. Directions whose singular
/// value is negligible are dropped, so the returned rank may be below `r`.
PodBasis fit_pod(const Eigen::MatrixXd& snapshots, int r);

}  // namespace mmgp
