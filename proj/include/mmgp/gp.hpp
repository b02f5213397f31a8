#pragma once

#include "mmgp/core.hpp"

#include <vector>

namespace mmgp {

/// Constant * RBF + white noise, all in log space.
struct GpParams {
  double log_constant = 0.0;
  Eigen::VectorXd log_lengthscales;
  double log_noise = 0.0;

  static GpParams ones(int dim) { return {0.0, Eigen::VectorXd::Zero(dim), 0.0}; }
  int dim() const { return static_cast<int>(log_lengthscales.size()); }
  Eigen::VectorXd pack() const;
  static GpParams unpack(const Eigen::VectorXd& v);
};

/// Rows of A and B are points. The noise term is added only when `same` is set.
Eigen::MatrixXd kernel_matrix(const GpParams& p, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              bool same = false);

struct NlmlResult {
  double value = 0.0;
  Eigen::VectorXd grad;  // d/d(log c), d/d(log l_1..d), d/d(log sigma)
  double jitter = 0.0;
};

NlmlResult nlml_and_grad(const GpParams& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct GpTrainConfig {
  int steps = 1000;
  double lr = 0.05;
  double gamma = 0.9;
  int decay_every = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool standardize_targets = true;
};

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  static Standardizer identity(int dim);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

struct GpModel {
  GpParams params;
  Standardizer input_scaler;
  double target_mean = 0.0;
  double target_scale = 1.0;
  Eigen::MatrixXd train_inputs;  // standardized
  Eigen::VectorXd alpha;
  Eigen::MatrixXd cholesky;  // lower factor of K + (sigma^2 + jitter) I
  double jitter = 0.0;
  double initial_nlml = 0.0;
  double final_nlml = 0.0;

  int dim() const { return params.dim(); }
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& queries) const;
  double predict_mean(const Eigen::VectorXd& query) const;
};

/// Fits a model with fixed hyperparameters (no optimization).
GpModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpParams& params,
               bool standardize_targets = true);

/// Adam on the negative log marginal likelihood; returns the best iterate.
GpModel gp_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpTrainConfig& cfg = {},
                 std::vector<double>* loss_history = nullptr);

}  // namespace mmgp
