#include "mmgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmgp {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;

// Box constraints keep the Gram matrix factorizable during optimization.
constexpr double kLogMin = -12.0;
constexpr double kLogMax = 12.0;
constexpr double kLogNoiseMin = -12.0;

struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Factor factorize(const Eigen::MatrixXd& K) {
  Factor f;
  f.llt.compute(K);
  if (f.llt.info() == Eigen::Success) return f;
  const auto m = K.rows();
  for (double j = kJitterStart; j <= kJitterMax * 1.0000001; j *= 10.0) {
    f.llt.compute(K + j * Eigen::MatrixXd::Identity(m, m));
    if (f.llt.info() == Eigen::Success) {
      f.jitter = j;
      return f;
    }
  }
  throw Error(Errc::NotPositiveDefinite, "Gram matrix is not positive definite after jitter");
}

Eigen::MatrixXd rbf_part(const GpParams& p, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols() || A.cols() != p.dim())
    throw Error(Errc::DimensionMismatch, "kernel input dimensions disagree");
  const Eigen::ArrayXd inv_l = (-p.log_lengthscales.array()).exp();
  const Eigen::MatrixXd As = A * inv_l.matrix().asDiagonal();
  const Eigen::MatrixXd Bs = B * inv_l.matrix().asDiagonal();
  Eigen::MatrixXd K(A.rows(), B.rows());
  const double c = std::exp(p.log_constant);
  for (Eigen::Index j = 0; j < B.rows(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      K(i, j) = c * std::exp(-0.5 * (As.row(i) - Bs.row(j)).squaredNorm());
  return K;
}

GpParams clamp(GpParams p) {
  p.log_constant = std::clamp(p.log_constant, kLogMin, kLogMax);
  for (auto& v : p.log_lengthscales) v = std::clamp(v, kLogMin, kLogMax);
  p.log_noise = std::clamp(p.log_noise, kLogNoiseMin, kLogMax);
  return p;
}

}  // namespace

Eigen::VectorXd GpParams::pack() const {
  Eigen::VectorXd v(dim() + 2);
  v[0] = log_constant;
  v.segment(1, dim()) = log_lengthscales;
  v[dim() + 1] = log_noise;
  return v;
}

GpParams GpParams::unpack(const Eigen::VectorXd& v) {
  const auto d = v.size() - 2;
  return {v[0], v.segment(1, d), v[d + 1]};
}

Eigen::MatrixXd kernel_matrix(const GpParams& p, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, bool same) {
  Eigen::MatrixXd K = rbf_part(p, A, B);
  if (same) {
    if (A.rows() != B.rows()) throw Error(Errc::DimensionMismatch, "noise term needs A == B");
    K.diagonal().array() += std::exp(2.0 * p.log_noise);
  }
  return K;
}

NlmlResult nlml_and_grad(const GpParams& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw Error(Errc::DimensionMismatch, "inputs and targets differ in length");
  const auto m = X.rows();
  const int d = p.dim();
  const Eigen::MatrixXd Krbf = rbf_part(p, X, X);
  Eigen::MatrixXd K = Krbf;
  const double s2 = std::exp(2.0 * p.log_noise);
  K.diagonal().array() += s2;
  const Factor f = factorize(K);
  const Eigen::VectorXd alpha = f.llt.solve(y);
  const Eigen::MatrixXd L = f.llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();

  NlmlResult r;
  r.jitter = f.jitter;
  r.value = 0.5 * y.dot(alpha) + 0.5 * logdet + 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);

  const Eigen::MatrixXd W = f.llt.solve(Eigen::MatrixXd::Identity(m, m)) - alpha * alpha.transpose();
  r.grad.resize(d + 2);
  r.grad[0] = 0.5 * (W.array() * Krbf.array()).sum();
  for (int k = 0; k < d; ++k) {
    const double inv_l2 = std::exp(-2.0 * p.log_lengthscales[k]);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i) {
        const double diff = X(i, k) - X(j, k);
        acc += W(i, j) * Krbf(i, j) * diff * diff * inv_l2;
      }
    r.grad[k + 1] = 0.5 * acc;
  }
  r.grad[d + 1] = 0.5 * W.trace() * 2.0 * s2;
  return r;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const double var = (X.col(k).array() - s.mean[k]).square().mean();
    const double sd = std::sqrt(var);
    s.scale[k] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw Error(Errc::DimensionMismatch, "input dimension mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::MatrixXd& queries) const {
  if (queries.cols() != dim()) throw Error(Errc::DimensionMismatch, "query dimension mismatch");
  const Eigen::MatrixXd Ks = rbf_part(params, input_scaler.apply(queries), train_inputs);
  return ((Ks * alpha).array() * target_scale + target_mean).matrix();
}

double GpModel::predict_mean(const Eigen::VectorXd& query) const {
  return predict_mean(Eigen::MatrixXd(query.transpose()))[0];
}

namespace {

struct Prepared {
  Standardizer xs;
  Eigen::MatrixXd Xs;
  double y_mean = 0.0;
  double y_scale = 1.0;
  Eigen::VectorXd ys;
};

Prepared prepare(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool standardize_targets) {
  if (X.rows() != y.size()) throw Error(Errc::DimensionMismatch, "inputs and targets differ in length");
  if (X.rows() < 1) throw Error(Errc::InvalidArgument, "no training data");
  Prepared p;
  p.xs = Standardizer::fit(X);
  p.Xs = p.xs.apply(X);
  if (standardize_targets) {
    p.y_mean = y.mean();
    const double sd = std::sqrt((y.array() - p.y_mean).square().mean());
    p.y_scale = sd > 0.0 ? sd : 1.0;
  }
  p.ys = (y.array() - p.y_mean) / p.y_scale;
  return p;
}

GpModel assemble(const Prepared& prep, const GpParams& params) {
  GpModel m;
  m.params = params;
  m.input_scaler = prep.xs;
  m.target_mean = prep.y_mean;
  m.target_scale = prep.y_scale;
  m.train_inputs = prep.Xs;
  const Eigen::MatrixXd K = kernel_matrix(params, prep.Xs, prep.Xs, true);
  const Factor f = factorize(K);
  m.jitter = f.jitter;
  m.cholesky = f.llt.matrixL();
  m.alpha = f.llt.solve(prep.ys);
  return m;
}

}  // namespace

GpModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpParams& params, bool standardize_targets) {
  if (params.dim() != X.cols()) throw Error(Errc::DimensionMismatch, "parameter dimension mismatch");
  return assemble(prepare(X, y, standardize_targets), params);
}

GpModel gp_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpTrainConfig& cfg,
                 std::vector<double>* loss_history) {
  if (X.rows() < 2) throw Error(Errc::InvalidArgument, "GP training needs at least two samples");
  const Prepared prep = prepare(X, y, cfg.standardize_targets);
  const int d = static_cast<int>(X.cols());

  Eigen::VectorXd theta = GpParams::ones(d).pack();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  NlmlResult cur = nlml_and_grad(GpParams::unpack(theta), prep.Xs, prep.ys);
  const double initial = cur.value;
  Eigen::VectorXd best_theta = theta;
  double best = cur.value;
  if (loss_history) loss_history->assign(1, cur.value);

  for (int step = 0; step < cfg.steps; ++step) {
    const double lr = cfg.lr * std::pow(cfg.gamma, step / std::max(cfg.decay_every, 1));
    if (cfg.weight_decay != 0.0) theta *= (1.0 - lr * cfg.weight_decay);
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * cur.grad;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * cur.grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(cfg.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step + 1);
    theta -= (lr * (m1 / bc1).array() / ((m2 / bc2).array().sqrt() + cfg.eps)).matrix();
    theta = clamp(GpParams::unpack(theta)).pack();
    try {
      cur = nlml_and_grad(GpParams::unpack(theta), prep.Xs, prep.ys);
    } catch (const Error& e) {
      if (e.code() != Errc::NotPositiveDefinite) throw;
      break;
    }
    if (!std::isfinite(cur.value) || !cur.grad.allFinite()) break;
    if (loss_history) loss_history->push_back(cur.value);
    if (cur.value < best) {
      best = cur.value;
      best_theta = theta;
    }
  }
  GpModel model = assemble(prep, GpParams::unpack(best_theta));
  model.initial_nlml = initial;
  model.final_nlml = best;
  return model;
}

}  // namespace mmgp
