#include "sdb/fit.hpp"

#include <algorithm>
#include <cmath>

#include "sdb/errors.hpp"

namespace sdb {

namespace {

double objective(const Matrix& X, const Vector& y, const PenaltySpec& pen,
                 const Vector& beta) {
  return 0.5 * (y - X * beta).squaredNorm() + pen.value(beta);
}

// Entries numerically indistinguishable from zero are snapped to exact zeros
// so that h'' and the support size are unambiguous downstream.
void snap_zeros(Vector& beta) {
  const double cut = 1e-10 * std::max(1.0, beta.lpNorm<Eigen::Infinity>());
  for (Index j = 0; j < beta.size(); ++j)
    if (std::abs(beta[j]) <= cut) beta[j] = 0.0;
}

}  // namespace

double kkt_residual(const Matrix& X, const Vector& y, const PenaltySpec& pen,
                    const Vector& beta) {
  const Vector grad = X.transpose() * (X * beta - y);
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    double r;
    if (beta[j] != 0.0) {
      const double sgn = beta[j] > 0.0 ? 1.0 : -1.0;
      r = std::abs(grad[j] + pen.lambda1 * sgn + pen.lambda2 * beta[j]);
    } else {
      r = std::max(0.0, std::abs(grad[j]) - pen.lambda1);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

FitResult fit(const Matrix& X, const Vector& y, const PenaltySpec& pen,
              const FitOptions& opts) {
  if (X.rows() != y.size())
    throw Error(ErrorCode::DimMismatch, "fit: X rows and y length differ");
  if (opts.tol <= 0.0)
    throw Error(ErrorCode::BadArgument, "fit: tol must be positive");

  const Index p = X.cols();
  FitResult out;

  double L = opts.lipschitz;
  if (L <= 0.0) {
    // largest eigenvalue of X^T X via the singular values of X
    Eigen::BDCSVD<Matrix> svd(X);
    L = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    L *= L;
  }
  if (L == 0.0) {
    // X == 0: the loss reduces to the penalty, minimized at the origin.
    out.beta_hat = Vector::Zero(p);
    out.objective = objective(X, y, pen, out.beta_hat);
    out.kkt_residual = 0.0;
    out.converged = true;
    return out;
  }

  const double step = 1.0 / L;
  Vector beta = Vector::Zero(p);
  Vector beta_prev = beta;
  Vector z = beta;
  double t = 1.0;
  double obj = objective(X, y, pen, beta);

  const Vector Xty = X.transpose() * y;

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    Vector grad = X.transpose() * (X * z) - Xty;
    Vector beta_next = pen.prox(step, z - step * grad);
    double obj_next = objective(X, y, pen, beta_next);

    // Accelerated steps are not monotone; on an objective increase beyond
    // rounding, drop the momentum and retake a plain proximal step, which
    // descends up to machine precision.
    if (obj_next > obj * (1.0 + 1e-14) + 1e-300) {
      t = 1.0;
      grad = X.transpose() * (X * beta) - Xty;
      beta_next = pen.prox(step, beta - step * grad);
      obj_next = objective(X, y, pen, beta_next);
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = beta_next + ((t - 1.0) / t_next) * (beta_next - beta);
    beta_prev = beta;
    beta = beta_next;
    t = t_next;
    obj = std::min(obj, obj_next);

    if (it % 10 == 0 && kkt_residual(X, y, pen, beta) <= opts.tol) break;
  }

  snap_zeros(beta);
  out.beta_hat = beta;
  out.iterations = it;
  out.kkt_residual = kkt_residual(X, y, pen, beta);
  out.objective = objective(X, y, pen, beta);
  out.converged = out.kkt_residual <= opts.tol;
  return out;
}

} // namespace sdb
