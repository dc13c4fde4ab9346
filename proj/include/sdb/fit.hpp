#pragma once

#include "sdb/penalty.hpp"
#include "sdb/types.hpp"

namespace sdb {

struct FitOptions {
  // The debiasing residual X^T(y - X beta_hat) is sensitive to loose fits,
  // so the default KKT target is strict.
  double tol = 1e-9;
  int max_iter = 50000;
  // Largest eigenvalue of X^T X when already known (e.g. from a
  // DesignSpectrum); <= 0 means compute internally.
  double lipschitz = 0.0;
};

struct FitResult {
  Vector beta_hat;
  int iterations = 0;
  double kkt_residual = 0.0;  // max-norm of the min-norm subgradient at beta_hat
  double objective = 0.0;
  bool converged = false;
};

// Max-norm of the minimum-norm subgradient of
//   (1/2)||y - X b||^2 + sum_j h(b_j)
// at beta.
double kkt_residual(const Matrix& X, const Vector& y, const PenaltySpec& pen,
                    const Vector& beta);

// Accelerated proximal gradient (FISTA) with restart on objective increase.
// Non-convergence within max_iter is reported through `converged`; the result
// is still returned with its residual.
FitResult fit(const Matrix& X, const Vector& y, const PenaltySpec& pen,
              const FitOptions& opts = {});

} // namespace sdb
