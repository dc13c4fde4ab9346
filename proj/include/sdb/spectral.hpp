#pragma once

#include "sdb/types.hpp"

namespace sdb {

// Singular value decomposition X = Q^T D O of an n x p design, together with
// the eigenvalue vector of X^T X padded to length p. Eigenvalues below
// 1e-12 * max are clamped to exactly zero so rank and the zero-padding count
// are unambiguous.
struct DesignSpectrum {
  Index n = 0;
  Index p = 0;
  Matrix Q;            // n x n orthogonal, left factor of X = Q^T D O
  Matrix O;            // p x p orthogonal, right factor
  Vector sigma;        // min(n, p) singular values, descending
  Vector d2;           // length-p eigenvalues of X^T X, descending, zero-padded
  double scale_factor = 1.0;

  Index rank() const;
  // Smallest nonzero eigenvalue; reported as the empirical lower edge of the
  // spectrum when isolated small eigenvalues are present.
  double min_nonzero_eig() const;
  Matrix reconstruct() const;  // Q^T D O
};

// Exact dense SVD with a reproducible sign convention: the first nonzero
// entry of each right singular vector is made non-negative.
DesignSpectrum decompose(const Matrix& X);

// Rescales X so the eigenvalues of X_scaled^T X_scaled average to 1.
// Returns (X_scaled, scale_factor) with X_scaled = scale_factor * X.
std::pair<Matrix, double> rescale_unit_mean_eig(const Matrix& X);

// G(z) = (1/p) sum_i 1/(z + d_i^2); requires z + d_i^2 > 0 for all i.
double empirical_cauchy(const Vector& d2, double z);

// R(z) = G^{-1}(z) - 1/z, with G^{-1} found by bracketed bisection.
double empirical_r_transform(const Vector& d2, double z);

} // namespace sdb
