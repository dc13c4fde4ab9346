#include "sdb/spectral.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sdb/errors.hpp"

namespace sdb {

namespace {
constexpr double kEigClampRel = 1e-12;   // relative cutoff for zeroing d_i^2
constexpr double kInvBracketEps = 1e-9;  // offset from the pole of G
constexpr double kInvTol = 1e-12;        // bisection tolerance for G^{-1}
}  // namespace

Index DesignSpectrum::rank() const {
  Index r = 0;
  for (Index i = 0; i < d2.size(); ++i)
    if (d2[i] > 0.0) ++r;
  return r;
}

double DesignSpectrum::min_nonzero_eig() const {
  double m = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < d2.size(); ++i)
    if (d2[i] > 0.0) m = std::min(m, d2[i]);
  return m;
}

Matrix DesignSpectrum::reconstruct() const {
  // Q^T D O with D the n x p diagonal of singular values.
  const Index r = std::min(n, p);
  Matrix QtD = Matrix::Zero(n, r);
  for (Index i = 0; i < r; ++i) QtD.col(i) = Q.row(i).transpose() * sigma[i];
  return QtD * O.topRows(r);
}

DesignSpectrum decompose(const Matrix& X) {
  if (!X.allFinite())
    throw Error(ErrorCode::BadArgument, "decompose: design has non-finite entries");
  if (X.norm() == 0.0)
    throw Error(ErrorCode::BadArgument, "decompose: design is identically zero");

  const Index n = X.rows(), p = X.cols();
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeFullU | Eigen::ComputeFullV);

  DesignSpectrum s;
  s.n = n;
  s.p = p;
  s.Q = svd.matrixU().transpose();  // X = U S V^T = Q^T D O
  s.O = svd.matrixV().transpose();
  s.sigma = svd.singularValues();

  const Index r = std::min(n, p);
  s.d2 = Vector::Zero(p);
  for (Index i = 0; i < r; ++i) s.d2[i] = s.sigma[i] * s.sigma[i];
  const double cutoff = kEigClampRel * s.d2[0];
  for (Index i = 0; i < r; ++i) {
    if (s.d2[i] < cutoff) {
      s.d2[i] = 0.0;
      s.sigma[i] = 0.0;
    }
  }

  // Sign convention: first nonzero entry of each right singular vector
  // non-negative. Rows of O beyond min(n, p) do not enter reconstruction but
  // are fixed the same way for reproducibility.
  for (Index i = 0; i < p; ++i) {
    Index j = 0;
    while (j < p && s.O(i, j) == 0.0) ++j;
    if (j < p && s.O(i, j) < 0.0) {
      s.O.row(i) = -s.O.row(i);
      if (i < n) s.Q.row(i) = -s.Q.row(i);
    }
  }
  return s;
}

std::pair<Matrix, double> rescale_unit_mean_eig(const Matrix& X) {
  // mean eigenvalue of X^T X equals ||X||_F^2 / p
  const double fro2 = X.squaredNorm();
  if (fro2 == 0.0)
    throw Error(ErrorCode::BadArgument, "rescale: design is identically zero");
  const double scale = std::sqrt(static_cast<double>(X.cols()) / fro2);
  return {scale * X, scale};
}

double empirical_cauchy(const Vector& d2, double z) {
  const Index p = d2.size();
  if (p == 0) throw Error(ErrorCode::BadArgument, "empirical_cauchy: empty spectrum");
  double acc = 0.0;
  for (Index i = 0; i < p; ++i) {
    const double den = z + d2[i];
    if (den <= 0.0)
      throw Error(ErrorCode::BadArgument, "empirical_cauchy: z at or below a pole of G");
    acc += 1.0 / den;
  }
  return acc / static_cast<double>(p);
}

double empirical_r_transform(const Vector& d2, double z) {
  if (z <= 0.0)
    throw Error(ErrorCode::BadArgument, "empirical_r_transform: z must be positive");
  const double dmin = d2.minCoeff();
  double lo = -dmin + kInvBracketEps;
  if (z >= empirical_cauchy(d2, lo))
    throw Error(ErrorCode::BadArgument,
                "empirical_r_transform: z outside the empirical range of G");
  // G is strictly decreasing; expand the upper end until G(hi) < z.
  double hi = std::max(1.0, d2.mean());
  int guard = 0;
  while (empirical_cauchy(d2, hi) >= z) {
    hi *= 2.0;
    if (++guard > 2000)
      throw Error(ErrorCode::NonConvergence, "empirical_r_transform: bracket expansion failed");
  }
  // tolerance widened to the representable spacing at the bracket's magnitude
  for (int it = 0; it < 200 && hi - lo > kInvTol * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (empirical_cauchy(d2, mid) > z)
      lo = mid;
    else
      hi = mid;
  }
  const double ginv = 0.5 * (lo + hi);
  return ginv - 1.0 / z;
}

} // namespace sdb
