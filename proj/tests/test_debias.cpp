#include <doctest.h>

#include <cmath>
#include <limits>

#include "sdb/debias.hpp"
#include "sdb/designs.hpp"
#include "sdb/errors.hpp"
#include "sdb/spectral.hpp"

using namespace sdb;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("eta_hat") {
  // constant h'': eta = adj + lambda2
  CHECK(eta_hat(0.7, Vector::Constant(5, 0.3)) == doctest::Approx(1.0).epsilon(1e-15));

  // elastic net with support fraction s/p: (s/p)^{-1} (adj + lambda2)
  Vector hpp = Vector::Constant(10, kInf);
  for (Index j = 0; j < 4; ++j) hpp[j] = 0.5;
  CHECK(eta_hat(1.0, hpp) == doctest::Approx((10.0 / 4.0) * 1.5).epsilon(1e-14));

  // mixed finite/infinite entries, computed directly
  Vector mixed(3);
  mixed << 0.1, kInf, 0.3;
  CHECK(eta_hat(1.0, mixed) ==
        doctest::Approx(3.0 / (1.0 / 1.1 + 1.0 / 1.3)).epsilon(1e-14));

  CHECK_THROWS_AS(eta_hat(1.0, Vector::Constant(3, kInf)), Error);
}

TEST_CASE("tau_dstar_hat: zero residual and dual-formula identity") {
  RngStream rng(71);
  const Index n = 20, p = 15;
  const Matrix X = rng.normal_matrix(n, p);
  const Vector beta = rng.normal_vector(p);
  const DesignSpectrum spec = decompose(X);

  // noiseless exact fit
  const Vector y0 = X * beta;
  CHECK(tau_dstar_hat(X, y0, beta, 0.8, 2.0, 0.0, spec.d2) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // the two algebraic forms agree on random inputs
  const Vector y = y0 + rng.normal_vector(n);
  const double adj = 0.8, eta = 2.0, s2 = 0.5;
  const double v1 = tau_dstar_hat(X, y, beta, adj, eta, s2, spec.d2);
  const Vector r_dd = beta + (X.transpose() * (X * beta - y)) / (eta - adj);
  const double v2 = ((X * r_dd - y).squaredNorm() - n * s2) / spec.d2.sum();
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-9));

  CHECK_THROWS_AS(tau_dstar_hat(X, y, beta, 1.0, 1.0, 0.0, spec.d2), Error);
}

TEST_CASE("tau_star_hat: degenerate reductions") {
  Vector d2 = Vector::Constant(1, 0.9);
  // sigma2 = 0 and tau_dstar = 0 give 0
  CHECK(tau_star_hat(d2, 0.9, 1.7, 0.0, 0.0) == doctest::Approx(0.0));
  // single eigenvalue with d^2 = adj: reduces to d^2 sigma2 / adj^2
  const double s2 = 0.37, td = 1.3;
  CHECK(tau_star_hat(d2, 0.9, 1.7, s2, td) ==
        doctest::Approx(0.9 * s2 / (0.9 * 0.9)).epsilon(1e-14));
}

TEST_CASE("feasibility_lhs: constant spectrum gives n/p; identity design is infeasible") {
  Vector dc = Vector::Constant(12, 1.6);
  CHECK(feasibility_lhs(dc, 0.5, 1.4, 9, 12) ==
        doctest::Approx(9.0 / 12.0).epsilon(1e-14));
  // n = p, X = I: ratio is exactly 1
  Vector ones = Vector::Ones(8);
  CHECK(feasibility_lhs(ones, 0.5, 1.4, 8, 8) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("feasibility margin at the ridge fixed point under MP(0.5)") {
  const Vector d2 = sample_marchenko_pastur(20000, 0.5, 7);
  // ridge fixed point: eta = 1/G(lambda2), gamma = eta - lambda2. The margin
  // grows with lambda2 (~0.01 at 0.1, ~0.13 at 1.0).
  const double l2 = 1.0;
  const double eta = 1.0 / empirical_cauchy(d2, l2);
  const double gamma = eta - l2;
  const Index p = d2.size(), n = p / 2;
  const double ratio = feasibility_lhs(d2, gamma, eta, n, p);
  CHECK(std::abs(ratio - 1.0) >= 0.05);
}

TEST_CASE("sigma2_hat errors on the degenerate identity design") {
  const Index n = 10;
  const Matrix X = Matrix::Identity(n, n);
  const Vector y = Vector::Ones(n);
  const FitResult fr = fit(X, y, PenaltySpec::ridge(0.4));
  const DesignSpectrum spec = decompose(X);
  try {
    debias(X, y, fr, PenaltySpec::ridge(0.4), spec.d2);
    FAIL("expected FeasibilityFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FeasibilityFailed);
  }
}

TEST_CASE("debias: zero correction when the fit interpolates the normal equations") {
  RngStream rng(83);
  const Index n = 30, p = 12;
  const Matrix X = rng.normal_matrix(n, p);
  const Vector y = rng.normal_vector(n);
  // manufactured fit at the OLS solution: X^T(y - X beta) = 0
  FitResult fr;
  fr.beta_hat = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  fr.converged = true;
  const DesignSpectrum spec = decompose(X);
  const DebiasResult dr = debias(X, y, fr, PenaltySpec::ridge(1e-8), spec.d2, 1.0);
  CHECK((dr.beta_u - fr.beta_hat).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("debias: constant spectrum, ridge gives adj = 1") {
  // orthogonal design: d^2 = 1 identically
  RngStream rng(97);
  const Index p = 16;
  const Matrix X = haar_orthogonal(p, rng);
  const Vector beta = rng.normal_vector(p);
  const Vector y = X * beta + 0.5 * rng.normal_vector(p);
  const PenaltySpec pen = PenaltySpec::ridge(0.3);
  const FitResult fr = fit(X, y, pen);
  const DesignSpectrum spec = decompose(X);
  const DebiasResult dr = debias(X, y, fr, pen, spec.d2, 1.0);
  CHECK(dr.adj == doctest::Approx(1.0).epsilon(1e-10));
  const Vector expect = fr.beta_hat + X.transpose() * (y - X * fr.beta_hat);
  CHECK((dr.beta_u - expect).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("debias reconstruction identity and column-permutation equivariance") {
  RngStream rng(103);
  const Index n = 40, p = 60;
  Matrix X = rng.normal_matrix(n, p) / std::sqrt(double(n));
  const Vector beta = rng.normal_vector(p);
  const Vector y = X * beta + 0.3 * rng.normal_vector(n);
  const PenaltySpec pen = PenaltySpec::elastic_net(0.1, 0.2);

  const DebiasResult dr = debias(X, y, pen, 1.0);
  const Vector recon =
      dr.beta_hat + (X.transpose() * (y - X * dr.beta_hat)) / dr.adj;
  CHECK((dr.beta_u - recon).lpNorm<Eigen::Infinity>() <= 1e-10);

  // permute columns: beta_u permutes identically
  std::vector<Index> perm(p);
  for (Index j = 0; j < p; ++j) perm[j] = (j + 17) % p;
  Matrix Xp(n, p);
  for (Index j = 0; j < p; ++j) Xp.col(j) = X.col(perm[j]);
  const DebiasResult drp = debias(Xp, y, pen, 1.0);
  for (Index j = 0; j < p; ++j)
    CHECK(drp.beta_u[j] == doctest::Approx(dr.beta_u[perm[j]]).epsilon(1e-6));
}

TEST_CASE("debias scale covariance through the ridge closed form") {
  RngStream rng(111);
  const Index n = 35, p = 20;
  const Matrix X = rng.normal_matrix(n, p) / std::sqrt(double(n));
  const Vector beta = rng.normal_vector(p);
  const double sigma2 = 0.49;
  const Vector y = X * beta + std::sqrt(sigma2) * rng.normal_vector(n);

  const double l2 = 0.3, c = 2.5;
  const DebiasResult a = debias(X, y, PenaltySpec::ridge(l2), sigma2);
  // (cX, cy) with penalty c^2 l2 and noise c^2 sigma2
  const DebiasResult b =
      debias(c * X, c * y, PenaltySpec::ridge(c * c * l2), c * c * sigma2);
  CHECK(b.adj == doctest::Approx(c * c * a.adj).epsilon(1e-7));
  CHECK(b.tau_star == doctest::Approx(a.tau_star).epsilon(1e-6));
  const Vector sa = (a.beta_u - beta) / std::sqrt(a.tau_star);
  const Vector sb = (b.beta_u - beta) / std::sqrt(b.tau_star);
  CHECK((sa - sb).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("sigma2_hat: zero-noise simulation estimates zero") {
  RngStream rng(131);
  const Index n = 200, p = 100;
  Matrix X = rng.normal_matrix(n, p) / std::sqrt(double(n));
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < 20; ++j) beta[j] = 3.0 * rng.normal();
  const Vector y = X * beta;  // sigma2 = 0
  const DebiasResult dr = debias(X, y, PenaltySpec::elastic_net(0.05, 0.05));
  CHECK(std::abs(dr.sigma2) <= 0.02);
}
