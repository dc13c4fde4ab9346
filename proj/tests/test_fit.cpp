#include <doctest.h>

#include "sdb/fit.hpp"
#include "sdb/rng.hpp"

using namespace sdb;

TEST_CASE("fit matches the ridge closed form") {
  RngStream rng(101);
  const Index n = 40, p = 25;
  const Matrix X = rng.normal_matrix(n, p) / std::sqrt(double(n));
  const Vector y = rng.normal_vector(n);
  const double l2 = 0.3;

  const Vector closed =
      (X.transpose() * X + l2 * Matrix::Identity(p, p)).ldlt().solve(X.transpose() * y);
  const FitResult fr = fit(X, y, PenaltySpec::ridge(l2));
  CHECK(fr.converged);
  CHECK((fr.beta_hat - closed).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("fit with zero design returns the penalty minimizer") {
  const Matrix X = Matrix::Zero(10, 5);
  Vector y = Vector::Ones(10);
  const FitResult fr = fit(X, y, PenaltySpec::elastic_net(1.0, 0.5));
  CHECK(fr.beta_hat.norm() == 0.0);
  CHECK(fr.converged);
}

TEST_CASE("lasso KKT residual on a random 50x100 instance") {
  RngStream rng(7);
  const Index n = 50, p = 100;
  const Matrix X = rng.normal_matrix(n, p) / std::sqrt(double(n));
  Vector beta = Vector::Zero(p);
  for (int k = 0; k < 8; ++k) beta[k] = 2.0 * rng.normal();
  const Vector y = X * beta + 0.3 * rng.normal_vector(n);

  const PenaltySpec lasso = PenaltySpec::lasso(0.1);
  const FitResult fr = fit(X, y, lasso);
  CHECK(fr.kkt_residual <= 1e-8);

  // subgradient-condition oracle, checked independently of the solver's own
  // residual: for active coordinates the stationarity equation holds, for
  // inactive ones the gradient lies inside the subdifferential interval
  const Vector grad = X.transpose() * (X * fr.beta_hat - y);
  for (Index j = 0; j < p; ++j) {
    if (fr.beta_hat[j] != 0.0) {
      const double sgn = fr.beta_hat[j] > 0 ? 1.0 : -1.0;
      CHECK(std::abs(grad[j] + lasso.lambda1 * sgn) <= 1e-7);
    } else {
      CHECK(std::abs(grad[j]) <= lasso.lambda1 + 1e-7);
    }
  }
}

TEST_CASE("elastic net KKT stationarity on the support") {
  RngStream rng(13);
  const Index n = 60, p = 90;
  const Matrix X = rng.normal_matrix(n, p) / std::sqrt(double(n));
  const Vector y = rng.normal_vector(n) * 2.0;
  const PenaltySpec en = PenaltySpec::elastic_net(0.5, 0.2);
  const FitResult fr = fit(X, y, en);
  CHECK(fr.converged);
  const Vector grad = X.transpose() * (y - X * fr.beta_hat);
  for (Index j = 0; j < p; ++j) {
    if (fr.beta_hat[j] == 0.0) continue;
    const double sgn = fr.beta_hat[j] > 0 ? 1.0 : -1.0;
    CHECK(grad[j] == doctest::Approx(en.lambda1 * sgn + en.lambda2 * fr.beta_hat[j])
                         .epsilon(1e-6));
  }
}

TEST_CASE("objective no greater than at zero; row permutation invariance") {
  RngStream rng(29);
  const Index n = 30, p = 20;
  const Matrix X = rng.normal_matrix(n, p);
  const Vector y = rng.normal_vector(n);
  const PenaltySpec en = PenaltySpec::elastic_net(0.3, 0.1);
  const FitResult fr = fit(X, y, en);
  CHECK(fr.objective <= 0.5 * y.squaredNorm() + 1e-12);

  // joint row permutation leaves the solution unchanged (to tolerance)
  Matrix Xp(n, p);
  Vector yp(n);
  for (Index i = 0; i < n; ++i) {
    Xp.row(i) = X.row(n - 1 - i);
    yp[i] = y[n - 1 - i];
  }
  const FitResult fp = fit(Xp, yp, en);
  CHECK((fp.beta_hat - fr.beta_hat).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("objective of the accepted iterate is non-increasing") {
  // prefix runs of the deterministic solver share their trajectory, so the
  // objective after k iterations is monotone in k up to rounding
  RngStream rng(37);
  const Matrix X = rng.normal_matrix(40, 60) / std::sqrt(40.0);
  const Vector y = rng.normal_vector(40) * 3.0;
  const PenaltySpec en = PenaltySpec::elastic_net(0.4, 0.05);
  double prev = 0.5 * y.squaredNorm();
  for (int k : {1, 2, 5, 10, 25, 60, 150, 400}) {
    FitOptions fo;
    fo.max_iter = k;
    fo.tol = 1e-300;  // never stop early
    const FitResult fr = fit(X, y, en, fo);
    CHECK(fr.objective <= prev * (1.0 + 1e-13) + 1e-300);
    prev = fr.objective;
  }
}

TEST_CASE("ridge path: norm decreases to zero as lambda2 grows") {
  RngStream rng(31);
  const Matrix X = rng.normal_matrix(25, 10);
  const Vector y = rng.normal_vector(25);
  double prev = std::numeric_limits<double>::infinity();
  for (double l2 : {0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0}) {
    const FitResult fr = fit(X, y, PenaltySpec::ridge(l2));
    CHECK(fr.beta_hat.norm() < prev);
    prev = fr.beta_hat.norm();
  }
  CHECK(prev <= 1e-2);
}
