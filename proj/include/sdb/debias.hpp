#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdb/adjust.hpp"
#include "sdb/fit.hpp"
#include "sdb/penalty.hpp"
#include "sdb/types.hpp"

namespace sdb {

struct DebiasOptions {
  // |feasibility ratio - 1| must exceed this before the noise level is
  // estimated from data. There is no principled finite-sample cutoff, so
  // this stays configurable.
  double feasibility_tol = 1e-6;
  FitOptions fit;
};

struct DebiasResult {
  Vector beta_hat;
  Vector beta_u;        // beta_hat + adj^{-1} X^T (y - X beta_hat)
  Vector r_dstar;       // beta_hat + (eta - adj)^{-1} X^T (X beta_hat - y)
  double adj = 0.0;
  double eta_star = 0.0;
  double tau_star = 0.0;
  double tau_dstar = 0.0;
  double sigma2 = 0.0;
  bool sigma2_known = false;
  double feasibility_lhs = 0.0;
  bool valid = true;
  std::vector<std::string> flags;
  FitResult fit;
};

// eta_hat = ((1/p) sum_j 1/(adj + hpp_j))^{-1}, with 1/(adj + inf) = 0.
double eta_hat(double adj, const Vector& hpp);

// tau_dstar_hat = (||(I + (eta-adj)^{-1} X X^T)(y - X beta_hat)||^2 - n sigma2)
//                 / sum_i d_i^2
double tau_dstar_hat(const Matrix& X, const Vector& y, const Vector& beta_hat,
                     double adj, double eta, double sigma2, const Vector& d2);

// Per-eigenvalue average defining the variance estimator:
// (1/p) sum_i [eta^2 d_i^2 sigma2
//              + (d_i^2 - adj + 2 eta)(adj - d_i^2)(eta - adj)^2 tau_dstar]
//             / ((d_i^2 - adj + eta)^2 adj^2)
double tau_star_hat(const Vector& d2, double adj, double eta, double sigma2,
                    double tau_dstar);

// Sample ratio whose distance from 1 certifies that the noise level is
// estimable from data.
double feasibility_lhs(const Vector& d2, double adj, double eta, Index n, Index p);

// Noise-level estimator; requires the feasibility ratio to be away from 1.
double sigma2_hat(const Matrix& X, const Vector& y, const Vector& beta_hat,
                  double adj, double eta, const Vector& d2, Index n, Index p);

// Full pipeline on a pre-computed fit and spectrum: solves the adjustment
// equation, forms the debiased estimator and all scalar statistics. When
// sigma2 is absent it is estimated, which requires feasibility.
DebiasResult debias(const Matrix& X, const Vector& y, const FitResult& fit,
                    const PenaltySpec& pen, const Vector& d2,
                    std::optional<double> sigma2 = std::nullopt,
                    const DebiasOptions& opts = {});

// Convenience overload running decompose + fit internally.
DebiasResult debias(const Matrix& X, const Vector& y, const PenaltySpec& pen,
                    std::optional<double> sigma2 = std::nullopt,
                    const DebiasOptions& opts = {});

} // namespace sdb
