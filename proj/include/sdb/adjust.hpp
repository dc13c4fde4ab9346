#pragma once

#include "sdb/types.hpp"

namespace sdb {

// Inputs of the adjustment equation: the padded eigenvalue vector of X^T X
// and the extended second derivatives h''(beta_hat_j). Infinite hpp entries
// are filtered once into a finite sub-vector; dropping them from the inner
// average is bit-identical to the 1/(gamma + inf) = 0 convention.
class AdjustmentProblem {
 public:
  AdjustmentProblem(Vector d2, Vector hpp);

  const Vector& d2() const { return d2_; }
  const Vector& hpp() const { return hpp_; }
  Index p() const { return d2_.size(); }
  Index n_finite_hpp() const { return hpp_finite_.size(); }

  // Well-definedness certificate: some hpp_j < +inf, AND (all hpp_j > 0, OR
  // all d2_i > 0, OR ||d2||_0 + ||hpp||_0 > p). Throws CERTIFICATE_FAILED
  // naming the violated condition otherwise.
  void require_certificate() const;
  bool certificate_holds() const;

  // m(gamma) = (1/p) sum_j 1/(gamma + hpp_j), infinite entries contributing 0.
  double m(double gamma) const;
  double m_deriv(double gamma) const;

 private:
  Vector d2_;
  Vector hpp_;
  Vector hpp_finite_;
};

// g_p(gamma) = (1/p) sum_i 1 / ((d_i^2 - gamma) m(gamma) + 1); strictly
// increasing when some hpp_j is finite.
double g_p(const AdjustmentProblem& prob, double gamma);
double g_p_deriv(const AdjustmentProblem& prob, double gamma);

struct SolveStats {
  int newton_steps = 0;
  int bisection_steps = 0;
  bool used_fallback = false;
};

// Unique positive root of g_p(gamma) = 1. Newton from gamma_0 = mean(d2)
// with a Brent-style bracketed fallback on [1e-8 * mean(d2), max(d2)].
double solve_adjustment(const AdjustmentProblem& prob, SolveStats* stats = nullptr);

// Degrees-of-freedom baselines (comparison only).
// Ridge: 1 - (1/n) sum_i d_i^2 / (d_i^2 + lambda2).
double df_adjustment_ridge(const Vector& d2, double lambda2, Index n);
// Lasso: 1 - s_hat / n, requiring s_hat < n.
double df_adjustment_lasso(Index s_hat, Index n);

} // namespace sdb
