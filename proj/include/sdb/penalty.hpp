#pragma once

#include <string>

#include "sdb/types.hpp"

namespace sdb {

// Separable convex penalty h(x) = lambda1 |x| + (lambda2 / 2) x^2 covering
// ridge (lambda1 = 0), lasso (lambda2 = 0) and the elastic net. The second
// derivative and the prox derivative are extended at non-differentiable
// points by +infinity and 0 respectively, so that
//   prox'_{vh}(x) = 1 / (1 + v h''(prox_{vh}(x)))
// holds everywhere with the convention 1/(1 + v*inf) = 0.
struct PenaltySpec {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  static PenaltySpec ridge(double lambda2);
  static PenaltySpec lasso(double lambda1);
  static PenaltySpec elastic_net(double lambda1, double lambda2);
  // Parses CLI strings of the form "ridge:0.5", "lasso:1.0", "en:1.0,0.1".
  static PenaltySpec parse(const std::string& text);

  // Strong-convexity constant: lambda2 (0 for the lasso).
  double c0() const { return lambda2; }
  std::string to_string() const;

  double value(double x) const;
  // prox_{vh}(x) = argmin_y h(y) + (y - x)^2 / (2v) = ST_{lambda1 v}(x) / (1 + lambda2 v)
  double prox(double v, double x) const;
  // Extended h'': +infinity at x = 0 when lambda1 > 0, lambda2 elsewhere.
  double hpp_extended(double x) const;
  // Extended prox derivative, in [0, 1/(1 + v c0)].
  double prox_deriv_extended(double v, double x) const;

  Vector prox(double v, const Vector& x) const;
  double value(const Vector& x) const;
  // h''(beta_j) for every coordinate, +infinity entries included.
  Vector hpp_extended(const Vector& beta) const;
};

} // namespace sdb
