#pragma once

#include <optional>
#include <vector>

#include "sdb/types.hpp"

namespace sdb {

// Standard normal CDF via erfc; |error| <= 1e-14 on the real line.
double normal_cdf(double x);
// Quantile: rational initial guess polished by Newton on the CDF.
double normal_quantile(double u);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct CalibrationMetrics {
  std::optional<double> fpr;  // null if no true zeros
  std::optional<double> tpr;  // null if no true nonzeros
  double fcp = 0.0;
};

// P_i = 2 (1 - Phi(|beta_u_i| / sqrt(tau_star))).
Vector p_values(const Vector& beta_u, double tau_star);

// Per-coordinate intervals (beta_u_i + a sqrt(tau), beta_u_i + b sqrt(tau))
// for any a < b with Phi(b) - Phi(a) = 1 - alpha. The default is the
// symmetric choice a = Phi^{-1}(alpha/2), b = Phi^{-1}(1 - alpha/2).
std::vector<Interval> confidence_intervals(const Vector& beta_u, double tau_star,
                                           double alpha);
std::vector<Interval> confidence_intervals_ab(const Vector& beta_u, double tau_star,
                                              double a, double b, double alpha);

// FPR/TPR of the level-alpha zero tests and the false coverage proportion of
// the intervals, against a known signal (simulation mode). Undefined rates
// (zero denominators) stay unset.
CalibrationMetrics calibration_metrics(const Vector& beta_star, const Vector& pvalues,
                                       const std::vector<Interval>& intervals,
                                       double alpha);

// Asymptotic TPR limit
//   P(|B/sqrt(tau) + Z| >= Phi^{-1}(1-alpha/2), |B| >= mu0) / P(|B| >= mu0)
// with the inner Gaussian probability evaluated exactly per prior sample.
double tpr_limit(const Vector& prior_samples, double tau_star, double alpha, double mu0);

// Standard Benjamini-Hochberg step-up rule; returns per-index rejection flags.
std::vector<bool> benjamini_hochberg(const Vector& pvalues, double q);

// BH adjusted p-values: p_adj <= q iff the step-up rule rejects at FDR q.
Vector bh_adjusted_pvalues(const Vector& pvalues);

// Kolmogorov-Smirnov distance of a sample against the standard normal.
double ks_statistic_normal(const Vector& sample);

} // namespace sdb
