#include "sdb/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdb/errors.hpp"

namespace sdb {

namespace {
const double kSqrt2 = std::sqrt(2.0);

// Acklam-style rational approximation, accurate enough to seed Newton.
double quantile_seed(double u) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (u > 1.0 - plow) return -quantile_seed(1.0 - u);
  const double q = u - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw Error(ErrorCode::BadArgument, "normal_quantile: u must lie in (0,1)");
  double x = quantile_seed(u);
  for (int it = 0; it < 3; ++it) {
    const double err = normal_cdf(x) - u;
    const double pdf = normal_pdf(x);
    if (pdf == 0.0) break;
    x -= err / pdf;
  }
  return x;
}

Vector p_values(const Vector& beta_u, double tau_star) {
  if (tau_star <= 0.0)
    throw Error(ErrorCode::BadArgument, "p_values: tau_star must be positive");
  const double s = std::sqrt(tau_star);
  Vector out(beta_u.size());
  // 2 (1 - Phi(t)) = erfc(t / sqrt(2)); stable in the far tail
  for (Index i = 0; i < beta_u.size(); ++i)
    out[i] = std::erfc(std::abs(beta_u[i]) / (s * kSqrt2));
  return out;
}

std::vector<Interval> confidence_intervals_ab(const Vector& beta_u, double tau_star,
                                              double a, double b, double alpha) {
  if (tau_star <= 0.0)
    throw Error(ErrorCode::BadArgument, "confidence_intervals: tau_star must be positive");
  if (std::abs((normal_cdf(b) - normal_cdf(a)) - (1.0 - alpha)) > 1e-10)
    throw Error(ErrorCode::BadArgument,
                "confidence_intervals: Phi(b) - Phi(a) must equal 1 - alpha");
  const double s = std::sqrt(tau_star);
  std::vector<Interval> out(beta_u.size());
  for (Index i = 0; i < beta_u.size(); ++i)
    out[i] = {beta_u[i] + a * s, beta_u[i] + b * s};
  return out;
}

std::vector<Interval> confidence_intervals(const Vector& beta_u, double tau_star,
                                           double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::BadArgument, "confidence_intervals: alpha must lie in (0,1)");
  const double b = normal_quantile(1.0 - alpha / 2.0);
  return confidence_intervals_ab(beta_u, tau_star, -b, b, alpha);
}

CalibrationMetrics calibration_metrics(const Vector& beta_star, const Vector& pvalues,
                                       const std::vector<Interval>& intervals,
                                       double alpha) {
  const Index p = beta_star.size();
  if (pvalues.size() != p || static_cast<Index>(intervals.size()) != p)
    throw Error(ErrorCode::DimMismatch, "calibration_metrics: length mismatch");
  Index nulls = 0, signals = 0, fp = 0, tp = 0, miss = 0;
  for (Index i = 0; i < p; ++i) {
    const bool reject = pvalues[i] <= alpha;
    if (beta_star[i] == 0.0) {
      ++nulls;
      if (reject) ++fp;
    } else {
      ++signals;
      if (reject) ++tp;
    }
    if (beta_star[i] <= intervals[i].lo || beta_star[i] >= intervals[i].hi) ++miss;
  }
  CalibrationMetrics out;
  if (nulls > 0) out.fpr = static_cast<double>(fp) / nulls;
  if (signals > 0) out.tpr = static_cast<double>(tp) / signals;
  out.fcp = static_cast<double>(miss) / static_cast<double>(p);
  return out;
}

double tpr_limit(const Vector& prior_samples, double tau_star, double alpha, double mu0) {
  const double c = normal_quantile(1.0 - alpha / 2.0);
  const double s = std::sqrt(tau_star);
  double num = 0.0;
  Index denom = 0;
  for (Index i = 0; i < prior_samples.size(); ++i) {
    const double b = prior_samples[i];
    if (std::abs(b) < mu0) continue;
    ++denom;
    const double m = b / s;
    // P(|m + Z| >= c) evaluated exactly
    num += normal_cdf(-c - m) + 1.0 - normal_cdf(c - m);
  }
  if (denom == 0)
    throw Error(ErrorCode::BadArgument, "tpr_limit: prior has no mass at or above mu0");
  return num / static_cast<double>(denom);
}

std::vector<bool> benjamini_hochberg(const Vector& pvalues, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw Error(ErrorCode::BadArgument, "benjamini_hochberg: q must lie in (0,1)");
  const Index m = pvalues.size();
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return pvalues[a] < pvalues[b]; });
  Index k = 0;  // largest k with p_(k) <= k q / m
  for (Index r = 0; r < m; ++r) {
    if (pvalues[order[r]] <= static_cast<double>(r + 1) * q / static_cast<double>(m))
      k = r + 1;
  }
  std::vector<bool> reject(m, false);
  for (Index r = 0; r < k; ++r) reject[order[r]] = true;
  return reject;
}

Vector bh_adjusted_pvalues(const Vector& pvalues) {
  const Index m = pvalues.size();
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return pvalues[a] < pvalues[b]; });
  Vector adj(m);
  double running = 1.0;
  for (Index r = m; r-- > 0;) {
    const double v = pvalues[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1);
    running = std::min(running, v);
    adj[order[r]] = running;
  }
  return adj;
}

double ks_statistic_normal(const Vector& sample) {
  const Index n = sample.size();
  if (n == 0) throw Error(ErrorCode::BadArgument, "ks_statistic_normal: empty sample");
  std::vector<double> x(sample.data(), sample.data() + n);
  std::sort(x.begin(), x.end());
  double ks = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double F = normal_cdf(x[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    ks = std::max(ks, std::max(std::abs(F - lo), std::abs(hi - F)));
  }
  return ks;
}

} // namespace sdb
