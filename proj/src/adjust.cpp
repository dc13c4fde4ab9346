#include "sdb/adjust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdb/errors.hpp"

namespace sdb {

namespace {
constexpr double kGTol = 1e-12;       // |g_p - 1| convergence target
constexpr double kBracketRel = 1e-12; // bracket width relative to mean(d2)
constexpr int kNewtonMax = 50;
}  // namespace

AdjustmentProblem::AdjustmentProblem(Vector d2, Vector hpp)
    : d2_(std::move(d2)), hpp_(std::move(hpp)) {
  if (d2_.size() != hpp_.size())
    throw Error(ErrorCode::DimMismatch, "adjust: d2 and hpp lengths differ");
  Index nf = 0;
  for (Index j = 0; j < hpp_.size(); ++j) {
    if (hpp_[j] < 0.0)
      throw Error(ErrorCode::BadArgument, "adjust: negative h'' entry");
    if (std::isfinite(hpp_[j])) ++nf;
  }
  hpp_finite_.resize(nf);
  Index k = 0;
  for (Index j = 0; j < hpp_.size(); ++j)
    if (std::isfinite(hpp_[j])) hpp_finite_[k++] = hpp_[j];
}

bool AdjustmentProblem::certificate_holds() const {
  if (hpp_finite_.size() == 0) return false;
  const Index p = d2_.size();
  Index d_nnz = 0, h_nnz = 0;
  for (Index i = 0; i < p; ++i)
    if (d2_[i] > 0.0) ++d_nnz;
  for (Index j = 0; j < p; ++j)
    if (hpp_[j] != 0.0) ++h_nnz;
  return h_nnz == p || d_nnz == p || d_nnz + h_nnz > p;
}

void AdjustmentProblem::require_certificate() const {
  const Index p = d2_.size();
  if (hpp_finite_.size() == 0)
    throw Error(ErrorCode::CertificateFailed,
                "adjustment equation degenerate: every h''(beta_j) is infinite");
  Index d_nnz = 0, h_nnz = 0;
  for (Index i = 0; i < p; ++i)
    if (d2_[i] > 0.0) ++d_nnz;
  for (Index j = 0; j < p; ++j)
    if (hpp_[j] != 0.0) ++h_nnz;
  if (h_nnz == p || d_nnz == p || d_nnz + h_nnz > p) return;
  throw Error(ErrorCode::CertificateFailed,
              "adjustment equation not uniquely solvable: h'' has zeros (||h''||_0 = " +
                  std::to_string(h_nnz) + " < p), X^T X is singular (rank " +
                  std::to_string(d_nnz) + " < p), and ||d||_0 + ||h''||_0 <= p");
}

double AdjustmentProblem::m(double gamma) const {
  double acc = 0.0;
  for (Index j = 0; j < hpp_finite_.size(); ++j) acc += 1.0 / (gamma + hpp_finite_[j]);
  return acc / static_cast<double>(d2_.size());
}

double AdjustmentProblem::m_deriv(double gamma) const {
  double acc = 0.0;
  for (Index j = 0; j < hpp_finite_.size(); ++j) {
    const double den = gamma + hpp_finite_[j];
    acc -= 1.0 / (den * den);
  }
  return acc / static_cast<double>(d2_.size());
}

double g_p(const AdjustmentProblem& prob, double gamma) {
  if (gamma <= 0.0)
    throw Error(ErrorCode::BadArgument, "g_p: gamma must be positive");
  const double mg = prob.m(gamma);
  const Vector& d2 = prob.d2();
  double acc = 0.0;
  for (Index i = 0; i < d2.size(); ++i) {
    const double den = (d2[i] - gamma) * mg + 1.0;
    if (den <= 0.0)
      throw Error(ErrorCode::CertificateFailed, "g_p: non-positive denominator");
    acc += 1.0 / den;
  }
  return acc / static_cast<double>(d2.size());
}

double g_p_deriv(const AdjustmentProblem& prob, double gamma) {
  const double mg = prob.m(gamma);
  const double mpg = prob.m_deriv(gamma);
  const Vector& d2 = prob.d2();
  double acc = 0.0;
  for (Index i = 0; i < d2.size(); ++i) {
    const double den = (d2[i] - gamma) * mg + 1.0;
    acc += (mg - (d2[i] - gamma) * mpg) / (den * den);
  }
  return acc / static_cast<double>(d2.size());
}

double solve_adjustment(const AdjustmentProblem& prob, SolveStats* stats) {
  prob.require_certificate();
  const Vector& d2 = prob.d2();
  const double dmax = d2.maxCoeff();
  const double dmean = d2.mean();
  if (dmax <= 0.0)
    throw Error(ErrorCode::BadArgument, "solve_adjustment: zero spectrum");

  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};

  // Newton from the mean eigenvalue; the root lies in (0, max(d2)].
  double gamma = dmean;
  double prev_step = std::numeric_limits<double>::infinity();
  bool newton_ok = false;
  for (int it = 0; it < kNewtonMax; ++it) {
    const double g = g_p(prob, gamma);
    if (std::abs(g - 1.0) <= kGTol) {
      newton_ok = true;
      break;
    }
    const double dg = g_p_deriv(prob, gamma);
    if (!(dg > 0.0)) break;
    const double step = (g - 1.0) / dg;
    const double next = gamma - step;
    if (!(next > 0.0) || next > dmax * (1.0 + 1e-12)) break;
    if (it >= 10 && std::abs(step) >= std::abs(prev_step)) break;  // stalled
    prev_step = step;
    gamma = next;
    ++st.newton_steps;
  }
  if (newton_ok) return gamma;

  // Bracketed fallback; g_p(gamma -> 0) < 1 under the certificate and every
  // term of g_p is >= 1 at gamma = max(d2), so [lo, hi] always brackets.
  st.used_fallback = true;
  double lo = 1e-8 * dmean;
  double hi = dmax;
  int shrink = 0;
  while (g_p(prob, lo) >= 1.0) {
    lo *= 1e-4;
    if (++shrink > 8)
      throw Error(ErrorCode::NonConvergence, "solve_adjustment: no lower bracket");
  }
  for (int it = 0; it < 200 && hi - lo > kBracketRel * dmean; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double g;
    try {
      g = g_p(prob, mid);
    } catch (const Error&) {
      // certificate holds, so a failed evaluation can only be roundoff at the
      // bracket edge; tighten from below
      lo = mid;
      ++st.bisection_steps;
      continue;
    }
    if (g < 1.0)
      lo = mid;
    else
      hi = mid;
    ++st.bisection_steps;
    if (std::abs(g - 1.0) <= kGTol) return mid;
  }
  return 0.5 * (lo + hi);
}

double df_adjustment_ridge(const Vector& d2, double lambda2, Index n) {
  if (lambda2 <= 0.0)
    throw Error(ErrorCode::BadArgument, "df_adjustment_ridge: lambda2 must be positive");
  double acc = 0.0;
  for (Index i = 0; i < d2.size(); ++i) acc += d2[i] / (d2[i] + lambda2);
  return 1.0 - acc / static_cast<double>(n);
}

double df_adjustment_lasso(Index s_hat, Index n) {
  if (s_hat < 0 || s_hat >= n)
    throw Error(ErrorCode::BadArgument, "df_adjustment_lasso: requires 0 <= s_hat < n");
  return 1.0 - static_cast<double>(s_hat) / static_cast<double>(n);
}

} // namespace sdb
