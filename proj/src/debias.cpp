#include "sdb/debias.hpp"

#include <cmath>

#include "sdb/errors.hpp"
#include "sdb/spectral.hpp"

namespace sdb {

double eta_hat(double adj, const Vector& hpp) {
  double acc = 0.0;
  Index finite = 0;
  for (Index j = 0; j < hpp.size(); ++j) {
    if (std::isfinite(hpp[j])) {
      acc += 1.0 / (adj + hpp[j]);
      ++finite;
    }
  }
  if (finite == 0)
    throw Error(ErrorCode::CertificateFailed, "eta_hat: every h'' entry is infinite");
  return static_cast<double>(hpp.size()) / acc;
}

double tau_dstar_hat(const Matrix& X, const Vector& y, const Vector& beta_hat,
                     double adj, double eta, double sigma2, const Vector& d2) {
  const double w = eta - adj;
  if (w == 0.0)
    throw Error(ErrorCode::BadArgument, "tau_dstar_hat: eta equals adj");
  const Vector resid = y - X * beta_hat;
  const Vector v = resid + (X * (X.transpose() * resid)) / w;
  const double n = static_cast<double>(y.size());
  return (v.squaredNorm() - n * sigma2) / d2.sum();
}

double tau_star_hat(const Vector& d2, double adj, double eta, double sigma2,
                    double tau_dstar) {
  if (adj <= 0.0)
    throw Error(ErrorCode::BadArgument, "tau_star_hat: adj must be positive");
  const double w = eta - adj;
  double acc = 0.0;
  for (Index i = 0; i < d2.size(); ++i) {
    const double num = eta * eta * d2[i] * sigma2 +
                       (d2[i] - adj + 2.0 * eta) * (adj - d2[i]) * w * w * tau_dstar;
    const double den = (d2[i] - adj + eta) * (d2[i] - adj + eta) * adj * adj;
    acc += num / den;
  }
  return acc / static_cast<double>(d2.size());
}

double feasibility_lhs(const Vector& d2, double adj, double eta, Index n, Index p) {
  const double w = eta - adj;
  double num = 0.0, s_d2 = 0.0, s_frac = 0.0;
  for (Index i = 0; i < d2.size(); ++i) {
    const double f = 1.0 - (w / (d2[i] + w)) * (w / (d2[i] + w));
    num += d2[i] * f;
    s_d2 += d2[i];
    s_frac += f;
  }
  const double dp = static_cast<double>(p);
  return (static_cast<double>(n) / dp) * (num / dp) / ((s_d2 / dp) * (s_frac / dp));
}

double sigma2_hat(const Matrix& X, const Vector& y, const Vector& beta_hat,
                  double adj, double eta, const Vector& d2, Index n, Index p) {
  const double w = eta - adj;
  const Vector resid = y - X * beta_hat;
  const Vector v = resid + (X * (X.transpose() * resid)) / w;
  const double sum_d2 = d2.sum();

  double s_wd = 0.0;   // sum_i w^2 d_i^2 / (d_i^2 + w)^2
  double s_den = 0.0;  // sum_i w^2 (sum_j d_j^2 - n d_i^2) / ((d_i^2 + w)^2 sum_j d_j^2)
  for (Index i = 0; i < d2.size(); ++i) {
    const double q = (d2[i] + w) * (d2[i] + w);
    s_wd += w * w * d2[i] / q;
    s_den += w * w * (sum_d2 - static_cast<double>(n) * d2[i]) / (q * sum_d2);
  }
  const double num = resid.squaredNorm() - (v.squaredNorm() / sum_d2) * s_wd;
  const double den = s_den + static_cast<double>(n) - static_cast<double>(p);
  return num / den;
}

DebiasResult debias(const Matrix& X, const Vector& y, const FitResult& fit,
                    const PenaltySpec& pen, const Vector& d2,
                    std::optional<double> sigma2, const DebiasOptions& opts) {
  if (X.rows() != y.size() || X.cols() != fit.beta_hat.size())
    throw Error(ErrorCode::DimMismatch, "debias: dimension mismatch");
  if (d2.size() != X.cols())
    throw Error(ErrorCode::DimMismatch, "debias: d2 must have length p");

  const Index n = X.rows(), p = X.cols();
  DebiasResult out;
  out.fit = fit;
  out.beta_hat = fit.beta_hat;
  if (!fit.converged) out.flags.push_back("fit_not_converged");

  const Vector hpp = pen.hpp_extended(fit.beta_hat);
  AdjustmentProblem prob(d2, hpp);
  out.adj = solve_adjustment(prob);
  out.eta_star = eta_hat(out.adj, hpp);

  const Vector correction = X.transpose() * (y - X * fit.beta_hat);
  out.beta_u = fit.beta_hat + correction / out.adj;
  out.r_dstar = fit.beta_hat - correction / (out.eta_star - out.adj);

  out.feasibility_lhs = feasibility_lhs(d2, out.adj, out.eta_star, n, p);
  if (sigma2.has_value()) {
    out.sigma2 = *sigma2;
    out.sigma2_known = true;
  } else {
    if (std::abs(out.feasibility_lhs - 1.0) <= opts.feasibility_tol)
      throw Error(ErrorCode::FeasibilityFailed,
                  "noise level not estimable: feasibility ratio " +
                      std::to_string(out.feasibility_lhs) + " is within " +
                      std::to_string(opts.feasibility_tol) + " of 1");
    out.sigma2 = sigma2_hat(X, y, fit.beta_hat, out.adj, out.eta_star, d2, n, p);
    if (out.sigma2 <= 0.0) {
      out.flags.push_back("nonpositive_sigma2");
      out.valid = false;
    }
  }

  out.tau_dstar =
      tau_dstar_hat(X, y, fit.beta_hat, out.adj, out.eta_star, out.sigma2, d2);
  if (out.tau_dstar < 0.0) {
    // possible at small p by sampling noise; tau_dstar >= 0 in population
    out.flags.push_back("negative_tau_dstar_clamped");
    out.tau_dstar = 0.0;
  }
  out.tau_star =
      tau_star_hat(d2, out.adj, out.eta_star, out.sigma2, out.tau_dstar);
  if (out.tau_star <= 0.0) {
    out.flags.push_back("nonpositive_tau_star");
    out.valid = false;
  }
  return out;
}

DebiasResult debias(const Matrix& X, const Vector& y, const PenaltySpec& pen,
                    std::optional<double> sigma2, const DebiasOptions& opts) {
  DesignSpectrum spec = decompose(X);
  FitOptions fo = opts.fit;
  fo.lipschitz = spec.d2[0];
  FitResult fr = fit(X, y, pen, fo);
  return debias(X, y, fr, pen, spec.d2, sigma2, opts);
}

} // namespace sdb
