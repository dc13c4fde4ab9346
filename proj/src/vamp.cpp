#include "sdb/vamp.hpp"

#include <algorithm>
#include <cmath>

#include "sdb/errors.hpp"
#include "sdb/rng.hpp"

namespace sdb {

namespace {

// (X^T X + w I)^{-1} v through the SVD: O^T diag(1/(d2 + w)) O v.
Vector shifted_inverse_apply(const DesignSpectrum& spec, double w, const Vector& v) {
  Vector t = spec.O * v;
  for (Index i = 0; i < t.size(); ++i) t[i] /= spec.d2[i] + w;
  return spec.O.transpose() * t;
}

struct McMoments {
  double alpha;  // E Prox'_{gamma^{-1} h}(B + sqrt(tau) Z)
  double mse;    // E (Prox_{gamma^{-1} h}(B + sqrt(tau) Z) - B)^2
};

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// The Z expectation is a Gaussian integral with a closed form for the
// soft-threshold family; only the B expectation is averaged over samples.
// Keeping the map smooth lets the damped iteration certify small residuals,
// which indicator-based Monte Carlo cannot (its map has 1/K-size jumps).
McMoments prox_moments(const PenaltySpec& pen, double gamma, double tau,
                       const Vector& b) {
  const double v = 1.0 / gamma;
  const double t = pen.lambda1 * v;
  const double c = 1.0 / (1.0 + pen.lambda2 * v);
  const double s = std::sqrt(std::max(tau, 0.0));
  const double K = static_cast<double>(b.size());

  double alpha = 0.0, mse = 0.0;
  if (s == 0.0) {
    for (Index k = 0; k < b.size(); ++k) {
      alpha += pen.prox_deriv_extended(v, b[k]);
      const double e = pen.prox(v, b[k]) - b[k];
      mse += e * e;
    }
    return {alpha / K, mse / K};
  }

  for (Index k = 0; k < b.size(); ++k) {
    const double a1 = (t - b[k]) / s;    // upper-branch threshold
    const double a2 = (-t - b[k]) / s;   // lower-branch threshold
    const double Q1 = 1.0 - Phi(a1), P2 = Phi(a2);
    alpha += c * (Q1 + P2);
    const double cs = c * s;
    const double m1 = (1.0 + a1 * a1) * Q1 - a1 * phi(a1);   // E (Z-a1)^2 on Z > a1
    const double m2 = (1.0 + a2 * a2) * P2 + a2 * phi(a2);   // E (Z-a2)^2 on Z < a2
    const double l1 = phi(a1) - a1 * Q1;                     // E (Z-a1)   on Z > a1
    const double l2 = -phi(a2) - a2 * P2;                    // E (Z-a2)   on Z < a2
    mse += b[k] * b[k] + cs * cs * (m1 + m2) - 2.0 * cs * b[k] * (l1 + l2);
  }
  return {alpha / K, mse / K};
}

}  // namespace

FixedPoint solve_fixed_point(const Vector& spectrum_samples, const Vector& prior_samples,
                             double sigma2, const PenaltySpec& pen,
                             const FixedPointOptions& opts) {
  if (spectrum_samples.size() == 0 || spectrum_samples.mean() <= 0.0)
    throw Error(ErrorCode::BadArgument, "solve_fixed_point: spectrum must have positive mean");
  const Vector& d2 = spectrum_samples;

  // B samples fixed for the whole solve; if more are supplied than the
  // configured budget, take a deterministic stride subsample
  Vector b;
  if (prior_samples.size() <= opts.mc_draws) {
    b = prior_samples;
  } else {
    const Index stride = (prior_samples.size() + opts.mc_draws - 1) / opts.mc_draws;
    b.resize((prior_samples.size() + stride - 1) / stride);
    for (Index k = 0; k < b.size(); ++k) b[k] = prior_samples[k * stride];
  }

  const double d2_mean = d2.mean();
  double gamma = d2_mean;
  double eta = 2.0 * gamma;
  double tau = sigma2 + b.squaredNorm() / static_cast<double>(b.size());
  double tau_d = tau;

  FixedPoint out;
  double damping = opts.damping;
  double prev_res = std::numeric_limits<double>::infinity();

  auto relerr = [](double a, double bb) {
    return std::abs(a - bb) / std::max({std::abs(a), std::abs(bb), 1e-12});
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    const McMoments mm = prox_moments(pen, gamma, tau, b);
    if (!(mm.alpha > 0.0 && mm.alpha < 1.0))
      throw Error(ErrorCode::NonConvergence,
                  "solve_fixed_point: E Prox' left (0,1); eta <= gamma domain violation");
    const double eta_new = gamma / mm.alpha;

    const double w = eta_new - gamma;
    const double ratio = eta_new / w;
    double tau_d_new = ratio * ratio * (mm.mse - mm.alpha * mm.alpha * tau);
    tau_d_new = std::max(tau_d_new, 0.0);

    double gamma_new;
    try {
      gamma_new = -empirical_r_transform(d2, 1.0 / eta_new);
    } catch (const Error&) {
      throw Error(ErrorCode::NonConvergence,
                  "solve_fixed_point: 1/eta outside the R-transform domain");
    }

    double e_mix = 0.0, e_frac2 = 0.0;
    const double w2 = eta_new - gamma_new;
    for (Index i = 0; i < d2.size(); ++i) {
      const double den = (d2[i] + w2) * (d2[i] + w2);
      e_mix += (sigma2 * d2[i] + tau_d_new * w2 * w2) / den;
    }
    e_mix /= static_cast<double>(d2.size());
    e_frac2 = (w2 / eta_new) * (w2 / eta_new);
    const double tau_new =
        (eta_new / gamma_new) * (eta_new / gamma_new) * (e_mix - e_frac2 * tau_d_new);

    const double res = std::max({relerr(gamma_new, gamma), relerr(eta_new, eta),
                                 relerr(tau_new, tau), relerr(tau_d_new, tau_d)});
    if (res > prev_res)
      damping = std::max(0.05, 0.5 * damping);
    else
      damping = std::min(opts.damping, 1.2 * damping);
    prev_res = res;

    gamma = (1.0 - damping) * gamma + damping * gamma_new;
    eta = (1.0 - damping) * eta + damping * eta_new;
    tau = (1.0 - damping) * tau + damping * tau_new;
    tau_d = (1.0 - damping) * tau_d + damping * tau_d_new;
    out.iterations = it + 1;

    if (res <= opts.tol) {
      out.converged = true;
      break;
    }
  }

  if (!(eta > gamma) || !(gamma > 0.0))
    throw Error(ErrorCode::NonConvergence, "solve_fixed_point: eta <= gamma at termination");

  out.gamma_star = gamma;
  out.eta_star = eta;
  out.tau_star = tau;
  out.tau_dstar = tau_d;

  // fixed-point residuals of the four equations at the returned point
  const McMoments mm = prox_moments(pen, gamma, tau, b);
  out.residuals[0] = relerr(gamma / eta, mm.alpha);
  const double w = eta - gamma;
  out.residuals[1] =
      relerr(tau_d, std::max(0.0, (eta / w) * (eta / w) * (mm.mse - mm.alpha * mm.alpha * tau)));
  out.residuals[2] = relerr(gamma, -empirical_r_transform(d2, 1.0 / eta));
  double e_mix = 0.0;
  for (Index i = 0; i < d2.size(); ++i) {
    const double den = (d2[i] + w) * (d2[i] + w);
    e_mix += (sigma2 * d2[i] + tau_d * w * w) / den;
  }
  e_mix /= static_cast<double>(d2.size());
  out.residuals[3] =
      relerr(tau, (eta / gamma) * (eta / gamma) * (e_mix - (w / eta) * (w / eta) * tau_d));
  return out;
}

VampState oracle_vamp(const DesignSpectrum& spec, const Matrix& X, const Vector& y,
                      const Vector& beta_star, const FixedPoint& fp,
                      const PenaltySpec& pen, int T, std::uint64_t seed,
                      const Vector* beta_hat_ref) {
  const double gamma = fp.gamma_star, eta = fp.eta_star;
  if (!(eta > gamma))
    throw Error(ErrorCode::BadArgument, "oracle_vamp: requires eta* > gamma*");
  const double w = eta - gamma;
  const Index p = X.cols();

  RngStream rng = RngStream::derive(seed, "oracle_vamp");
  Vector r1 = beta_star + std::sqrt(fp.tau_star) * rng.normal_vector(p);
  const Vector Xty = X.transpose() * y;

  VampState st;
  st.x1.reserve(T);
  st.x2.reserve(T);
  for (int t = 0; t < T; ++t) {
    const Vector x1 = pen.prox(1.0 / gamma, r1);
    const Vector r2 = (eta * x1 - gamma * r1) / w;
    const Vector x2 = shifted_inverse_apply(spec, w, Xty + w * r2);
    r1 = (eta * x2 - w * r2) / gamma;
    st.x1.push_back(x1);
    st.x2.push_back(x2);
    st.r2 = r2;
    if (beta_hat_ref)
      st.diag_x1_to_betahat.push_back((x1 - *beta_hat_ref).squaredNorm() /
                                      static_cast<double>(p));
  }
  st.r1 = r1;
  return st;
}

DataVampState data_vamp(const DesignSpectrum& spec, const Matrix& X, const Vector& y,
                        const PenaltySpec& pen, const Vector& r1_init,
                        double gamma1_init, int T) {
  if (!(gamma1_init > 0.0))
    throw Error(ErrorCode::BadArgument, "data_vamp: gamma1 initialization must be positive");
  const Index p = X.cols();
  const Vector Xty = X.transpose() * y;

  DataVampState st;
  Vector r1 = r1_init;
  double gamma1 = gamma1_init;
  for (int t = 0; t < T; ++t) {
    const double v = 1.0 / gamma1;
    const Vector x1 = pen.prox(v, r1);
    double alpha = 0.0;
    for (Index j = 0; j < p; ++j) alpha += pen.prox_deriv_extended(v, r1[j]);
    alpha /= static_cast<double>(p);
    const double eta1 = gamma1 / alpha;
    const double gamma2 = eta1 - gamma1;
    if (!(gamma2 > 0.0) || !std::isfinite(gamma2))
      throw Error(ErrorCode::NonConvergence, "data_vamp: gamma2 left (0, inf)");
    const Vector r2 = (eta1 * x1 - gamma1 * r1) / gamma2;

    const Vector x2 = shifted_inverse_apply(spec, gamma2, Xty + gamma2 * r2);
    const double eta2 = 1.0 / empirical_cauchy(spec.d2, gamma2);
    const double g1_next = eta2 - gamma2;
    if (!(g1_next > 0.0) || !std::isfinite(g1_next))
      throw Error(ErrorCode::NonConvergence, "data_vamp: gamma1 left (0, inf)");
    r1 = (eta2 * x2 - gamma2 * r2) / g1_next;
    gamma1 = g1_next;

    st.x1.push_back(x1);
    st.x2.push_back(x2);
    st.gamma1.push_back(gamma1);
    st.gamma2.push_back(gamma2);
  }
  st.r1 = r1;
  return st;
}

} // namespace sdb
