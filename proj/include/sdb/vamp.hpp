#pragma once

#include <cstdint>
#include <vector>

#include "sdb/penalty.hpp"
#include "sdb/spectral.hpp"
#include "sdb/types.hpp"

namespace sdb {

// Solution of the four-equation population system coupling
// (gamma, eta, tau_star, tau_dstar):
//   gamma/eta   = E Prox'_{gamma^{-1} h}(B + sqrt(tau_star) Z)
//   tau_dstar   = eta^2/(eta-gamma)^2 [E(Prox_{gamma^{-1} h}(B + sqrt(tau_star) Z) - B)^2
//                                      - (gamma/eta)^2 tau_star]
//   gamma       = -R(1/eta)
//   tau_star    = (eta/gamma)^2 [E (sigma2 D^2 + tau_dstar (eta-gamma)^2) / (D^2+eta-gamma)^2
//                                - ((eta-gamma)/eta)^2 tau_dstar]
struct FixedPoint {
  double gamma_star = 0.0;
  double eta_star = 0.0;
  double tau_star = 0.0;
  double tau_dstar = 0.0;
  double residuals[4] = {0, 0, 0, 0};
  bool converged = false;
  int iterations = 0;
};

struct FixedPointOptions {
  int max_iter = 500;
  double damping = 0.5;    // halved adaptively on residual increase
  double tol = 1e-9;       // relative residual target
  Index mc_draws = 200000; // cap on the number of prior samples averaged
};

// Damped fixed-point iteration. Expectations over B* average the supplied
// prior samples (deterministically subsampled to mc_draws); the Gaussian Z
// is integrated in closed form so the map is smooth in (gamma, tau).
// Expectations over D^2 average spectrum_samples; the R-transform comes from
// empirical_r_transform. Solver stalls with eta -> gamma are reported as a
// domain violation rather than extrapolated.
FixedPoint solve_fixed_point(const Vector& spectrum_samples, const Vector& prior_samples,
                             double sigma2, const PenaltySpec& pen,
                             const FixedPointOptions& opts = {});

struct VampState {
  std::vector<Vector> x1;  // denoiser outputs per iteration
  std::vector<Vector> x2;  // linear-stage outputs per iteration
  Vector r1;
  Vector r2;
  // (1/p) ||x1_t - beta_hat||^2 when a reference fit is supplied
  std::vector<double> diag_x1_to_betahat;
};

// Oracle VAMP, initialized at stationarity r_10 = beta_star + N(0, tau* I)
// with fixed (gamma*, eta*) from a solved FixedPoint. The linear stage is a
// diagonal solve in the cached SVD basis.
VampState oracle_vamp(const DesignSpectrum& spec, const Matrix& X, const Vector& y,
                      const Vector& beta_star, const FixedPoint& fp,
                      const PenaltySpec& pen, int T, std::uint64_t seed,
                      const Vector* beta_hat_ref = nullptr);

struct DataVampState {
  std::vector<Vector> x1;
  std::vector<Vector> x2;
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  Vector r1;
};

// Adaptive-gamma VAMP (unit-noise form) with the trace-based eta_2 update;
// diagnostic only.
DataVampState data_vamp(const DesignSpectrum& spec, const Matrix& X, const Vector& y,
                        const PenaltySpec& pen, const Vector& r1_init,
                        double gamma1_init, int T);

} // namespace sdb
