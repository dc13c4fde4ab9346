#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdb/rng.hpp"
#include "sdb/types.hpp"

namespace sdb {

// Generators for the simulated right-rotationally invariant design families.
// Families: matrix_normal, spiked, lnn, var, mult_t and the harder variants
// matrix_normal_b, spiked_b, lnn_b, var_b, mult_cauchy.
struct DesignRecipe {
  std::string family;
  Index n = 0;
  Index p = 0;
  std::uint64_t seed = 0;

  // matrix_normal: X = chol(S_col) G chol(S_row)^T with S_col AR(1) over
  // samples and S_row inverse-Wishart(I_p, iw_dof_mult * p) over features.
  double rho = 0.5;
  double iw_dof_mult = 1.1;
  bool identity_row_cov = false;

  // spiked: alpha V W^T + n^{-1} Gaussian with V, W Haar frames of width
  // spike_m; spiked_b uses explicit magnitudes spike_r instead of alpha.
  double spike_alpha = 10.0;
  Index spike_m = 50;
  std::vector<double> spike_r;

  // lnn: product of lnn_factors iid Gaussian factors; lnn_b is X1^lnn_power X2.
  int lnn_factors = 4;
  int lnn_power = 15;

  // var: order-tau autoregression over rows with innovations N(0, S_row).
  std::vector<double> var_coeffs = {0.4, 0.08, 0.04};

  // mult_t / mult_cauchy: iid multivariate-t rows with identity scale.
  double t_dof = 3.0;

  bool rescale = true;  // mean eigenvalue of X^T X normalized to 1

  // Parameters per the reference experiments for each family name.
  static DesignRecipe standard(const std::string& family, Index n, Index p,
                               std::uint64_t seed);
};

Matrix generate_design(const DesignRecipe& recipe);

// Signal beta_star = zeta + sum_k upsilon_k o_{J(k)}: an iid mixture
// component plus an alignment component along selected rows of O.
struct SignalRecipe {
  // mixture over components N(mean_k, sd_k^2) with sd = 0 meaning a point mass
  std::vector<double> weights = {0.24, 0.06, 0.7};
  std::vector<double> means = {-20.0, 10.0, 0.0};
  std::vector<double> sds = {1.0, 1.0, 0.0};
  std::vector<Index> align_indices;  // 0-based positions in descending-eigenvalue order
  std::vector<double> upsilon;       // magnitudes, same length as align_indices
  std::uint64_t seed = 0;

  static SignalRecipe fig_mixture(std::uint64_t seed);
};

// O is required when alignment indices are present.
Vector generate_signal(const SignalRecipe& recipe, Index p, const Matrix* O = nullptr);

Vector gaussian_noise(Index n, double sigma2, std::uint64_t seed);

// 10^5-style iid draws from the Marchenko-Pastur eigenvalue law of X^T X for
// X n x p with iid N(0, 1/n) entries and delta = n/p (includes the atom at
// zero when p > n). Mean is 1 by construction.
Vector sample_marchenko_pastur(Index count, double delta, std::uint64_t seed);

// Closed-form Cauchy transform at z > 0 of the same law.
double marchenko_pastur_cauchy(double delta, double z);

} // namespace sdb
