#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdb/debias.hpp"
#include "sdb/spectral.hpp"
#include "sdb/types.hpp"

namespace sdb {

// PC index set into descending-eigenvalue order: an explicit list or the k
// largest ("top:k" on the CLI).
struct PcSelection {
  std::vector<Index> indices;
  static PcSelection top(Index k);
  static PcSelection list(std::vector<Index> idx);
  // "top:20" or a comma-separated 1-based list "2,4,6".
  static PcSelection parse(const std::string& text);
};

struct AlignmentTest {
  Vector s;          // per-PC standard errors sqrt(sigma2 / d2_J + omega)
  Vector pvalues;    // 2 - 2 Phi(|theta_i / s_i|)
  std::vector<bool> bh_rejected;
  double q = 0.1;
};

struct PcrResult {
  std::vector<Index> J;
  Vector theta_pcr;   // alignment coefficients
  Vector beta_al;     // O_J^T theta_pcr
  Vector beta_co;     // complement debiased estimator
  Vector beta_pcr;    // beta_al + beta_co
  double tau_star = 0.0;   // complement problem's variance scalar
  double omega_hat = 0.0;  // p^{-1} ||beta_co||^2 - tau_star, clamped at 0
  bool omega_clamped = false;
  AlignmentTest align;
  // Diagnostics of the complement debiasing, stated in the renormalized
  // coordinates: the complement design is rescaled to unit mean eigenvalue
  // (factor below) before the penalty applies, and beta_co / tau_star above
  // are mapped back to the original scale.
  DebiasResult complement;
  double complement_scale = 1.0;
};

// theta_pcr = (X_J~^T X_J~)^{-1} X_J~^T y with X_J~ = X O_J^T, equivalently
// (D_J^T D_J)^{-1} D_J^T Q y; beta_al = O_J^T theta_pcr.
std::pair<Vector, Vector> alignment_pcr(const DesignSpectrum& spec, const Vector& y,
                                        const std::vector<Index>& J);

// Literal Gram-system form of the same coefficients, solved from the
// basis-transformed design X O_J^T. Agreement with alignment_pcr is a tested
// identity.
Vector alignment_pcr_gram(const Matrix& X, const DesignSpectrum& spec, const Vector& y,
                          const std::vector<Index>& J);

// Transformed dataset on the positive-eigenvalue PCs outside J:
//   X_new = (D_Jc^T D_Jc)^{1/2} O_Jc,  y_new = (D_Jc^T D_Jc)^{1/2} theta_pcr(Jc).
// Also returns the complement eigenvalues padded to length p.
struct ComplementDataset {
  Matrix X;
  Vector y;
  Vector d2;                    // spectrum of X_new^T X_new, zero-padded
  std::vector<Index> J_bar;
};
ComplementDataset complement_dataset(const DesignSpectrum& spec, const Vector& y,
                                     const std::vector<Index>& J);

// Full PCR-Spectrum-Aware pipeline: alignment PCR, complement dataset,
// Spectrum-Aware debiasing of the complement, and the alignment test.
PcrResult debiased_pcr(const DesignSpectrum& spec, const Matrix& X, const Vector& y,
                       const PcSelection& sel, const PenaltySpec& pen,
                       std::optional<double> sigma2 = std::nullopt,
                       const DebiasOptions& opts = {}, double bh_q = 0.1);

AlignmentTest alignment_test(const Vector& theta_pcr, const Vector& d2_J, double sigma2,
                             double omega_hat, double q);

} // namespace sdb
