#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sdb/debias.hpp"
#include "sdb/designs.hpp"
#include "sdb/pcr.hpp"
#include "sdb/types.hpp"

namespace sdb {

// Degrees-of-freedom baseline with M = I:
//   adj = 1 - df / n,  df = Tr[X_S (X_S^T X_S + lambda2 I)^{-1} X_S^T]
// over the fitted support S, and variance ||y - X beta_hat||^2 / (n adj^2).
struct DfDebiasResult {
  Vector beta_u;
  double adj = 0.0;
  double df = 0.0;
  double tau = 0.0;
};
DfDebiasResult df_debias(const Matrix& X, const Vector& y, const FitResult& fit,
                         const PenaltySpec& pen);

// One estimator applied to one dataset: SA, DF, PCRSA or PCRDF (the latter
// substitutes the DF adjustment inside the complement step).
struct MethodOutput {
  Vector beta_u;
  double tau_star = 0.0;
  std::vector<std::string> flags;
};
MethodOutput run_method(const std::string& method, const DesignSpectrum& spec,
                        const Matrix& X, const Vector& y, const PenaltySpec& pen,
                        const PcSelection& J, std::optional<double> sigma2,
                        const DebiasOptions& opts = {});

struct ExperimentConfig {
  DesignRecipe design;
  SignalRecipe signal;
  double sigma2 = 1.0;
  bool sigma2_known = false;  // pass the true value to the pipeline
  PenaltySpec penalty = PenaltySpec::elastic_net(1.0, 0.1);
  std::string method = "SA";
  PcSelection j;
  int trials = 50;
  std::vector<double> alpha_grid;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string output_dir;  // when set, plot-ready CSVs are written there

  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct CalibrationTrial {
  bool ok = false;
  std::string error;
  Vector std_errors;  // tau^{-1/2} (beta_u - beta_star)
  double ks = 0.0;
  std::vector<double> fpr, tpr, fcp;  // per alpha; NaN marks undefined rates
};

struct CalibrationSummary {
  int trials_total = 0;
  int trials_failed = 0;
  double mean_ks = 0.0;
  std::vector<double> alpha_grid;
  std::vector<double> mean_fpr, mean_tpr, mean_fcp;
  std::vector<CalibrationTrial> per_trial;
};

CalibrationSummary run_calibration(const ExperimentConfig& config);

struct AlignmentTrial {
  bool ok = false;
  std::string error;
  Vector pvalues_adj;            // BH-adjusted, one per tested PC
  std::vector<bool> reject_05;   // FDR 0.05
  std::vector<bool> reject_10;   // FDR 0.10
  Vector angles_deg;             // arccos(o_i^T beta* / ||beta*||)
};

struct AlignmentSummary {
  int trials_total = 0;
  int trials_failed = 0;
  std::vector<Index> tested_pcs;         // = J, 0-based
  std::vector<double> reject_rate_05;    // per tested PC
  std::vector<double> reject_rate_10;
  double empirical_fdr_10 = 0.0;         // V / max(R, 1) averaged over trials
  std::vector<AlignmentTrial> per_trial;
};

AlignmentSummary run_alignment_study(const ExperimentConfig& config);

void write_calibration_outputs(const ExperimentConfig& config,
                               const CalibrationSummary& summary);
void write_alignment_outputs(const ExperimentConfig& config,
                             const AlignmentSummary& summary);

} // namespace sdb
