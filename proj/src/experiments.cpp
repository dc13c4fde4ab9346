#include "sdb/experiments.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "sdb/errors.hpp"
#include "sdb/inference.hpp"
#include "sdb/io.hpp"

namespace sdb {

DfDebiasResult df_debias(const Matrix& X, const Vector& y, const FitResult& fit,
                         const PenaltySpec& pen) {
  const Index n = X.rows();
  std::vector<Index> support;
  for (Index j = 0; j < fit.beta_hat.size(); ++j)
    if (fit.beta_hat[j] != 0.0) support.push_back(j);

  DfDebiasResult out;
  if (!support.empty()) {
    Matrix Xs(n, static_cast<Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) Xs.col(k) = X.col(support[k]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Xs.transpose() * Xs);
    for (Index k = 0; k < es.eigenvalues().size(); ++k) {
      const double mu = std::max(0.0, es.eigenvalues()[k]);
      if (pen.lambda2 > 0.0)
        out.df += mu / (mu + pen.lambda2);
      else if (mu > 0.0)
        out.df += 1.0;
    }
  }
  out.adj = 1.0 - out.df / static_cast<double>(n);
  if (out.adj <= 0.0)
    throw Error(ErrorCode::NonConvergence, "df_debias: non-positive DF adjustment");
  const Vector resid = y - X * fit.beta_hat;
  out.beta_u = fit.beta_hat + (X.transpose() * resid) / out.adj;
  out.tau = resid.squaredNorm() / (static_cast<double>(n) * out.adj * out.adj);
  return out;
}

MethodOutput run_method(const std::string& method, const DesignSpectrum& spec,
                        const Matrix& X, const Vector& y, const PenaltySpec& pen,
                        const PcSelection& J, std::optional<double> sigma2,
                        const DebiasOptions& opts) {
  MethodOutput out;
  if (method == "SA" || method == "DF") {
    FitOptions fo = opts.fit;
    fo.lipschitz = spec.d2[0];
    const FitResult fr = fit(X, y, pen, fo);
    if (method == "SA") {
      const DebiasResult dr = debias(X, y, fr, pen, spec.d2, sigma2, opts);
      out.beta_u = dr.beta_u;
      out.tau_star = dr.tau_star;
      out.flags = dr.flags;
    } else {
      const DfDebiasResult dr = df_debias(X, y, fr, pen);
      out.beta_u = dr.beta_u;
      out.tau_star = dr.tau;
    }
    return out;
  }
  if (method == "PCRSA") {
    const PcrResult pr = debiased_pcr(spec, X, y, J, pen, sigma2, opts);
    out.beta_u = pr.beta_pcr;
    out.tau_star = pr.tau_star;
    out.flags = pr.complement.flags;
    return out;
  }
  if (method == "PCRDF") {
    auto [theta, beta_al] = alignment_pcr(spec, y, J.indices);
    ComplementDataset comp = complement_dataset(spec, y, J.indices);
    // same complement renormalization as the PCRSA pipeline
    const double scale = std::sqrt(static_cast<double>(spec.p) / comp.d2.sum());
    comp.X *= scale;
    comp.d2 *= scale * scale;
    FitOptions fo = opts.fit;
    fo.lipschitz = comp.d2.maxCoeff();
    const FitResult fr = fit(comp.X, comp.y, pen, fo);
    const DfDebiasResult dr = df_debias(comp.X, comp.y, fr, pen);
    out.beta_u = beta_al + scale * dr.beta_u;
    out.tau_star = scale * scale * dr.tau;
    return out;
  }
  throw Error(ErrorCode::BadArgument, "unknown method '" + method + "'");
}

namespace {

struct TrialData {
  Matrix X;
  DesignSpectrum spec;
  Vector beta_star;
  Vector y;
};

TrialData make_trial_data(const ExperimentConfig& cfg, int trial) {
  TrialData td;
  DesignRecipe dr = cfg.design;
  dr.seed = RngStream::derive_seed(cfg.seed, "trial", static_cast<std::uint64_t>(trial));
  td.X = generate_design(dr);
  td.spec = decompose(td.X);
  SignalRecipe sr = cfg.signal;
  sr.seed = RngStream::derive_seed(dr.seed, "trial_signal");
  td.beta_star = generate_signal(sr, td.spec.p, &td.spec.O);
  const Vector eps =
      gaussian_noise(td.spec.n, cfg.sigma2, RngStream::derive_seed(dr.seed, "trial_noise"));
  td.y = td.X * td.beta_star + eps;
  return td;
}

// Runs fn(trial) over 0..trials-1 on cfg.jobs threads; outputs are collected
// per index so aggregation order never depends on scheduling.
template <typename F>
void parallel_trials(int trials, int jobs, F&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (int t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= trials) return;
        fn(t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

CalibrationSummary run_calibration(const ExperimentConfig& cfg) {
  CalibrationSummary sum;
  sum.trials_total = cfg.trials;
  sum.alpha_grid = cfg.alpha_grid;
  sum.per_trial.resize(cfg.trials);

  parallel_trials(cfg.trials, cfg.jobs, [&](int t) {
    CalibrationTrial& tr = sum.per_trial[t];
    try {
      const TrialData td = make_trial_data(cfg, t);
      const std::optional<double> s2 =
          cfg.sigma2_known ? std::optional<double>(cfg.sigma2) : std::nullopt;
      const MethodOutput mo =
          run_method(cfg.method, td.spec, td.X, td.y, cfg.penalty, cfg.j, s2);
      if (mo.tau_star <= 0.0)
        throw Error(ErrorCode::NonConvergence, "non-positive variance estimate");
      tr.std_errors = (mo.beta_u - td.beta_star) / std::sqrt(mo.tau_star);
      tr.ks = ks_statistic_normal(tr.std_errors);
      for (double alpha : cfg.alpha_grid) {
        const Vector pv = p_values(mo.beta_u, mo.tau_star);
        const auto ci = confidence_intervals(mo.beta_u, mo.tau_star, alpha);
        const CalibrationMetrics m = calibration_metrics(td.beta_star, pv, ci, alpha);
        tr.fpr.push_back(m.fpr.value_or(std::nan("")));
        tr.tpr.push_back(m.tpr.value_or(std::nan("")));
        tr.fcp.push_back(m.fcp);
      }
      tr.ok = true;
    } catch (const Error& e) {
      tr.ok = false;
      tr.error = e.what();
    }
  });

  int ok = 0;
  sum.mean_fpr.assign(cfg.alpha_grid.size(), 0.0);
  sum.mean_tpr.assign(cfg.alpha_grid.size(), 0.0);
  sum.mean_fcp.assign(cfg.alpha_grid.size(), 0.0);
  for (const auto& tr : sum.per_trial) {
    if (!tr.ok) continue;
    ++ok;
    sum.mean_ks += tr.ks;
    for (std::size_t a = 0; a < cfg.alpha_grid.size(); ++a) {
      sum.mean_fpr[a] += tr.fpr[a];
      sum.mean_tpr[a] += tr.tpr[a];
      sum.mean_fcp[a] += tr.fcp[a];
    }
  }
  sum.trials_failed = cfg.trials - ok;
  if (ok > 0) {
    sum.mean_ks /= ok;
    for (std::size_t a = 0; a < cfg.alpha_grid.size(); ++a) {
      sum.mean_fpr[a] /= ok;
      sum.mean_tpr[a] /= ok;
      sum.mean_fcp[a] /= ok;
    }
  }
  if (!cfg.output_dir.empty()) write_calibration_outputs(cfg, sum);
  return sum;
}

AlignmentSummary run_alignment_study(const ExperimentConfig& cfg) {
  if (cfg.j.indices.empty())
    throw Error(ErrorCode::BadArgument, "alignment study requires a J spec");
  AlignmentSummary sum;
  sum.trials_total = cfg.trials;
  sum.tested_pcs = cfg.j.indices;
  sum.per_trial.resize(cfg.trials);

  std::vector<bool> truly_aligned(cfg.j.indices.size(), false);
  for (std::size_t i = 0; i < cfg.j.indices.size(); ++i)
    for (std::size_t k = 0; k < cfg.signal.align_indices.size(); ++k)
      if (cfg.signal.align_indices[k] == cfg.j.indices[i] && cfg.signal.upsilon[k] != 0.0)
        truly_aligned[i] = true;

  parallel_trials(cfg.trials, cfg.jobs, [&](int t) {
    AlignmentTrial& tr = sum.per_trial[t];
    try {
      const TrialData td = make_trial_data(cfg, t);
      const std::optional<double> s2 =
          cfg.sigma2_known ? std::optional<double>(cfg.sigma2) : std::nullopt;
      const PcrResult pr = debiased_pcr(td.spec, td.X, td.y, cfg.j, cfg.penalty, s2);
      tr.pvalues_adj = bh_adjusted_pvalues(pr.align.pvalues);
      tr.reject_05 = benjamini_hochberg(pr.align.pvalues, 0.05);
      tr.reject_10 = benjamini_hochberg(pr.align.pvalues, 0.10);
      tr.angles_deg.resize(static_cast<Index>(cfg.j.indices.size()));
      const double bnorm = td.beta_star.norm();
      for (std::size_t i = 0; i < cfg.j.indices.size(); ++i) {
        const double c = (td.spec.O.row(cfg.j.indices[i]) * td.beta_star)(0) / bnorm;
        tr.angles_deg[static_cast<Index>(i)] =
            std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
      }
      tr.ok = true;
    } catch (const Error& e) {
      tr.ok = false;
      tr.error = e.what();
    }
  });

  int ok = 0;
  sum.reject_rate_05.assign(cfg.j.indices.size(), 0.0);
  sum.reject_rate_10.assign(cfg.j.indices.size(), 0.0);
  for (const auto& tr : sum.per_trial) {
    if (!tr.ok) continue;
    ++ok;
    int false_rej = 0, total_rej = 0;
    for (std::size_t i = 0; i < cfg.j.indices.size(); ++i) {
      if (tr.reject_05[i]) sum.reject_rate_05[i] += 1.0;
      if (tr.reject_10[i]) {
        sum.reject_rate_10[i] += 1.0;
        ++total_rej;
        if (!truly_aligned[i]) ++false_rej;
      }
    }
    sum.empirical_fdr_10 +=
        static_cast<double>(false_rej) / std::max(1, total_rej);
  }
  sum.trials_failed = cfg.trials - ok;
  if (ok > 0) {
    for (auto& v : sum.reject_rate_05) v /= ok;
    for (auto& v : sum.reject_rate_10) v /= ok;
    sum.empirical_fdr_10 /= ok;
  }
  if (!cfg.output_dir.empty()) write_alignment_outputs(cfg, sum);
  return sum;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

void write_calibration_outputs(const ExperimentConfig& cfg,
                               const CalibrationSummary& sum) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);

  nlohmann::json j;
  j["method"] = cfg.method;
  j["design"] = cfg.design.family;
  j["n"] = cfg.design.n;
  j["p"] = cfg.design.p;
  j["penalty"] = cfg.penalty.to_string();
  j["trials"] = sum.trials_total;
  j["trials_failed"] = sum.trials_failed;
  j["mean_ks"] = sum.mean_ks;
  j["alpha_grid"] = sum.alpha_grid;
  j["mean_fpr"] = sum.mean_fpr;
  j["mean_tpr"] = sum.mean_tpr;
  j["mean_fcp"] = sum.mean_fcp;
  std::ofstream(dir / "summary.json") << j.dump(2) << '\n';

  {
    std::ofstream out(dir / "errors_standardized.csv");
    out.precision(17);
    out << "trial,ks,errors...\n";
    for (std::size_t t = 0; t < sum.per_trial.size(); ++t) {
      const auto& tr = sum.per_trial[t];
      if (!tr.ok) continue;
      out << t << ',' << tr.ks;
      for (Index i = 0; i < tr.std_errors.size(); ++i) out << ',' << tr.std_errors[i];
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "qq.csv");
    out.precision(17);
    out << "trial,theoretical,empirical\n";
    for (std::size_t t = 0; t < sum.per_trial.size(); ++t) {
      const auto& tr = sum.per_trial[t];
      if (!tr.ok) continue;
      std::vector<double> s(tr.std_errors.data(), tr.std_errors.data() + tr.std_errors.size());
      std::sort(s.begin(), s.end());
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double q = normal_quantile((static_cast<double>(i) + 0.5) / s.size());
        out << t << ',' << q << ',' << s[i] << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "fcp_curve.csv");
    out.precision(17);
    out << "alpha,fpr,tpr,fcp\n";
    for (std::size_t a = 0; a < sum.alpha_grid.size(); ++a)
      out << sum.alpha_grid[a] << ',' << sum.mean_fpr[a] << ',' << sum.mean_tpr[a] << ','
          << sum.mean_fcp[a] << '\n';
  }
}

void write_alignment_outputs(const ExperimentConfig& cfg, const AlignmentSummary& sum) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);

  nlohmann::json j;
  j["trials"] = sum.trials_total;
  j["trials_failed"] = sum.trials_failed;
  j["tested_pcs"] = nlohmann::json::array();
  for (Index i : sum.tested_pcs) j["tested_pcs"].push_back(i + 1);
  j["reject_rate_fdr05"] = sum.reject_rate_05;
  j["reject_rate_fdr10"] = sum.reject_rate_10;
  j["empirical_fdr_10"] = sum.empirical_fdr_10;
  std::ofstream(dir / "summary.json") << j.dump(2) << '\n';

  std::ofstream out(dir / "alignment.csv");
  out.precision(17);
  out << "trial,pc,pvalue_adj,reject_fdr05,reject_fdr10,angle_deg\n";
  for (std::size_t t = 0; t < sum.per_trial.size(); ++t) {
    const auto& tr = sum.per_trial[t];
    if (!tr.ok) continue;
    for (std::size_t i = 0; i < sum.tested_pcs.size(); ++i)
      out << t << ',' << (sum.tested_pcs[i] + 1) << ',' << tr.pvalues_adj[i] << ','
          << tr.reject_05[i] << ',' << tr.reject_10[i] << ',' << tr.angles_deg[i] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  const auto& d = j.at("design");
  cfg.design = DesignRecipe::standard(d.at("family").get<std::string>(),
                                      d.at("n").get<Index>(), d.at("p").get<Index>(), 0);
  if (d.contains("rho")) cfg.design.rho = d["rho"].get<double>();
  if (d.contains("iw_dof_mult")) cfg.design.iw_dof_mult = d["iw_dof_mult"].get<double>();
  if (d.contains("identity_row_cov"))
    cfg.design.identity_row_cov = d["identity_row_cov"].get<bool>();
  if (d.contains("spike_alpha")) cfg.design.spike_alpha = d["spike_alpha"].get<double>();
  if (d.contains("spike_m")) cfg.design.spike_m = d["spike_m"].get<Index>();
  if (d.contains("spike_r")) cfg.design.spike_r = d["spike_r"].get<std::vector<double>>();
  if (d.contains("t_dof")) cfg.design.t_dof = d["t_dof"].get<double>();
  if (d.contains("var_coeffs"))
    cfg.design.var_coeffs = d["var_coeffs"].get<std::vector<double>>();

  if (j.contains("signal")) {
    const auto& s = j["signal"];
    if (s.contains("weights")) {
      cfg.signal.weights = s["weights"].get<std::vector<double>>();
      cfg.signal.means = s.at("means").get<std::vector<double>>();
      cfg.signal.sds = s.at("sds").get<std::vector<double>>();
    }
    if (s.contains("align_pcs")) {
      // 1-based PC positions in the config, 0-based internally
      for (auto v : s["align_pcs"].get<std::vector<long>>()) {
        if (v < 1) throw Error(ErrorCode::BadArgument, "config: align_pcs are 1-based");
        cfg.signal.align_indices.push_back(static_cast<Index>(v - 1));
      }
      if (s.contains("upsilon"))
        cfg.signal.upsilon = s["upsilon"].get<std::vector<double>>();
      else if (s.contains("upsilon_scale")) {
        const double c = s["upsilon_scale"].get<double>();
        cfg.signal.upsilon.assign(cfg.signal.align_indices.size(),
                                  c * std::sqrt(static_cast<double>(cfg.design.p)));
      }
      if (cfg.signal.upsilon.size() != cfg.signal.align_indices.size())
        throw Error(ErrorCode::BadArgument, "config: upsilon/align_pcs lengths differ");
    }
  }

  if (j.contains("noise_sigma2")) cfg.sigma2 = j["noise_sigma2"].get<double>();
  if (j.contains("sigma2_known")) cfg.sigma2_known = j["sigma2_known"].get<bool>();
  if (j.contains("penalty"))
    cfg.penalty = PenaltySpec::parse(j["penalty"].get<std::string>());
  if (j.contains("method")) cfg.method = j["method"].get<std::string>();
  if (j.contains("j")) cfg.j = PcSelection::parse(j["j"].get<std::string>());
  if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
  if (j.contains("alpha_grid"))
    cfg.alpha_grid = j["alpha_grid"].get<std::vector<double>>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (cfg.alpha_grid.empty()) cfg.alpha_grid = {0.05, 0.1, 0.2, 0.5, 0.9};
  return cfg;
}

} // namespace sdb
