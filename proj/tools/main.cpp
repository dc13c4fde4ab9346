// Command-line workbench: fit, debias, pcr-debias, align-test, fixed-point,
// simulate, experiment.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#include "sdb/debias.hpp"
#include "sdb/designs.hpp"
#include "sdb/errors.hpp"
#include "sdb/experiments.hpp"
#include "sdb/inference.hpp"
#include "sdb/io.hpp"
#include "sdb/pcr.hpp"
#include "sdb/vamp.hpp"

namespace {

using nlohmann::json;

struct CommonIo {
  std::string x_path, y_path, out_path;
  bool header = false;
  std::string format = "json";
};

void add_io(CLI::App* cmd, CommonIo& io, bool need_y = true) {
  cmd->add_option("--x", io.x_path, "design matrix CSV or .bin")->required();
  if (need_y) cmd->add_option("--y", io.y_path, "response CSV")->required();
  cmd->add_option("--out", io.out_path, "output path (default stdout)");
  cmd->add_flag("--header", io.header, "CSV inputs carry a header row");
  cmd->add_option("--format", io.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

void emit(const CommonIo& io, const json& j) {
  if (io.out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(io.out_path);
    if (!out) throw sdb::Error(sdb::ErrorCode::Io, "cannot write '" + io.out_path + "'");
    out << j.dump(2) << '\n';
  }
}

int default_jobs() {
  if (const char* env = std::getenv("SPECTRUM_DEBIAS_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum-aware debiasing workbench for regularized regression"};
  app.require_subcommand(1);

  // ---- fit ----
  CommonIo fit_io;
  std::string fit_pen = "en:1.0,0.1";
  double fit_tol = 1e-9;
  int fit_max_iter = 50000;
  auto* cmd_fit = app.add_subcommand("fit", "regularized estimator only");
  add_io(cmd_fit, fit_io);
  cmd_fit->add_option("--penalty", fit_pen, "ridge:l2 | lasso:l1 | en:l1,l2");
  cmd_fit->add_option("--tol", fit_tol, "KKT residual target");
  cmd_fit->add_option("--max-iter", fit_max_iter);

  // ---- debias ----
  CommonIo de_io;
  std::string de_pen = "en:1.0,0.1";
  double de_sigma2 = -1.0;
  double de_alpha = 0.05;
  auto* cmd_de = app.add_subcommand("debias", "spectrum-aware debiased estimator");
  add_io(cmd_de, de_io);
  cmd_de->add_option("--penalty", de_pen);
  cmd_de->add_option("--sigma2", de_sigma2, "known noise level (estimated when absent)");
  cmd_de->add_option("--alpha", de_alpha, "level for the CSV inference report");

  // ---- pcr-debias ----
  CommonIo pcr_io;
  std::string pcr_pen = "en:1.0,0.1";
  std::string pcr_j;
  double pcr_sigma2 = -1.0;
  double pcr_q = 0.1;
  auto* cmd_pcr = app.add_subcommand("pcr-debias", "PCR + spectrum-aware debiasing");
  add_io(cmd_pcr, pcr_io);
  cmd_pcr->add_option("--penalty", pcr_pen);
  cmd_pcr->add_option("--j", pcr_j, "PC set: top:k or 1-based list, e.g. 2,4,6")->required();
  cmd_pcr->add_option("--sigma2", pcr_sigma2);
  cmd_pcr->add_option("--q", pcr_q, "FDR level for the alignment test");

  // ---- align-test ----
  CommonIo al_io;
  std::string al_pen = "en:1.0,0.1";
  std::string al_j;
  double al_sigma2 = -1.0;
  double al_q = 0.1;
  auto* cmd_al = app.add_subcommand("align-test", "PC-signal alignment test");
  add_io(cmd_al, al_io);
  cmd_al->add_option("--penalty", al_pen);
  cmd_al->add_option("--j", al_j, "PC set to test")->required();
  cmd_al->add_option("--sigma2", al_sigma2);
  cmd_al->add_option("--q", al_q, "FDR level");

  // ---- fixed-point ----
  std::string fp_pen = "en:1.0,0.1";
  std::string fp_spectrum;
  std::string fp_prior;
  std::string fp_out;
  double fp_sigma2 = 1.0;
  Eigen::Index fp_draws = 200000;
  auto* cmd_fp = app.add_subcommand("fixed-point", "population fixed-point oracle");
  cmd_fp->add_option("--spectrum", fp_spectrum, "CSV of eigenvalue samples")->required();
  cmd_fp->add_option("--prior", fp_prior, "CSV of signal prior samples")->required();
  cmd_fp->add_option("--penalty", fp_pen);
  cmd_fp->add_option("--sigma2", fp_sigma2);
  cmd_fp->add_option("--draws", fp_draws, "Monte Carlo draws");
  cmd_fp->add_option("--out", fp_out);

  // ---- simulate ----
  std::string sim_family = "matrix_normal";
  Eigen::Index sim_n = 0, sim_p = 0;
  std::uint64_t sim_seed = 1;
  double sim_sigma2 = 1.0;
  std::string sim_prefix = "sim";
  bool sim_binary = false;
  auto* cmd_sim = app.add_subcommand("simulate", "generate a design/signal/response triple");
  cmd_sim->add_option("--family", sim_family);
  cmd_sim->add_option("--n", sim_n)->required();
  cmd_sim->add_option("--p", sim_p)->required();
  cmd_sim->add_option("--seed", sim_seed);
  cmd_sim->add_option("--sigma2", sim_sigma2);
  cmd_sim->add_option("--prefix", sim_prefix, "output file prefix");
  cmd_sim->add_flag("--binary", sim_binary, "write X in the binary matrix format");

  // ---- experiment ----
  std::string exp_config;
  std::uint64_t exp_seed = 0;
  int exp_jobs = default_jobs();
  auto* cmd_exp = app.add_subcommand("experiment", "Monte Carlo calibration/alignment study");
  cmd_exp->add_option("--config", exp_config, "TOML or JSON recipe")->required();
  cmd_exp->add_option("--seed", exp_seed, "overrides the recipe seed");
  cmd_exp->add_option("--jobs", exp_jobs, "trial parallelism");

  try {
    app.parse(argc, argv);

    if (*cmd_fit) {
      const sdb::Matrix X = sdb::read_matrix(fit_io.x_path, fit_io.header);
      const sdb::Vector y = sdb::read_vector(fit_io.y_path, fit_io.header);
      sdb::FitOptions fo;
      fo.tol = fit_tol;
      fo.max_iter = fit_max_iter;
      const sdb::FitResult fr = sdb::fit(X, y, sdb::PenaltySpec::parse(fit_pen), fo);
      json j;
      j["beta_hat"] = std::vector<double>(fr.beta_hat.data(), fr.beta_hat.data() + fr.beta_hat.size());
      j["iterations"] = fr.iterations;
      j["kkt_residual"] = fr.kkt_residual;
      j["objective"] = fr.objective;
      j["converged"] = fr.converged;
      emit(fit_io, j);
    } else if (*cmd_de) {
      const sdb::Matrix X = sdb::read_matrix(de_io.x_path, de_io.header);
      const sdb::Vector y = sdb::read_vector(de_io.y_path, de_io.header);
      std::optional<double> s2;
      if (de_sigma2 >= 0.0) s2 = de_sigma2;
      const sdb::DebiasResult r = sdb::debias(X, y, sdb::PenaltySpec::parse(de_pen), s2);
      if (de_io.format == "csv") {
        const sdb::Vector pv = sdb::p_values(r.beta_u, r.tau_star);
        const auto ci = sdb::confidence_intervals(r.beta_u, r.tau_star, de_alpha);
        const std::string path = de_io.out_path.empty() ? "inference.csv" : de_io.out_path;
        sdb::write_inference_csv(path, r.beta_u, pv, ci, de_alpha);
      } else {
        emit(de_io, sdb::to_json(r));
      }
    } else if (*cmd_pcr) {
      const sdb::Matrix X = sdb::read_matrix(pcr_io.x_path, pcr_io.header);
      const sdb::Vector y = sdb::read_vector(pcr_io.y_path, pcr_io.header);
      std::optional<double> s2;
      if (pcr_sigma2 >= 0.0) s2 = pcr_sigma2;
      const sdb::DesignSpectrum spec = sdb::decompose(X);
      const sdb::PcrResult r =
          sdb::debiased_pcr(spec, X, y, sdb::PcSelection::parse(pcr_j),
                            sdb::PenaltySpec::parse(pcr_pen), s2, {}, pcr_q);
      emit(pcr_io, sdb::to_json(r));
    } else if (*cmd_al) {
      const sdb::Matrix X = sdb::read_matrix(al_io.x_path, al_io.header);
      const sdb::Vector y = sdb::read_vector(al_io.y_path, al_io.header);
      std::optional<double> s2;
      if (al_sigma2 >= 0.0) s2 = al_sigma2;
      const sdb::DesignSpectrum spec = sdb::decompose(X);
      const sdb::PcrResult r =
          sdb::debiased_pcr(spec, X, y, sdb::PcSelection::parse(al_j),
                            sdb::PenaltySpec::parse(al_pen), s2, {}, al_q);
      json j;
      j["J"] = json::array();
      for (auto i : r.J) j["J"].push_back(i + 1);
      j["theta_pcr"] = std::vector<double>(r.theta_pcr.data(), r.theta_pcr.data() + r.theta_pcr.size());
      j["s"] = std::vector<double>(r.align.s.data(), r.align.s.data() + r.align.s.size());
      j["pvalues"] = std::vector<double>(r.align.pvalues.data(), r.align.pvalues.data() + r.align.pvalues.size());
      const sdb::Vector adj = sdb::bh_adjusted_pvalues(r.align.pvalues);
      j["pvalues_bh_adjusted"] = std::vector<double>(adj.data(), adj.data() + adj.size());
      j["bh_rejected"] = r.align.bh_rejected;
      j["q"] = r.align.q;
      j["omega_hat"] = r.omega_hat;
      j["sigma2"] = r.complement.sigma2;
      emit(al_io, j);
    } else if (*cmd_fp) {
      const sdb::Vector spectrum = sdb::read_vector(fp_spectrum);
      const sdb::Vector prior = sdb::read_vector(fp_prior);
      sdb::FixedPointOptions opts;
      opts.mc_draws = fp_draws;
      const sdb::FixedPoint fp = sdb::solve_fixed_point(
          spectrum, prior, fp_sigma2, sdb::PenaltySpec::parse(fp_pen), opts);
      CommonIo io;
      io.out_path = fp_out;
      emit(io, sdb::to_json(fp));
    } else if (*cmd_sim) {
      const sdb::DesignRecipe recipe =
          sdb::DesignRecipe::standard(sim_family, sim_n, sim_p, sim_seed);
      const sdb::Matrix X = sdb::generate_design(recipe);
      const sdb::DesignSpectrum spec = sdb::decompose(X);
      sdb::SignalRecipe sig = sdb::SignalRecipe::fig_mixture(
          sdb::RngStream::derive_seed(sim_seed, "trial_signal"));
      const sdb::Vector beta = sdb::generate_signal(sig, sim_p, &spec.O);
      const sdb::Vector y =
          X * beta + sdb::gaussian_noise(sim_n, sim_sigma2,
                                         sdb::RngStream::derive_seed(sim_seed, "trial_noise"));
      if (sim_binary)
        sdb::write_matrix_binary(sim_prefix + "_X.bin", X);
      else
        sdb::write_matrix_csv(sim_prefix + "_X.csv", X);
      sdb::write_vector_csv(sim_prefix + "_beta.csv", beta);
      sdb::write_vector_csv(sim_prefix + "_y.csv", y);
      std::cout << "wrote " << sim_prefix << "_{X,beta,y}" << '\n';
    } else if (*cmd_exp) {
      json cfg_json = sdb::load_config(exp_config);
      sdb::ExperimentConfig cfg = sdb::ExperimentConfig::from_json(cfg_json);
      if (cmd_exp->count("--seed") > 0) cfg.seed = exp_seed;
      if (cfg.jobs <= 1) cfg.jobs = exp_jobs;
      json j;
      const bool alignment_study =
          cfg_json.contains("study") && cfg_json["study"] == "alignment";
      if (alignment_study) {
        const sdb::AlignmentSummary s = sdb::run_alignment_study(cfg);
        j["trials"] = s.trials_total;
        j["trials_failed"] = s.trials_failed;
        j["reject_rate_fdr10"] = s.reject_rate_10;
        j["empirical_fdr_10"] = s.empirical_fdr_10;
      } else {
        const sdb::CalibrationSummary s = sdb::run_calibration(cfg);
        j["trials"] = s.trials_total;
        j["trials_failed"] = s.trials_failed;
        j["mean_ks"] = s.mean_ks;
        j["alpha_grid"] = s.alpha_grid;
        j["mean_fcp"] = s.mean_fcp;
      }
      std::cout << j.dump(2) << '\n';
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    json err;
    err["error"] = {{"code", "BAD_ARGS"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const sdb::Error& e) {
    json err;
    err["error"] = {{"code", sdb::error_code_name(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"code", "INTERNAL"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  }
}
