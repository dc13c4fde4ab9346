#include "sdb/pcr.hpp"

#include <algorithm>
#include <cmath>

#include "sdb/errors.hpp"
#include "sdb/inference.hpp"

namespace sdb {

PcSelection PcSelection::top(Index k) {
  PcSelection s;
  for (Index i = 0; i < k; ++i) s.indices.push_back(i);
  return s;
}

PcSelection PcSelection::list(std::vector<Index> idx) {
  PcSelection s;
  s.indices = std::move(idx);
  return s;
}

PcSelection PcSelection::parse(const std::string& text) {
  if (text.rfind("top:", 0) == 0) {
    const long k = std::stol(text.substr(4));
    if (k < 0) throw Error(ErrorCode::BadArgument, "J spec: top:k needs k >= 0");
    return top(static_cast<Index>(k));
  }
  PcSelection s;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const long v = std::stol(text.substr(pos, next - pos));
    if (v < 1) throw Error(ErrorCode::BadArgument, "J spec: PC indices are 1-based");
    s.indices.push_back(static_cast<Index>(v - 1));
    pos = next + 1;
  }
  if (s.indices.empty())
    throw Error(ErrorCode::BadArgument, "J spec: empty index list");
  return s;
}

std::pair<Vector, Vector> alignment_pcr(const DesignSpectrum& spec, const Vector& y,
                                        const std::vector<Index>& J) {
  const Index k = static_cast<Index>(J.size());
  if (k >= spec.n && k > 0)
    throw Error(ErrorCode::BadArgument, "alignment_pcr: |J| must be smaller than n");
  for (Index j : J) {
    if (j < 0 || j >= spec.p)
      throw Error(ErrorCode::BadArgument, "alignment_pcr: index out of range");
    if (spec.d2[j] <= 0.0)
      throw Error(ErrorCode::BadArgument,
                  "alignment_pcr: J contains a zero eigenvalue (PC " +
                      std::to_string(j + 1) + ")");
  }
  // theta = (D_J^T D_J)^{-1} D_J^T Q y: a diagonal solve in the SVD basis
  const Vector Qy = spec.Q * y;
  Vector theta(k);
  for (Index i = 0; i < k; ++i) theta[i] = spec.sigma[J[i]] * Qy[J[i]] / spec.d2[J[i]];
  Vector beta_al = Vector::Zero(spec.p);
  for (Index i = 0; i < k; ++i) beta_al += theta[i] * spec.O.row(J[i]).transpose();
  return {theta, beta_al};
}

Vector alignment_pcr_gram(const Matrix& X, const DesignSpectrum& spec, const Vector& y,
                          const std::vector<Index>& J) {
  const Index k = static_cast<Index>(J.size());
  Matrix Xt(X.rows(), k);
  for (Index i = 0; i < k; ++i) Xt.col(i) = X * spec.O.row(J[i]).transpose();
  return (Xt.transpose() * Xt).ldlt().solve(Xt.transpose() * y);
}

ComplementDataset complement_dataset(const DesignSpectrum& spec, const Vector& y,
                                     const std::vector<Index>& J) {
  std::vector<bool> in_J(spec.p, false);
  for (Index j : J) in_J[j] = true;

  ComplementDataset out;
  for (Index i = 0; i < spec.p; ++i)
    if (spec.d2[i] > 0.0 && !in_J[i]) out.J_bar.push_back(i);
  const Index m = static_cast<Index>(out.J_bar.size());
  if (m == 0)
    throw Error(ErrorCode::BadArgument,
                "complement_dataset: no positive eigenvalues outside J");

  const Vector Qy = spec.Q * y;
  out.X.resize(m, spec.p);
  out.y.resize(m);
  out.d2 = Vector::Zero(spec.p);
  for (Index i = 0; i < m; ++i) {
    const Index j = out.J_bar[i];
    const double d = spec.sigma[j];
    out.X.row(i) = d * spec.O.row(j);
    // d * theta_pcr(J_bar)_i with theta = d^{-1} (Qy)_j
    out.y[i] = Qy[j];
    out.d2[i] = spec.d2[j];
  }
  return out;
}

AlignmentTest alignment_test(const Vector& theta_pcr, const Vector& d2_J, double sigma2,
                             double omega_hat, double q) {
  if (theta_pcr.size() != d2_J.size())
    throw Error(ErrorCode::DimMismatch, "alignment_test: theta and d2_J lengths differ");
  AlignmentTest out;
  out.q = q;
  out.s.resize(theta_pcr.size());
  out.pvalues.resize(theta_pcr.size());
  for (Index i = 0; i < theta_pcr.size(); ++i) {
    if (d2_J[i] <= 0.0)
      throw Error(ErrorCode::BadArgument, "alignment_test: d2_J must be positive");
    const double s2 = sigma2 / d2_J[i] + omega_hat;
    if (s2 <= 0.0)
      throw Error(ErrorCode::BadArgument, "alignment_test: non-positive variance");
    out.s[i] = std::sqrt(s2);
    out.pvalues[i] = 2.0 - 2.0 * normal_cdf(std::abs(theta_pcr[i] / out.s[i]));
  }
  out.bh_rejected = benjamini_hochberg(out.pvalues, q);
  return out;
}

PcrResult debiased_pcr(const DesignSpectrum& spec, const Matrix& X, const Vector& y,
                       const PcSelection& sel, const PenaltySpec& pen,
                       std::optional<double> sigma2, const DebiasOptions& opts,
                       double bh_q) {
  if (X.rows() != spec.n || X.cols() != spec.p || y.size() != spec.n)
    throw Error(ErrorCode::DimMismatch, "debiased_pcr: spectrum does not match X, y");
  PcrResult out;
  out.J = sel.indices;

  auto [theta, beta_al] = alignment_pcr(spec, y, out.J);
  out.theta_pcr = theta;
  out.beta_al = beta_al;

  ComplementDataset comp = complement_dataset(spec, y, out.J);

  // The complement design is renormalized to unit mean eigenvalue before the
  // penalty applies, and the estimate mapped back. Without this, removing
  // dominant PCs leaves a spectrum whose scale is set by the discarded
  // spikes, and a fixed penalty degenerates the complement fit.
  const double mean_eig = comp.d2.sum() / static_cast<double>(spec.p);
  const double scale = 1.0 / std::sqrt(mean_eig);
  comp.X *= scale;
  comp.d2 *= scale * scale;
  out.complement_scale = scale;

  FitOptions fo = opts.fit;
  fo.lipschitz = comp.d2.maxCoeff();
  FitResult fr = fit(comp.X, comp.y, pen, fo);
  out.complement = debias(comp.X, comp.y, fr, pen, comp.d2, sigma2, opts);

  out.beta_co = scale * out.complement.beta_u;
  out.beta_pcr = out.beta_al + out.beta_co;
  out.tau_star = scale * scale * out.complement.tau_star;

  out.omega_hat =
      out.beta_co.squaredNorm() / static_cast<double>(spec.p) - out.tau_star;
  if (out.omega_hat < 0.0) {
    out.omega_hat = 0.0;
    out.omega_clamped = true;
  }

  if (!out.J.empty()) {
    Vector d2_J(static_cast<Index>(out.J.size()));
    for (std::size_t i = 0; i < out.J.size(); ++i) d2_J[i] = spec.d2[out.J[i]];
    try {
      out.align = alignment_test(out.theta_pcr, d2_J, out.complement.sigma2,
                                 out.omega_hat, bh_q);
    } catch (const Error&) {
      // degenerate when both variance terms vanish (e.g. noiseless data with
      // no complement signal); the estimator itself is still valid
      out.complement.flags.push_back("alignment_test_degenerate");
    }
  }
  return out;
}

} // namespace sdb
