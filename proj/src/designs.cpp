#include "sdb/designs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "sdb/errors.hpp"
#include "sdb/spectral.hpp"

namespace sdb {

// ---------------------------------------------------------------------------
// RngStream
// ---------------------------------------------------------------------------

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

std::uint64_t RngStream::derive_seed(std::uint64_t seed, std::string_view name,
                                     std::uint64_t index) {
  std::uint64_t h = splitmix64(seed ^ fnv1a(name));
  return splitmix64(h ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on open-interval uniforms
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double RngStream::gamma(double shape) {
  if (shape <= 0.0) throw Error(ErrorCode::BadArgument, "gamma: shape must be positive");
  if (shape < 1.0) {
    // boost to shape + 1, then scale back
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

Vector RngStream::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Matrix RngStream::normal_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Matrix haar_orthogonal(Index p, RngStream& rng) {
  if (p < 1) throw Error(ErrorCode::BadArgument, "haar_orthogonal: p must be >= 1");
  const Matrix G = rng.normal_matrix(p, p);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

Matrix haar_orthogonal(Index p, std::uint64_t seed) {
  RngStream rng(seed);
  return haar_orthogonal(p, rng);
}

Matrix haar_columns(Index p, Index m, RngStream& rng) {
  if (m > p)
    throw Error(ErrorCode::BadArgument, "haar_columns: cannot retain more columns than rows");
  const Matrix G = rng.normal_matrix(p, m);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(p, m);
  const Matrix R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Index j = 0; j < m; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

// ---------------------------------------------------------------------------
// Design families
// ---------------------------------------------------------------------------

namespace {

// Bartlett factor L of Wishart(I_p, dof); the inverse-Wishart square root is
// then the triangular solve against L^T.
Matrix bartlett_lower(Index p, double dof, RngStream& rng) {
  Matrix L = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    L(i, i) = std::sqrt(rng.chi2(dof - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) L(i, j) = rng.normal();
  }
  return L;
}

Matrix ar1_cholesky(Index n, double rho) {
  Matrix S(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) S(i, j) = std::pow(rho, std::abs(double(i - j)));
  return Eigen::LLT<Matrix>(S).matrixL();
}

Matrix gen_matrix_normal(const DesignRecipe& r, RngStream& rng) {
  Matrix G = rng.normal_matrix(r.n, r.p);
  if (r.rho != 0.0) G = ar1_cholesky(r.n, r.rho) * G;
  if (!r.identity_row_cov) {
    const Matrix L = bartlett_lower(r.p, r.iw_dof_mult * static_cast<double>(r.p), rng);
    // right-multiply by L^{-1}: row covariance (L L^T)^{-1} ~ inverse-Wishart
    G = L.transpose()
            .triangularView<Eigen::Upper>()
            .solve(G.transpose())
            .transpose();
  }
  return G;
}

Matrix gen_spiked(const DesignRecipe& r, RngStream& rng) {
  std::vector<double> mags = r.spike_r;
  if (mags.empty()) mags.assign(r.spike_m, r.spike_alpha);
  const Index m = static_cast<Index>(mags.size());
  const Matrix V = haar_columns(r.n, m, rng);
  const Matrix W = haar_columns(r.p, m, rng);
  // low-rank structure on top of an n^{-1}-variance Gaussian bulk
  Matrix X = rng.normal_matrix(r.n, r.p) / std::sqrt(static_cast<double>(r.n));
  for (Index k = 0; k < m; ++k) X += mags[k] * V.col(k) * W.col(k).transpose();
  return X;
}

Matrix gen_lnn(const DesignRecipe& r, RngStream& rng, bool power_variant) {
  if (power_variant) {
    // X1^power * X2
    const Matrix X1 = rng.normal_matrix(r.n, r.n);
    Matrix P = X1;
    for (int k = 1; k < r.lnn_power; ++k) P = P * X1;
    return P * rng.normal_matrix(r.n, r.p);
  }
  Matrix P = rng.normal_matrix(r.n, r.n);
  for (int k = 2; k < r.lnn_factors; ++k) P = P * rng.normal_matrix(r.n, r.n);
  return P * rng.normal_matrix(r.n, r.p);
}

Matrix gen_var(const DesignRecipe& r, RngStream& rng) {
  Matrix U = Matrix::Identity(r.p, r.p);
  if (!r.identity_row_cov) {
    const Matrix B = bartlett_lower(r.p, r.iw_dof_mult * static_cast<double>(r.p), rng);
    // B^{-T} is a square root of the inverse-Wishart covariance (B B^T)^{-1}
    U = B.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(r.p, r.p));
  }
  const int tau = static_cast<int>(r.var_coeffs.size());
  Matrix X(r.n, r.p);
  for (Index i = 0; i < r.n; ++i) {
    Eigen::RowVectorXd row = (U * rng.normal_vector(r.p)).transpose();
    for (int k = 1; k <= tau && k <= i; ++k)
      row += r.var_coeffs[k - 1] * X.row(i - k);
    X.row(i) = row;
  }
  return X;
}

Matrix gen_mult_t(const DesignRecipe& r, RngStream& rng) {
  Matrix X(r.n, r.p);
  const double df = r.t_dof;
  for (Index i = 0; i < r.n; ++i) {
    const double w = rng.chi2(df);
    X.row(i) = rng.normal_vector(r.p).transpose() * std::sqrt(df / w);
  }
  return X;
}

}  // namespace

DesignRecipe DesignRecipe::standard(const std::string& family, Index n, Index p,
                                    std::uint64_t seed) {
  DesignRecipe r;
  r.family = family;
  r.n = n;
  r.p = p;
  r.seed = seed;
  if (family == "matrix_normal") {
    r.rho = 0.5;
    r.iw_dof_mult = 1.1;
  } else if (family == "matrix_normal_b") {
    r.rho = 0.9;
    r.iw_dof_mult = 1.002;
  } else if (family == "spiked") {
    r.spike_alpha = 10.0;
    r.spike_m = 50;
  } else if (family == "spiked_b") {
    r.spike_r = {500.0, 250.0, 50.0};
  } else if (family == "lnn") {
    r.lnn_factors = 4;
    r.lnn_power = 0;
  } else if (family == "lnn_b") {
    r.lnn_power = 15;
  } else if (family == "var") {
    r.var_coeffs = {0.4, 0.08, 0.04};
    r.iw_dof_mult = 1.1;
  } else if (family == "var_b") {
    r.var_coeffs = {0.7, 0.14, 0.07};
    r.iw_dof_mult = 1.1;
  } else if (family == "mult_t") {
    r.t_dof = 3.0;
  } else if (family == "mult_cauchy") {
    r.t_dof = 1.0;
  } else {
    throw Error(ErrorCode::BadArgument, "unknown design family '" + family + "'");
  }
  return r;
}

Matrix generate_design(const DesignRecipe& recipe) {
  if (recipe.n < 1 || recipe.p < 1)
    throw Error(ErrorCode::BadArgument, "generate_design: invalid dimensions");
  RngStream rng = RngStream::derive(recipe.seed, "design");

  Matrix X;
  const std::string& f = recipe.family;
  if (f == "matrix_normal" || f == "matrix_normal_b")
    X = gen_matrix_normal(recipe, rng);
  else if (f == "spiked" || f == "spiked_b")
    X = gen_spiked(recipe, rng);
  else if (f == "lnn" || f == "lnn_b")
    X = gen_lnn(recipe, rng, f == "lnn_b");
  else if (f == "var" || f == "var_b")
    X = gen_var(recipe, rng);
  else if (f == "mult_t" || f == "mult_cauchy")
    X = gen_mult_t(recipe, rng);
  else
    throw Error(ErrorCode::BadArgument, "unknown design family '" + f + "'");

  if (recipe.rescale) X = rescale_unit_mean_eig(X).first;
  return X;
}

SignalRecipe SignalRecipe::fig_mixture(std::uint64_t seed) {
  SignalRecipe s;
  s.seed = seed;
  return s;
}

Vector generate_signal(const SignalRecipe& recipe, Index p, const Matrix* O) {
  const std::size_t k = recipe.weights.size();
  if (recipe.means.size() != k || recipe.sds.size() != k)
    throw Error(ErrorCode::BadArgument, "generate_signal: mixture spec lengths differ");
  double wsum = 0.0;
  for (double w : recipe.weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-12)
    throw Error(ErrorCode::BadArgument, "generate_signal: mixture weights must sum to 1");

  RngStream rng = RngStream::derive(recipe.seed, "signal");
  Vector beta = Vector::Zero(p);
  for (Index i = 0; i < p; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t comp = k - 1;
    for (std::size_t c = 0; c < k; ++c) {
      acc += recipe.weights[c];
      if (u <= acc) {
        comp = c;
        break;
      }
    }
    const double z = rng.normal();  // drawn unconditionally to keep streams aligned
    beta[i] = recipe.means[comp] + recipe.sds[comp] * z;
  }

  if (!recipe.align_indices.empty()) {
    if (O == nullptr)
      throw Error(ErrorCode::BadArgument, "generate_signal: alignment requires the right basis O");
    if (recipe.upsilon.size() != recipe.align_indices.size())
      throw Error(ErrorCode::BadArgument, "generate_signal: upsilon/indices lengths differ");
    for (std::size_t kidx = 0; kidx < recipe.align_indices.size(); ++kidx) {
      const Index j = recipe.align_indices[kidx];
      if (j < 0 || j >= O->rows())
        throw Error(ErrorCode::BadArgument, "generate_signal: alignment index out of range");
      beta += recipe.upsilon[kidx] * O->row(j).transpose();
    }
  }
  return beta;
}

Vector gaussian_noise(Index n, double sigma2, std::uint64_t seed) {
  if (sigma2 < 0.0) throw Error(ErrorCode::BadArgument, "gaussian_noise: negative variance");
  RngStream rng = RngStream::derive(seed, "noise");
  return std::sqrt(sigma2) * rng.normal_vector(n);
}

// ---------------------------------------------------------------------------
// Marchenko-Pastur reference law
// ---------------------------------------------------------------------------

Vector sample_marchenko_pastur(Index count, double delta, std::uint64_t seed) {
  if (delta <= 0.0) throw Error(ErrorCode::BadArgument, "sample_mp: delta must be positive");
  const double y = 1.0 / delta;  // p / n
  const double a = (1.0 - std::sqrt(y)) * (1.0 - std::sqrt(y));
  const double b = (1.0 + std::sqrt(y)) * (1.0 + std::sqrt(y));
  const double atom = std::max(0.0, 1.0 - 1.0 / y);
  const auto density = [&](double x) {
    return std::sqrt(std::max(0.0, (b - x) * (x - a))) / (2.0 * M_PI * y * x);
  };
  double fmax = 0.0;
  for (int i = 1; i < 4096; ++i)
    fmax = std::max(fmax, density(a + (b - a) * i / 4096.0));
  fmax *= 1.05;

  RngStream rng = RngStream::derive(seed, "mp");
  Vector out(count);
  for (Index i = 0; i < count; ++i) {
    if (atom > 0.0 && rng.uniform() < atom) {
      out[i] = 0.0;
      continue;
    }
    for (;;) {
      const double x = a + (b - a) * rng.uniform();
      if (rng.uniform() * fmax <= density(x)) {
        out[i] = x;
        break;
      }
    }
  }
  return out;
}

double marchenko_pastur_cauchy(double delta, double z) {
  if (z <= 0.0) throw Error(ErrorCode::BadArgument, "mp_cauchy: z must be positive");
  const double y = 1.0 / delta;
  const double disc = (z + y + 1.0) * (z + y + 1.0) - 4.0 * y;
  return (std::sqrt(disc) - (1.0 - y + z)) / (2.0 * y * z);
}

} // namespace sdb
