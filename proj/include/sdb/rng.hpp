#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "sdb/types.hpp"

namespace sdb {

// Deterministic random stream. Distributions are implemented here rather
// than with std::*_distribution, whose output is implementation-defined;
// identical (seed, stream, index) therefore gives bit-identical draws on any
// platform. Streams are derived by hashing a name and counter into the seed,
// so conditioning experiments (fixed signal, resampled noise) stay
// reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  static std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                                   std::uint64_t index = 0);
  static RngStream derive(std::uint64_t seed, std::string_view name,
                          std::uint64_t index = 0) {
    return RngStream(derive_seed(seed, name, index));
  }

  std::uint64_t next_u64() { return eng_(); }

  // uniform on (0, 1), endpoints excluded
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal();
  double gamma(double shape);  // unit scale
  double chi2(double df) { return 2.0 * gamma(0.5 * df); }

  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Haar-distributed p x p orthogonal matrix: QR of a Gaussian matrix with the
// R diagonal signs folded into Q.
Matrix haar_orthogonal(Index p, RngStream& rng);
Matrix haar_orthogonal(Index p, std::uint64_t seed);

// First m columns of a Haar matrix (thin QR of a Gaussian p x m block).
Matrix haar_columns(Index p, Index m, RngStream& rng);

} // namespace sdb
