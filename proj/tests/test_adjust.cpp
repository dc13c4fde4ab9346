#include <doctest.h>

#include <cmath>
#include <limits>

#include "sdb/adjust.hpp"
#include "sdb/designs.hpp"
#include "sdb/errors.hpp"
#include "sdb/rng.hpp"

using namespace sdb;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

// Closed-form ridge adjustment:
// adj = ( ((1/p) sum l2 d^2/(d^2+l2))^{-1} - 1/l2 )^{-1}
double ridge_adjustment_closed_form(const Vector& d2, double l2) {
  double s = 0.0;
  for (Index i = 0; i < d2.size(); ++i) s += l2 * d2[i] / (d2[i] + l2);
  s /= static_cast<double>(d2.size());
  return 1.0 / (1.0 / s - 1.0 / l2);
}
}  // namespace

TEST_CASE("g_p: constant spectrum and all-infinite h''") {
  Vector d2 = Vector::Constant(6, 2.3);
  Vector hpp = Vector::Constant(6, 0.4);
  AdjustmentProblem prob(d2, hpp);
  CHECK(g_p(prob, 2.3) == doctest::Approx(1.0).epsilon(1e-15));

  Vector hinf = Vector::Constant(6, kInf);
  AdjustmentProblem pinf(d2, hinf);
  for (double g : {0.5, 1.0, 3.0}) CHECK(g_p(pinf, g) == doctest::Approx(1.0));
  CHECK_THROWS_AS(solve_adjustment(pinf), Error);
}

TEST_CASE("g_p hits the ridge closed form at the closed-form root") {
  RngStream rng(17);
  const Index p = 100;
  Vector d2 = rng.normal_vector(p).array().square() + 0.05;
  const double l2 = 0.7;
  const double adj = ridge_adjustment_closed_form(d2, l2);
  AdjustmentProblem prob(d2, Vector::Constant(p, l2));
  CHECK(std::abs(g_p(prob, adj) - 1.0) <= 1e-10);
}

TEST_CASE("solve_adjustment: ridge oracle, p = 200") {
  RngStream rng(23);
  const Index p = 200;
  Vector d2 = rng.normal_vector(p).array().square() + 0.01;
  const double l2 = 0.3;
  AdjustmentProblem prob(d2, Vector::Constant(p, l2));
  const double adj = solve_adjustment(prob);
  const double closed = ridge_adjustment_closed_form(d2, l2);
  CHECK(std::abs(adj - closed) / closed <= 1e-8);
}

TEST_CASE("solve_adjustment: constant spectrum is exact") {
  Vector d2 = Vector::Constant(40, 1.7);
  AdjustmentProblem ridge_prob(d2, Vector::Constant(40, 0.5));
  CHECK(solve_adjustment(ridge_prob) == doctest::Approx(1.7).epsilon(1e-12));

  // elastic net h'': lambda2 on the support, +inf off it
  Vector hpp = Vector::Constant(40, 0.1);
  for (Index j = 0; j < 15; ++j) hpp[j] = kInf;
  AdjustmentProblem en_prob(d2, hpp);
  CHECK(solve_adjustment(en_prob) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("elastic net: specialized formula agrees with the generic root") {
  // specialized form: m(gamma) = (s/p) / (gamma + lambda2)
  RngStream rng(41);
  const Index p = 150, s = 60;
  Vector d2 = rng.normal_vector(p).array().square() + 0.02;
  const double l2 = 0.25;
  Vector hpp = Vector::Constant(p, kInf);
  for (Index j = 0; j < s; ++j) hpp[j] = l2;
  AdjustmentProblem generic(d2, hpp);
  const double root = solve_adjustment(generic);

  const auto g_special = [&](double gamma) {
    const double m = (double(s) / p) / (gamma + l2);
    double acc = 0.0;
    for (Index i = 0; i < p; ++i) acc += 1.0 / ((d2[i] - gamma) * m + 1.0);
    return acc / p;
  };
  // bisection on the specialized equation
  double lo = 1e-8, hi = d2.maxCoeff();
  while (hi - lo > 1e-14 * d2.mean()) {
    const double mid = 0.5 * (lo + hi);
    (g_special(mid) < 1.0 ? lo : hi) = mid;
  }
  CHECK(std::abs(root - 0.5 * (lo + hi)) <= 1e-10 * std::max(1.0, root));
}

TEST_CASE("g_p strict monotonicity on random certified instances") {
  RngStream rng(53);
  for (int rep = 0; rep < 50; ++rep) {
    const Index p = 30;
    Vector d2 = rng.normal_vector(p).array().square();
    Vector hpp(p);
    for (Index j = 0; j < p; ++j) {
      const double u = rng.uniform();
      hpp[j] = u < 0.3 ? kInf : (u < 0.6 ? 0.0 : std::abs(rng.normal()));
    }
    AdjustmentProblem prob(d2, hpp);
    if (!prob.certificate_holds()) continue;
    double prev = g_p(prob, 0.05);
    for (double gamma = 0.3; gamma < 4.0; gamma += 0.25) {
      const double g = g_p(prob, gamma);
      CHECK(g > prev);
      prev = g;
    }
  }
}

TEST_CASE("root bracketing: g_p(eps) < 1 < g_p(max+1)") {
  RngStream rng(59);
  const Index p = 80;
  Vector d2 = rng.normal_vector(p).array().square() + 0.1;
  Vector hpp = Vector::Constant(p, 0.3);
  for (Index j = 0; j < 20; ++j) hpp[j] = kInf;
  AdjustmentProblem prob(d2, hpp);
  CHECK(g_p(prob, 1e-8) < 1.0);
  CHECK(g_p(prob, d2.maxCoeff() + 1.0) > 1.0);
}

TEST_CASE("solver idempotence: <= 2 Newton steps from the returned root") {
  RngStream rng(61);
  const Index p = 120;
  Vector d2 = rng.normal_vector(p).array().square() + 0.05;
  Vector hpp = Vector::Constant(p, 0.2);
  for (Index j = 0; j < 30; ++j) hpp[j] = kInf;
  AdjustmentProblem prob(d2, hpp);
  double gamma = solve_adjustment(prob);
  for (int step = 0; step < 2; ++step) {
    if (std::abs(g_p(prob, gamma) - 1.0) <= 1e-12) break;
    gamma -= (g_p(prob, gamma) - 1.0) / g_p_deriv(prob, gamma);
  }
  CHECK(std::abs(g_p(prob, gamma) - 1.0) <= 1e-12);
}

TEST_CASE("certificate failures identify the broken condition") {
  // all h'' infinite
  Vector d2 = Vector::Constant(4, 1.0);
  CHECK_THROWS_WITH_AS(solve_adjustment(AdjustmentProblem(d2, Vector::Constant(4, kInf))),
                       doctest::Contains("infinite"), Error);

  // lasso-style: zeros in h'', singular spectrum, ||d||_0 + ||h''||_0 <= p
  Vector d2z(4);
  d2z << 2.0, 1.0, 0.0, 0.0;
  Vector hpp(4);
  hpp << 0.0, 0.0, kInf, kInf;
  CHECK_THROWS_WITH_AS(solve_adjustment(AdjustmentProblem(d2z, hpp)),
                       doctest::Contains("not uniquely solvable"), Error);
}

TEST_CASE("df adjustments") {
  CHECK(df_adjustment_ridge(Vector::Zero(5), 1.0, 5) == doctest::Approx(1.0));
  CHECK(df_adjustment_ridge(Vector::Ones(6), 1.0, 6) == doctest::Approx(0.5));
  CHECK(df_adjustment_lasso(0, 10) == doctest::Approx(1.0));
  CHECK(df_adjustment_lasso(5, 10) == doctest::Approx(0.5));
  CHECK_THROWS_AS(df_adjustment_lasso(10, 10), Error);

  // under Marchenko-Pastur the DF and spectrum-aware ridge adjustments agree
  const double delta = 2.0;
  const Index m = 50000;
  const Vector d2 = sample_marchenko_pastur(m, delta, 123);
  const double l2 = 0.3;
  const Index n = static_cast<Index>(delta * m);
  const double df = df_adjustment_ridge(d2, l2, n);
  const double sa = solve_adjustment(AdjustmentProblem(d2, Vector::Constant(m, l2)));
  CHECK(std::abs(df - sa) / sa <= 0.02);
}
