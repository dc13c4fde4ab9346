#include <doctest.h>

#include <cmath>
#include <limits>

#include "sdb/errors.hpp"
#include "sdb/penalty.hpp"
#include "sdb/rng.hpp"

using namespace sdb;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("prox: soft-threshold and ridge shrink") {
  const PenaltySpec l1 = PenaltySpec::elastic_net(1.0, 0.0);
  CHECK(l1.prox(1.0, 2.0) == doctest::Approx(1.0));
  CHECK(l1.prox(1.0, 0.5) == 0.0);
  CHECK(l1.prox(1.0, -2.0) == doctest::Approx(-1.0));

  const PenaltySpec l2 = PenaltySpec::elastic_net(0.0, 1.0);
  CHECK(l2.prox(1.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("prox minimizes the prox objective") {
  const PenaltySpec en = PenaltySpec::elastic_net(0.7, 0.3);
  RngStream rng(21);
  for (int k = 0; k < 50; ++k) {
    const double x = 4.0 * rng.normal();
    const double v = 0.1 + std::abs(rng.normal());
    const double y = en.prox(v, x);
    const double fy = en.value(y) + (y - x) * (y - x) / (2.0 * v);
    for (double dy : {-1e-3, 1e-3, -0.3, 0.3}) {
      const double yy = y + dy;
      CHECK(fy <= en.value(yy) + (yy - x) * (yy - x) / (2.0 * v) + 1e-12);
    }
  }
}

TEST_CASE("hpp_extended") {
  const PenaltySpec en = PenaltySpec::elastic_net(1.0, 0.1);
  CHECK(en.hpp_extended(0.0) == kInf);
  CHECK(en.hpp_extended(3.7) == doctest::Approx(0.1));
  const PenaltySpec r = PenaltySpec::ridge(0.5);
  CHECK(r.hpp_extended(0.0) == doctest::Approx(0.5));
  CHECK(r.hpp_extended(-2.0) == doctest::Approx(0.5));
}

TEST_CASE("prox_deriv_extended") {
  const PenaltySpec en = PenaltySpec::elastic_net(1.0, 0.1);
  CHECK(en.prox_deriv_extended(1.0, 0.5) == 0.0);
  CHECK(en.prox_deriv_extended(1.0, 2.0) == doctest::Approx(1.0 / 1.1));
  const PenaltySpec r = PenaltySpec::ridge(1.0);
  CHECK(r.prox_deriv_extended(2.0, -17.0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("extended prox derivative identity holds everywhere, kinks included") {
  const PenaltySpec en = PenaltySpec::elastic_net(1.0, 0.1);
  const double v = 0.7;
  // includes the threshold points +-lambda1*v and 0
  for (double x : {-3.0, -en.lambda1 * v, -0.2, 0.0, 0.2, en.lambda1 * v, 0.9, 3.0}) {
    const double lhs = en.prox_deriv_extended(v, x);
    const double hpp = en.hpp_extended(en.prox(v, x));
    const double rhs = std::isinf(hpp) ? 0.0 : 1.0 / (1.0 + v * hpp);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-15));
    CHECK(lhs >= 0.0);
    CHECK(lhs <= 1.0 / (1.0 + v * en.c0()) + 1e-15);
  }
}

TEST_CASE("firm non-expansiveness and monotonicity") {
  const PenaltySpec en = PenaltySpec::elastic_net(0.8, 0.2);
  RngStream rng(33);
  for (int k = 0; k < 2000; ++k) {
    const double x = 5.0 * rng.normal();
    const double y = 5.0 * rng.normal();
    const double v = 0.05 + std::abs(rng.normal());
    const double px = en.prox(v, x), py = en.prox(v, y);
    CHECK((px - py) * (px - py) <= (x - y) * (px - py) + 1e-14);
    if (x > y) CHECK(px >= py - 1e-15);
  }
}

TEST_CASE("parse round-trips CLI strings") {
  const PenaltySpec en = PenaltySpec::parse("en:1.0,0.1");
  CHECK(en.lambda1 == doctest::Approx(1.0));
  CHECK(en.lambda2 == doctest::Approx(0.1));
  const PenaltySpec r = PenaltySpec::parse("ridge:0.5");
  CHECK(r.lambda1 == 0.0);
  CHECK(r.lambda2 == doctest::Approx(0.5));
  const PenaltySpec l = PenaltySpec::parse("lasso:1.0");
  CHECK(l.lambda2 == 0.0);
  CHECK_THROWS_AS(PenaltySpec::parse("huber:1.0"), Error);
  CHECK_THROWS_AS(PenaltySpec::parse("en:0,0"), Error);
}
