#include <doctest.h>

#include <random>

#include "koopman/activations.hpp"
#include "koopman/errors.hpp"
#include "support/oracles.hpp"

using namespace koopman;

namespace {
const ActivationKind kKinds[] = {ActivationKind::Tanh, ActivationKind::Logistic,
                                 ActivationKind::ArcTan};
}

TEST_CASE("values at the origin") {
  CHECK(activation_eval(ActivationKind::Tanh, 0.0) == 0.0);
  CHECK(activation_eval(ActivationKind::Logistic, 0.0) == 0.5);
  CHECK(activation_eval(ActivationKind::ArcTan, 0.0) == 0.0);
  CHECK(activation_deriv1(ActivationKind::Tanh, 0.0) == 1.0);
  CHECK(activation_deriv1(ActivationKind::Logistic, 0.0) == 0.25);
  CHECK(activation_deriv2(ActivationKind::Tanh, 0.0) == 0.0);
}

TEST_CASE("non-finite input rejected") {
  CHECK_THROWS_AS(activation_eval(ActivationKind::Tanh,
                                  std::numeric_limits<double>::quiet_NaN()),
                  usage_error);
  CHECK_THROWS_AS(activation_deriv1(ActivationKind::Logistic,
                                    std::numeric_limits<double>::infinity()),
                  usage_error);
}

TEST_CASE("g2 constants match the 1-D maximization oracle") {
  for (ActivationKind kind : kKinds) {
    const ActivationBounds b = activation_bounds(kind);
    const double oracle = oracles::max_abs_1d(
        [&](double x) { return activation_deriv2(kind, x); }, -10.0, 10.0);
    CHECK(b.g2 == doctest::Approx(oracle).epsilon(1e-10));
  }
  CHECK(activation_bounds(ActivationKind::Tanh).g2 ==
        doctest::Approx(0.76980).epsilon(1e-4));
  CHECK(activation_bounds(ActivationKind::Logistic).g2 ==
        doctest::Approx(0.09623).epsilon(1e-4));
  CHECK(activation_bounds(ActivationKind::ArcTan).g2 ==
        doctest::Approx(0.64952).epsilon(1e-4));
}

TEST_CASE("h and g1 match the oracle too") {
  for (ActivationKind kind : kKinds) {
    const ActivationBounds b = activation_bounds(kind);
    // logistic approaches its sup at +-inf; the oracle only sees [-30, 30]
    const double h_seen = oracles::max_abs_1d(
        [&](double x) { return activation_eval(kind, x); }, -30.0, 30.0);
    CHECK(h_seen <= b.h + 1e-12);
    CHECK(h_seen >= 0.9 * b.h);
    const double g1_seen = oracles::max_abs_1d(
        [&](double x) { return activation_deriv1(kind, x); }, -10.0, 10.0);
    CHECK(g1_seen <= b.g1 + 1e-12);
    CHECK(g1_seen >= b.g1 - 1e-6);
  }
}

TEST_CASE("random samples stay inside the reported bounds") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> wide(-1e6, 1e6);
  for (ActivationKind kind : kKinds) {
    const ActivationBounds b = activation_bounds(kind);
    for (int i = 0; i < 1000000; ++i) {
      const double x = wide(rng);
      REQUIRE(std::abs(activation_eval(kind, x)) <= b.h + 1e-12);
      REQUIRE(std::abs(activation_deriv1(kind, x)) <= b.g1 + 1e-12);
      REQUIRE(std::abs(activation_deriv2(kind, x)) <= b.g2 + 1e-12);
    }
  }
}

TEST_CASE("derivatives agree with central differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (ActivationKind kind : kKinds) {
    for (int i = 0; i < 2000; ++i) {
      const double x = unif(rng);
      const double d1 = oracles::central_diff(
          [&](double v) { return activation_eval(kind, v); }, x);
      const double d2 = oracles::central_diff(
          [&](double v) { return activation_deriv1(kind, v); }, x);
      REQUIRE(std::abs(activation_deriv1(kind, x) - d1) <=
              1e-6 * std::max(1.0, std::abs(d1)));
      REQUIRE(std::abs(activation_deriv2(kind, x) - d2) <=
              1e-6 * std::max(1.0, std::abs(d2)));
    }
  }
}

TEST_CASE("l_psi is a Lipschitz constant for Psi(a,b) = psi(a) psi'(b)") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (ActivationKind kind : kKinds) {
    const ActivationBounds b = activation_bounds(kind);
    CHECK(b.l_psi <= std::sqrt(std::pow(b.g1, 4) + b.h * b.h * b.g2 * b.g2) +
                         1e-15);
    auto psi2 = [&](double a1, double a2) {
      return activation_eval(kind, a1) * activation_deriv1(kind, a2);
    };
    for (int i = 0; i < 100000; ++i) {
      const double a1 = unif(rng), b1 = unif(rng);
      const double a2 = unif(rng), b2 = unif(rng);
      const double lhs = std::abs(psi2(a1, b1) - psi2(a2, b2));
      const double dist = std::hypot(a1 - a2, b1 - b2);
      REQUIRE(lhs <= b.l_psi * dist + 1e-12);
    }
  }
}

TEST_CASE("config names round-trip") {
  for (ActivationKind kind : kKinds)
    CHECK(activation_from_name(activation_name(kind)) == kind);
  CHECK_THROWS_AS(activation_from_name("relu"), usage_error);
}
