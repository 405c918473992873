#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "postsource/numerics.hpp"

using namespace postsource;

TEST_CASE("log_scaled round trips and survives extreme magnitudes") {
  CHECK(log_scaled::from(0.0).is_zero());
  CHECK(log_scaled::from(0.0).value() == 0.0);
  CHECK(log_scaled::from(-3.5).value() == Catch::Approx(-3.5).epsilon(1e-15));
  CHECK(log_scaled::from(2.0).scale_exp(3.0).value() == Catch::Approx(2.0 * std::exp(3.0)));

  // magnitudes far outside double range stay exact in log space
  log_scaled big = log_scaled::from_log(5000.0, 1);
  log_scaled rescued = big.scale_exp(-5000.0);
  CHECK(rescued.value() == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(std::isinf(big.value()));

  log_scaled tiny = log_scaled::from_log(-5000.0, -1);
  CHECK(tiny.value() == 0.0);
  CHECK(tiny.scale_exp(5000.0).value() == Catch::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("log_scaled addition handles cancellation and mixed signs") {
  log_scaled a = log_scaled::from(3.0);
  log_scaled b = log_scaled::from(-3.0);
  CHECK((a + b).is_zero());
  CHECK((a + log_scaled::from(1.0)).value() == Catch::Approx(4.0));
  CHECK((b + log_scaled::from(1.0)).value() == Catch::Approx(-2.0));

  // adding across 600 e-foldings keeps the dominant term
  log_scaled huge = log_scaled::from_log(600.0, 1);
  log_scaled small = log_scaled::from(1.0);
  CHECK((huge + small).log_abs == Catch::Approx(600.0));
}

TEST_CASE("exp-linear integrals match the analytic antiderivative") {
  // right form: integral_{s0}^{s1} (alpha + beta s) e^{-lambda (s1 - s)} ds
  double lambda = 7.3, s0 = 0.2, s1 = 1.1, alpha = 0.4, beta = -1.7;
  double direct = integrate_adaptive(
                      [&](double s) {
                        return (alpha + beta * s) * std::exp(-lambda * (s1 - s));
                      },
                      s0, s1)
                      .value;
  CHECK(exp_linear_integral_right(lambda, s0, s1, alpha, beta) ==
        Catch::Approx(direct).epsilon(1e-12));

  // left form: weight e^{lambda (s - s0)} with lambda < 0 handed in as nu
  double nu = -4.2;
  double direct_l = integrate_adaptive(
                        [&](double s) {
                          return (alpha + beta * s) * std::exp(nu * (s - s0));
                        },
                        s0, s1)
                        .value;
  CHECK(exp_linear_integral_left(nu, s0, s1, alpha, beta) ==
        Catch::Approx(direct_l).epsilon(1e-12));

  // tiny exponent: the phi-function series must not lose digits
  double z_small = exp_linear_integral_right(1e-9, 0.0, 1.0, 1.0, 0.0);
  CHECK(z_small == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("trig linear integral agrees with quadrature") {
  double omega = 23.0, T = 1.4, s0 = 0.1, s1 = 0.9, alpha = 0.6, beta = 2.0;
  trig_pair got = trig_linear_integral(omega, T, s0, s1, alpha, beta);
  double S = integrate_adaptive(
                 [&](double s) { return (alpha + beta * s) * std::sin(omega * (T - s)); }, s0, s1)
                 .value;
  double C = integrate_adaptive(
                 [&](double s) { return (alpha + beta * s) * std::cos(omega * (T - s)); }, s0, s1)
                 .value;
  CHECK(got.s == Catch::Approx(S).margin(1e-13));
  CHECK(got.c == Catch::Approx(C).margin(1e-13));
}

TEST_CASE("Gauss-Legendre panels integrate polynomials exactly") {
  // order 8 is exact through degree 15 on each panel
  auto poly = [](double x) {
    double acc = 0, p = 1;
    for (int k = 0; k <= 15; ++k) {
      acc += (k % 3 == 0 ? 1.0 : -0.5) * p;
      p *= x;
    }
    return acc;
  };
  auto antider = [](double x) {
    double acc = 0, p = x;
    for (int k = 0; k <= 15; ++k) {
      acc += (k % 3 == 0 ? 1.0 : -0.5) * p / (k + 1);
      p *= x;
    }
    return acc;
  };
  double exact = antider(2.0) - antider(-1.0);
  CHECK(gl_composite(poly, -1.0, 2.0, 3) == Catch::Approx(exact).epsilon(1e-14));
}

TEST_CASE("adaptive quadrature converges and reports panels") {
  auto r = integrate_adaptive([](double x) { return std::exp(-x) * std::sin(10 * x); }, 0.0, 3.0);
  double exact = (10.0 - std::exp(-3.0) * (std::sin(30.0) + 10.0 * std::cos(30.0))) / 101.0;
  CHECK(r.value == Catch::Approx(exact).epsilon(1e-12));
  CHECK(r.panels >= 8);
  CHECK(r.est_error <= 1e-10);

  // degenerate span short-circuits
  auto z = integrate_adaptive([](double) { return 1.0; }, 2.0, 2.0);
  CHECK(z.value == 0.0);
  CHECK(z.panels == 0);

  // abs_floor lets cancellation-tiny integrals settle instead of throwing
  auto c = integrate_adaptive([](double x) { return std::sin(200.0 * pi * x); }, 0.0, 1.0, 1e-12,
                              1e-14);
  CHECK(std::abs(c.value) <= 1e-12);
}

TEST_CASE("nearest rational walks the continued fraction") {
  auto r2 = nearest_rational(std::sqrt(2.0), 64);
  CHECK(r2.p == 41);
  CHECK(r2.q == 29);
  CHECK(r2.err == Catch::Approx(std::abs(std::sqrt(2.0) - 41.0 / 29.0)));

  auto exact = nearest_rational(3.0 / 7.0, 64);
  CHECK(exact.p == 3);
  CHECK(exact.q == 7);
  CHECK(exact.err <= 1e-15);

  auto integer = nearest_rational(5.0, 10);
  CHECK(integer.p == 5);
  CHECK(integer.q == 1);

  CHECK_THROWS_AS(nearest_rational(0.5, 0), error);
}

TEST_CASE("rel_diff is symmetric and zero-safe") {
  CHECK(rel_diff(0.0, 0.0) == 0.0);
  CHECK(rel_diff(1.0, 2.0) == Catch::Approx(0.5));
  CHECK(rel_diff(2.0, 1.0) == Catch::Approx(0.5));
}
