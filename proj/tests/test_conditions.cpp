#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "postsource/conditions.hpp"

using namespace postsource;

namespace {

// full-support combination over a 16x16 block with mildly decaying weights; no
// enumerated rectangle mode is orthogonal to it
spatial_profile dense_rectangle_profile() {
  mode_combination f;
  for (int m1 = 1; m1 <= 16; ++m1)
    for (int m2 = 1; m2 <= 16; ++m2)
      f.terms.push_back({rectangle_mode{m1, m2}, 1.0 / (m1 * m1 + m2 * m2)});
  return f;
}

}  // namespace

TEST_CASE("exceptional set finds modes invisible at the midpoint") {
  auto dom = domain::interval(1.0);
  auto sp = enumerate_spectrum(dom, 12);
  // full-band combination, so only the sample point can hide a mode
  mode_combination f;
  for (int n = 1; n <= 12; ++n) f.terms.push_back({interval_mode{n}, 1.0});
  auto ex = exceptional_set(sp, f, {0.5, 0}, 12);
  // sin(n pi / 2) = 0 exactly for even n
  CHECK(ex.at_point == std::vector<std::size_t>{1, 3, 5, 7, 9, 11});
  CHECK(ex.everywhere.empty());
  CHECK(ex.pj_at_point.size() == 12);

  // moving off every rational node with small denominator clears the set
  auto ex2 = exceptional_set(sp, f, {1.0 / std::sqrt(2.0), 0}, 12);
  CHECK(ex2.at_point.empty());
}

TEST_CASE("reciprocal eigenvalue sum converges on an interval") {
  auto sp = enumerate_spectrum(domain::interval(1.0), 40);
  auto rep = muntz_classify(sp);
  CHECK(rep.id == "muntz_sum");
  CHECK(rep.verdict == verdict_kind::fails);
  // sum over 1/(n pi)^2 = 1/6, certified by the extrapolated majorant
  CHECK(rep.evidence.at("extrapolated_sum") == Catch::Approx(1.0 / 6.0).epsilon(1e-6));
  CHECK(rep.evidence.at("excluded_count") == 0.0);

  CHECK_THROWS_AS(muntz_classify(enumerate_spectrum(domain::interval(1.0), 8)), error);
}

TEST_CASE("irrational rectangle with a dense profile passes the divergence test") {
  auto dom = domain::rectangle(1.0, 0.5946035575013605, std::nullopt);
  auto sp = enumerate_spectrum(dom, 64);
  auto f = dense_rectangle_profile();
  auto ex = exceptional_set(sp, f, {0.31, 0.27}, std::min<std::size_t>(40, sp.distinct_count()));

  auto rep = muntz_classify(sp, ex.at_point);
  CHECK(rep.verdict == verdict_kind::holds);
  CHECK(rep.evidence.at("excluded_count") == 0.0);
  CHECK(rep.evidence.at("partial_sum") > 0.1);

  // a sparse two-term profile leaves almost every mode excluded: undecidable
  spatial_profile sparse =
      mode_combination{{{rectangle_mode{1, 1}, 1.0}, {rectangle_mode{2, 1}, 0.5}}};
  auto exs = exceptional_set(sp, sparse, {0.31, 0.27}, 40);
  auto reps = muntz_classify(sp, exs.at_point);
  CHECK(reps.verdict == verdict_kind::undecidable);
  CHECK(reps.evidence.at("excluded_tail_density") > 0.5);
}

TEST_CASE("density limit distinguishes flat from growing tails") {
  // interval: k / sqrt(lambda_k) = 1/pi for every k, horizon = length
  auto rep1 = density_limit(enumerate_spectrum(domain::interval(1.0), 40));
  CHECK(rep1.verdict == verdict_kind::holds);
  CHECK(rep1.evidence.at("density") == Catch::Approx(1.0 / pi).epsilon(1e-12));
  CHECK(rep1.evidence.at("horizon") == Catch::Approx(1.0).epsilon(1e-12));

  // disk: distinct eigenvalues thin out in one parameter, the ratio grows
  auto repd = density_limit(enumerate_spectrum(domain::disk(), 60));
  CHECK(repd.verdict == verdict_kind::holds);
  CHECK(repd.evidence.at("density_unbounded") == 1.0);
  CHECK(repd.evidence.at("growth_ratio") > 1.15);
  CHECK(repd.evidence.at("tail_mean") > 0.0);

  CHECK_THROWS_AS(density_limit(enumerate_spectrum(domain::disk(), 20)), error);
}

TEST_CASE("exponential moment check flags only the engineered vanishing mode") {
  auto sp = enumerate_spectrum(domain::interval(1.0), 32);
  auto rep = check_exponential_moments(sp, ramp{1.0}, 32);
  CHECK(rep.id == "exp_moment_nonzero");
  CHECK(rep.verdict == verdict_kind::holds);
  CHECK(rep.offending.empty());
  CHECK(rep.evidence.at("abs_mu_integral") == Catch::Approx(0.5).epsilon(1e-9));

  // the vanishing-moment driver is invisible exactly at the lowest eigenvalue
  time_profile mu = exp_linear{sp.lambda(0), 0.5, 1.0};
  auto repv = check_exponential_moments(sp, mu, 32);
  CHECK(repv.verdict == verdict_kind::fails);
  CHECK(repv.offending == std::vector<std::size_t>{0});
  CHECK(repv.note == "moment vanishes at the listed modes");
}

TEST_CASE("trig moment check holds for the ramp across fifty modes") {
  auto sp = enumerate_spectrum(domain::interval(1.0), 50);
  auto rep = check_trig_moments(sp, ramp{1.0}, 50);
  CHECK(rep.id == "trig_moment_nonzero");
  CHECK(rep.verdict == verdict_kind::holds);
  CHECK(rep.evidence.at("min_relative_moment") > 1e-3);
}

TEST_CASE("wave recovery prerequisites are judged piece by piece") {
  auto dom = domain::interval(1.0);
  spatial_profile f = mode_combination{[] {
    std::vector<std::pair<mode_label, double>> t;
    for (int n = 1; n <= 16; ++n) t.push_back({interval_mode{n}, 1.0 / n});
    return t;
  }()};
  double x0 = 1.0 / std::sqrt(2.0);

  auto good = check_wave_recovery_conditions(dom, f, x0, 1.5, 1.6, 3.8, 16);
  CHECK(good.id == "wave_recovery_window");
  CHECK(good.verdict == verdict_kind::holds);
  CHECK(good.evidence.at("support_slack") == Catch::Approx(0.5));
  CHECK(good.evidence.at("node_distance_q64") > 1e-9);

  // support longer than one period
  CHECK(check_wave_recovery_conditions(dom, f, x0, 2.2, 1.6, 5.0, 16).verdict ==
        verdict_kind::fails);
  // window shorter than one period
  CHECK(check_wave_recovery_conditions(dom, f, x0, 1.5, 1.6, 3.0, 16).verdict ==
        verdict_kind::fails);
  // rational observation point sits on a node
  auto rat = check_wave_recovery_conditions(dom, f, 0.5, 1.5, 1.6, 3.8, 16);
  CHECK(rat.verdict == verdict_kind::fails);
  CHECK(rat.evidence.at("node_distance_q64") <= 1e-9);
  // a projection-free mode is reported by index
  spatial_profile gap = mode_combination{{{interval_mode{1}, 1.0}, {interval_mode{3}, 1.0}}};
  auto miss = check_wave_recovery_conditions(dom, gap, x0, 1.5, 1.6, 3.8, 3);
  CHECK(miss.verdict == verdict_kind::fails);
  CHECK(miss.offending == std::vector<std::size_t>{1});
}
