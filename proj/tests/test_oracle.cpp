#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "postsource/forward.hpp"
#include "postsource/oracle.hpp"

using namespace postsource;

namespace {

const spatial_profile kBump = smooth_bump{{0.5, 0}, 0.25};
const time_profile kRamp = ramp{1.0};

}  // namespace

TEST_CASE("Crank-Nicolson agrees with the spectral heat solution") {
  auto dom = domain::interval(1.0);
  auto sp = enumerate_spectrum(dom, 64);
  auto sol = solve_heat(sp, kBump, kRamp, 64);
  auto fd = fd_heat(dom, kBump, kRamp, 128, 5e-4, {0.6, 1.0, 1.6});
  REQUIRE(fd.times.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    auto cmp = compare_snapshot(fd, i, sol);
    INFO("t = " << fd.times[i]);
    CHECK(cmp.rel_l2 < 1e-3);
    CHECK(cmp.scale_l2 > 0.0);
  }
}

TEST_CASE("leapfrog agrees with the spectral wave solution") {
  auto dom = domain::interval(1.0);
  auto sp = enumerate_spectrum(dom, 64);
  auto sol = solve_wave(sp, kBump, kRamp, 64);
  double dt = 1.0 / 256.0;
  auto fd = fd_wave(dom, kBump, kRamp, 128, dt, {0.5, 1.0, 1.5});
  for (std::size_t i = 0; i < 3; ++i) {
    auto cmp = compare_snapshot(fd, i, sol);
    INFO("t = " << fd.times[i]);
    CHECK(cmp.rel_l2 < 5e-3);
  }
}

TEST_CASE("heat oracle converges at second order in space") {
  auto dom = domain::interval(1.0);
  auto sp = enumerate_spectrum(dom, 64);
  auto sol = solve_heat(sp, kBump, kRamp, 64);
  double e_coarse = compare_snapshot(fd_heat(dom, kBump, kRamp, 64, 1e-4, {0.5}), 0, sol).rel_l2;
  double e_fine = compare_snapshot(fd_heat(dom, kBump, kRamp, 128, 1e-4, {0.5}), 0, sol).rel_l2;
  double factor = e_coarse / e_fine;
  INFO("errors " << e_coarse << " -> " << e_fine);
  CHECK(factor > 3.0);
  CHECK(factor < 5.5);
}

TEST_CASE("wave oracle converges at second order in space") {
  auto dom = domain::interval(1.0);
  auto sp = enumerate_spectrum(dom, 64);
  auto sol = solve_wave(sp, kBump, kRamp, 64);
  double dt = 1.0 / 512.0;
  double e_coarse = compare_snapshot(fd_wave(dom, kBump, kRamp, 64, dt, {1.0}), 0, sol).rel_l2;
  double e_fine = compare_snapshot(fd_wave(dom, kBump, kRamp, 128, dt, {1.0}), 0, sol).rel_l2;
  double factor = e_coarse / e_fine;
  INFO("errors " << e_coarse << " -> " << e_fine);
  CHECK(factor > 3.0);
  CHECK(factor < 5.5);
}

TEST_CASE("Neumann heat oracle tracks the cosine spectral solution") {
  auto dom = domain::interval(1.0, boundary_kind::neumann);
  auto sp = enumerate_spectrum(dom, 48);
  time_profile mu = step_decay{0.3, 0.1};
  auto sol = solve_heat(sp, kBump, mu, 48);
  auto fd = fd_heat(dom, kBump, mu, 128, 5e-4, {0.2, 0.5, 1.0});
  for (std::size_t i = 0; i < 3; ++i) {
    auto cmp = compare_snapshot(fd, i, sol);
    INFO("t = " << fd.times[i]);
    CHECK(cmp.rel_l2 < 2e-3);
  }
  // mass is conserved once the source switches off: integral u dx = integral mu
  const auto& last = fd.u.back();
  double mass = 0;
  for (std::size_t i = 0; i + 1 < last.size(); ++i) mass += 0.5 * (last[i] + last[i + 1]) * fd.h;
  double driven = integrate_mu(mu, 0.0, 1.0) *
                  integrate_adaptive([&](double x) { return evaluate_f(dom, kBump, {x, 0}); },
                                     0.0, 1.0)
                      .value;
  CHECK(mass == Catch::Approx(driven).epsilon(1e-3));
}

TEST_CASE("oracle grids reject misaligned snapshots and unstable steps") {
  auto dom = domain::interval(1.0);
  CHECK_THROWS_AS(fd_heat(dom, kBump, kRamp, 64, 1e-3, {0.0105}), error);
  CHECK_THROWS_AS(fd_heat(dom, kBump, kRamp, 64, 1e-3, {0.2, 0.1}), error);
  CHECK_THROWS_AS(fd_heat(dom, kBump, kRamp, 4, 1e-3, {0.1}), error);
  // leapfrog CFL: dt beyond h must refuse to run
  CHECK_THROWS_AS(fd_wave(dom, kBump, kRamp, 64, 1.0 / 32.0, {0.5}), error);
  CHECK_THROWS_AS(fd_wave(domain::interval(1.0, boundary_kind::neumann), kBump, kRamp, 64,
                          1.0 / 128.0, {0.5}),
                  error);
}
