#pragma once

#include <cmath>
#include <vector>

#include "postsource/errors.hpp"
#include "postsource/forward.hpp"
#include "postsource/sources.hpp"
#include "postsource/spectra.hpp"

namespace postsource {

// Finite-difference reference solutions on the interval; the independent
// check of the eigenfunction-expansion solver.
struct fd_result {
  std::vector<double> x;                    // all nodes, boundaries included
  std::vector<double> times;                // realized snapshot times
  std::vector<std::vector<double>> u;       // [snapshot][node]
  double h = 0;
  double dt = 0;
};

namespace detail {

inline std::vector<double> sample_f(const domain& dom, const spatial_profile& f,
                                    const std::vector<double>& x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (double xi : x) out.push_back(evaluate_f(dom, f, {xi, 0}));
  return out;
}

inline std::vector<std::size_t> snapshot_steps(const std::vector<double>& times, double dt) {
  std::vector<std::size_t> steps;
  steps.reserve(times.size());
  for (double t : times) {
    double k = t / dt;
    double rounded = std::round(k);
    require(std::abs(k - rounded) <= 1e-6, errc::invalid_grid,
            "fd oracle: snapshot times must be multiples of dt");
    steps.push_back(static_cast<std::size_t>(rounded));
  }
  for (std::size_t i = 1; i < steps.size(); ++i)
    require(steps[i] > steps[i - 1], errc::invalid_grid,
            "fd oracle: snapshot times must increase");
  return steps;
}

} // namespace detail

// Crank-Nicolson with the source integrated exactly over each step, so kinks
// in mu cost no order. Dirichlet or Neumann (second-order ghost closure).
inline fd_result fd_heat(const domain& dom, const spatial_profile& f, const time_profile& mu,
                         int nx, double dt, const std::vector<double>& snapshot_times) {
  require(dom.shape == shape_kind::interval, errc::unsupported_domain,
          "fd_heat: interval domains only");
  require(nx >= 8 && dt > 0, errc::invalid_grid, "fd_heat: bad resolution");
  validate_time_profile(mu);
  fd_result res;
  res.h = dom.l1 / nx;
  res.dt = dt;
  for (int i = 0; i <= nx; ++i) res.x.push_back(i * res.h);
  std::vector<double> fs = detail::sample_f(dom, f, res.x);
  auto steps = detail::snapshot_steps(snapshot_times, dt);

  bool neumann = dom.bc == boundary_kind::neumann;
  int lo = neumann ? 0 : 1, hi = neumann ? nx : nx - 1; // owned unknowns
  int n = hi - lo + 1;
  double r = dt / (res.h * res.h);

  // tridiagonal I - (r/2) A with A the 3-point Laplacian stencil
  std::vector<double> a(n, -r / 2), b(n, 1 + r), c(n, -r / 2);
  if (neumann) {
    c[0] = -r;      // ghost u_{-1} = u_1
    a[n - 1] = -r;  // ghost u_{nx+1} = u_{nx-1}
  }
  // Thomas factorization (constant matrix)
  std::vector<double> cp(n), m(n);
  cp[0] = c[0] / b[0];
  m[0] = b[0];
  for (int i = 1; i < n; ++i) {
    m[i] = b[i] - a[i] * cp[i - 1];
    cp[i] = c[i] / m[i];
  }

  std::vector<double> u(n, 0.0), rhs(n), lap(n);
  auto laplacian = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int i = 0; i < n; ++i) {
      double left = i > 0 ? v[i - 1] : (neumann ? v[1] : 0.0);
      double right = i < n - 1 ? v[i + 1] : (neumann ? v[n - 2] : 0.0);
      out[i] = left - 2 * v[i] + right;
    }
  };

  std::size_t total = steps.back();
  std::size_t next = 0;
  auto emit = [&](std::size_t step) {
    while (next < steps.size() && steps[next] == step) {
      std::vector<double> full(nx + 1, 0.0);
      for (int i = 0; i < n; ++i) full[lo + i] = u[i];
      res.u.push_back(std::move(full));
      res.times.push_back(step * dt);
      ++next;
    }
  };
  emit(0);
  for (std::size_t s = 0; s < total; ++s) {
    double tn = s * dt;
    double mu_bar = integrate_mu(mu, tn, tn + dt) / dt;
    laplacian(u, lap);
    for (int i = 0; i < n; ++i) rhs[i] = u[i] + 0.5 * r * lap[i] + dt * mu_bar * fs[lo + i];
    // forward sweep / back substitution
    rhs[0] /= m[0];
    for (int i = 1; i < n; ++i) rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) / m[i];
    u[n - 1] = rhs[n - 1];
    for (int i = n - 2; i >= 0; --i) u[i] = rhs[i] - cp[i] * u[i + 1];
    emit(s + 1);
  }
  return res;
}

// Leapfrog with Taylor start; unit wave speed, so stability needs dt <= h.
inline fd_result fd_wave(const domain& dom, const spatial_profile& f, const time_profile& mu,
                         int nx, double dt, const std::vector<double>& snapshot_times) {
  require(dom.shape == shape_kind::interval && dom.bc == boundary_kind::dirichlet,
          errc::unsupported_domain, "fd_wave: Dirichlet interval only");
  require(nx >= 8 && dt > 0, errc::invalid_grid, "fd_wave: bad resolution");
  validate_time_profile(mu);
  fd_result res;
  res.h = dom.l1 / nx;
  res.dt = dt;
  require(dt <= res.h * (1 + 1e-12), errc::cfl_violation, "fd_wave: dt must satisfy dt <= h");
  for (int i = 0; i <= nx; ++i) res.x.push_back(i * res.h);
  std::vector<double> fs = detail::sample_f(dom, f, res.x);
  auto steps = detail::snapshot_steps(snapshot_times, dt);

  int n = nx - 1; // interior nodes
  double r2 = sq(dt / res.h);
  std::vector<double> prev(n, 0.0), cur(n, 0.0), nextu(n, 0.0);
  // Taylor start from zero data: u^1 = (dt^2/2) mu(0) f
  double mu0 = evaluate_mu(mu, 0.0);
  for (int i = 0; i < n; ++i) cur[i] = 0.5 * dt * dt * mu0 * fs[i + 1];

  std::size_t total = steps.back();
  std::size_t next = 0;
  auto emit = [&](std::size_t step, const std::vector<double>& layer) {
    while (next < steps.size() && steps[next] == step) {
      std::vector<double> full(nx + 1, 0.0);
      for (int i = 0; i < n; ++i) full[i + 1] = layer[i];
      res.u.push_back(std::move(full));
      res.times.push_back(step * dt);
      ++next;
    }
  };
  emit(0, prev);
  emit(1, cur);
  for (std::size_t s = 1; s < total; ++s) {
    double tn = s * dt;
    double mun = evaluate_mu(mu, tn);
    for (int i = 0; i < n; ++i) {
      double left = i > 0 ? cur[i - 1] : 0.0;
      double right = i < n - 1 ? cur[i + 1] : 0.0;
      nextu[i] = 2 * cur[i] - prev[i] + r2 * (left - 2 * cur[i] + right) +
                 dt * dt * mun * fs[i + 1];
    }
    prev.swap(cur);
    cur.swap(nextu);
    emit(s + 1, cur);
  }
  return res;
}

// Error of the spectral solution against an FD snapshot, over the FD nodes.
struct comparison {
  double rel_l2 = 0;
  double rel_max = 0;
  double scale_l2 = 0; // h-weighted norm of the FD snapshot
};

inline comparison compare_snapshot(const fd_result& fd, std::size_t snapshot,
                                   const spectral_solution& sol) {
  const auto& u = fd.u.at(snapshot);
  double t = fd.times.at(snapshot);
  double num2 = 0, den2 = 0, nmax = 0, dmax = 0;
  for (std::size_t i = 0; i < fd.x.size(); ++i) {
    double ref = u[i];
    double val = sol.value({fd.x[i], 0}, t);
    num2 += sq(val - ref);
    den2 += sq(ref);
    nmax = std::max(nmax, std::abs(val - ref));
    dmax = std::max(dmax, std::abs(ref));
  }
  comparison cmp;
  cmp.scale_l2 = std::sqrt(fd.h * den2);
  cmp.rel_l2 = den2 > 0 ? std::sqrt(num2 / den2) : std::sqrt(num2 * fd.h);
  cmp.rel_max = dmax > 0 ? nmax / dmax : nmax;
  return cmp;
}

} // namespace postsource
