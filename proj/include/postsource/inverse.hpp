#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "postsource/conditions.hpp"
#include "postsource/errors.hpp"
#include "postsource/forward.hpp"
#include "postsource/numerics.hpp"
#include "postsource/sources.hpp"
#include "postsource/spectra.hpp"

namespace postsource {

// ---------------------------------------------------------------------------
// Onset-time recovery from a single late observation of a heat solution with
// conserved mass (Neumann walls, nonnegative source shape). The observed
// value is monotone in the onset because the driver's integral grows with it,
// so a bracketed bisection recovers the onset to grid-independent accuracy.
// ---------------------------------------------------------------------------

struct onset_scenario {
  domain dom;                 // Neumann interval
  spatial_profile f;          // nonnegative, nontrivial
  double a = 0.1;             // decay span of the driver after onset
  theta_kind theta = theta_kind::linear;
  point x0{0, 0};
  double t_lo = 0, t_hi = 1;  // admissible onset bracket
  double t_star = 0;          // observation time, past extinction of any candidate
  std::size_t n_max = 64;
};

struct onset_recovery {
  double t0 = 0;
  double residual = 0;
  double forward_lo = 0, forward_hi = 0;
  double stability_ratio = 0;  // bracket width / observable spread
  int iterations = 0;
};

namespace detail {

class onset_forward {
public:
  onset_forward(const onset_scenario& sc)
      : sc_(sc), sp_(enumerate_spectrum(sc.dom, sc.n_max)) {
    for (std::size_t k = 0; k < sp_.repeated_count(); ++k) {
      const auto& label = sp_.repeated_label(k);
      fc_.push_back(project_f(sc.dom, sc.f, label));
      phi_.push_back(eigenfunction_value(sc.dom, label, sc.x0));
      sigma_.push_back(sp_.sigma(k));
    }
  }

  double operator()(double t0) const {
    time_profile mu = step_decay{t0, sc_.a, sc_.theta};
    double acc = 0;
    for (std::size_t k = sigma_.size(); k-- > 0;) {
      if (fc_[k] == 0 || phi_[k] == 0) continue;
      log_scaled m = exponential_moment_log(mu, sigma_[k]);
      acc += fc_[k] * phi_[k] * m.scale_exp(-sigma_[k] * sc_.t_star).value();
    }
    return acc;
  }

private:
  const onset_scenario& sc_;
  spectrum sp_;
  std::vector<double> fc_, phi_, sigma_;
};

} // namespace detail

inline onset_recovery recover_t0(const onset_scenario& sc, double observed) {
  require(sc.dom.shape == shape_kind::interval && sc.dom.bc == boundary_kind::neumann,
          errc::unsupported_domain, "recover_t0: Neumann interval required");
  require(sc.a > 0, errc::invalid_profile, "recover_t0: decay span must be positive");
  require(sc.t_lo >= 0 && sc.t_hi > sc.t_lo, errc::value_out_of_range,
          "recover_t0: onset bracket must satisfy 0 <= lo < hi");
  require(sc.t_star > sc.t_hi + sc.a, errc::value_out_of_range,
          "recover_t0: observation must come after extinction of every candidate");
  {
    double fmin = 0, fmax = 0;
    for (int i = 0; i <= 256; ++i) {
      double x = sc.dom.l1 * i / 256.0;
      double v = evaluate_f(sc.dom, sc.f, {x, 0});
      fmin = std::min(fmin, v);
      fmax = std::max(fmax, std::abs(v));
    }
    require(fmax > 0 && fmin >= -1e-12 * fmax, errc::invalid_profile,
            "recover_t0: source shape must be nonnegative and nontrivial");
  }

  detail::onset_forward F(sc);
  onset_recovery out;
  out.forward_lo = F(sc.t_lo);
  out.forward_hi = F(sc.t_hi);
  double spread = out.forward_hi - out.forward_lo;
  require(spread > 0, errc::non_monotone, "recover_t0: observable does not increase over the bracket");
  double fmid = F(0.5 * (sc.t_lo + sc.t_hi));
  require(fmid > out.forward_lo - 1e-12 * spread && fmid < out.forward_hi + 1e-12 * spread,
          errc::non_monotone, "recover_t0: observable is not monotone over the bracket");
  require(observed >= out.forward_lo - 1e-6 * spread && observed <= out.forward_hi + 1e-6 * spread,
          errc::value_out_of_range, "recover_t0: observation outside the attainable range");

  double y = std::clamp(observed, out.forward_lo, out.forward_hi);
  double lo = sc.t_lo, hi = sc.t_hi;
  int it = 0;
  while (hi - lo > 1e-9 * std::max(1.0, sc.t_hi) && it < 80) {
    double mid = 0.5 * (lo + hi);
    (F(mid) < y ? lo : hi) = mid;
    ++it;
  }
  out.t0 = 0.5 * (lo + hi);
  out.residual = std::abs(F(out.t0) - observed);
  out.stability_ratio = (sc.t_hi - sc.t_lo) / spread;
  out.iterations = it;
  return out;
}

// ---------------------------------------------------------------------------
// Least-squares fit of a finite exponential sum sum_n gamma_n e^{-lambda_n t}
// to a sampled trace. Columns are equilibrated before the QR solve; columns
// that underflow on the window are excluded and reported.
// ---------------------------------------------------------------------------

struct dirichlet_fit {
  std::vector<double> gamma;
  std::vector<std::size_t> unidentifiable;  // columns numerically zero on the window
  double condition = 0;                     // of the equilibrated design
  bool ill_conditioned = false;             // condition above 1e14
  double residual = 0;
};

inline dirichlet_fit fit_dirichlet_series(const std::vector<double>& times,
                                          const std::vector<double>& values,
                                          const std::vector<double>& lambdas) {
  std::size_t N = lambdas.size();
  require(N >= 1 && N <= 12, errc::value_out_of_range,
          "fit_dirichlet_series: between 1 and 12 exponentials");
  require(times.size() == values.size() && times.size() >= N, errc::invalid_grid,
          "fit_dirichlet_series: need at least as many samples as exponentials");

  std::size_t m = times.size();
  Eigen::MatrixXd A(m, N);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t n = 0; n < N; ++n) A(i, n) = std::exp(-lambdas[n] * times[i]);

  dirichlet_fit out;
  out.gamma.assign(N, 0.0);
  std::vector<std::size_t> keep;
  std::vector<double> scale(N, 1.0);
  for (std::size_t n = 0; n < N; ++n) {
    double s = A.col(n).norm();
    if (s <= 1e-14) {
      out.unidentifiable.push_back(n);
    } else {
      scale[n] = s;
      keep.push_back(n);
    }
  }
  if (keep.empty()) {
    out.ill_conditioned = true;
    out.residual = std::sqrt(
        std::inner_product(values.begin(), values.end(), values.begin(), 0.0));
    return out;
  }

  Eigen::MatrixXd B(m, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) B.col(c) = A.col(keep[c]) / scale[keep[c]];
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), m);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::VectorXd g = qr.solve(y);
  Eigen::MatrixXd R = qr.matrixR()
                          .topLeftCorner(keep.size(), keep.size())
                          .template triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  out.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  out.ill_conditioned = !(out.condition < 1e14);
  out.residual = (B * g - y).norm();
  for (std::size_t c = 0; c < keep.size(); ++c) out.gamma[keep[c]] = g(c) / scale[keep[c]];
  return out;
}

inline dirichlet_fit fit_dirichlet_series(const observation_record& record, const spectrum& sp,
                                          std::size_t N, std::size_t point_index = 0) {
  require(point_index < record.points.size(), errc::invalid_grid,
          "fit_dirichlet_series: point index out of range");
  require(N <= sp.distinct_count(), errc::insufficient_modes,
          "fit_dirichlet_series: N exceeds the enumerated spectrum");
  std::vector<double> lambdas(N);
  for (std::size_t n = 0; n < N; ++n) lambdas[n] = sp.lambda(n);
  std::vector<double> values(record.times.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = record.values[i][point_index];
  return fit_dirichlet_series(record.times, values, lambdas);
}

// ---------------------------------------------------------------------------
// Driver recovery from exponential moments (heat side). The moment equations
// are rescaled so every kernel row is bounded by one, the endpoint value at
// the support end is pinned to zero, and a Tikhonov-regularized least-squares
// problem is solved, either at a fixed weight or by matching a discrepancy
// target through bisection.
// ---------------------------------------------------------------------------

struct moment_sample {
  double lambda = 0;
  log_scaled value;  // integral of e^{lambda s} mu(s) ds over the support
};

enum class regularizer_kind { first_difference, identity };

struct mu_heat_options {
  std::size_t grid_points = 64;
  regularizer_kind reg = regularizer_kind::first_difference;
  double alpha = -1;       // fixed weight when >= 0
  double discrepancy = 0;  // target residual when alpha < 0
};

struct mu_heat_recovery {
  std::vector<double> s;   // uniform grid on [0, T]
  std::vector<double> mu;  // recovered values; last entry pinned to zero
  double support = 0;
  double alpha = 0;
  double residual = 0;   // on the rescaled moment equations
  double condition = 0;  // of the stacked regularized system
};

namespace detail {

struct mu_heat_system {
  Eigen::MatrixXd K;  // rescaled kernel, columns exclude the pinned endpoint
  Eigen::MatrixXd L;  // regularizer rows over the same unknowns
  Eigen::VectorXd rhs;
};

inline mu_heat_system build_mu_heat_system(const std::vector<moment_sample>& moments, double T,
                                           const mu_heat_options& opt) {
  std::size_t M = opt.grid_points;
  std::size_t R = moments.size();
  double h = T / static_cast<double>(M - 1);
  mu_heat_system sys;
  sys.K.resize(R, M - 1);
  sys.rhs.resize(R);
  for (std::size_t n = 0; n < R; ++n) {
    double lam = moments[n].lambda;
    for (std::size_t i = 0; i + 1 < M; ++i) {
      double w = (i == 0) ? 0.5 * h : h;
      double s = h * static_cast<double>(i);
      sys.K(n, i) = w * std::exp(lam * (s - T));
    }
    sys.rhs(n) = moments[n].value.scale_exp(-lam * T).value();
  }
  if (opt.reg == regularizer_kind::first_difference) {
    sys.L = Eigen::MatrixXd::Zero(M - 1, M - 1);
    for (std::size_t i = 0; i + 1 < M; ++i) {
      sys.L(i, i) = -1.0;
      if (i + 2 < M) sys.L(i, i + 1) = 1.0;  // last row differences against the pinned zero
    }
  } else {
    sys.L = Eigen::MatrixXd::Identity(M - 1, M - 1);
  }
  return sys;
}

inline Eigen::VectorXd solve_stacked(const mu_heat_system& sys, double alpha, double* condition) {
  std::size_t R = sys.K.rows(), V = sys.K.cols(), P = sys.L.rows();
  Eigen::MatrixXd S(R + P, V);
  S.topRows(R) = sys.K;
  S.bottomRows(P) = std::sqrt(alpha) * sys.L;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(R + P);
  b.head(R) = sys.rhs;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
  Eigen::VectorXd x = qr.solve(b);
  if (condition) {
    Eigen::MatrixXd Rm =
        qr.matrixR().topLeftCorner(V, V).template triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Rm);
    double smin = svd.singularValues().minCoeff();
    *condition = smin > 0 ? svd.singularValues().maxCoeff() / smin
                          : std::numeric_limits<double>::infinity();
  }
  return x;
}

} // namespace detail

inline mu_heat_recovery recover_mu_heat(const std::vector<moment_sample>& moments, double T,
                                        const mu_heat_options& opt = {}) {
  require(T > 0, errc::invalid_profile, "recover_mu_heat: support must be positive");
  require(opt.grid_points >= 8 && opt.grid_points <= 256, errc::invalid_grid,
          "recover_mu_heat: grid between 8 and 256 points");
  require(moments.size() >= 2, errc::insufficient_modes,
          "recover_mu_heat: need at least two moments");
  for (const auto& mo : moments)
    require(mo.lambda >= 0, errc::value_out_of_range,
            "recover_mu_heat: nonnegative eigenvalues expected");

  auto sys = detail::build_mu_heat_system(moments, T, opt);
  mu_heat_recovery out;
  out.support = T;
  double cond = 0;
  Eigen::VectorXd x;

  if (opt.alpha >= 0) {
    out.alpha = opt.alpha;
    x = detail::solve_stacked(sys, std::max(opt.alpha, 1e-300), &cond);
  } else {
    require(opt.discrepancy > 0, errc::value_out_of_range,
            "recover_mu_heat: discrepancy target must be positive when alpha is free");
    auto resid_at = [&](double la) {
      Eigen::VectorXd xx = detail::solve_stacked(sys, std::pow(10.0, la), nullptr);
      return (sys.K * xx - sys.rhs).norm();
    };
    double lo = -14, hi = 2;
    double rlo = resid_at(lo), rhi = resid_at(hi);
    require(rlo <= opt.discrepancy && opt.discrepancy <= rhi, errc::discrepancy_unattainable,
            "recover_mu_heat: discrepancy target outside the attainable residual range");
    for (int it = 0; it < 60 && hi - lo > 1e-4; ++it) {
      double mid = 0.5 * (lo + hi);
      (resid_at(mid) < opt.discrepancy ? lo : hi) = mid;
    }
    out.alpha = std::pow(10.0, 0.5 * (lo + hi));
    x = detail::solve_stacked(sys, out.alpha, &cond);
  }

  out.residual = (sys.K * x - sys.rhs).norm();
  out.condition = cond;
  std::size_t M = opt.grid_points;
  double h = T / static_cast<double>(M - 1);
  out.s.resize(M);
  out.mu.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    out.s[i] = h * static_cast<double>(i);
    out.mu[i] = (i + 1 < M) ? x(i) : 0.0;
  }
  return out;
}

inline table_profile mu_heat_as_profile(const mu_heat_recovery& rec) {
  return table_profile{rec.s, rec.mu, rec.support};
}

// ---------------------------------------------------------------------------
// Driver recovery from one period of a boundary-value wave trace on an
// interval. Projecting the windowed trace on sine/cosine kernels in absolute
// time isolates each modal amplitude pair; dividing by the known source-side
// factors turns them into trigonometric moments of the driver, which are
// resummed as a Fourier series whose free constant is pinned by the silent
// part of the period.
// ---------------------------------------------------------------------------

struct mu_wave_options {
  std::size_t modes = 64;
  std::size_t grid_points = 257;
  bool override_conditions = false;
  double window_start = std::numeric_limits<double>::quiet_NaN();  // default: trace start
};

struct mu_wave_recovery {
  std::vector<double> s, mu;        // recovered driver on [0, T]
  std::vector<double> cos_moments;  // integral mu(s) cos(m pi s / ell) ds, m = 1..modes
  std::vector<double> sin_moments;
  double constant = 0;
  double ell = 0;
  double support = 0;
  std::vector<std::size_t> skipped;  // 0-based mode indices with unusable denominators
  condition_report conditions;
};

inline double mu_wave_eval(const mu_wave_recovery& rec, double s) {
  double acc = rec.constant;
  for (std::size_t m = 0; m < rec.cos_moments.size(); ++m) {
    double w = (m + 1) * pi / rec.ell;
    acc += (rec.cos_moments[m] * std::cos(w * s) + rec.sin_moments[m] * std::sin(w * s)) / rec.ell;
  }
  return acc;
}

inline mu_wave_recovery recover_mu_wave_1d(const observation_record& record, const domain& dom,
                                           const spatial_profile& f, double T,
                                           const mu_wave_options& opt = {}) {
  require(dom.shape == shape_kind::interval && dom.bc == boundary_kind::dirichlet,
          errc::unsupported_domain, "recover_mu_wave_1d: Dirichlet interval only");
  require(record.kind == observation_kind::point_trace && record.points.size() == 1,
          errc::invalid_grid, "recover_mu_wave_1d: single point trace required");
  require(record.times.size() >= 4, errc::invalid_grid, "recover_mu_wave_1d: trace too short");
  double ell = dom.l1;
  require(2 * ell - T > 1e-9 * ell, errc::constant_unpinnable,
          "recover_mu_wave_1d: support fills the period, constant cannot be pinned");

  double x0 = record.points[0][0];
  double t_begin = std::isnan(opt.window_start) ? record.times.front() : opt.window_start;

  mu_wave_recovery out;
  out.ell = ell;
  out.support = T;
  out.conditions = check_wave_recovery_conditions(dom, f, x0, T, t_begin, record.times.back(),
                                                  opt.modes);
  require(out.conditions.verdict == verdict_kind::holds || opt.override_conditions,
          errc::condition_violated, "recover_mu_wave_1d: prerequisites fail; see the report");

  double dt = record.times[1] - record.times[0];
  std::size_t i0 = 0;
  while (i0 < record.times.size() && record.times[i0] < t_begin - 0.5 * dt) ++i0;
  require(i0 < record.times.size() && std::abs(record.times[i0] - t_begin) <= 1e-9 * std::max(1.0, t_begin),
          errc::invalid_grid, "recover_mu_wave_1d: window start is not on the sample grid");
  auto S = static_cast<std::size_t>(std::llround(2 * ell / dt));
  require(S >= 8 && std::abs(S * dt - 2 * ell) <= 1e-9 * ell, errc::invalid_grid,
          "recover_mu_wave_1d: sample step must divide the period");
  require(i0 + S < record.times.size(), errc::invalid_grid,
          "recover_mu_wave_1d: trace does not cover a full period");

  // Mode-by-mode projection over exactly one period. The trapezoid rule on a
  // periodic integrand is exact for every harmonic the grid resolves.
  std::vector<double> fc(opt.modes), phi0(opt.modes);
  double denom_max = 0;
  for (std::size_t m = 0; m < opt.modes; ++m) {
    interval_mode label{static_cast<int>(m + 1)};
    fc[m] = project_f(dom, f, label);
    phi0[m] = eigenfunction_value(dom, label, {x0, 0});
    denom_max = std::max(denom_max, std::abs(fc[m] * phi0[m]));
  }
  require(denom_max >= 1e-12, errc::condition_violated,
          "recover_mu_wave_1d: source projections all vanish at the observation point");

  out.cos_moments.assign(opt.modes, 0.0);
  out.sin_moments.assign(opt.modes, 0.0);
  for (std::size_t m = 0; m < opt.modes; ++m) {
    double w = (m + 1) * pi / ell;
    double As = 0, Bs = 0;
    for (std::size_t i = 0; i <= S; ++i) {
      double weight = (i == 0 || i == S) ? 0.5 * dt : dt;
      double t = record.times[i0 + i];
      double u = record.values[i0 + i][0];
      As += weight * u * std::sin(w * t);
      Bs += weight * u * std::cos(w * t);
    }
    As /= ell;
    Bs /= ell;
    double denom = fc[m] * phi0[m];
    if (std::abs(denom) < 1e-12) {
      out.skipped.push_back(m);
      continue;
    }
    // modal amplitudes: u contributes (a sin(wt) + b cos(wt)) phi0 per mode,
    // with a = fc * integral mu cos(ws) / w and b = -fc * integral mu sin(ws) / w
    out.cos_moments[m] = As * w / denom;
    out.sin_moments[m] = -Bs * w / denom;
  }

  // Free constant pinned by the zero mean of the driver on the silent part
  // (T, 2 ell) of the period; the partial sums integrate in closed form.
  double silent = 2 * ell - T;
  double mean_partial = 0;
  for (std::size_t m = 0; m < opt.modes; ++m) {
    double w = (m + 1) * pi / ell;
    double mean_cos = -std::sin(w * T) / (w * silent);
    double mean_sin = (std::cos(w * T) - 1.0) / (w * silent);
    mean_partial += (out.cos_moments[m] * mean_cos + out.sin_moments[m] * mean_sin) / ell;
  }
  out.constant = -mean_partial;

  require(opt.grid_points >= 2, errc::invalid_grid, "recover_mu_wave_1d: output grid too small");
  out.s.resize(opt.grid_points);
  out.mu.resize(opt.grid_points);
  for (std::size_t j = 0; j < opt.grid_points; ++j) {
    out.s[j] = T * static_cast<double>(j) / static_cast<double>(opt.grid_points - 1);
    out.mu[j] = mu_wave_eval(out, out.s[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Source-shape recovery from noisy modal data of a heat solution after the
// driver has switched off. Each kept coefficient is divided by its damped
// moment factor; the cutoff balances noise amplification against the
// truncation tail of a presumed smoothness class.
// ---------------------------------------------------------------------------

struct smoothness_class {
  double ell = 1;  // spectral smoothness order
  double M = 1;    // bound on the corresponding graph norm
};

struct f_heat_options {
  double eta = 1e-6;    // noise level driving the cutoff
  double theta = 0.5;   // cutoff exponent dial, in (0, 2*ell/d)
  smoothness_class smooth;
  std::size_t n_cap = std::numeric_limits<std::size_t>::max();
};

struct f_heat_bounds_info {
  double amplification = 0;  // max over kept modes of the inverted factor
  double data = 0;           // amplification * eta
  double tail = 0;           // M / sigma_cut^ell
  double total = 0;
};

struct f_heat_recovery {
  std::vector<double> f_coeff;  // per repeated mode; zero beyond the cutoff
  std::size_t cutoff = 0;
  f_heat_bounds_info bounds;
};

// Cutoff schedule: N grows like a sublinear power of log(1/eta). The dial
// theta stays below the smoothness order; theta0 = 2 * ell / dimension.
inline std::size_t heat_cutoff_rule(double eta, double theta, double ell_s, std::size_t dim) {
  require(eta > 0 && eta < 1, errc::eta_out_of_range, "cutoff rule: eta must lie in (0, 1)");
  require(theta > 0 && theta < ell_s, errc::value_out_of_range,
          "cutoff rule: exponent dial must lie in (0, smoothness order)");
  double theta0 = 2.0 * ell_s / static_cast<double>(dim);
  double N = std::ceil(std::pow(std::log(1.0 / eta), theta / theta0));
  return static_cast<std::size_t>(std::max(1.0, N));
}

inline f_heat_bounds_info f_heat_bounds(const spectrum& sp, const time_profile& mu,
                                        double t_tilde, const smoothness_class& smooth,
                                        double eta, std::size_t cutoff) {
  require(cutoff >= 1 && cutoff < sp.repeated_count(), errc::insufficient_modes,
          "f_heat_bounds: cutoff must leave at least one discarded mode in range");
  f_heat_bounds_info b;
  for (std::size_t k = 0; k < cutoff; ++k) {
    log_scaled p = exponential_moment_log(mu, sp.sigma(k)).scale_exp(-sp.sigma(k) * t_tilde);
    require(!p.is_zero(), errc::moment_zero, "f_heat_bounds: vanishing moment factor");
    b.amplification = std::max(b.amplification, std::exp(-p.log_abs));
  }
  b.data = b.amplification * eta;
  b.tail = smooth.M / std::pow(sp.sigma(cutoff), smooth.ell);
  b.total = b.data + b.tail;
  return b;
}

inline f_heat_recovery recover_f_heat(const spectrum& sp, const time_profile& mu, double t_tilde,
                                      const std::vector<double>& u_coeff,
                                      const f_heat_options& opt) {
  double T = support_end(mu);
  require(t_tilde > T, errc::value_out_of_range,
          "recover_f_heat: modal data must postdate the driver support");
  require(!u_coeff.empty(), errc::insufficient_modes, "recover_f_heat: no modal data");
  std::size_t N = heat_cutoff_rule(opt.eta, opt.theta, opt.smooth.ell, sp.dom().dimension());
  N = std::min({N, u_coeff.size(), sp.repeated_count() - 1, opt.n_cap});
  require(N >= 1, errc::insufficient_modes, "recover_f_heat: empty cutoff");

  f_heat_recovery out;
  out.cutoff = N;
  out.f_coeff.assign(u_coeff.size(), 0.0);
  double abs_mu = integral_abs_mu(mu);
  for (std::size_t k = 0; k < N; ++k) {
    double sig = sp.sigma(k);
    log_scaled m = exponential_moment_log(mu, sig);
    require(std::abs(m.scale_exp(-sig * T).value()) > 1e-12 * abs_mu, errc::moment_zero,
            "recover_f_heat: moment vanishes at a kept mode");
    log_scaled p = m.scale_exp(-sig * t_tilde);
    out.f_coeff[k] = (log_scaled::from(u_coeff[k]) / p).value();
  }
  // The bound's smoothness constant is taken from the recovered coefficients
  // themselves (the best available surrogate for the admissible-set radius).
  double m_emp = 0;
  for (std::size_t k = 0; k < N; ++k)
    m_emp += std::pow(sp.sigma(k), 2 * opt.smooth.ell) * sq(out.f_coeff[k]);
  smoothness_class emp{opt.smooth.ell, std::sqrt(m_emp)};
  out.bounds = f_heat_bounds(sp, mu, t_tilde, emp, opt.eta, N);
  return out;
}

// ---------------------------------------------------------------------------
// Source-shape recovery from a wave snapshot (value and velocity) at the
// driver's switch-off time. Each mode yields two equations for one unknown;
// the normal-equation gain lambda (S^2 + C^2) is reported per mode, together
// with its universal lower-bound benchmark mu(0)^2 / 2 for short supports.
// ---------------------------------------------------------------------------

struct f_wave_recovery {
  std::vector<double> f_coeff;  // per repeated mode
  std::vector<double> gain;     // per distinct mode: lambda (S^2 + C^2)
  double gain_floor = 0;
  double mu0_squared = 0;
  double tail_deviation = 0;      // mean |gain - mu(0)^2| / mu(0)^2 over the last quarter
  std::vector<std::size_t> weak;  // distinct modes with gain below the benchmark
};

inline f_wave_recovery recover_f_wave(const spectrum& sp, const time_profile& mu, double T,
                                      const std::vector<double>& u_coeff,
                                      const std::vector<double>& ut_coeff,
                                      std::size_t n_max_distinct) {
  require(sp.dom().bc == boundary_kind::dirichlet, errc::unsupported_domain,
          "recover_f_wave: Dirichlet spectrum required");
  require(n_max_distinct >= 1 && n_max_distinct <= sp.distinct_count(), errc::insufficient_modes,
          "recover_f_wave: mode count exceeds the spectrum");
  std::size_t K = sp.repeated_within(n_max_distinct);
  require(u_coeff.size() >= K && ut_coeff.size() >= K, errc::insufficient_modes,
          "recover_f_wave: snapshot has fewer modes than requested");

  f_wave_recovery out;
  out.f_coeff.assign(K, 0.0);
  out.mu0_squared = sq(evaluate_mu(mu, 0.0));
  out.gain_floor = std::numeric_limits<double>::infinity();

  std::size_t k = 0;
  for (std::size_t n = 0; n < n_max_distinct; ++n) {
    double lam = sp.lambda(n);
    double w = std::sqrt(lam);
    trig_pair tm = trig_moments(mu, w, T);
    double St = tm.s / w;
    double denom = St * St + tm.c * tm.c;
    require(denom >= 1e-24, errc::condition_violated,
            "recover_f_wave: both moments vanish at a required mode");
    double J = lam * (tm.s * tm.s + tm.c * tm.c);
    out.gain.push_back(J);
    out.gain_floor = std::min(out.gain_floor, J);
    if (J < 0.5 * out.mu0_squared) out.weak.push_back(n);
    std::size_t mult = sp.modes()[n].basis.size();
    for (std::size_t r = 0; r < mult; ++r, ++k)
      out.f_coeff[k] = (St * u_coeff[k] + tm.c * ut_coeff[k]) / denom;
  }
  if (out.mu0_squared > 0) {
    std::size_t from = 3 * n_max_distinct / 4;
    double acc = 0;
    for (std::size_t n = from; n < n_max_distinct; ++n)
      acc += std::abs(out.gain[n] - out.mu0_squared) / out.mu0_squared;
    out.tail_deviation = acc / static_cast<double>(n_max_distinct - from);
  }
  return out;
}

// ---------------------------------------------------------------------------
// A driver profile invisible to the first mode: multiplying the decaying
// exponential of the lowest eigenvalue by a linear factor centered on the
// support midpoint makes the corresponding exponential moment vanish exactly.
// Paired with the first eigenfunction it produces a nontrivial source whose
// heat trace is identically zero after switch-off.
// ---------------------------------------------------------------------------

inline std::pair<time_profile, spatial_profile> build_nonuniqueness_example(const spectrum& sp,
                                                                            double T) {
  require(T > 0, errc::invalid_profile, "nonuniqueness example: support must be positive");
  double lam1 = sp.lambda(0);
  require(lam1 > 0, errc::invalid_domain,
          "nonuniqueness example: needs a positive lowest eigenvalue");
  time_profile mu = exp_linear{lam1, 0.5 * T, T};
  mode_combination f{{{sp.repeated_label(0), 1.0}}};
  return {mu, spatial_profile{f}};
}

} // namespace postsource
