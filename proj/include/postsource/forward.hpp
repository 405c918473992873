#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "postsource/errors.hpp"
#include "postsource/numerics.hpp"
#include "postsource/sources.hpp"
#include "postsource/spectra.hpp"

namespace postsource {

enum class equation_kind { heat, wave };

// Truncated eigenfunction-expansion solution of the driven problem
// (zero initial and boundary data, right side mu(t) f(x)) or of the
// homogeneous comparison problem (heat: initial value f; wave: initial
// velocity f). Modal sums always run lowest mode first.
class spectral_solution {
public:
  spectral_solution(spectrum sp, equation_kind eq, std::optional<time_profile> mu,
                    const spatial_profile& f, std::size_t n_max_distinct)
      : sp_(std::move(sp)), eq_(eq), mu_(std::move(mu)) {
    require(n_max_distinct >= 1 && n_max_distinct <= sp_.distinct_count(),
            errc::insufficient_modes, "spectral_solution: n_max exceeds the enumerated spectrum");
    if (eq_ == equation_kind::wave)
      require(sp_.dom().bc == boundary_kind::dirichlet, errc::invalid_domain,
              "wave solutions need a positive spectrum (Dirichlet)");
    std::size_t k = 0;
    while (k < sp_.repeated_count() && sp_.distinct_of_repeated(k) < n_max_distinct) ++k;
    n_modes_ = k;
    f_coeff_.reserve(n_modes_);
    for (std::size_t i = 0; i < n_modes_; ++i)
      f_coeff_.push_back(project_f(sp_.dom(), f, sp_.repeated_label(i)));
    if (mu_) {
      validate_time_profile(*mu_);
      t_support_ = support_end(*mu_);
      if (eq_ == equation_kind::heat) {
        heat_moment_.reserve(n_modes_);
        for (std::size_t i = 0; i < n_modes_; ++i)
          heat_moment_.push_back(exponential_moment_log(*mu_, sp_.sigma(i)));
      } else {
        wave_ab_.reserve(n_modes_);
        for (std::size_t i = 0; i < n_modes_; ++i) {
          double w = std::sqrt(sp_.sigma(i));
          trig_pair tm = trig_moments(*mu_, w, t_support_);
          // rotate the (T - s) kernels to absolute phase: c(t) = A sin(wt) + B cos(wt)
          double cos_s = std::sin(w * t_support_) * tm.s + std::cos(w * t_support_) * tm.c;
          double sin_s = std::sin(w * t_support_) * tm.c - std::cos(w * t_support_) * tm.s;
          wave_ab_.push_back({f_coeff_[i] * cos_s / w, -f_coeff_[i] * sin_s / w});
        }
      }
    }
  }

  const spectrum& sp() const { return sp_; }
  equation_kind equation() const { return eq_; }
  bool homogeneous() const { return !mu_.has_value(); }
  const time_profile& driver() const {
    require(mu_.has_value(), errc::invalid_profile, "homogeneous solution has no driver");
    return *mu_;
  }
  double driver_support_end() const { return t_support_; }
  std::size_t mode_count() const { return n_modes_; }
  double sigma(std::size_t k) const { return sp_.sigma(k); }
  double f_coefficient(std::size_t k) const { return f_coeff_.at(k); }

  // c_k(t) = gamma_k e^{-sigma_k t} for t past the driver support (heat).
  log_scaled heat_posterior_gamma(std::size_t k) const {
    require(eq_ == equation_kind::heat && mu_, errc::invalid_profile,
            "posterior gamma: driven heat solutions only");
    return heat_moment_.at(k) * log_scaled::from(f_coeff_[k] == 0 ? 0.0 : f_coeff_[k]);
  }

  struct wave_posterior {
    double a = 0, b = 0; // c_k(t) = a sin(w t) + b cos(w t), f-coefficient folded in
  };
  wave_posterior wave_posterior_ab(std::size_t k) const {
    require(eq_ == equation_kind::wave && mu_, errc::invalid_profile,
            "posterior a,b: driven wave solutions only");
    return wave_ab_.at(k);
  }

  double coefficient(std::size_t k, double t) const {
    require(t >= 0, errc::value_out_of_range, "coefficient: negative time");
    double sigma = sp_.sigma(k);
    double fc = f_coeff_.at(k);
    if (!mu_) {
      if (eq_ == equation_kind::heat) return fc * std::exp(-sigma * t);
      double w = std::sqrt(sigma);
      return fc * std::sin(w * t) / w;
    }
    if (eq_ == equation_kind::wave) {
      double w = std::sqrt(sigma);
      if (t >= t_support_) {
        const auto& ab = wave_ab_[k];
        return ab.a * std::sin(w * t) + ab.b * std::cos(w * t);
      }
      return fc * trig_moments(*mu_, w, t).s / w;
    }
    if (fc == 0) return 0;
    if (t >= t_support_) return fc * heat_moment_[k].scale_exp(-sigma * t).value();
    return fc * heat_duhamel(sigma, t);
  }

  // time derivative of c_k; wave solutions only
  double coefficient_dt(std::size_t k, double t) const {
    require(eq_ == equation_kind::wave, errc::invalid_profile,
            "coefficient_dt: wave solutions only");
    require(t >= 0, errc::value_out_of_range, "coefficient_dt: negative time");
    double w = std::sqrt(sp_.sigma(k));
    double fc = f_coeff_.at(k);
    if (!mu_) return fc * std::cos(w * t);
    if (t >= t_support_) {
      const auto& ab = wave_ab_[k];
      return w * (ab.a * std::cos(w * t) - ab.b * std::sin(w * t));
    }
    return fc * trig_moments(*mu_, w, t).c;
  }

  double value(const point& x, double t) const {
    double acc = 0;
    for (std::size_t k = 0; k < n_modes_; ++k)
      acc += coefficient(k, t) * eigenfunction_value(sp_.dom(), sp_.repeated_label(k), x);
    return acc;
  }

  double value_dt(const point& x, double t) const {
    double acc = 0;
    for (std::size_t k = 0; k < n_modes_; ++k)
      acc += coefficient_dt(k, t) * eigenfunction_value(sp_.dom(), sp_.repeated_label(k), x);
    return acc;
  }

  // outward normal derivative of the field at a boundary point
  double flux(const point& x, double t) const {
    double acc = 0;
    for (std::size_t k = 0; k < n_modes_; ++k)
      acc += coefficient(k, t) *
             eigenfunction_normal_derivative(sp_.dom(), sp_.repeated_label(k), x);
    return acc;
  }

private:
  double heat_duhamel(double sigma, double t) const {
    double upto = std::min(t, t_support_);
    if (upto <= 0) return 0;
    if (const auto* e = std::get_if<exp_linear>(&*mu_)) {
      double nu = sigma - e->lambda1;
      double t1 = std::min(upto, e->T);
      if (nu >= 0)
        return std::exp(-sigma * (t - t1) - e->lambda1 * t1) *
               exp_linear_integral_right(nu, 0, t1, -e->c, 1);
      return std::exp(-sigma * t) * exp_linear_integral_left(nu, 0, t1, -e->c, 1);
    }
    if (auto pieces = linear_pieces(*mu_, upto)) {
      double acc = 0;
      for (const auto& p : *pieces)
        acc += std::exp(-sigma * (t - p.s1)) *
               exp_linear_integral_right(sigma, p.s0, p.s1, p.alpha, p.beta);
      return acc;
    }
    // smooth kinds: the moment routine owns the peak-anchored windowing
    return exponential_moment_log(*mu_, sigma, upto).scale_exp(-sigma * t).value();
  }

  spectrum sp_;
  equation_kind eq_;
  std::optional<time_profile> mu_;
  double t_support_ = 0;
  std::size_t n_modes_ = 0;
  std::vector<double> f_coeff_;
  std::vector<log_scaled> heat_moment_;  // m(sigma_k), driven heat
  std::vector<wave_posterior> wave_ab_;  // driven wave
};

inline spectral_solution solve_heat(const spectrum& sp, const spatial_profile& f,
                                    const time_profile& mu, std::size_t n_max_distinct) {
  return spectral_solution(sp, equation_kind::heat, mu, f, n_max_distinct);
}

inline spectral_solution solve_wave(const spectrum& sp, const spatial_profile& f,
                                    const time_profile& mu, std::size_t n_max_distinct) {
  return spectral_solution(sp, equation_kind::wave, mu, f, n_max_distinct);
}

inline spectral_solution solve_homogeneous(const spectrum& sp, const spatial_profile& f,
                                           equation_kind eq, std::size_t n_max_distinct) {
  return spectral_solution(sp, eq, std::nullopt, f, n_max_distinct);
}

// ---- observations ----

enum class observation_kind { point_trace, boundary_flux };

struct observation_grid {
  double T1 = 0;
  double T2 = 1;
  double dt = 0.01;
};

struct noise_spec {
  enum class model_kind { none, gaussian, uniform };
  model_kind model = model_kind::none;
  double delta = 0;   // amplitude relative to max |exact value| of the record
  std::uint64_t seed = 0;
};

struct observation_record {
  observation_kind kind = observation_kind::point_trace;
  std::vector<double> times;
  std::vector<point> points;
  std::vector<std::vector<double>> values; // [time][point]
  bool post_incident = false;
  noise_spec noise;
  bool truncation_warning = false;
};

inline std::vector<double> make_time_grid(const observation_grid& g) {
  require(g.dt > 0 && g.T2 > g.T1 && g.T1 >= 0, errc::invalid_grid,
          "observation grid: need T1 >= 0, T2 > T1, dt > 0");
  std::vector<double> t;
  std::size_t n = static_cast<std::size_t>(std::floor((g.T2 - g.T1) / g.dt + 1e-9)) + 1;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back(g.T1 + static_cast<double>(i) * g.dt);
  return t;
}

inline observation_record observe(const spectral_solution& sol, observation_kind kind,
                                  const std::vector<point>& pts, const observation_grid& grid,
                                  const noise_spec& noise = {}) {
  require(!pts.empty(), errc::invalid_grid, "observe: need at least one sample point");
  observation_record rec;
  rec.kind = kind;
  rec.points = pts;
  rec.times = make_time_grid(grid);
  rec.noise = noise;
  rec.post_incident = !sol.homogeneous() && grid.T1 > sol.driver_support_end() - 1e-12;

  // spatial factors once per point, modal coefficients once per time
  std::vector<std::vector<double>> phi(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    phi[p].reserve(sol.mode_count());
    for (std::size_t k = 0; k < sol.mode_count(); ++k) {
      const auto& label = sol.sp().repeated_label(k);
      phi[p].push_back(kind == observation_kind::point_trace
                           ? eigenfunction_value(sol.sp().dom(), label, pts[p])
                           : eigenfunction_normal_derivative(sol.sp().dom(), label, pts[p]));
    }
  }
  rec.values.assign(rec.times.size(), std::vector<double>(pts.size(), 0.0));
  std::vector<double> c(sol.mode_count());
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    for (std::size_t k = 0; k < sol.mode_count(); ++k) c[k] = sol.coefficient(k, rec.times[i]);
    for (std::size_t p = 0; p < pts.size(); ++p) {
      double acc = 0;
      for (std::size_t k = 0; k < sol.mode_count(); ++k) acc += c[k] * phi[p][k];
      rec.values[i][p] = acc;
    }
    if (i == 0) {
      std::size_t last = sol.mode_count() - 1;
      for (std::size_t p = 0; p < pts.size(); ++p) {
        double tail = std::abs(c[last] * phi[p][last]);
        if (tail > 1e-8 * std::max(std::abs(rec.values[0][p]), 1e-300))
          rec.truncation_warning = true;
      }
    }
  }

  if (noise.model != noise_spec::model_kind::none && noise.delta > 0) {
    double maxabs = 0;
    for (const auto& row : rec.values)
      for (double v : row) maxabs = std::max(maxabs, std::abs(v));
    double amp = noise.delta * maxabs;
    std::mt19937_64 rng(noise.seed);
    if (noise.model == noise_spec::model_kind::gaussian) {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (auto& row : rec.values)
        for (double& v : row) v += amp * dist(rng);
    } else {
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (auto& row : rec.values)
        for (double& v : row) v += amp * dist(rng);
    }
  }
  return rec;
}

// u(x, t) = integral_0^t mu(t - s) v(x, s) ds for a homogeneous comparison
// solution v; the independent cross-check of the driven solver. Adaptive
// panel doubling; failure to settle reports the grid as too coarse.
inline std::vector<double> duhamel_convolve(const spectral_solution& v, const time_profile& mu,
                                            const std::vector<double>& times, const point& x) {
  require(v.homogeneous(), errc::invalid_profile,
          "duhamel_convolve: expects the homogeneous comparison solution");
  double ts = support_end(mu);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    require(t >= 0, errc::value_out_of_range, "duhamel_convolve: negative time");
    double lo = std::max(0.0, t - ts);
    if (t <= 0 || lo >= t) {
      out.push_back(0);
      continue;
    }
    try {
      out.push_back(integrate_adaptive(
                        [&](double s) { return evaluate_mu(mu, t - s) * v.value(x, s); }, lo, t,
                        1e-7, 1e-14, 8, 1 << 13)
                        .value);
    } catch (const error& e) {
      if (e.code() == errc::quadrature_failure)
        fail(errc::grid_too_coarse, "duhamel_convolve: refinement did not settle");
      throw;
    }
  }
  return out;
}

} // namespace postsource
