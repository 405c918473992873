#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "postsource/errors.hpp"
#include "postsource/numerics.hpp"
#include "postsource/spectra.hpp"

namespace postsource {

// ---- time profiles: mu(t), compactly supported in [0, support_end) ----

enum class theta_kind { linear, cosine };

// mu(t) = theta(t - t0): full strength through t0, decayed to zero by t0 + a.
struct step_decay {
  double t0 = 0;
  double a = 0.5;
  theta_kind theta = theta_kind::linear;
};

// mu(t) = T - t on [0, T).
struct ramp {
  double T = 1;
};

// C-infinity bump, peak 1 at `center`, support [center - width, center + width] inside (0, T).
struct bump_profile {
  double T = 1;
  double center = 0.5;
  double width = 0.25;
};

// Piecewise linear through (knots, values); zero outside the knot range and beyond T.
struct table_profile {
  std::vector<double> knots;
  std::vector<double> values;
  double T = 1;
};

// mu(t) = e^{-lambda1 t}(t - c) on [0, T); the vanishing-moment construction.
struct exp_linear {
  double lambda1 = 0;
  double c = 0;
  double T = 1;
};

using time_profile = std::variant<step_decay, ramp, bump_profile, table_profile, exp_linear>;

inline void validate_time_profile(const time_profile& mu) {
  std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, step_decay>) {
          require(m.a > 0 && m.t0 >= 0, errc::invalid_profile, "step_decay: need a > 0, t0 >= 0");
        } else if constexpr (std::is_same_v<M, ramp>) {
          require(m.T > 0, errc::invalid_profile, "ramp: need T > 0");
        } else if constexpr (std::is_same_v<M, bump_profile>) {
          require(m.T > 0 && m.width > 0, errc::invalid_profile, "bump: need T, width > 0");
          require(m.center - m.width >= 0 && m.center + m.width <= m.T, errc::invalid_profile,
                  "bump: support must sit inside [0, T]");
        } else if constexpr (std::is_same_v<M, table_profile>) {
          require(m.T > 0 && m.knots.size() >= 2 && m.knots.size() == m.values.size(),
                  errc::invalid_profile, "table: need matching knots/values, at least 2");
          for (std::size_t i = 0; i + 1 < m.knots.size(); ++i)
            require(m.knots[i] < m.knots[i + 1], errc::invalid_profile,
                    "table: knots must increase strictly");
          require(m.knots.front() >= 0 && m.knots.back() <= m.T, errc::invalid_profile,
                  "table: knots must lie in [0, T]");
        } else if constexpr (std::is_same_v<M, exp_linear>) {
          require(m.T > 0, errc::invalid_profile, "exp_linear: need T > 0");
        }
      },
      mu);
}

inline double support_end(const time_profile& mu) {
  return std::visit(
      [](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, step_decay>) return m.t0 + m.a;
        else if constexpr (std::is_same_v<M, bump_profile>)
          return std::min(m.T, m.center + m.width);
        else if constexpr (std::is_same_v<M, table_profile>)
          return std::min(m.T, m.knots.back());
        else return m.T;
      },
      mu);
}

inline double evaluate_mu(const time_profile& mu, double t) {
  if (t < 0 || t >= support_end(mu)) return 0;
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, step_decay>) {
          double s = t - m.t0;
          if (s <= 0) return 1;
          if (s >= m.a) return 0;
          if (m.theta == theta_kind::linear) return 1 - s / m.a;
          return 0.5 * (1 + std::cos(pi * s / m.a));
        } else if constexpr (std::is_same_v<M, ramp>) {
          return m.T - t;
        } else if constexpr (std::is_same_v<M, bump_profile>) {
          double r = (t - m.center) / m.width;
          if (std::abs(r) >= 1) return 0;
          return std::exp(1.0 - 1.0 / (1.0 - r * r));
        } else if constexpr (std::is_same_v<M, table_profile>) {
          if (t < m.knots.front() || t > m.knots.back()) return 0;
          auto it = std::upper_bound(m.knots.begin(), m.knots.end(), t);
          if (it == m.knots.begin()) return m.values.front();
          std::size_t i = static_cast<std::size_t>(it - m.knots.begin());
          if (i == m.knots.size()) return m.values.back();
          double w = (t - m.knots[i - 1]) / (m.knots[i] - m.knots[i - 1]);
          return (1 - w) * m.values[i - 1] + w * m.values[i];
        } else { // exp_linear
          return std::exp(-m.lambda1 * t) * (t - m.c);
        }
      },
      mu);
}

// One linear piece mu(s) = alpha + beta * s on [s0, s1].
struct linear_piece {
  double s0 = 0, s1 = 0, alpha = 0, beta = 0;
};

// Exact piecewise-linear decomposition up to `upto`; empty optional for the
// genuinely smooth kinds (bump, cosine step decay, exp_linear).
inline std::optional<std::vector<linear_piece>> linear_pieces(const time_profile& mu,
                                                              double upto) {
  double end = std::min(upto, support_end(mu));
  if (end <= 0) return std::vector<linear_piece>{};
  return std::visit(
      [&](const auto& m) -> std::optional<std::vector<linear_piece>> {
        using M = std::decay_t<decltype(m)>;
        std::vector<linear_piece> out;
        if constexpr (std::is_same_v<M, step_decay>) {
          if (m.theta != theta_kind::linear) return std::nullopt;
          if (end > 0) out.push_back({0, std::min(end, m.t0), 1, 0});
          if (end > m.t0)
            out.push_back({m.t0, std::min(end, m.t0 + m.a), 1 + m.t0 / m.a, -1 / m.a});
        } else if constexpr (std::is_same_v<M, ramp>) {
          out.push_back({0, end, m.T, -1});
        } else if constexpr (std::is_same_v<M, table_profile>) {
          auto emit = [&](double a, double b, double va, double vb) {
            if (a >= end || b <= a) return;
            double bb = std::min(b, end);
            double beta = (vb - va) / (b - a);
            out.push_back({a, bb, va - beta * a, beta});
          };
          for (std::size_t i = 0; i + 1 < m.knots.size(); ++i)
            emit(m.knots[i], m.knots[i + 1], m.values[i], m.values[i + 1]);
        } else {
          return std::nullopt;
        }
        out.erase(std::remove_if(out.begin(), out.end(),
                                 [](const linear_piece& p) { return p.s1 <= p.s0; }),
                  out.end());
        return out;
      },
      mu);
}

// integral of mu over [a, b] (clamped to the support), exact for piecewise kinds.
inline double integrate_mu(const time_profile& mu, double a, double b) {
  double lo = std::max(a, 0.0), hi = std::min(b, support_end(mu));
  if (hi <= lo) return 0;
  if (auto pieces = linear_pieces(mu, hi)) {
    double acc = 0;
    for (const auto& p : *pieces) {
      double s0 = std::max(p.s0, lo), s1 = std::min(p.s1, hi);
      if (s1 <= s0) continue;
      acc += p.alpha * (s1 - s0) + 0.5 * p.beta * (s1 * s1 - s0 * s0);
    }
    return acc;
  }
  return integrate_adaptive([&](double s) { return evaluate_mu(mu, s); }, lo, hi, 1e-12).value;
}

inline double integral_abs_mu(const time_profile& mu) {
  double end = support_end(mu);
  return integrate_adaptive([&](double s) { return std::abs(evaluate_mu(mu, s)); }, 0.0, end,
                            1e-10, 0.0, 8)
      .value;
}

// m(lambda) = integral_0^upper e^{lambda s} mu(s) ds in (sign, log) form; exact
// per linear piece, windowed adaptive quadrature for the smooth kinds. Stable
// for lambda * support_end far beyond double overflow.
inline log_scaled exponential_moment_log(const time_profile& mu, double lambda,
                                         std::optional<double> upper = std::nullopt) {
  double U = upper.value_or(support_end(mu));
  double end = std::min(U, support_end(mu));
  if (end <= 0) return log_scaled::zero();

  if (const auto* e = std::get_if<exp_linear>(&mu)) {
    double nu = lambda - e->lambda1;
    double t1 = end;
    if (nu >= 0) {
      double j = exp_linear_integral_right(nu, 0, t1, -e->c, 1);
      return log_scaled::from(j).scale_exp(nu * t1);
    }
    return log_scaled::from(exp_linear_integral_left(nu, 0, t1, -e->c, 1));
  }

  if (auto pieces = linear_pieces(mu, end)) {
    if (lambda >= 0) {
      // shifted integrand e^{lambda (s - end)} mu(s), every term bounded by |mu|
      double shifted = 0;
      for (const auto& p : *pieces)
        shifted += std::exp(lambda * (p.s1 - end)) *
                   exp_linear_integral_right(lambda, p.s0, p.s1, p.alpha, p.beta);
      return log_scaled::from(shifted).scale_exp(lambda * end);
    }
    double plain = 0;
    for (const auto& p : *pieces)
      plain += std::exp(lambda * p.s0) *
               exp_linear_integral_left(lambda, p.s0, p.s1, p.alpha, p.beta);
    return log_scaled::from(plain);
  }

  // smooth kinds (bump only): the integrand e^{lambda s} mu(s) can peak well inside
  // [0, end] because mu's log-slope fights the kernel near the support edge, so a
  // window anchored at s = end misses the mass. Anchor at the true peak of
  // g(s) = lambda (s - end) + log mu(s), which is concave here, keep 45 e-foldings
  // each side, and factor the peak out so the quadrature sees an O(1) integrand.
  const auto* bp = std::get_if<bump_profile>(&mu);
  require(bp != nullptr, errc::invalid_profile, "exponential_moment_log: unhandled profile kind");
  double lo = std::max(0.0, bp->center - bp->width);
  double hi = std::min(end, bp->center + bp->width);
  if (lo >= hi) return log_scaled::zero();
  auto g = [&](double s) {
    double v = evaluate_mu(mu, s);
    return v > 0 ? lambda * (s - end) + std::log(v) : -std::numeric_limits<double>::infinity();
  };
  double a = lo, b = hi;
  for (int it = 0; it < 140 && b - a > 1e-16 * (std::abs(a) + std::abs(b)); ++it) {
    double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (g(m1) < g(m2)) a = m1;
    else b = m2;
  }
  double s_peak = 0.5 * (a + b), K = g(s_peak);
  if (!std::isfinite(K)) return log_scaled::zero();
  auto drop_edge = [&](double far) {  // first point toward `far` where g < K - 45
    double in = s_peak, out = far;
    for (int it = 0; it < 80; ++it) {
      double m = 0.5 * (in + out);
      (g(m) > K - 45 ? in : out) = m;
    }
    return out;
  };
  double wl = g(lo) > K - 45 ? lo : drop_edge(lo);
  double wr = g(hi) > K - 45 ? hi : drop_edge(hi);
  double scaled = integrate_adaptive([&](double s) { return std::exp(g(s) - K); }, wl, wr, 1e-12,
                                     1e-30 * (wr - wl), 8)
                      .value;
  return log_scaled::from(scaled).scale_exp(lambda * end + K);
}

// Plain-double moment; refuses exponents past the overflow guard.
inline double exponential_moment(const time_profile& mu, double lambda,
                                 std::optional<double> upper = std::nullopt) {
  double U = upper.value_or(support_end(mu));
  require(lambda * std::min(U, support_end(mu)) <= 700.0, errc::overflow_risk,
          "exponential_moment: lambda * T beyond the double guard; use the log form");
  return exponential_moment_log(mu, lambda, upper).value();
}

// S = integral mu(s) sin(omega (T - s)) ds, C = likewise with cosine, s in [0, min(T, support)].
inline trig_pair trig_moments(const time_profile& mu, double omega, double T) {
  require(omega > 0, errc::value_out_of_range, "trig_moments: omega must be positive");
  double end = std::min(T, support_end(mu));
  if (end <= 0) return {};
  if (auto pieces = linear_pieces(mu, end)) {
    trig_pair acc;
    for (const auto& p : *pieces) {
      trig_pair t = trig_linear_integral(omega, T, p.s0, p.s1, p.alpha, p.beta);
      acc.s += t.s;
      acc.c += t.c;
    }
    return acc;
  }
  int init = std::max<int>(8, static_cast<int>(omega * end / 4.0) + 1);
  trig_pair out;
  out.s = integrate_adaptive(
              [&](double s) { return evaluate_mu(mu, s) * std::sin(omega * (T - s)); }, 0.0, end,
              1e-12, 1e-14, init)
              .value;
  out.c = integrate_adaptive(
              [&](double s) { return evaluate_mu(mu, s) * std::cos(omega * (T - s)); }, 0.0, end,
              1e-12, 1e-14, init)
              .value;
  return out;
}

// ---- spatial profiles: f on the domain ----

// Finite combination sum c_i phi_{label_i}; projections are exact by orthonormality.
struct mode_combination {
  std::vector<std::pair<mode_label, double>> terms;
};

// C-infinity bump, peak 1, support = closed ball (interval: |x - center[0]| <= radius).
struct smooth_bump {
  point center{0.5, 0};
  double radius = 0.25;
};

// Interval-only polynomial sum coeffs[i] * x^i.
struct poly1d {
  std::vector<double> coeffs;
};

// Arbitrary callable; internal/testing use, not serializable.
struct callable_profile {
  std::function<double(const point&)> f;
};

using spatial_profile = std::variant<mode_combination, smooth_bump, poly1d, callable_profile>;

inline bool labels_equal(const mode_label& a, const mode_label& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ia = std::get_if<interval_mode>(&a)) return ia->n == std::get<interval_mode>(b).n;
  if (const auto* ra = std::get_if<rectangle_mode>(&a)) {
    const auto& rb = std::get<rectangle_mode>(b);
    return ra->m1 == rb.m1 && ra->m2 == rb.m2;
  }
  const auto& da = std::get<disk_mode>(a);
  const auto& db = std::get<disk_mode>(b);
  return da.order == db.order && da.rank == db.rank && da.branch == db.branch;
}

inline double evaluate_f(const domain& dom, const spatial_profile& f, const point& x) {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, mode_combination>) {
          double acc = 0;
          for (const auto& [label, c] : p.terms) acc += c * eigenfunction_value(dom, label, x);
          return acc;
        } else if constexpr (std::is_same_v<P, smooth_bump>) {
          double r2;
          if (dom.shape == shape_kind::interval) r2 = sq((x[0] - p.center[0]) / p.radius);
          else r2 = (sq(x[0] - p.center[0]) + sq(x[1] - p.center[1])) / sq(p.radius);
          if (r2 >= 1) return 0;
          return std::exp(1.0 - 1.0 / (1.0 - r2));
        } else if constexpr (std::is_same_v<P, poly1d>) {
          double acc = 0;
          for (std::size_t i = p.coeffs.size(); i-- > 0;) acc = acc * x[0] + p.coeffs[i];
          return acc;
        } else {
          return p.f(x);
        }
      },
      f);
}

// (f, phi_label); orthonormality shortcut for mode combinations, quadrature otherwise.
inline double project_f(const domain& dom, const spatial_profile& f, const mode_label& label) {
  if (const auto* mc = std::get_if<mode_combination>(&f)) {
    double acc = 0;
    for (const auto& [lab, c] : mc->terms)
      if (labels_equal(lab, label)) acc += c;
    return acc;
  }
  return project_callable(
      dom, [&](const point& x) { return evaluate_f(dom, f, x); }, label);
}

// Coefficients for every repeated mode of the spectrum, lowest mode first.
inline std::vector<double> project_all(const spectrum& sp, const spatial_profile& f) {
  std::vector<double> out;
  out.reserve(sp.repeated_count());
  for (std::size_t k = 0; k < sp.repeated_count(); ++k)
    out.push_back(project_f(sp.dom(), f, sp.repeated_label(k)));
  return out;
}

inline double l2_norm_f(const domain& dom, const spatial_profile& f) {
  if (const auto* mc = std::get_if<mode_combination>(&f)) {
    double acc = 0;
    for (const auto& [lab, c] : mc->terms) acc += c * c;
    return std::sqrt(acc);
  }
  require(dom.shape != shape_kind::disk, errc::unsupported_domain,
          "l2_norm_f: disk supports mode combinations only");
  auto f2 = [&](const point& x) { return sq(evaluate_f(dom, f, x)); };
  if (dom.shape == shape_kind::interval)
    return std::sqrt(
        integrate_adaptive([&](double x) { return f2({x, 0}); }, 0.0, dom.l1, 1e-12).value);
  auto inner = [&](double x1) {
    return integrate_adaptive([&](double x2) { return f2({x1, x2}); }, 0.0, dom.l2, 1e-11).value;
  };
  return std::sqrt(integrate_adaptive(inner, 0.0, dom.l1, 1e-10).value);
}

} // namespace postsource
