#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "postsource/errors.hpp"

namespace postsource {

inline constexpr double pi = 3.14159265358979323846264338327950288;

inline double sq(double x) { return x * x; }

inline double rel_diff(double a, double b) {
  double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Signed magnitude kept as (sign, log|value|) so quantities like e^{lambda T}
// with lambda*T in the thousands stay representable.
struct log_scaled {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  static log_scaled zero() { return {}; }

  static log_scaled from(double v) {
    if (v == 0.0 || !std::isfinite(v)) {
      require(std::isfinite(v), errc::overflow_risk, "log_scaled::from: non-finite input");
      return zero();
    }
    return {std::log(std::abs(v)), v > 0 ? 1 : -1};
  }

  static log_scaled from_log(double log_abs, int sign) {
    if (sign == 0) return zero();
    return {log_abs, sign > 0 ? 1 : -1};
  }

  bool is_zero() const { return sign == 0; }

  // Overflows to +-inf / underflows to 0 like a plain double would.
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

  log_scaled operator-() const { return {log_abs, -sign}; }

  friend log_scaled operator*(const log_scaled& a, const log_scaled& b) {
    if (a.sign == 0 || b.sign == 0) return zero();
    return {a.log_abs + b.log_abs, a.sign * b.sign};
  }

  friend log_scaled operator/(const log_scaled& a, const log_scaled& b) {
    require(b.sign != 0, errc::value_out_of_range, "log_scaled: division by zero");
    if (a.sign == 0) return zero();
    return {a.log_abs - b.log_abs, a.sign * b.sign};
  }

  friend log_scaled operator+(const log_scaled& a, const log_scaled& b) {
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    const log_scaled& hi = a.log_abs >= b.log_abs ? a : b;
    const log_scaled& lo = a.log_abs >= b.log_abs ? b : a;
    double d = lo.log_abs - hi.log_abs; // <= 0
    if (hi.sign == lo.sign) return {hi.log_abs + std::log1p(std::exp(d)), hi.sign};
    double m = -std::expm1(d); // in [0, 1]
    if (m == 0.0) return zero();
    return {hi.log_abs + std::log(m), hi.sign};
  }

  friend log_scaled operator-(const log_scaled& a, const log_scaled& b) { return a + (-b); }

  log_scaled scale_exp(double log_factor) const {
    if (sign == 0) return zero();
    return {log_abs + log_factor, sign};
  }
};

namespace detail {

// phi1m(z) = (1 - e^{-z}) / z
inline double phi1m(double z) {
  if (std::abs(z) < 1e-5) return 1.0 - z / 2 + z * z / 6 - z * z * z / 24;
  return -std::expm1(-z) / z;
}

// chi(z) = (e^{-z}(1+z) - 1) / z^2
inline double chi(double z) {
  if (std::abs(z) < 1e-2) {
    // -1/2 + z/3 - z^2/8 + z^3/30 - z^4/144 + z^5/840
    return -0.5 + z * (1.0 / 3 + z * (-0.125 + z * (1.0 / 30 + z * (-1.0 / 144 + z / 840))));
  }
  return ((1.0 + z) * std::expm1(-z) + z) / (z * z);
}

// phi1p(z) = (e^z - 1) / z
inline double phi1p(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2 + z * z / 6 + z * z * z / 24;
  return std::expm1(z) / z;
}

// psi(z) = (e^z(z-1) + 1) / z^2
inline double psi(double z) {
  if (std::abs(z) < 1e-2) {
    return 0.5 + z * (1.0 / 3 + z * (0.125 + z * (1.0 / 30 + z * (1.0 / 144 + z / 840))));
  }
  return ((z - 1.0) * std::expm1(z) + z) / (z * z);
}

} // namespace detail

// integral_{s0}^{s1} e^{lambda (s - s1)} (alpha + beta s) ds, stable for lambda >= 0.
inline double exp_linear_integral_right(double lambda, double s0, double s1, double alpha,
                                        double beta) {
  double h = s1 - s0;
  double z = lambda * h;
  return (alpha + beta * s1) * h * detail::phi1m(z) + beta * h * h * detail::chi(z);
}

// integral_{s0}^{s1} e^{lambda (s - s0)} (alpha + beta s) ds, stable for lambda <= 0.
inline double exp_linear_integral_left(double lambda, double s0, double s1, double alpha,
                                       double beta) {
  double h = s1 - s0;
  double z = lambda * h;
  return (alpha + beta * s0) * h * detail::phi1p(z) + beta * h * h * detail::psi(z);
}

// integral_{s0}^{s1} (alpha + beta s) sin(omega (T - s)) ds and the cosine twin.
// Requires omega bounded away from zero; callers use omega = sqrt(lambda_n) >= pi-ish.
struct trig_pair {
  double s = 0; // against sin(omega (T - s))
  double c = 0; // against cos(omega (T - s))
};

inline trig_pair trig_linear_integral(double omega, double T, double s0, double s1, double alpha,
                                      double beta) {
  require(omega > 1e-12, errc::value_out_of_range, "trig_linear_integral: omega too small");
  double v0 = T - s0, v1 = T - s1; // v1 <= v0
  double mid = 0.5 * (v0 + v1), half = 0.5 * (v0 - v1);
  // integral sin(omega v) dv over [v1, v0]
  double int_sin = 2.0 * std::sin(omega * mid) * std::sin(omega * half) / omega;
  double int_cos = 2.0 * std::cos(omega * mid) * std::sin(omega * half) / omega;
  auto Fs = [&](double v) { return (std::sin(omega * v) - omega * v * std::cos(omega * v)) / (omega * omega); };
  auto Fc = [&](double v) { return (std::cos(omega * v) + omega * v * std::sin(omega * v)) / (omega * omega); };
  double int_v_sin = Fs(v0) - Fs(v1);
  double int_v_cos = Fc(v0) - Fc(v1);
  double a = alpha + beta * T, b = beta;
  trig_pair out;
  out.s = a * int_sin - b * int_v_sin;
  out.c = a * int_cos - b * int_v_cos;
  return out;
}

// Gauss-Legendre rule on [-1, 1]; nodes by Newton iteration on P_n.
struct gl_rule {
  std::vector<double> x;
  std::vector<double> w;
};

inline const gl_rule& gl(int order) {
  static std::map<int, gl_rule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  require(order >= 1 && order <= 256, errc::value_out_of_range, "gl: unsupported order");
  gl_rule r;
  r.x.resize(order);
  r.w.resize(order);
  int m = (order + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(pi * (i + 0.75) / (order + 0.5));
    double pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = order * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[order - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.w[i] = w;
    r.w[order - 1 - i] = w;
  }
  return cache.emplace(order, std::move(r)).first->second;
}

template <class F>
double gl_panel(F&& f, double a, double b, const gl_rule& r) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0;
  for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(mid + half * r.x[i]);
  return acc * half;
}

template <class F>
double gl_composite(F&& f, double a, double b, int panels, int order = 8) {
  const gl_rule& r = gl(order);
  double acc = 0;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) acc += gl_panel(f, a + p * h, a + (p + 1) * h, r);
  return acc;
}

struct quad_result {
  double value = 0;
  double est_error = 0;
  int panels = 0;
};

// Composite Gauss-Legendre with panel doubling until two successive refinements
// agree to rel_tol; abs_floor is an absolute error floor that lets integrals
// which are tiny by cancellation settle without chasing impossible digits.
template <class F>
quad_result integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-12,
                               double abs_floor = 0.0, int init_panels = 4,
                               int max_panels = 1 << 15, int order = 8) {
  if (a == b) return {0.0, 0.0, 0};
  int panels = init_panels;
  double prev = gl_composite(f, a, b, panels, order);
  while (panels <= max_panels) {
    panels *= 2;
    double cur = gl_composite(f, a, b, panels, order);
    double err = std::abs(cur - prev);
    if (err <= std::max(rel_tol * std::abs(cur), abs_floor) || (cur == 0.0 && err == 0.0))
      return {cur, err, panels};
    prev = cur;
  }
  fail(errc::quadrature_failure, "integrate_adaptive: no convergence after panel doubling");
}

// Best rational p/q approximating x with q <= q_max (continued fractions);
// returns the convergent and its error.
struct rational_approx {
  long long p = 0;
  long long q = 1;
  double err = 0;
};

inline rational_approx nearest_rational(double x, long long q_max) {
  require(q_max >= 1, errc::value_out_of_range, "nearest_rational: q_max < 1");
  long long p_prev = 1, q_prev = 0;
  long long p_cur = static_cast<long long>(std::floor(x)), q_cur = 1;
  double frac = x - std::floor(x);
  rational_approx best{p_cur, 1, std::abs(x - static_cast<double>(p_cur))};
  for (int iter = 0; iter < 64 && q_cur <= q_max; ++iter) {
    double err = std::abs(x - static_cast<double>(p_cur) / static_cast<double>(q_cur));
    if (err < best.err) best = {p_cur, q_cur, err};
    if (frac < 1e-18) break;
    double inv = 1.0 / frac;
    double a_f = std::floor(inv);
    if (a_f > 9e17) break;
    long long a = static_cast<long long>(a_f);
    frac = inv - a_f;
    long long p_next = a * p_cur + p_prev;
    long long q_next = a * q_cur + q_prev;
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p_next;
    q_cur = q_next;
  }
  return best;
}

inline double l2_norm(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double median_inplace(std::vector<double>& v) {
  require(!v.empty(), errc::value_out_of_range, "median of empty set");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace postsource
