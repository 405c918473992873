#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "postsource/errors.hpp"
#include "postsource/numerics.hpp"
#include "postsource/sources.hpp"
#include "postsource/spectra.hpp"

namespace postsource {

enum class verdict_kind { holds, fails, undecidable };

inline const char* verdict_name(verdict_kind v) {
  switch (v) {
    case verdict_kind::holds: return "holds";
    case verdict_kind::fails: return "fails";
    case verdict_kind::undecidable: return "undecidable";
  }
  return "?";
}

// Machine-checkable prerequisite with its numeric evidence. A "fails" verdict
// always carries offending indices or a convergent-majorant certificate in
// `evidence`; "undecidable" marks questions finite data cannot settle.
struct condition_report {
  std::string id;
  verdict_kind verdict = verdict_kind::undecidable;
  double tolerance = 0;
  std::vector<std::size_t> offending;          // 0-based distinct mode indices
  std::map<std::string, double> evidence;
  std::string note;
};

// Modes invisible to the observation: projections vanishing at the sample
// point, and projections vanishing identically.
struct exceptional_sets {
  std::vector<std::size_t> at_point;    // |(P_j f)(x0)| below tol * max
  std::vector<std::size_t> everywhere;  // ||P_j f|| below tol * max
  std::vector<double> pj_at_point;
  std::vector<double> pj_norm;
};

inline exceptional_sets exceptional_set(const spectrum& sp, const spatial_profile& f,
                                        const point& x0, std::size_t j_max, double tol = 1e-12) {
  require(j_max >= 1 && j_max <= sp.distinct_count(), errc::insufficient_modes,
          "exceptional_set: j_max exceeds the enumerated spectrum");
  exceptional_sets out;
  for (std::size_t j = 0; j < j_max; ++j) {
    const auto& mode = sp.modes()[j];
    double at = 0, norm2 = 0;
    for (const auto& label : mode.basis) {
      double c = project_f(sp.dom(), f, label);
      at += c * eigenfunction_value(sp.dom(), label, x0);
      norm2 += c * c;
    }
    out.pj_at_point.push_back(at);
    out.pj_norm.push_back(std::sqrt(norm2));
  }
  double max_at = 0, max_norm = 0;
  for (std::size_t j = 0; j < j_max; ++j) {
    max_at = std::max(max_at, std::abs(out.pj_at_point[j]));
    max_norm = std::max(max_norm, out.pj_norm[j]);
  }
  for (std::size_t j = 0; j < j_max; ++j) {
    if (std::abs(out.pj_at_point[j]) <= tol * max_at) out.at_point.push_back(j);
    if (out.pj_norm[j] <= tol * max_norm) out.everywhere.push_back(j);
  }
  return out;
}

namespace detail {

// Euler-Maclaurin tail of sum_{j>N} 1/j^2 (trigamma at N+1).
inline double inverse_square_tail(std::size_t N) {
  double x = static_cast<double>(N) + 1.0;
  double x2 = x * x;
  // psi'(x) ~ 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7)
  return 1.0 / x + 1.0 / (2 * x2) + 1.0 / (6 * x2 * x) - 1.0 / (30 * x2 * x2 * x) +
         1.0 / (42 * x2 * x2 * x2 * x);
}

inline bool is_excluded(const std::vector<std::size_t>& excluded, std::size_t j) {
  return std::find(excluded.begin(), excluded.end(), j) != excluded.end();
}

} // namespace detail

// Divergence test for sum 1/lambda_j over the non-excluded distinct modes.
// One dimension: convergent, certified by partial sum + extrapolated tail.
// Two dimensions: divergent when the excluded set thins out (empty in the
// tail half of the enumerated range); positive tail density is undecidable
// from finite data.
inline condition_report muntz_classify(const spectrum& sp,
                                       const std::vector<std::size_t>& excluded = {}) {
  require(sp.distinct_count() >= 16, errc::insufficient_modes,
          "muntz_classify: need at least 16 distinct modes");
  condition_report rep;
  rep.id = "muntz_sum";
  rep.tolerance = 1e-10;
  std::size_t n = sp.distinct_count();
  double partial = 0;
  std::size_t skipped = 0, skipped_tail = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (detail::is_excluded(excluded, j)) {
      ++skipped;
      if (j >= n / 2) ++skipped_tail;
      continue;
    }
    if (sp.lambda(j) > 0) partial += 1.0 / sp.lambda(j);
  }
  rep.evidence["partial_sum"] = partial;
  rep.evidence["excluded_count"] = static_cast<double>(skipped);
  rep.evidence["excluded_tail_density"] =
      static_cast<double>(skipped_tail) / static_cast<double>(n - n / 2);

  if (sp.dom().dimension() == 1) {
    // lambda_j = c j^2 exactly on the interval; certify the convergent majorant
    double c = sp.lambda(n - 1) / sq(static_cast<double>(n - (sp.dom().bc == boundary_kind::neumann ? 1 : 0)));
    std::size_t top_index = n - (sp.dom().bc == boundary_kind::neumann ? 1 : 0);
    double tail = detail::inverse_square_tail(top_index) / c;
    rep.evidence["extrapolated_sum"] = partial + tail;
    rep.verdict = verdict_kind::fails;
    rep.note = "one-dimensional spectrum: the reciprocal eigenvalue sum converges";
    return rep;
  }
  if (skipped_tail == 0) {
    rep.verdict = verdict_kind::holds;
    rep.note = "excluded set is finite within the enumerated range; harmonic-type divergence";
  } else {
    rep.verdict = verdict_kind::undecidable;
    rep.note = "excluded set keeps positive density in the enumerated tail";
  }
  return rep;
}

// Tail behaviour of k / sqrt(lambda_k) over non-excluded distinct indices
// (original index k kept). A flat tail yields the density limit D and the
// uniqueness horizon pi*D; a steadily growing tail means the horizon is
// unbounded; anything else is undecidable.
inline condition_report density_limit(const spectrum& sp,
                                      const std::vector<std::size_t>& excluded = {}) {
  condition_report rep;
  rep.id = "density_limit";
  rep.tolerance = 0.05;
  std::vector<double> r;
  for (std::size_t j = 0; j < sp.distinct_count(); ++j) {
    if (detail::is_excluded(excluded, j)) continue;
    if (sp.lambda(j) <= 0) continue;
    r.push_back(static_cast<double>(j + 1) / std::sqrt(sp.lambda(j)));
  }
  require(r.size() >= 30, errc::insufficient_modes,
          "density_limit: need at least 30 non-excluded modes");
  std::size_t n = r.size();
  auto stats = [&](std::size_t lo, std::size_t hi) {
    double mn = r[lo], mx = r[lo], acc = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      mn = std::min(mn, r[i]);
      mx = std::max(mx, r[i]);
      acc += r[i];
    }
    return std::array<double, 3>{acc / (hi - lo), mn, mx};
  };
  auto tail = stats(2 * n / 3, n);
  auto mid = stats(n / 3, 2 * n / 3);
  double osc = (tail[2] - tail[1]) / std::max(tail[0], 1e-300);
  rep.evidence["tail_mean"] = tail[0];
  rep.evidence["tail_oscillation"] = osc;
  rep.evidence["growth_ratio"] = tail[0] / std::max(mid[0], 1e-300);
  if (osc <= rep.tolerance && rep.evidence["growth_ratio"] <= 1.02) {
    rep.verdict = verdict_kind::holds;
    rep.evidence["density"] = tail[0];
    rep.evidence["horizon"] = pi * tail[0];
    rep.note = "flat tail; uniqueness horizon pi * D";
  } else if (rep.evidence["growth_ratio"] > 1.15) {
    rep.verdict = verdict_kind::holds;
    rep.evidence["density_unbounded"] = 1.0;
    rep.note = "tail grows steadily; horizon unbounded";
  } else {
    rep.verdict = verdict_kind::undecidable;
    rep.note = "tail neither flat nor steadily growing over the enumerated range";
  }
  return rep;
}

// Nonvanishing of the exponential moments integral e^{lambda_k s} mu(s) ds for
// the first n_max distinct modes; comparison happens on the e^{lambda T}
// scale, so it is overflow-safe for any lambda.
inline condition_report check_exponential_moments(const spectrum& sp, const time_profile& mu,
                                                  std::size_t n_max, double tol = 1e-10) {
  require(n_max >= 1 && n_max <= sp.distinct_count(), errc::insufficient_modes,
          "check_exponential_moments: n_max exceeds the spectrum");
  condition_report rep;
  rep.id = "exp_moment_nonzero";
  rep.tolerance = tol;
  double scale = integral_abs_mu(mu);
  double T = support_end(mu);
  rep.evidence["abs_mu_integral"] = scale;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_max; ++j) {
    double lam = sp.lambda(j);
    log_scaled m = exponential_moment_log(mu, lam);
    double shifted = m.scale_exp(-lam * T).value(); // = m(lambda) e^{-lambda T}, bounded by scale
    worst = std::min(worst, std::abs(shifted) / scale);
    if (std::abs(shifted) <= tol * scale) rep.offending.push_back(j);
  }
  rep.evidence["min_relative_moment"] = worst;
  rep.verdict = rep.offending.empty() ? verdict_kind::holds : verdict_kind::fails;
  if (!rep.offending.empty()) rep.note = "moment vanishes at the listed modes";
  return rep;
}

// Nonvanishing of |S_n| + |C_n| with S, C the sine/cosine moments of mu
// against sqrt(lambda_n)(T - s) kernels.
inline condition_report check_trig_moments(const spectrum& sp, const time_profile& mu,
                                           std::size_t n_max, double tol = 1e-10) {
  require(n_max >= 1 && n_max <= sp.distinct_count(), errc::insufficient_modes,
          "check_trig_moments: n_max exceeds the spectrum");
  condition_report rep;
  rep.id = "trig_moment_nonzero";
  rep.tolerance = tol;
  double scale = integral_abs_mu(mu);
  double T = support_end(mu);
  rep.evidence["abs_mu_integral"] = scale;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_max; ++j) {
    trig_pair tm = trig_moments(mu, std::sqrt(sp.lambda(j)), T);
    double size = std::abs(tm.s) + std::abs(tm.c);
    worst = std::min(worst, size / scale);
    if (size <= tol * scale) rep.offending.push_back(j);
  }
  rep.evidence["min_relative_moment"] = worst;
  rep.verdict = rep.offending.empty() ? verdict_kind::holds : verdict_kind::fails;
  if (!rep.offending.empty()) rep.note = "sine and cosine moments both vanish at the listed modes";
  return rep;
}

// Prerequisites of the one-dimensional wave driver recovery: support inside
// one period, a full period of data, an observation point that avoids every
// node up to the requested depth (rational approximations with small
// denominator), and nonvanishing driver-side projections.
inline condition_report check_wave_recovery_conditions(const domain& dom,
                                                       const spatial_profile& f, double x0,
                                                       double T, double T1, double T2,
                                                       std::size_t n_max, double tol = 1e-12) {
  require(dom.shape == shape_kind::interval && dom.bc == boundary_kind::dirichlet,
          errc::unsupported_domain, "wave recovery conditions: Dirichlet interval only");
  condition_report rep;
  rep.id = "wave_recovery_window";
  rep.tolerance = tol;
  double ell = dom.l1;
  bool ok = true;

  rep.evidence["support_slack"] = 2 * ell - T;
  if (T > 2 * ell * (1 + 1e-12)) ok = false;
  rep.evidence["window_slack"] = (T2 - T1) - 2 * ell;
  if (T2 - T1 < 2 * ell * (1 - 1e-12)) ok = false;

  rational_approx ra = nearest_rational(x0 / ell, 64);
  rep.evidence["node_distance_q64"] = ra.err;
  if (ra.err <= 1e-9) ok = false;

  double max_fc = 0;
  std::vector<double> fc(n_max);
  for (std::size_t n = 0; n < n_max; ++n) {
    fc[n] = project_f(dom, f, interval_mode{static_cast<int>(n + 1)});
    max_fc = std::max(max_fc, std::abs(fc[n]));
  }
  for (std::size_t n = 0; n < n_max; ++n)
    if (std::abs(fc[n]) <= tol * max_fc) rep.offending.push_back(n);
  rep.evidence["min_projection"] = [&] {
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < n_max; ++n) w = std::min(w, std::abs(fc[n]));
    return w;
  }();
  if (!rep.offending.empty()) ok = false;

  rep.verdict = ok ? verdict_kind::holds : verdict_kind::fails;
  if (!ok) rep.note = "at least one prerequisite fails; see evidence and offending modes";
  return rep;
}

} // namespace postsource
