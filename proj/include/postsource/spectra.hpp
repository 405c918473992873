#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "postsource/bessel.hpp"
#include "postsource/errors.hpp"
#include "postsource/numerics.hpp"

namespace postsource {

using point = std::array<double, 2>; // interval profiles use [0] only

enum class shape_kind { interval, rectangle, disk };
enum class boundary_kind { dirichlet, neumann };

// Declared arithmetic nature of l1^2/l2^2; drives exact multiplicity grouping.
struct rational_aspect {
  long long p = 1;
  long long q = 1;
};

struct domain {
  shape_kind shape = shape_kind::interval;
  boundary_kind bc = boundary_kind::dirichlet;
  double l1 = 1.0;
  double l2 = 1.0;                      // rectangle only
  std::optional<rational_aspect> aspect; // rectangle only; nullopt = irrational

  static domain interval(double l, boundary_kind bc = boundary_kind::dirichlet) {
    domain d;
    d.shape = shape_kind::interval;
    d.bc = bc;
    d.l1 = l;
    d.validate();
    return d;
  }

  static domain rectangle(double l1, double l2, std::optional<rational_aspect> aspect) {
    domain d;
    d.shape = shape_kind::rectangle;
    d.l1 = l1;
    d.l2 = l2;
    d.aspect = aspect;
    d.validate();
    return d;
  }

  static domain disk() {
    domain d;
    d.shape = shape_kind::disk;
    d.validate();
    return d;
  }

  int dimension() const { return shape == shape_kind::interval ? 1 : 2; }

  void validate() const {
    require(l1 > 0 && (shape != shape_kind::rectangle || l2 > 0), errc::invalid_domain,
            "domain: nonpositive edge length");
    if (bc == boundary_kind::neumann)
      require(shape == shape_kind::interval, errc::invalid_domain,
              "domain: Neumann supported on the interval only");
    if (shape == shape_kind::rectangle && aspect) {
      require(aspect->p >= 1 && aspect->q >= 1, errc::invalid_domain,
              "domain: aspect fraction must be positive");
      double declared = static_cast<double>(aspect->p) / static_cast<double>(aspect->q);
      double actual = (l1 * l1) / (l2 * l2);
      require(rel_diff(declared, actual) <= 1e-12, errc::invalid_domain,
              "domain: aspect fraction inconsistent with edge lengths");
    }
  }

  bool contains(const point& x, double tol = 0.0) const {
    switch (shape) {
      case shape_kind::interval: return x[0] >= -tol && x[0] <= l1 + tol;
      case shape_kind::rectangle:
        return x[0] >= -tol && x[0] <= l1 + tol && x[1] >= -tol && x[1] <= l2 + tol;
      case shape_kind::disk: return x[0] * x[0] + x[1] * x[1] <= sq(1.0 + tol);
    }
    return false;
  }
};

struct interval_mode {
  int n = 1; // >= 1 Dirichlet, >= 0 Neumann
};
struct rectangle_mode {
  int m1 = 1;
  int m2 = 1;
};
struct disk_mode {
  int order = 0;  // Bessel order m
  int rank = 1;   // zero rank k (1-based)
  int branch = 0; // 0: cos(m phi), 1: sin(m phi); order 0 has branch 0 only
};
using mode_label = std::variant<interval_mode, rectangle_mode, disk_mode>;

// One distinct eigenvalue with its full orthonormal basis slice.
struct eigen_mode {
  double lambda = 0;
  std::vector<mode_label> basis;
  std::size_t multiplicity() const { return basis.size(); }
};

// Distinct listing lambda_1 < lambda_2 < ... plus the repeated listing
// sigma_1 <= sigma_2 <= ... threaded through it. Indices are 0-based.
class spectrum {
public:
  spectrum(domain dom, std::vector<eigen_mode> modes) : dom_(dom), modes_(std::move(modes)) {
    for (std::size_t j = 0; j < modes_.size(); ++j)
      for (std::size_t k = 0; k < modes_[j].basis.size(); ++k) repeated_.push_back({j, k});
  }

  const domain& dom() const { return dom_; }
  const std::vector<eigen_mode>& modes() const { return modes_; }
  std::size_t distinct_count() const { return modes_.size(); }
  std::size_t repeated_count() const { return repeated_.size(); }

  double lambda(std::size_t j) const { return modes_.at(j).lambda; }
  double sigma(std::size_t k) const { return modes_[repeated_.at(k).first].lambda; }
  const mode_label& repeated_label(std::size_t k) const {
    auto [j, i] = repeated_.at(k);
    return modes_[j].basis[i];
  }
  std::size_t distinct_of_repeated(std::size_t k) const { return repeated_.at(k).first; }

  // Number of repeated modes drawn from the first n distinct eigenvalues.
  std::size_t repeated_within(std::size_t n_distinct) const {
    std::size_t acc = 0;
    for (std::size_t j = 0; j < std::min(n_distinct, modes_.size()); ++j)
      acc += modes_[j].basis.size();
    return acc;
  }

  // m_j = number of repeated modes with sigma <= lambda_j.
  std::vector<std::size_t> counting() const {
    std::vector<std::size_t> m;
    m.reserve(modes_.size());
    std::size_t acc = 0;
    for (const auto& mode : modes_) {
      acc += mode.multiplicity();
      m.push_back(acc);
    }
    return m;
  }

private:
  domain dom_;
  std::vector<eigen_mode> modes_;
  std::vector<std::pair<std::size_t, std::size_t>> repeated_;
};

namespace detail {

inline spectrum enumerate_interval(const domain& dom, std::size_t count) {
  std::vector<eigen_mode> modes;
  modes.reserve(count);
  int n0 = dom.bc == boundary_kind::neumann ? 0 : 1;
  for (std::size_t j = 0; j < count; ++j) {
    int n = n0 + static_cast<int>(j);
    double lam = sq(n * pi / dom.l1);
    modes.push_back({lam, {interval_mode{n}}});
  }
  return spectrum(dom, std::move(modes));
}

inline spectrum enumerate_rectangle_rational(const domain& dom, std::size_t count) {
  const long long p = dom.aspect->p, q = dom.aspect->q;
  // Exact integer key q*m1^2 + p*m2^2; equal keys <=> equal eigenvalues.
  for (long long M = 8;; M *= 2) {
    require(M <= (1 << 20), errc::unsupported_count, "rectangle enumeration box overflow");
    std::map<long long, std::vector<rectangle_mode>> groups;
    for (long long m1 = 1; m1 <= M; ++m1)
      for (long long m2 = 1; m2 <= M; ++m2)
        groups[q * m1 * m1 + p * m2 * m2].push_back(
            {static_cast<int>(m1), static_cast<int>(m2)});
    // Any pair outside the box has key >= this; keys below it are complete.
    long long safe = std::min(q * (M + 1) * (M + 1) + p, q + p * (M + 1) * (M + 1));
    std::vector<eigen_mode> modes;
    for (const auto& [key, labels] : groups) {
      if (key >= safe) break;
      if (modes.size() == count) break;
      eigen_mode mode;
      mode.lambda = static_cast<double>(key) * sq(pi) / (static_cast<double>(q) * sq(dom.l1));
      for (const auto& lab : labels) mode.basis.push_back(lab);
      std::sort(mode.basis.begin(), mode.basis.end(), [](const mode_label& a, const mode_label& b) {
        return std::get<rectangle_mode>(a).m1 < std::get<rectangle_mode>(b).m1;
      });
      modes.push_back(std::move(mode));
    }
    if (modes.size() == count) return spectrum(dom, std::move(modes));
  }
}

inline spectrum enumerate_rectangle_irrational(const domain& dom, std::size_t count) {
  for (long long M = 8;; M *= 2) {
    require(M <= (1 << 20), errc::unsupported_count, "rectangle enumeration box overflow");
    struct entry {
      double lambda;
      rectangle_mode label;
    };
    std::vector<entry> entries;
    for (long long m1 = 1; m1 <= M; ++m1)
      for (long long m2 = 1; m2 <= M; ++m2)
        entries.push_back({sq(pi) * (sq(m1 / dom.l1) + sq(m2 / dom.l2)),
                           {static_cast<int>(m1), static_cast<int>(m2)}});
    std::sort(entries.begin(), entries.end(), [](const entry& a, const entry& b) {
      if (a.lambda != b.lambda) return a.lambda < b.lambda;
      return a.label.m1 < b.label.m1;
    });
    double safe = sq(pi) * std::min(sq((M + 1) / dom.l1) + sq(1 / dom.l2),
                                    sq(1 / dom.l1) + sq((M + 1) / dom.l2));
    if (entries.size() >= count && entries[count - 1].lambda < safe) {
      std::vector<eigen_mode> modes;
      modes.reserve(count);
      for (std::size_t j = 0; j < count; ++j)
        modes.push_back({entries[j].lambda, {entries[j].label}});
      return spectrum(dom, std::move(modes));
    }
  }
}

inline spectrum enumerate_disk(const domain& dom, std::size_t count) {
  const auto& table = bessel_zero_table::instance();
  double guard = table.complete_below();
  struct entry {
    double zero;
    int order;
    int rank;
  };
  std::vector<entry> entries;
  for (int m = 0; m <= bessel_zero_table::max_order; ++m)
    for (int k = 1; k <= table.ranks(m); ++k) {
      double z = table.zero(m, k);
      if (z < guard) entries.push_back({z, m, k});
    }
  std::sort(entries.begin(), entries.end(),
            [](const entry& a, const entry& b) { return a.zero < b.zero; });
  require(count <= entries.size(), errc::unsupported_count,
          "disk enumeration exceeds the precomputed zero table");
  std::vector<eigen_mode> modes;
  modes.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const entry& e = entries[j];
    eigen_mode mode;
    mode.lambda = sq(e.zero);
    mode.basis.push_back(disk_mode{e.order, e.rank, 0});
    if (e.order >= 1) mode.basis.push_back(disk_mode{e.order, e.rank, 1});
    modes.push_back(std::move(mode));
  }
  return spectrum(dom, std::move(modes));
}

} // namespace detail

// First `count` distinct eigenvalues with complete multiplicity bookkeeping.
inline spectrum enumerate_spectrum(const domain& dom, std::size_t count) {
  require(count >= 1, errc::unsupported_count, "enumerate_spectrum: count must be >= 1");
  switch (dom.shape) {
    case shape_kind::interval: return detail::enumerate_interval(dom, count);
    case shape_kind::rectangle:
      return dom.aspect ? detail::enumerate_rectangle_rational(dom, count)
                        : detail::enumerate_rectangle_irrational(dom, count);
    case shape_kind::disk:
      require(dom.bc == boundary_kind::dirichlet, errc::invalid_domain,
              "disk spectrum is Dirichlet only");
      return detail::enumerate_disk(dom, count);
  }
  fail(errc::invalid_domain, "enumerate_spectrum: unknown shape");
}

inline double eigenfunction_value(const domain& dom, const mode_label& label, const point& x) {
  require(dom.contains(x, 1e-12), errc::point_outside_domain,
          "eigenfunction_value: point outside closure");
  switch (dom.shape) {
    case shape_kind::interval: {
      int n = std::get<interval_mode>(label).n;
      if (dom.bc == boundary_kind::neumann) {
        if (n == 0) return 1.0 / std::sqrt(dom.l1);
        return std::sqrt(2.0 / dom.l1) * std::cos(n * pi * x[0] / dom.l1);
      }
      return std::sqrt(2.0 / dom.l1) * std::sin(n * pi * x[0] / dom.l1);
    }
    case shape_kind::rectangle: {
      const auto& m = std::get<rectangle_mode>(label);
      return 2.0 / std::sqrt(dom.l1 * dom.l2) * std::sin(m.m1 * pi * x[0] / dom.l1) *
             std::sin(m.m2 * pi * x[1] / dom.l2);
    }
    case shape_kind::disk: {
      const auto& m = std::get<disk_mode>(label);
      double z = bessel_zero_table::instance().zero(m.order, m.rank);
      double r = std::hypot(x[0], x[1]);
      double phi = std::atan2(x[1], x[0]);
      double radial = std::cyl_bessel_j(static_cast<double>(m.order), z * std::min(r, 1.0));
      double edge = std::cyl_bessel_j(static_cast<double>(m.order + 1), z);
      double angular_norm = m.order == 0 ? 2.0 * pi : pi;
      double norm = std::sqrt(2.0 / angular_norm) / std::abs(edge);
      double ang = m.branch == 0 ? std::cos(m.order * phi) : std::sin(m.order * phi);
      return norm * radial * ang;
    }
  }
  fail(errc::invalid_domain, "eigenfunction_value: unknown shape");
}

// Outward normal derivative grad(phi) . nu at a boundary point (Dirichlet only:
// this is the flux instrument; Neumann eigenfunctions have zero flux).
inline double eigenfunction_normal_derivative(const domain& dom, const mode_label& label,
                                              const point& x) {
  require(dom.bc == boundary_kind::dirichlet, errc::unsupported_domain,
          "normal derivative: Dirichlet domains only");
  constexpr double btol = 1e-10;
  switch (dom.shape) {
    case shape_kind::interval: {
      int n = std::get<interval_mode>(label).n;
      double amp = std::sqrt(2.0 / dom.l1) * n * pi / dom.l1;
      if (std::abs(x[0]) <= btol) return -amp;
      if (std::abs(x[0] - dom.l1) <= btol) return amp * std::cos(n * pi);
      fail(errc::not_on_boundary, "normal derivative: point is not a boundary endpoint");
    }
    case shape_kind::rectangle: {
      const auto& m = std::get<rectangle_mode>(label);
      double c = 2.0 / std::sqrt(dom.l1 * dom.l2);
      double s1 = std::sin(m.m1 * pi * x[0] / dom.l1), s2 = std::sin(m.m2 * pi * x[1] / dom.l2);
      double d1 = c * (m.m1 * pi / dom.l1) * std::cos(m.m1 * pi * x[0] / dom.l1) * s2;
      double d2 = c * (m.m2 * pi / dom.l2) * s1 * std::cos(m.m2 * pi * x[1] / dom.l2);
      bool in1 = x[0] >= -btol && x[0] <= dom.l1 + btol;
      bool in2 = x[1] >= -btol && x[1] <= dom.l2 + btol;
      if (std::abs(x[0]) <= btol && in2) return -d1;
      if (std::abs(x[0] - dom.l1) <= btol && in2) return d1;
      if (std::abs(x[1]) <= btol && in1) return -d2;
      if (std::abs(x[1] - dom.l2) <= btol && in1) return d2;
      fail(errc::not_on_boundary, "normal derivative: point is not on a rectangle side");
    }
    case shape_kind::disk: fail(errc::unsupported_domain, "normal derivative: disk unsupported");
  }
  fail(errc::invalid_domain, "normal derivative: unknown shape");
}

// L2 projection (f, phi_label) by composite Gauss-Legendre, starting from
// >= 8 points per half wavelength and doubling the panel count until two
// successive resolutions agree. The absolute part of the acceptance test is
// anchored to the integral of |f phi| so that projections which vanish by
// symmetry or smoothness converge instead of chasing a relative target.
inline double project_callable(const domain& dom, const std::function<double(const point&)>& f,
                               const mode_label& label, double rel_tol = 1e-9) {
  auto converged = [&](double coarse, double fine, double mag) {
    return std::abs(fine - coarse) <= std::max(rel_tol * std::abs(fine), 1e-13 * mag);
  };
  switch (dom.shape) {
    case shape_kind::interval: {
      int n = std::get<interval_mode>(label).n;
      auto g = [&](double x) {
        point p{x, 0};
        return f(p) * eigenfunction_value(dom, label, p);
      };
      auto gabs = [&](double x) { return std::abs(g(x)); };
      int panels = std::max(8, n);
      double mag = std::max(gl_composite(gabs, 0.0, dom.l1, panels, 8), 1e-30);
      double coarse = gl_composite(g, 0.0, dom.l1, panels, 8);
      while (panels <= 65536) {
        double fine = gl_composite(g, 0.0, dom.l1, 2 * panels, 8);
        if (converged(coarse, fine, mag)) return fine;
        coarse = fine;
        panels *= 2;
      }
      fail(errc::quadrature_failure, "project: refinement did not settle");
    }
    case shape_kind::rectangle: {
      const auto& m = std::get<rectangle_mode>(label);
      auto outer = [&](int p1, int p2, bool absolute) {
        auto row = [&](double x1) {
          auto g = [&](double x2) {
            point p{x1, x2};
            double v = f(p) * eigenfunction_value(dom, label, p);
            return absolute ? std::abs(v) : v;
          };
          return gl_composite(g, 0.0, dom.l2, p2, 8);
        };
        return gl_composite(row, 0.0, dom.l1, p1, 8);
      };
      int p1 = std::max(8, m.m1), p2 = std::max(8, m.m2);
      double mag = std::max(outer(p1, p2, true), 1e-30);
      double coarse = outer(p1, p2, false);
      while (p1 <= 512 && p2 <= 512) {
        double fine = outer(2 * p1, 2 * p2, false);
        if (converged(coarse, fine, mag)) return fine;
        coarse = fine;
        p1 *= 2;
        p2 *= 2;
      }
      fail(errc::quadrature_failure, "project: refinement did not settle");
    }
    case shape_kind::disk:
      fail(errc::unsupported_domain,
           "project: disk quadrature unsupported (use mode-combination profiles)");
  }
  fail(errc::invalid_domain, "project: unknown shape");
}

// Least-squares Weyl diagnostics over the enumerated part of the spectrum.
struct weyl_report {
  double rho0 = 0;              // sigma_k ~ rho0 * k^{2/d} fit through the origin
  double exponent_fit = 0;      // slope of log sigma_k vs log k
  double exponent_expected = 0; // 2/d
  std::vector<double> k_over_sqrt_lambda; // distinct index / sqrt(lambda), 1-based index
  std::vector<double> k_over_mk_root_d;   // distinct index / m_k^{1/d}
  std::vector<std::size_t> counting;      // m_k
  bool multiplicity_unbounded = false;
  double density_tail_mean = 0; // mean of k/sqrt(lambda_k) over the last third
  bool density_diverging = false;
};

inline weyl_report weyl_stats(const spectrum& sp) {
  require(sp.distinct_count() >= 20, errc::insufficient_modes,
          "weyl_stats: need at least 20 distinct modes");
  weyl_report rep;
  int d = sp.dom().dimension();
  rep.exponent_expected = 2.0 / d;
  double num = 0, den = 0, slx = 0, sly = 0, slxx = 0, slxy = 0;
  std::size_t nfit = 0;
  for (std::size_t k = 0; k < sp.repeated_count(); ++k) {
    double sigma = sp.sigma(k);
    double t = std::pow(static_cast<double>(k + 1), 2.0 / d);
    num += sigma * t;
    den += t * t;
    if (sigma > 0) {
      double lx = std::log(static_cast<double>(k + 1)), ly = std::log(sigma);
      slx += lx;
      sly += ly;
      slxx += lx * lx;
      slxy += lx * ly;
      ++nfit;
    }
  }
  rep.rho0 = num / den;
  rep.exponent_fit = (nfit * slxy - slx * sly) / (nfit * slxx - slx * slx);
  rep.counting = sp.counting();
  for (std::size_t j = 0; j < sp.distinct_count(); ++j) {
    double k1 = static_cast<double>(j + 1);
    rep.k_over_sqrt_lambda.push_back(k1 / std::sqrt(sp.lambda(j)));
    rep.k_over_mk_root_d.push_back(k1 / std::pow(static_cast<double>(rep.counting[j]), 1.0 / d));
  }
  std::size_t n = sp.distinct_count();
  auto max_mult = [&](std::size_t lo, std::size_t hi) {
    std::size_t m = 0;
    for (std::size_t j = lo; j < hi; ++j) m = std::max(m, sp.modes()[j].multiplicity());
    return m;
  };
  rep.multiplicity_unbounded = max_mult(2 * n / 3, n) > max_mult(0, n / 3);
  auto mean = [&](std::size_t lo, std::size_t hi) {
    double acc = 0;
    for (std::size_t j = lo; j < hi; ++j) acc += rep.k_over_sqrt_lambda[j];
    return acc / (hi - lo);
  };
  rep.density_tail_mean = mean(2 * n / 3, n);
  rep.density_diverging = rep.density_tail_mean > 1.15 * mean(n / 3, 2 * n / 3);
  return rep;
}

} // namespace postsource
