#pragma once

#include <cmath>
#include <vector>

#include "postsource/errors.hpp"
#include "postsource/numerics.hpp"

namespace postsource {

// Positive zeros j_{m,k} of the Bessel functions J_m, converged to ~1e-14
// relative. Order 0 is seeded by McMahon's expansion; order m+1 zeros are
// bracketed by the interlacing j_{m,k} < j_{m+1,k} < j_{m,k+1} and polished
// by safeguarded Newton on std::cyl_bessel_j.
class bessel_zero_table {
public:
  static constexpr int max_order = 24; // J_0 .. J_24 exposed
  static constexpr int max_rank = 16;  // at least 16 zeros per exposed order

  static const bessel_zero_table& instance() {
    static bessel_zero_table t;
    return t;
  }

  // k is 1-based rank.
  double zero(int m, int k) const {
    require(m >= 0 && m <= max_order, errc::value_out_of_range, "bessel zero: order out of table");
    require(k >= 1 && k <= static_cast<int>(zeros_[m].size()), errc::value_out_of_range,
            "bessel zero: rank out of table");
    return zeros_[m][k - 1];
  }

  int ranks(int m) const { return static_cast<int>(zeros_[m].size()); }

  // Every Bessel zero (any order, any rank) below this bound is in the table,
  // so eigenvalue listings built from zeros < complete_below() miss nothing.
  double complete_below() const { return guard_; }

private:
  bessel_zero_table() {
    const int orders = max_order + 2; // one extra order for the guard
    const int rank0 = max_rank + orders; // interlacing consumes one rank per order
    zeros_.resize(orders);
    zeros_[0].reserve(rank0);
    for (int k = 1; k <= rank0; ++k) {
      double beta = (k - 0.25) * pi; // McMahon for order 0
      double seed = beta + 1.0 / (8 * beta);
      zeros_[0].push_back(refine(0, seed, seed - 0.5, seed + 0.5));
    }
    for (int m = 1; m < orders; ++m) {
      int n = static_cast<int>(zeros_[m - 1].size()) - 1;
      zeros_[m].reserve(n);
      for (int k = 1; k <= n; ++k) {
        double lo = zeros_[m - 1][k - 1], hi = zeros_[m - 1][k];
        zeros_[m].push_back(refine(m, 0.5 * (lo + hi), lo, hi));
      }
    }
    double guard = zeros_[max_order + 1][0]; // j_{max_order+1, 1}
    for (int m = 0; m <= max_order; ++m) guard = std::min(guard, zeros_[m].back());
    guard_ = guard;
    zeros_.resize(max_order + 1);
  }

  static double refine(int m, double x, double lo, double hi) {
    auto f = [&](double t) { return std::cyl_bessel_j(static_cast<double>(m), t); };
    double flo = f(lo), fhi = f(hi);
    // The bracket endpoints for m >= 1 are exact zeros of J_{m-1}, where J_m
    // alternates sign; nudge inward until the sign change is visible.
    for (int tries = 0; tries < 60 && flo * fhi >= 0; ++tries) {
      double w = hi - lo;
      lo += 1e-3 * w;
      hi -= 1e-3 * w;
      flo = f(lo);
      fhi = f(hi);
    }
    require(flo * fhi < 0, errc::value_out_of_range, "bessel zero: lost bracket");
    for (int iter = 0; iter < 200; ++iter) {
      double fx = f(x);
      double dfx = (m == 0) ? -f_order(1, x) : f_order(m - 1, x) - m / x * fx;
      double step = fx / dfx;
      double next = x - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi); // bisection fallback
      if (f(next) * flo < 0) {
        hi = next;
      } else {
        lo = next;
        flo = f(next);
      }
      if (std::abs(next - x) <= 1e-15 * x) return next;
      x = next;
    }
    return x;
  }

  static double f_order(int m, double t) { return std::cyl_bessel_j(static_cast<double>(m), t); }

  std::vector<std::vector<double>> zeros_;
  double guard_ = 0;
};

} // namespace postsource
