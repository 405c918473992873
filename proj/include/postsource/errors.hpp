#pragma once

#include <stdexcept>
#include <string>

namespace postsource {

// Category of a hard failure. Soft diagnostics (ill-conditioning, skipped
// modes, truncation warnings) travel in report structs instead of throwing.
enum class errc {
  invalid_domain,
  unsupported_domain,
  unsupported_count,
  point_outside_domain,
  not_on_boundary,
  invalid_profile,
  quadrature_failure,
  overflow_risk,
  invalid_grid,
  insufficient_modes,
  truncation_unusable,
  value_out_of_range,
  non_monotone,
  discrepancy_unattainable,
  condition_violated,
  constant_unpinnable,
  moment_zero,
  eta_out_of_range,
  cfl_violation,
  grid_too_coarse,
  invalid_config,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_domain: return "invalid_domain";
    case errc::unsupported_domain: return "unsupported_domain";
    case errc::unsupported_count: return "unsupported_count";
    case errc::point_outside_domain: return "point_outside_domain";
    case errc::not_on_boundary: return "not_on_boundary";
    case errc::invalid_profile: return "invalid_profile";
    case errc::quadrature_failure: return "quadrature_failure";
    case errc::overflow_risk: return "overflow_risk";
    case errc::invalid_grid: return "invalid_grid";
    case errc::insufficient_modes: return "insufficient_modes";
    case errc::truncation_unusable: return "truncation_unusable";
    case errc::value_out_of_range: return "value_out_of_range";
    case errc::non_monotone: return "non_monotone";
    case errc::discrepancy_unattainable: return "discrepancy_unattainable";
    case errc::condition_violated: return "condition_violated";
    case errc::constant_unpinnable: return "constant_unpinnable";
    case errc::moment_zero: return "moment_zero";
    case errc::eta_out_of_range: return "eta_out_of_range";
    case errc::cfl_violation: return "cfl_violation";
    case errc::grid_too_coarse: return "grid_too_coarse";
    case errc::invalid_config: return "invalid_config";
  }
  return "unknown";
}

class error : public std::runtime_error {
public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

} // namespace postsource
