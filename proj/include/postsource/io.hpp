#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "postsource/conditions.hpp"
#include "postsource/errors.hpp"
#include "postsource/forward.hpp"
#include "postsource/inverse.hpp"
#include "postsource/sources.hpp"
#include "postsource/spectra.hpp"

namespace postsource {

// All numeric text I/O uses 17 significant digits so doubles survive a
// round trip bit-exactly.
inline std::string fmt_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double json_safe(double v) {
  if (std::isnan(v)) return 0.0;
  if (std::isinf(v)) return v > 0 ? 1e308 : -1e308;
  return v;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  require(end != s.c_str() && end == s.c_str() + s.size(), errc::invalid_config,
          "csv: malformed number '" + s + "'");
  return v;
}

} // namespace detail

inline void write_record_csv(std::ostream& os, const observation_record& rec) {
  std::size_t K = rec.points.size();
  os << "t";
  for (std::size_t p = 0; p < K; ++p) {
    if (p == 0)
      os << ",value";
    else
      os << ",value" << (p + 1);
  }
  os << "\n";
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    os << fmt_g17(rec.times[i]);
    for (std::size_t p = 0; p < K; ++p) os << "," << fmt_g17(rec.values[i][p]);
    os << "\n";
  }
}

// Reads a trace written by write_record_csv. Observation kind and incident
// metadata are not part of the file; the caller restores them from config.
inline observation_record read_record_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), errc::invalid_config, "csv: empty trace file");
  auto header = detail::split_csv_line(line);
  require(header.size() >= 2 && header[0] == "t" && header[1] == "value", errc::invalid_config,
          "csv: trace header must start with t,value");
  std::size_t K = header.size() - 1;
  observation_record rec;
  rec.kind = observation_kind::point_trace;
  rec.points.assign(K, point{0, 0});
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    require(cells.size() == K + 1, errc::invalid_config, "csv: ragged trace row");
    rec.times.push_back(detail::parse_double(cells[0]));
    std::vector<double> row(K);
    for (std::size_t p = 0; p < K; ++p) row[p] = detail::parse_double(cells[p + 1]);
    rec.values.push_back(std::move(row));
  }
  require(rec.times.size() >= 2, errc::invalid_config, "csv: trace needs at least two rows");
  double dt = rec.times[1] - rec.times[0];
  require(dt > 0, errc::invalid_grid, "csv: trace times must increase");
  for (std::size_t i = 1; i < rec.times.size(); ++i) {
    double step = rec.times[i] - rec.times[i - 1];
    require(std::abs(step - dt) <= 1e-9 * std::max(1.0, std::abs(dt)), errc::invalid_grid,
            "csv: trace grid is not uniform");
  }
  return rec;
}

struct modal_state {
  std::vector<double> u;
  std::vector<double> ut;  // empty for value-only states
  bool has_velocity() const { return !ut.empty(); }
};

inline void write_state_csv(std::ostream& os, const modal_state& st) {
  if (st.has_velocity()) {
    os << "j,u_coeff,ut_coeff\n";
    for (std::size_t k = 0; k < st.u.size(); ++k)
      os << (k + 1) << "," << fmt_g17(st.u[k]) << "," << fmt_g17(st.ut[k]) << "\n";
  } else {
    os << "j,coefficient\n";
    for (std::size_t k = 0; k < st.u.size(); ++k)
      os << (k + 1) << "," << fmt_g17(st.u[k]) << "\n";
  }
}

inline modal_state read_state_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), errc::invalid_config, "csv: empty state file");
  auto header = detail::split_csv_line(line);
  modal_state st;
  bool vel;
  if (header.size() == 2 && header[0] == "j" && header[1] == "coefficient")
    vel = false;
  else if (header.size() == 3 && header[0] == "j" && header[1] == "u_coeff" &&
           header[2] == "ut_coeff")
    vel = true;
  else
    fail(errc::invalid_config, "csv: unrecognized state header");
  std::size_t expect = 1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    require(cells.size() == (vel ? 3u : 2u), errc::invalid_config, "csv: ragged state row");
    require(detail::parse_double(cells[0]) == static_cast<double>(expect), errc::invalid_config,
            "csv: state rows must be numbered consecutively from 1");
    st.u.push_back(detail::parse_double(cells[1]));
    if (vel) st.ut.push_back(detail::parse_double(cells[2]));
    ++expect;
  }
  require(!st.u.empty(), errc::invalid_config, "csv: state file has no rows");
  return st;
}

inline void write_profile_csv(std::ostream& os, const std::vector<double>& s,
                              const std::vector<double>& mu) {
  os << "s,mu\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << fmt_g17(s[i]) << "," << fmt_g17(mu[i]) << "\n";
}

inline void write_table_csv(std::ostream& os, const std::vector<std::string>& columns,
                            const std::vector<std::vector<double>>& rows) {
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << fmt_g17(row[c]);
    os << "\n";
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), errc::invalid_config, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), errc::invalid_config, "cannot write " + path);
  os << content;
}

// ---------------------------------------------------------------------------
// JSON serialization of reports and model entities. Keys are emitted in
// lexicographic order by the JSON library, so output is deterministic.
// ---------------------------------------------------------------------------

using nlohmann::json;

inline void to_json(json& j, const verdict_kind& v) { j = verdict_name(v); }

// Mode indices are 1-based in every emitted file, matching the j column of
// the state CSV; in-memory indices stay 0-based.
inline json one_based(const std::vector<std::size_t>& idx) {
  json arr = json::array();
  for (std::size_t i : idx) arr.push_back(i + 1);
  return arr;
}

inline void to_json(json& j, const condition_report& r) {
  json ev = json::object();
  for (const auto& [k, v] : r.evidence) ev[k] = json_safe(v);
  j = json{{"id", r.id},
           {"verdict", r.verdict},
           {"tolerance", r.tolerance},
           {"offending_modes", one_based(r.offending)},
           {"evidence", ev},
           {"note", r.note}};
}

inline void to_json(json& j, const domain& d) {
  switch (d.shape) {
    case shape_kind::interval:
      j = json{{"shape", "interval"},
               {"bc", d.bc == boundary_kind::neumann ? "neumann" : "dirichlet"},
               {"length", d.l1}};
      break;
    case shape_kind::rectangle:
      j = json{{"shape", "rectangle"}, {"bc", "dirichlet"}, {"l1", d.l1}, {"l2", d.l2}};
      if (d.aspect)
        j["aspect"] = json{{"p", d.aspect->p}, {"q", d.aspect->q}};
      else
        j["aspect"] = "irrational";
      break;
    case shape_kind::disk:
      j = json{{"shape", "disk"}, {"bc", "dirichlet"}, {"radius", d.l1}};
      break;
  }
}

inline void to_json(json& j, const mode_label& label) {
  if (const auto* im = std::get_if<interval_mode>(&label)) {
    j = json{{"n", im->n}};
  } else if (const auto* rm = std::get_if<rectangle_mode>(&label)) {
    j = json{{"m1", rm->m1}, {"m2", rm->m2}};
  } else {
    const auto& dm = std::get<disk_mode>(label);
    j = json{{"order", dm.order}, {"rank", dm.rank}, {"branch", dm.branch}};
  }
}

inline void to_json(json& j, const time_profile& mu) {
  if (const auto* sd = std::get_if<step_decay>(&mu)) {
    j = json{{"kind", "step_decay"},
             {"t0", sd->t0},
             {"a", sd->a},
             {"theta", sd->theta == theta_kind::cosine ? "cosine" : "linear"}};
  } else if (const auto* r = std::get_if<ramp>(&mu)) {
    j = json{{"kind", "ramp"}, {"T", r->T}};
  } else if (const auto* b = std::get_if<bump_profile>(&mu)) {
    j = json{{"kind", "bump"}, {"T", b->T}, {"center", b->center}, {"width", b->width}};
  } else if (const auto* t = std::get_if<table_profile>(&mu)) {
    j = json{{"kind", "table"}, {"knots", t->knots}, {"values", t->values}, {"T", t->T}};
  } else {
    const auto& e = std::get<exp_linear>(mu);
    j = json{{"kind", "exp_linear"}, {"lambda1", e.lambda1}, {"c", e.c}, {"T", e.T}};
  }
}

inline void to_json(json& j, const spatial_profile& f) {
  if (const auto* mc = std::get_if<mode_combination>(&f)) {
    json terms = json::array();
    for (const auto& t : mc->terms) terms.push_back(json{{"mode", t.first}, {"coeff", t.second}});
    j = json{{"kind", "mode_combination"}, {"terms", terms}};
  } else if (const auto* b = std::get_if<smooth_bump>(&f)) {
    j = json{{"kind", "bump"}, {"center", b->center}, {"radius", b->radius}};
  } else if (const auto* p = std::get_if<poly1d>(&f)) {
    j = json{{"kind", "poly"}, {"coeffs", p->coeffs}};
  } else {
    j = json{{"kind", "callable"}};
  }
}

inline void to_json(json& j, const weyl_report& w) {
  j = json{{"leading_coefficient", json_safe(w.rho0)},
           {"exponent_fit", json_safe(w.exponent_fit)},
           {"exponent_expected", w.exponent_expected},
           {"multiplicity_unbounded", w.multiplicity_unbounded},
           {"density_tail_mean", json_safe(w.density_tail_mean)},
           {"density_diverging", w.density_diverging}};
}

inline void to_json(json& j, const dirichlet_fit& r) {
  j = json{{"gamma", r.gamma},
           {"unidentifiable_modes", one_based(r.unidentifiable)},
           {"condition", json_safe(r.condition)},
           {"ill_conditioned", r.ill_conditioned},
           {"residual", json_safe(r.residual)}};
}

inline void to_json(json& j, const onset_recovery& r) {
  j = json{{"t0", r.t0},
           {"residual", json_safe(r.residual)},
           {"forward_lo", r.forward_lo},
           {"forward_hi", r.forward_hi},
           {"stability_ratio", json_safe(r.stability_ratio)},
           {"iterations", r.iterations}};
}

inline void to_json(json& j, const mu_heat_recovery& r) {
  j = json{{"alpha", json_safe(r.alpha)},
           {"residual", json_safe(r.residual)},
           {"condition", json_safe(r.condition)},
           {"grid_points", r.s.size()},
           {"support", r.support}};
}

inline void to_json(json& j, const mu_wave_recovery& r) {
  j = json{{"modes", r.cos_moments.size()},
           {"constant", json_safe(r.constant)},
           {"skipped_modes", one_based(r.skipped)},
           {"conditions", r.conditions},
           {"support", r.support}};
}

inline void to_json(json& j, const f_heat_bounds_info& b) {
  j = json{{"amplification", json_safe(b.amplification)},
           {"data_term", json_safe(b.data)},
           {"tail_term", json_safe(b.tail)},
           {"total", json_safe(b.total)}};
}

inline void to_json(json& j, const f_heat_recovery& r) {
  j = json{{"cutoff", r.cutoff}, {"bound", r.bounds}, {"modes", r.f_coeff.size()}};
}

inline void to_json(json& j, const f_wave_recovery& r) {
  json gains = json::array();
  for (double g : r.gain) gains.push_back(json_safe(g));
  j = json{{"gain", gains},
           {"gain_floor", json_safe(r.gain_floor)},
           {"mu0_squared", json_safe(r.mu0_squared)},
           {"tail_deviation", json_safe(r.tail_deviation)},
           {"weak_modes", one_based(r.weak)},
           {"modes", r.f_coeff.size()}};
}

inline void to_json(json& j, const exceptional_sets& e) {
  j = json{{"at_point", one_based(e.at_point)}, {"everywhere", one_based(e.everywhere)}};
}

} // namespace postsource
