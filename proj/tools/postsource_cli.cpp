// Command-line driver: simulate | invert | check | sweep.
//
// Exit codes: 0 success, 2 invalid configuration or malformed input files,
// 3 numerical failure, 4 a reconstruction precondition is violated (the
// report is still written with the verdicts that led to the refusal).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "postsource/conditions.hpp"
#include "postsource/forward.hpp"
#include "postsource/inverse.hpp"
#include "postsource/io.hpp"
#include "postsource/scenario.hpp"
#include "postsource/svg.hpp"

namespace ps = postsource;
using nlohmann::json;

namespace {

int exit_code_for(ps::errc c) {
  switch (c) {
    case ps::errc::invalid_config:
    case ps::errc::invalid_domain:
    case ps::errc::invalid_profile:
    case ps::errc::invalid_grid:
    case ps::errc::unsupported_domain:
    case ps::errc::unsupported_count:
    case ps::errc::point_outside_domain:
    case ps::errc::not_on_boundary:
    case ps::errc::value_out_of_range:
    case ps::errc::eta_out_of_range:
      return 2;
    case ps::errc::condition_violated:
    case ps::errc::moment_zero:
    case ps::errc::discrepancy_unattainable:
    case ps::errc::constant_unpinnable:
      return 4;
    default:
      return 3;
  }
}

ps::scenario load_config(const std::string& path) {
  return ps::load_scenario_text(ps::read_text_file(path));
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  ps::write_text_file(path.string(), j.dump(2) + "\n");
}

double get_param(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  ps::require(j[key].is_number(), ps::errc::invalid_config,
              "inversion: '" + key + "' must be a number");
  return j[key].get<double>();
}

std::size_t get_count(const json& j, const std::string& key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  ps::require(j[key].is_number_unsigned() && j[key].get<std::uint64_t>() >= 1,
              ps::errc::invalid_config, "inversion: '" + key + "' must be a positive integer");
  return j[key].get<std::size_t>();
}

// The trace CSV carries no geometry; graft the observation metadata from the
// scenario and make sure the column count matches its point list.
ps::observation_record read_record(const std::string& path, const ps::scenario& sc) {
  std::ifstream is(path, std::ios::binary);
  ps::require(is.good(), ps::errc::invalid_config, "cannot open " + path);
  auto rec = ps::read_record_csv(is);
  ps::require(rec.points.size() == sc.obs.points.size(), ps::errc::invalid_config,
              "data: trace has " + std::to_string(rec.points.size()) +
                  " value columns, config declares " + std::to_string(sc.obs.points.size()));
  rec.kind = sc.obs.kind;
  rec.points = sc.obs.points;
  rec.post_incident = rec.times.front() > ps::support_end(sc.mu) - 1e-12;
  if (sc.noise) rec.noise = *sc.noise;
  return rec;
}

ps::modal_state read_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  ps::require(is.good(), ps::errc::invalid_config, "cannot open " + path);
  return ps::read_state_csv(is);
}

enum class data_kind { trace, state };

data_kind sniff_data(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  ps::require(is.good(), ps::errc::invalid_config, "cannot open " + path);
  std::string header;
  std::getline(is, header);
  if (header.rfind("t,", 0) == 0) return data_kind::trace;
  if (header.rfind("j,", 0) == 0) return data_kind::state;
  ps::fail(ps::errc::invalid_config, "data: unrecognized CSV header '" + header + "'");
}

// Modal snapshot of the configured scenario at time t, noised the same way a
// sweep run would noise it (so a one-point sweep reproduces an invert run).
ps::modal_state snapshot_state(const ps::spectral_solution& sol, double t,
                               const ps::noise_spec& noise) {
  ps::modal_state st;
  st.u.resize(sol.mode_count());
  for (std::size_t k = 0; k < sol.mode_count(); ++k) st.u[k] = sol.coefficient(k, t);
  if (sol.equation() == ps::equation_kind::wave) {
    st.ut.resize(sol.mode_count());
    for (std::size_t k = 0; k < sol.mode_count(); ++k) st.ut[k] = sol.coefficient_dt(k, t);
  }
  if (noise.model != ps::noise_spec::model_kind::none && noise.delta > 0) {
    std::mt19937_64 rng(noise.seed);
    auto apply = [&](std::vector<double>& v) {
      double maxabs = 0;
      for (double x : v) maxabs = std::max(maxabs, std::abs(x));
      double amp = noise.delta * maxabs;
      if (noise.model == ps::noise_spec::model_kind::gaussian) {
        std::normal_distribution<double> dist(0.0, 1.0);
        for (double& x : v) x += amp * dist(rng);
      } else {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& x : v) x += amp * dist(rng);
      }
    };
    apply(st.u);
    if (!st.ut.empty()) apply(st.ut);
  }
  return st;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const ps::scenario& sc, const std::filesystem::path& out,
                 std::optional<std::uint64_t> seed) {
  std::filesystem::create_directories(out);
  ps::noise_spec noise = sc.noise.value_or(ps::noise_spec{});
  if (seed) noise.seed = *seed;

  auto sp = ps::enumerate_spectrum(sc.dom, sc.n_max);
  ps::spectral_solution sol(sp, sc.equation, sc.mu, sc.f, sp.distinct_count());
  ps::observation_grid grid{sc.obs.T1, sc.obs.T2, sc.obs.dt};
  auto rec = ps::observe(sol, sc.obs.kind, sc.obs.points, grid, noise);

  {
    std::ofstream os(out / "record.csv", std::ios::binary);
    ps::write_record_csv(os, rec);
  }

  double max_abs = 0;
  for (const auto& row : rec.values)
    for (double v : row) max_abs = std::max(max_abs, std::abs(v));

  json summary;
  summary["schema_version"] = 1;
  summary["equation"] = sc.equation == ps::equation_kind::wave ? "wave" : "heat";
  summary["domain"] = sc.dom;
  summary["mu"] = sc.mu;
  summary["f"] = sc.f;
  summary["modes"] = {{"distinct", sp.distinct_count()}, {"repeated", sp.repeated_count()}};
  summary["observation"] = {{"kind", sc.obs.kind == ps::observation_kind::boundary_flux
                                         ? "flux"
                                         : "point"},
                            {"T1", sc.obs.T1},
                            {"T2", sc.obs.T2},
                            {"dt", sc.obs.dt},
                            {"rows", rec.times.size()},
                            {"columns", sc.obs.points.size()},
                            {"post_incident", rec.post_incident},
                            {"truncation_warning", rec.truncation_warning},
                            {"max_abs_value", ps::json_safe(max_abs)}};
  if (noise.model != ps::noise_spec::model_kind::none) {
    summary["noise"] = {
        {"model", noise.model == ps::noise_spec::model_kind::gaussian ? "gaussian" : "uniform"},
        {"delta", noise.delta},
        {"seed", noise.seed}};
  }

  if (sc.state_time) {
    auto st = snapshot_state(sol, *sc.state_time, noise);
    std::ofstream os(out / "state.csv", std::ios::binary);
    ps::write_state_csv(os, st);
    double mu_abs = 0, mut_abs = 0;
    for (double v : st.u) mu_abs = std::max(mu_abs, std::abs(v));
    for (double v : st.ut) mut_abs = std::max(mut_abs, std::abs(v));
    json stj = {{"time", *sc.state_time}, {"modes", st.u.size()},
                {"max_abs_u", ps::json_safe(mu_abs)}};
    if (st.has_velocity()) stj["max_abs_ut"] = ps::json_safe(mut_abs);
    summary["state"] = stj;
  }

  write_json_file(out / "summary.json", summary);
  return 0;
}

// ------------------------------------------------------------------- check

std::vector<ps::condition_report> run_checks(const ps::scenario& sc) {
  auto sp = ps::enumerate_spectrum(sc.dom, sc.n_max);
  bool point_obs = sc.obs.kind == ps::observation_kind::point_trace;
  ps::point x0 = sc.obs.points[0];

  std::vector<std::size_t> excluded;
  if (point_obs) {
    std::size_t j_max = std::min<std::size_t>(40, sp.distinct_count());
    excluded = ps::exceptional_set(sp, sc.f, x0, j_max).at_point;
  }

  auto guarded = [&](const std::string& id, auto&& fn) {
    ps::condition_report rep;
    try {
      rep = fn();
    } catch (const ps::error& e) {
      rep.id = id;
      rep.verdict = ps::verdict_kind::undecidable;
      rep.note = e.what();
    }
    return rep;
  };

  std::vector<ps::condition_report> reports;
  reports.push_back(
      guarded("muntz_sum", [&] { return ps::muntz_classify(sp, excluded); }));
  reports.push_back(
      guarded("density_limit", [&] { return ps::density_limit(sp, excluded); }));
  std::size_t n_mom = std::min<std::size_t>(50, sp.distinct_count());
  if (sc.equation == ps::equation_kind::heat)
    reports.push_back(guarded("exp_moment_nonzero", [&] {
      return ps::check_exponential_moments(sp, sc.mu, n_mom);
    }));
  else
    reports.push_back(guarded("trig_moment_nonzero", [&] {
      return ps::check_trig_moments(sp, sc.mu, n_mom);
    }));
  if (sc.equation == ps::equation_kind::wave && sc.dom.shape == ps::shape_kind::interval &&
      sc.dom.bc == ps::boundary_kind::dirichlet && point_obs)
    reports.push_back(guarded("wave_recovery_window", [&] {
      return ps::check_wave_recovery_conditions(sc.dom, sc.f, x0[0], ps::support_end(sc.mu),
                                                sc.obs.T1, sc.obs.T2, n_mom);
    }));

  if (!sc.checks.empty()) {
    std::vector<ps::condition_report> filtered;
    for (const auto& r : reports)
      if (std::find(sc.checks.begin(), sc.checks.end(), r.id) != sc.checks.end())
        filtered.push_back(r);
    return filtered;
  }
  return reports;
}

int cmd_check(const ps::scenario& sc, const std::optional<std::filesystem::path>& out) {
  json arr = json::array();
  for (const auto& r : run_checks(sc)) arr.push_back(r);
  std::cout << arr.dump(2) << "\n";
  if (out) {
    std::filesystem::create_directories(*out);
    write_json_file(*out / "checks.json", arr);
  }
  return 0;
}

// ------------------------------------------------------------------ invert

void write_profile(const std::filesystem::path& path, const std::vector<double>& s,
                   const std::vector<double>& mu) {
  std::ofstream os(path, std::ios::binary);
  ps::write_profile_csv(os, s, mu);
}

void write_coefficients(const std::filesystem::path& path, const std::vector<double>& c) {
  std::ofstream os(path, std::ios::binary);
  std::vector<std::string> cols = {"k", "f_coeff"};
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < c.size(); ++k)
    rows.push_back({static_cast<double>(k + 1), c[k]});
  ps::write_table_csv(os, cols, rows);
}

int cmd_invert(const ps::scenario& sc, const std::string& data_path,
               const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  ps::require(sc.inversion.is_object() && sc.inversion.contains("method"),
              ps::errc::invalid_config, "config: invert needs an inversion block with a method");
  const json& inv = sc.inversion;
  std::string method = inv["method"].get<std::string>();

  auto sp = ps::enumerate_spectrum(sc.dom, sc.n_max);
  json report;
  report["schema_version"] = 1;
  report["method"] = method;
  int code = 0;

  try {
    if (method == "fit_dirichlet_series") {
      ps::detail::only_keys(inv, {"method", "terms", "point_index"}, "inversion");
      auto rec = read_record(data_path, sc);
      std::size_t terms = get_count(inv, "terms", std::min<std::size_t>(6, sp.distinct_count()));
      std::size_t pidx = get_count(inv, "point_index", 1) - 1;
      auto fit = ps::fit_dirichlet_series(rec, sp, terms, pidx);
      report["fit"] = fit;
      std::ofstream os(out / "coefficients.csv", std::ios::binary);
      std::vector<std::string> cols = {"j", "gamma"};
      std::vector<std::vector<double>> rows;
      for (std::size_t j = 0; j < fit.gamma.size(); ++j)
        rows.push_back({static_cast<double>(j + 1), fit.gamma[j]});
      ps::write_table_csv(os, cols, rows);
    } else if (method == "recover_mu_heat") {
      ps::detail::only_keys(inv,
                            {"method", "terms", "grid_points", "regularizer", "alpha",
                             "discrepancy", "support"},
                            "inversion");
      double T = get_param(inv, "support", ps::support_end(sc.mu));
      std::size_t terms = get_count(inv, "terms", 6);
      ps::mu_heat_options opt;
      opt.grid_points = get_count(inv, "grid_points", 64);
      if (inv.contains("regularizer")) {
        std::string r = inv["regularizer"].get<std::string>();
        ps::require(r == "first_difference" || r == "identity", ps::errc::invalid_config,
                    "inversion: regularizer must be first_difference or identity");
        opt.reg = r == "identity" ? ps::regularizer_kind::identity
                                  : ps::regularizer_kind::first_difference;
      }
      if (inv.contains("discrepancy")) {
        opt.alpha = -1;
        opt.discrepancy = get_param(inv, "discrepancy", 0);
      } else {
        opt.alpha = get_param(inv, "alpha", 1e-8);
      }

      std::vector<ps::moment_sample> samples;
      if (sniff_data(data_path) == data_kind::state) {
        ps::require(sc.state_time.has_value(), ps::errc::invalid_config,
                    "inversion: modal input needs state_time in the config");
        double tt = *sc.state_time;
        auto st = read_state(data_path);
        std::size_t K = std::min({terms, st.u.size(), sp.repeated_count()});
        for (std::size_t k = 0; k < K; ++k) {
          double fc = ps::project_f(sc.dom, sc.f, sp.repeated_label(k));
          if (std::abs(fc) < 1e-12) continue;
          ps::moment_sample ms;
          ms.lambda = sp.sigma(k);
          ms.value = ps::log_scaled::from(st.u[k] / fc).scale_exp(sp.sigma(k) * tt);
          samples.push_back(ms);
        }
        report["input"] = "state";
      } else {
        auto rec = read_record(data_path, sc);
        auto fit = ps::fit_dirichlet_series(rec, sp, std::min(terms, sp.distinct_count()), 0);
        report["fit"] = fit;
        for (std::size_t j = 0; j < fit.gamma.size(); ++j) {
          if (std::find(fit.unidentifiable.begin(), fit.unidentifiable.end(), j) !=
              fit.unidentifiable.end())
            continue;
          const auto& label = sp.modes()[j].basis[0];
          double fc = ps::project_f(sc.dom, sc.f, label);
          double phi = ps::eigenfunction_value(sc.dom, label, sc.obs.points[0]);
          if (std::abs(fc * phi) < 1e-12) continue;
          ps::moment_sample ms;
          ms.lambda = sp.lambda(j);
          ms.value = ps::log_scaled::from(fit.gamma[j] / (fc * phi));
          samples.push_back(ms);
        }
        report["input"] = "trace";
      }
      ps::require(samples.size() >= 2, ps::errc::insufficient_modes,
                  "inversion: fewer than two usable moment samples");
      report["moments_used"] = samples.size();
      auto rec = ps::recover_mu_heat(samples, T, opt);
      report["recovery"] = rec;
      write_profile(out / "profile.csv", rec.s, rec.mu);
    } else if (method == "recover_mu_wave_1d") {
      ps::detail::only_keys(
          inv, {"method", "modes", "grid_points", "override_conditions", "window_start", "support"},
          "inversion");
      auto rec = read_record(data_path, sc);
      double T = get_param(inv, "support", ps::support_end(sc.mu));
      ps::mu_wave_options opt;
      opt.modes = get_count(inv, "modes", 64);
      opt.grid_points = get_count(inv, "grid_points", 257);
      if (inv.contains("override_conditions"))
        opt.override_conditions = inv["override_conditions"].get<bool>();
      if (inv.contains("window_start")) opt.window_start = get_param(inv, "window_start", 0);
      try {
        auto wr = ps::recover_mu_wave_1d(rec, sc.dom, sc.f, T, opt);
        report["recovery"] = wr;
        write_profile(out / "profile.csv", wr.s, wr.mu);
      } catch (const ps::error& e) {
        if (exit_code_for(e.code()) != 4) throw;
        double t_begin = std::isnan(opt.window_start) ? rec.times.front() : opt.window_start;
        report["conditions"] = ps::check_wave_recovery_conditions(
            sc.dom, sc.f, rec.points[0][0], T, t_begin, rec.times.back(), opt.modes);
        report["error"] = {{"code", ps::errc_name(e.code())}, {"message", e.what()}};
        code = 4;
      }
    } else if (method == "recover_f_heat") {
      ps::detail::only_keys(inv, {"method", "eta", "theta", "ell", "n_cap"}, "inversion");
      ps::require(sniff_data(data_path) == data_kind::state, ps::errc::invalid_config,
                  "inversion: shape recovery reads a modal state file");
      ps::require(sc.state_time.has_value(), ps::errc::invalid_config,
                  "inversion: modal input needs state_time in the config");
      auto st = read_state(data_path);
      ps::f_heat_options opt;
      double eta_default = sc.noise ? sc.noise->delta : 0.0;
      opt.eta = get_param(inv, "eta", eta_default);
      opt.theta = get_param(inv, "theta", 0.5);
      opt.smooth.ell = get_param(inv, "ell", 1.0);
      if (inv.contains("n_cap")) opt.n_cap = get_count(inv, "n_cap", opt.n_cap);
      try {
        auto fr = ps::recover_f_heat(sp, sc.mu, *sc.state_time, st.u, opt);
        report["recovery"] = fr;
        write_coefficients(out / "coefficients.csv", fr.f_coeff);
      } catch (const ps::error& e) {
        if (exit_code_for(e.code()) != 4) throw;
        report["conditions"] = json::array(
            {ps::check_exponential_moments(sp, sc.mu,
                                           std::min<std::size_t>(50, sp.distinct_count()))});
        report["error"] = {{"code", ps::errc_name(e.code())}, {"message", e.what()}};
        code = 4;
      }
    } else if (method == "recover_f_wave") {
      ps::detail::only_keys(inv, {"method", "modes"}, "inversion");
      ps::require(sniff_data(data_path) == data_kind::state, ps::errc::invalid_config,
                  "inversion: shape recovery reads a modal state file");
      ps::require(sc.state_time.has_value(), ps::errc::invalid_config,
                  "inversion: modal input needs state_time in the config");
      double T = ps::support_end(sc.mu);
      ps::require(std::abs(*sc.state_time - T) <= 1e-9 * std::max(1.0, T),
                  ps::errc::invalid_config,
                  "inversion: the wave snapshot must be taken at the driver switch-off time");
      auto st = read_state(data_path);
      ps::require(st.has_velocity(), ps::errc::invalid_config,
                  "inversion: wave shape recovery needs value and velocity columns");
      std::size_t modes = get_count(inv, "modes", sp.distinct_count());
      try {
        auto fr = ps::recover_f_wave(sp, sc.mu, T, st.u, st.ut, modes);
        report["recovery"] = fr;
        write_coefficients(out / "coefficients.csv", fr.f_coeff);
      } catch (const ps::error& e) {
        if (exit_code_for(e.code()) != 4) throw;
        report["conditions"] = json::array(
            {ps::check_trig_moments(sp, sc.mu, std::min<std::size_t>(50, sp.distinct_count()))});
        report["error"] = {{"code", ps::errc_name(e.code())}, {"message", e.what()}};
        code = 4;
      }
    } else if (method == "recover_t0") {
      ps::detail::only_keys(inv, {"method", "a", "theta", "bracket", "t_star", "modes"},
                            "inversion");
      auto rec = read_record(data_path, sc);
      ps::onset_scenario os;
      os.dom = sc.dom;
      os.f = sc.f;
      os.x0 = sc.obs.points[0];
      if (const auto* sd = std::get_if<ps::step_decay>(&sc.mu)) {
        os.a = sd->a;
        os.theta = sd->theta;
      }
      os.a = get_param(inv, "a", os.a);
      if (inv.contains("theta")) {
        std::string th = inv["theta"].get<std::string>();
        ps::require(th == "linear" || th == "cosine", ps::errc::invalid_config,
                    "inversion: theta must be linear or cosine");
        os.theta = th == "cosine" ? ps::theta_kind::cosine : ps::theta_kind::linear;
      }
      ps::require(inv.contains("bracket") && inv["bracket"].is_array() &&
                      inv["bracket"].size() == 2,
                  ps::errc::invalid_config, "inversion: bracket must be [lo, hi]");
      os.t_lo = inv["bracket"][0].get<double>();
      os.t_hi = inv["bracket"][1].get<double>();
      ps::require(inv.contains("t_star"), ps::errc::invalid_config,
                  "inversion: t_star (the observation time) is required");
      os.t_star = get_param(inv, "t_star", 0);
      os.n_max = get_count(inv, "modes", sc.n_max);

      double dt = rec.times.size() > 1 ? rec.times[1] - rec.times[0] : 1.0;
      std::size_t hit = rec.times.size();
      for (std::size_t i = 0; i < rec.times.size(); ++i)
        if (std::abs(rec.times[i] - os.t_star) <= 0.5 * dt + 1e-12) {
          hit = i;
          break;
        }
      ps::require(hit < rec.times.size(), ps::errc::invalid_config,
                  "inversion: t_star is not covered by the trace");
      double y = rec.values[hit][0];
      auto tr = ps::recover_t0(os, y);
      report["recovery"] = tr;
      ps::time_profile rec_mu = ps::step_decay{tr.t0, os.a, os.theta};
      std::vector<double> ss(129), mm(129);
      double span = tr.t0 + os.a;
      for (std::size_t i = 0; i < ss.size(); ++i) {
        ss[i] = span * static_cast<double>(i) / static_cast<double>(ss.size() - 1);
        mm[i] = ps::evaluate_mu(rec_mu, ss[i]);
      }
      write_profile(out / "profile.csv", ss, mm);
    } else {
      ps::fail(ps::errc::invalid_config, "inversion: unknown method '" + method + "'");
    }
  } catch (const ps::error& e) {
    if (exit_code_for(e.code()) != 4) throw;
    report["error"] = {{"code", ps::errc_name(e.code())}, {"message", e.what()}};
    code = 4;
  }

  write_json_file(out / "report.json", report);
  return code;
}

// ------------------------------------------------------------------- sweep

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string cutoff_label(double v) {
  if (v == 1.0) return "cutoff N";
  if (v == 0.5) return "cutoff N/2";
  if (v == 2.0) return "cutoff 2N";
  char buf[40];
  std::snprintf(buf, sizeof buf, "cutoff %.2gN", v);
  return buf;
}

int sweep_noise(const ps::scenario& sc, const json& sw, const std::filesystem::path& out) {
  ps::detail::only_keys(sw, {"kind", "deltas", "seeds", "theta", "ell", "cutoff_variants"},
                        "sweep");
  ps::require(sc.equation == ps::equation_kind::heat, ps::errc::invalid_config,
              "sweep: the noise sweep drives the heat shape recovery");
  ps::require(sc.state_time.has_value(), ps::errc::invalid_config,
              "sweep: the noise sweep reads a modal snapshot; set state_time");
  ps::require(sw.contains("deltas") && sw["deltas"].is_array() && !sw["deltas"].empty(),
              ps::errc::invalid_config, "sweep: deltas must be a nonempty array");
  ps::require(sw.contains("seeds") && sw["seeds"].is_array() && !sw["seeds"].empty(),
              ps::errc::invalid_config, "sweep: seeds must be a nonempty array");
  auto deltas = sw["deltas"].get<std::vector<double>>();
  auto seeds = sw["seeds"].get<std::vector<std::uint64_t>>();
  double theta = get_param(sw, "theta", 0.5);
  double ell = get_param(sw, "ell", 1.0);
  std::vector<double> variants = {1.0};
  if (sw.contains("cutoff_variants")) variants = sw["cutoff_variants"].get<std::vector<double>>();
  ps::require(!variants.empty(), ps::errc::invalid_config, "sweep: cutoff_variants empty");
  for (double d : deltas)
    ps::require(d > 0 && d < 1, ps::errc::invalid_config, "sweep: deltas must lie in (0, 1)");

  auto sp = ps::enumerate_spectrum(sc.dom, sc.n_max);
  ps::spectral_solution sol(sp, sc.equation, sc.mu, sc.f, sp.distinct_count());
  double tt = *sc.state_time;
  double T = ps::support_end(sc.mu);
  ps::require(tt > T, ps::errc::value_out_of_range,
              "sweep: the snapshot must postdate the driver support");

  std::size_t K = sol.mode_count();
  std::vector<double> u_exact(K), fc(K);
  std::vector<ps::log_scaled> p(K);
  double maxu = 0;
  for (std::size_t k = 0; k < K; ++k) {
    u_exact[k] = sol.coefficient(k, tt);
    fc[k] = sol.f_coefficient(k);
    p[k] = ps::exponential_moment_log(sc.mu, sp.sigma(k)).scale_exp(-sp.sigma(k) * tt);
    maxu = std::max(maxu, std::abs(u_exact[k]));
  }

  std::ostringstream csv;
  csv << "delta,n,seed,error,residual,alpha\n";
  // medians[variant][delta] over seeds, for the chart
  std::vector<std::vector<double>> med(variants.size(), std::vector<double>(deltas.size(), 0));

  for (std::size_t di = 0; di < deltas.size(); ++di) {
    double delta = deltas[di];
    std::size_t n_rule = ps::heat_cutoff_rule(delta, theta, ell, sc.dom.dimension());
    std::vector<std::vector<double>> errs(variants.size());
    for (std::uint64_t seed : seeds) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> dist(0.0, 1.0);
      std::vector<double> u = u_exact;
      for (double& x : u) x += delta * maxu * dist(rng);
      for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        auto n = static_cast<std::size_t>(
            std::max(1.0, std::floor(variants[vi] * static_cast<double>(n_rule) + 0.5)));
        n = std::min({n, K, sp.repeated_count() - 1});
        double err2 = 0, res2 = 0;
        for (std::size_t k = 0; k < K; ++k) {
          double fhat = 0;
          if (k < n) fhat = (ps::log_scaled::from(u[k]) / p[k]).value();
          err2 += ps::sq(fhat - fc[k]);
          res2 += ps::sq(u[k] - p[k].value() * fhat);
        }
        double err = std::sqrt(err2);
        errs[vi].push_back(err);
        csv << ps::fmt_g17(delta) << "," << n << "," << seed << "," << ps::fmt_g17(err) << ","
            << ps::fmt_g17(std::sqrt(res2)) << "," << ps::fmt_g17(0.0) << "\n";
      }
    }
    for (std::size_t vi = 0; vi < variants.size(); ++vi) med[vi][di] = median_of(errs[vi]);
  }

  ps::write_text_file((out / "sweep.csv").string(), csv.str());

  std::vector<ps::chart_series> series;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    ps::chart_series s;
    s.label = cutoff_label(variants[vi]);
    s.x = deltas;
    for (double e : med[vi]) s.y.push_back(std::max(e, 1e-300));
    series.push_back(std::move(s));
  }
  ps::chart_options copt;
  copt.title = "shape recovery error vs noise";
  copt.x_label = "noise level";
  copt.y_label = "median recovery error";
  copt.log_x = true;
  copt.log_y = true;
  ps::write_text_file((out / "sweep.svg").string(), ps::render_chart(series, copt));
  return 0;
}

int sweep_onset(const ps::scenario& sc, const json& sw, const std::filesystem::path& out) {
  ps::detail::only_keys(sw, {"kind", "t0_values", "a", "theta", "bracket", "t_star", "modes"},
                        "sweep");
  ps::require(sw.contains("t0_values") && sw["t0_values"].is_array() && !sw["t0_values"].empty(),
              ps::errc::invalid_config, "sweep: t0_values must be a nonempty array");
  ps::require(sw.contains("bracket") && sw["bracket"].is_array() && sw["bracket"].size() == 2,
              ps::errc::invalid_config, "sweep: bracket must be [lo, hi]");
  ps::require(sw.contains("t_star"), ps::errc::invalid_config, "sweep: t_star is required");
  auto t0s = sw["t0_values"].get<std::vector<double>>();

  ps::onset_scenario os;
  os.dom = sc.dom;
  os.f = sc.f;
  os.x0 = sc.obs.points[0];
  if (const auto* sd = std::get_if<ps::step_decay>(&sc.mu)) {
    os.a = sd->a;
    os.theta = sd->theta;
  }
  os.a = get_param(sw, "a", os.a);
  if (sw.contains("theta")) {
    std::string th = sw["theta"].get<std::string>();
    os.theta = th == "cosine" ? ps::theta_kind::cosine : ps::theta_kind::linear;
  }
  os.t_lo = sw["bracket"][0].get<double>();
  os.t_hi = sw["bracket"][1].get<double>();
  os.t_star = get_param(sw, "t_star", 0);
  os.n_max = get_count(sw, "modes", sc.n_max);

  auto sp = ps::enumerate_spectrum(sc.dom, os.n_max);

  std::ostringstream csv;
  csv << "delta,n,seed,error,residual,alpha\n";
  ps::chart_series s;
  s.label = "onset error";
  for (double t0 : t0s) {
    // forward data from the general solver, recovery through the bisection map
    ps::time_profile mu_true = ps::step_decay{t0, os.a, os.theta};
    ps::spectral_solution sol(sp, ps::equation_kind::heat, mu_true, sc.f, sp.distinct_count());
    double y = sol.value(os.x0, os.t_star);
    auto rec = ps::recover_t0(os, y);
    double err = std::abs(rec.t0 - t0);
    csv << ps::fmt_g17(t0) << "," << rec.iterations << ",0," << ps::fmt_g17(err) << ","
        << ps::fmt_g17(rec.residual) << "," << ps::fmt_g17(0.0) << "\n";
    s.x.push_back(t0);
    s.y.push_back(std::max(err, 1e-16));
  }

  ps::write_text_file((out / "sweep.csv").string(), csv.str());
  ps::chart_options copt;
  copt.title = "onset recovery closed loop";
  copt.x_label = "true onset time";
  copt.y_label = "absolute error";
  copt.log_y = true;
  ps::write_text_file((out / "sweep.svg").string(), ps::render_chart({s}, copt));
  return 0;
}

int cmd_sweep(const ps::scenario& sc, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  ps::require(sc.sweep.is_object() && sc.sweep.contains("kind"), ps::errc::invalid_config,
              "config: sweep needs a sweep block with a kind");
  std::string kind = sc.sweep["kind"].get<std::string>();
  if (kind == "noise") return sweep_noise(sc, sc.sweep, out);
  if (kind == "onset") return sweep_onset(sc, sc.sweep, out);
  ps::fail(ps::errc::invalid_config, "sweep: unknown kind '" + kind + "'");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral simulation and source reconstruction for driven heat and wave fields"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path;
  std::optional<std::uint64_t> seed;

  auto* sim = app.add_subcommand("simulate", "solve the configured scenario and write the trace");
  sim->add_option("--config", config_path, "scenario JSON")->required();
  sim->add_option("--out", out_path, "output directory")->required();
  std::uint64_t seed_val = 0;
  auto* sim_seed = sim->add_option("--seed", seed_val, "override the noise seed");

  auto* invt = app.add_subcommand("invert", "run the configured reconstruction on a data file");
  invt->add_option("--config", config_path, "scenario JSON")->required();
  invt->add_option("--data", data_path, "trace or modal-state CSV")->required();
  invt->add_option("--out", out_path, "output directory")->required();

  auto* chk = app.add_subcommand("check", "evaluate recoverability conditions for the scenario");
  chk->add_option("--config", config_path, "scenario JSON")->required();
  chk->add_option("--out", out_path, "optional directory for checks.json");

  auto* swp = app.add_subcommand("sweep", "run a reconstruction grid and plot the error trend");
  swp->add_option("--config", config_path, "scenario JSON")->required();
  swp->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ps::scenario sc = load_config(config_path);
    if (sim->parsed()) {
      if (sim_seed->count() > 0) seed = seed_val;
      return cmd_simulate(sc, out_path, seed);
    }
    if (invt->parsed()) return cmd_invert(sc, data_path, out_path);
    if (chk->parsed()) {
      std::optional<std::filesystem::path> out;
      if (!out_path.empty()) out = out_path;
      return cmd_check(sc, out);
    }
    if (swp->parsed()) return cmd_sweep(sc, out_path);
  } catch (const ps::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
