#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "postsource/errors.hpp"
#include "postsource/forward.hpp"
#include "postsource/sources.hpp"
#include "postsource/spectra.hpp"

namespace postsource {

// A fully parsed batch scenario. The driver profile is already resolved
// (the vanishing-moment shorthand becomes a concrete profile using the
// domain's lowest eigenvalue). Inversion and sweep blocks stay as raw JSON;
// the command layer owns their per-method schemas.
struct observation_spec {
  observation_kind kind = observation_kind::point_trace;
  std::vector<point> points;
  double T1 = 0, T2 = 0, dt = 0;
};

struct scenario {
  domain dom = domain::interval(1.0);
  equation_kind equation = equation_kind::heat;
  std::size_t n_max = 64;
  time_profile mu = ramp{1.0};
  bool mu_vanishing_moment = false;
  spatial_profile f = mode_combination{};
  observation_spec obs;
  std::optional<noise_spec> noise;
  bool allow_pre_incident = false;
  std::optional<double> state_time;
  nlohmann::json inversion;  // empty when absent
  nlohmann::json sweep;
  std::vector<std::string> checks;  // empty = all applicable
};

namespace detail {

using nlohmann::json;

inline void only_keys(const json& obj, const std::set<std::string>& allowed,
                      const std::string& where) {
  require(obj.is_object(), errc::invalid_config, where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    require(allowed.count(it.key()) > 0, errc::invalid_config,
            where + ": unknown key '" + it.key() + "'");
}

inline double get_num(const json& obj, const std::string& key, const std::string& where) {
  require(obj.contains(key) && obj[key].is_number(), errc::invalid_config,
          where + ": missing numeric '" + key + "'");
  return obj[key].get<double>();
}

inline std::string get_str(const json& obj, const std::string& key, const std::string& where) {
  require(obj.contains(key) && obj[key].is_string(), errc::invalid_config,
          where + ": missing string '" + key + "'");
  return obj[key].get<std::string>();
}

inline boundary_kind parse_bc(const json& j) {
  if (!j.contains("bc")) return boundary_kind::dirichlet;
  std::string s = get_str(j, "bc", "domain");
  require(s == "dirichlet" || s == "neumann", errc::invalid_config,
          "domain: bc must be dirichlet or neumann");
  return s == "neumann" ? boundary_kind::neumann : boundary_kind::dirichlet;
}

inline domain parse_domain(const json& j) {
  std::string shape = get_str(j, "shape", "domain");
  boundary_kind bc = parse_bc(j);
  if (shape != "interval")
    require(bc == boundary_kind::dirichlet, errc::invalid_config,
            "domain: Neumann walls are supported on the interval only");
  if (shape == "interval") {
    only_keys(j, {"shape", "bc", "length"}, "domain");
    return domain::interval(get_num(j, "length", "domain"), bc);
  }
  if (shape == "rectangle") {
    only_keys(j, {"shape", "bc", "l1", "l2", "aspect"}, "domain");
    double l1 = get_num(j, "l1", "domain"), l2 = get_num(j, "l2", "domain");
    require(j.contains("aspect"), errc::invalid_config,
            "domain: rectangle needs an aspect declaration");
    if (j["aspect"].is_string()) {
      require(j["aspect"] == "irrational", errc::invalid_config,
              "domain: aspect must be {p,q} or \"irrational\"");
      return domain::rectangle(l1, l2, std::nullopt);
    }
    only_keys(j["aspect"], {"p", "q"}, "domain.aspect");
    long long p = j["aspect"].value("p", 0LL), q = j["aspect"].value("q", 0LL);
    require(p > 0 && q > 0, errc::invalid_config, "domain: aspect p, q must be positive");
    return domain::rectangle(l1, l2, rational_aspect{p, q});
  }
  if (shape == "disk") {
    only_keys(j, {"shape", "bc"}, "domain");  // unit radius by construction
    return domain::disk();
  }
  fail(errc::invalid_config, "domain: unknown shape '" + shape + "'");
}

inline theta_kind parse_theta(const json& j, const std::string& where) {
  if (!j.contains("theta")) return theta_kind::linear;
  std::string s = get_str(j, "theta", where);
  require(s == "linear" || s == "cosine", errc::invalid_config,
          where + ": theta must be linear or cosine");
  return s == "cosine" ? theta_kind::cosine : theta_kind::linear;
}

// The vanishing-moment shorthand is resolved by the caller, which knows the
// spectrum; here it parses into a placeholder flagged via the bool.
inline std::pair<time_profile, bool> parse_mu(const json& j) {
  std::string kind = get_str(j, "kind", "mu");
  if (kind == "step_decay") {
    only_keys(j, {"kind", "t0", "a", "theta"}, "mu");
    return {step_decay{get_num(j, "t0", "mu"), get_num(j, "a", "mu"), parse_theta(j, "mu")},
            false};
  }
  if (kind == "ramp") {
    only_keys(j, {"kind", "T"}, "mu");
    return {ramp{get_num(j, "T", "mu")}, false};
  }
  if (kind == "bump") {
    only_keys(j, {"kind", "T", "center", "width"}, "mu");
    return {bump_profile{get_num(j, "T", "mu"), get_num(j, "center", "mu"),
                         get_num(j, "width", "mu")},
            false};
  }
  if (kind == "table") {
    only_keys(j, {"kind", "knots", "values", "T"}, "mu");
    require(j.contains("knots") && j["knots"].is_array() && j.contains("values") &&
                j["values"].is_array(),
            errc::invalid_config, "mu: table needs knots and values arrays");
    return {table_profile{j["knots"].get<std::vector<double>>(),
                          j["values"].get<std::vector<double>>(), get_num(j, "T", "mu")},
            false};
  }
  if (kind == "exp_linear") {
    only_keys(j, {"kind", "lambda1", "c", "T"}, "mu");
    return {exp_linear{get_num(j, "lambda1", "mu"), get_num(j, "c", "mu"), get_num(j, "T", "mu")},
            false};
  }
  if (kind == "vanishing_moment") {
    only_keys(j, {"kind", "T"}, "mu");
    return {exp_linear{0, 0, get_num(j, "T", "mu")}, true};  // lambda filled on resolve
  }
  fail(errc::invalid_config, "mu: unknown kind '" + kind + "'");
}

inline mode_label parse_mode_label(const json& j, const domain& dom) {
  switch (dom.shape) {
    case shape_kind::interval: {
      only_keys(j, {"n"}, "f.mode");
      int n = static_cast<int>(get_num(j, "n", "f.mode"));
      require(n >= (dom.bc == boundary_kind::neumann ? 0 : 1), errc::invalid_config,
              "f.mode: index below the first mode of this boundary condition");
      return interval_mode{n};
    }
    case shape_kind::rectangle: {
      only_keys(j, {"m1", "m2"}, "f.mode");
      int m1 = static_cast<int>(get_num(j, "m1", "f.mode"));
      int m2 = static_cast<int>(get_num(j, "m2", "f.mode"));
      require(m1 >= 1 && m2 >= 1, errc::invalid_config, "f.mode: rectangle indices start at 1");
      return rectangle_mode{m1, m2};
    }
    case shape_kind::disk: {
      only_keys(j, {"order", "rank", "branch"}, "f.mode");
      int order = static_cast<int>(get_num(j, "order", "f.mode"));
      int rank = static_cast<int>(get_num(j, "rank", "f.mode"));
      int branch = j.contains("branch") ? static_cast<int>(get_num(j, "branch", "f.mode")) : 0;
      require(order >= 0 && rank >= 1 && (branch == 0 || branch == 1), errc::invalid_config,
              "f.mode: disk label out of range");
      require(!(order == 0 && branch == 1), errc::invalid_config,
              "f.mode: the radial-only branch exists just once");
      return disk_mode{order, rank, branch};
    }
  }
  fail(errc::invalid_config, "f.mode: unreachable shape");
}

inline spatial_profile parse_f(const json& j, const domain& dom) {
  std::string kind = get_str(j, "kind", "f");
  if (kind == "mode_combination") {
    only_keys(j, {"kind", "terms"}, "f");
    require(j.contains("terms") && j["terms"].is_array() && !j["terms"].empty(),
            errc::invalid_config, "f: mode_combination needs a nonempty terms array");
    mode_combination mc;
    for (const auto& t : j["terms"]) {
      only_keys(t, {"mode", "coeff"}, "f.terms[]");
      require(t.contains("mode"), errc::invalid_config, "f.terms[]: missing mode");
      mc.terms.emplace_back(parse_mode_label(t["mode"], dom), get_num(t, "coeff", "f.terms[]"));
    }
    return mc;
  }
  if (kind == "mode_power_series") {
    // Sugar: coefficients m^power on the first `count` interval modes.
    require(dom.shape == shape_kind::interval && dom.bc == boundary_kind::dirichlet,
            errc::invalid_config, "f: mode_power_series is for the Dirichlet interval");
    only_keys(j, {"kind", "count", "power"}, "f");
    int count = static_cast<int>(get_num(j, "count", "f"));
    double power = get_num(j, "power", "f");
    require(count >= 1 && count <= 4096, errc::invalid_config, "f: count out of range");
    mode_combination mc;
    for (int m = 1; m <= count; ++m)
      mc.terms.emplace_back(interval_mode{m}, std::pow(static_cast<double>(m), power));
    return mc;
  }
  if (kind == "bump") {
    only_keys(j, {"kind", "center", "radius"}, "f");
    require(j.contains("center") && j["center"].is_array() &&
                j["center"].size() == dom.dimension(),
            errc::invalid_config, "f: bump center must match the domain dimension");
    point c{0, 0};
    for (std::size_t i = 0; i < j["center"].size(); ++i) c[i] = j["center"][i].get<double>();
    return smooth_bump{c, get_num(j, "radius", "f")};
  }
  if (kind == "poly") {
    require(dom.shape == shape_kind::interval, errc::invalid_config,
            "f: poly profiles are one-dimensional");
    only_keys(j, {"kind", "coeffs"}, "f");
    require(j.contains("coeffs") && j["coeffs"].is_array() && !j["coeffs"].empty(),
            errc::invalid_config, "f: poly needs coefficients");
    return poly1d{j["coeffs"].get<std::vector<double>>()};
  }
  fail(errc::invalid_config, "f: unknown kind '" + kind + "'");
}

inline observation_spec parse_observation(const json& j, const domain& dom) {
  only_keys(j, {"kind", "points", "T1", "T2", "dt"}, "observation");
  observation_spec obs;
  std::string kind = get_str(j, "kind", "observation");
  require(kind == "point" || kind == "flux", errc::invalid_config,
          "observation: kind must be point or flux");
  obs.kind = kind == "flux" ? observation_kind::boundary_flux : observation_kind::point_trace;
  require(j.contains("points") && j["points"].is_array() && !j["points"].empty(),
          errc::invalid_config, "observation: needs at least one point");
  for (const auto& pj : j["points"]) {
    require(pj.is_array() && pj.size() == dom.dimension(), errc::invalid_config,
            "observation: each point must match the domain dimension");
    point p{0, 0};
    for (std::size_t i = 0; i < pj.size(); ++i) p[i] = pj[i].get<double>();
    obs.points.push_back(p);
  }
  obs.T1 = get_num(j, "T1", "observation");
  obs.T2 = get_num(j, "T2", "observation");
  obs.dt = get_num(j, "dt", "observation");
  require(obs.T1 >= 0 && obs.T2 > obs.T1, errc::invalid_config,
          "observation: window must satisfy 0 <= T1 < T2");
  require(obs.dt > 0 && obs.dt <= obs.T2 - obs.T1, errc::invalid_config,
          "observation: dt must be positive and fit in the window");
  return obs;
}

inline noise_spec parse_noise(const json& j) {
  only_keys(j, {"model", "delta", "seed"}, "noise");
  noise_spec ns;
  std::string model = get_str(j, "model", "noise");
  require(model == "gaussian" || model == "uniform", errc::invalid_config,
          "noise: model must be gaussian or uniform");
  ns.model = model == "gaussian" ? noise_spec::model_kind::gaussian
                                 : noise_spec::model_kind::uniform;
  ns.delta = get_num(j, "delta", "noise");
  require(ns.delta >= 0, errc::invalid_config, "noise: delta must be nonnegative");
  if (j.contains("seed")) {
    require(j["seed"].is_number_unsigned(), errc::invalid_config,
            "noise: seed must be a nonnegative integer");
    ns.seed = j["seed"].get<std::uint64_t>();
  }
  return ns;
}

} // namespace detail

inline scenario load_scenario(const nlohmann::json& cfg) {
  using detail::get_num;
  detail::only_keys(cfg,
                    {"schema_version", "domain", "equation", "n_max", "mu", "f", "observation",
                     "noise", "allow_pre_incident", "state_time", "inversion", "sweep", "checks"},
                    "config");
  require(cfg.contains("schema_version") && cfg["schema_version"] == 1, errc::invalid_config,
          "config: schema_version must be 1");

  scenario sc;
  require(cfg.contains("domain"), errc::invalid_config, "config: missing domain");
  sc.dom = detail::parse_domain(cfg["domain"]);
  sc.dom.validate();

  std::string eq = detail::get_str(cfg, "equation", "config");
  require(eq == "heat" || eq == "wave", errc::invalid_config,
          "config: equation must be heat or wave");
  sc.equation = eq == "wave" ? equation_kind::wave : equation_kind::heat;
  require(sc.equation == equation_kind::heat || sc.dom.bc == boundary_kind::dirichlet,
          errc::invalid_config, "config: the wave solver runs with Dirichlet walls only");

  if (cfg.contains("n_max")) {
    require(cfg["n_max"].is_number_unsigned() && cfg["n_max"].get<std::size_t>() >= 1,
            errc::invalid_config, "config: n_max must be a positive integer");
    sc.n_max = cfg["n_max"].get<std::size_t>();
  }

  require(cfg.contains("mu"), errc::invalid_config, "config: missing mu");
  auto [mu, vanish] = detail::parse_mu(cfg["mu"]);
  sc.mu_vanishing_moment = vanish;
  if (vanish) {
    spectrum head = enumerate_spectrum(sc.dom, 1);
    auto& e = std::get<exp_linear>(mu);
    require(head.lambda(0) > 0, errc::invalid_config,
            "mu: vanishing_moment needs a positive lowest eigenvalue");
    e.lambda1 = head.lambda(0);
    e.c = 0.5 * e.T;
  }
  sc.mu = mu;
  validate_time_profile(sc.mu);

  require(cfg.contains("f"), errc::invalid_config, "config: missing f");
  sc.f = detail::parse_f(cfg["f"], sc.dom);

  require(cfg.contains("observation"), errc::invalid_config, "config: missing observation");
  sc.obs = detail::parse_observation(cfg["observation"], sc.dom);

  if (cfg.contains("allow_pre_incident")) {
    require(cfg["allow_pre_incident"].is_boolean(), errc::invalid_config,
            "config: allow_pre_incident must be boolean");
    sc.allow_pre_incident = cfg["allow_pre_incident"].get<bool>();
  }
  double T = support_end(sc.mu);
  if (!sc.allow_pre_incident)
    require(sc.obs.T1 > T, errc::invalid_config,
            "config: observation must start after the source switches off (need T < T1); "
            "set allow_pre_incident to study the transient window");

  for (const auto& p : sc.obs.points) {
    if (sc.obs.kind == observation_kind::point_trace)
      require(sc.dom.contains(p, 1e-12), errc::invalid_config,
              "config: observation point outside the closed domain");
  }

  if (cfg.contains("noise")) sc.noise = detail::parse_noise(cfg["noise"]);
  if (cfg.contains("state_time")) {
    require(cfg["state_time"].is_number(), errc::invalid_config,
            "config: state_time must be a number");
    sc.state_time = cfg["state_time"].get<double>();
    require(*sc.state_time >= 0, errc::invalid_config, "config: state_time must be nonnegative");
  }
  if (cfg.contains("inversion")) sc.inversion = cfg["inversion"];
  if (cfg.contains("sweep")) sc.sweep = cfg["sweep"];
  if (cfg.contains("checks")) {
    require(cfg["checks"].is_array(), errc::invalid_config, "config: checks must be an array");
    for (const auto& c : cfg["checks"]) {
      require(c.is_string(), errc::invalid_config, "config: checks entries must be strings");
      sc.checks.push_back(c.get<std::string>());
    }
  }
  return sc;
}

inline scenario load_scenario_text(const std::string& text) {
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::invalid_config, std::string("config: JSON parse error: ") + e.what());
  }
  return load_scenario(cfg);
}

} // namespace postsource
