#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "postsource/conditions.hpp"
#include "postsource/forward.hpp"
#include "postsource/io.hpp"
#include "postsource/schema.hpp"

using namespace postsource;
namespace fs = std::filesystem;

namespace {

json load_schema(const char* name) {
  return json::parse(read_text_file(std::string(POSTSOURCE_SCHEMA_DIR) + "/" + name));
}

}  // namespace

TEST_CASE("g17 formatting survives a parse round trip bit for bit") {
  for (double v : {1.0 / 3.0, 0.1, -3.5e-200, 7.0, 1.2345678901234567e18, 0.0}) {
    std::string s = fmt_g17(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(json_safe(std::nan("")) == 0.0);
  CHECK(json_safe(std::numeric_limits<double>::infinity()) == 1e308);
  CHECK(json_safe(-std::numeric_limits<double>::infinity()) == -1e308);
  CHECK(json_safe(2.5) == 2.5);
}

TEST_CASE("trace CSV writes and reads the identical record") {
  auto sp = enumerate_spectrum(domain::interval(1.0), 8);
  auto sol = solve_heat(sp, smooth_bump{{0.5, 0}, 0.25}, ramp{1.0}, 8);
  auto rec = observe(sol, observation_kind::point_trace, {{0.31, 0}, {0.62, 0}},
                     {1.05, 1.4, 0.05});

  std::ostringstream os;
  write_record_csv(os, rec);
  std::string text = os.str();
  CHECK(text.rfind("t,value,value2\n", 0) == 0);

  std::istringstream is(text);
  auto back = read_record_csv(is);
  REQUIRE(back.times.size() == rec.times.size());
  REQUIRE(back.values.size() == rec.values.size());
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    CHECK(back.times[i] == rec.times[i]);
    for (std::size_t p = 0; p < rec.points.size(); ++p)
      CHECK(back.values[i][p] == rec.values[i][p]);
  }

  // writing the reread record reproduces the same bytes
  std::ostringstream os2;
  write_record_csv(os2, back);
  CHECK(os2.str() == text);
}

TEST_CASE("trace CSV rejects malformed input") {
  auto feed = [](const std::string& s) {
    std::istringstream is(s);
    return read_record_csv(is);
  };
  CHECK_THROWS_AS(feed(""), error);
  CHECK_THROWS_AS(feed("x,value\n1,2\n2,3\n"), error);
  CHECK_THROWS_AS(feed("t,value\n1,2\n"), error);            // one row
  CHECK_THROWS_AS(feed("t,value\n1,2\n2\n"), error);         // ragged
  CHECK_THROWS_AS(feed("t,value\n1,2\n2,abc\n"), error);     // not a number
  CHECK_THROWS_AS(feed("t,value\n1,2\n1.5,3\n2.2,4\n"), error);  // non-uniform
  CHECK_NOTHROW(feed("t,value\r\n1,2\r\n2,3\r\n"));          // CRLF tolerated
}

TEST_CASE("modal state CSV round trips with and without velocity") {
  modal_state st{{0.5, -0.25, 1e-17}, {1.0, 2.0, -3.0}};
  std::ostringstream os;
  write_state_csv(os, st);
  CHECK(os.str().rfind("j,u_coeff,ut_coeff\n1,0.5,1\n", 0) == 0);
  std::istringstream is(os.str());
  auto back = read_state_csv(is);
  CHECK(back.u == st.u);
  CHECK(back.ut == st.ut);

  modal_state flat{{0.5, -0.25}, {}};
  std::ostringstream os2;
  write_state_csv(os2, flat);
  CHECK(os2.str() == "j,coefficient\n1,0.5\n2,-0.25\n");
  std::istringstream is2(os2.str());
  CHECK_FALSE(read_state_csv(is2).has_velocity());

  auto feed = [](const std::string& s) {
    std::istringstream is3(s);
    return read_state_csv(is3);
  };
  CHECK_THROWS_AS(feed("j,coefficient\n2,0.5\n"), error);  // numbering gap
  CHECK_THROWS_AS(feed("j,coefficient\n"), error);         // no rows
  CHECK_THROWS_AS(feed("k,coefficient\n1,1\n"), error);    // wrong header
}

TEST_CASE("profile and table CSV use stable headers and full precision") {
  std::ostringstream os;
  write_profile_csv(os, {0.0, 0.5}, {1.0 / 3.0, 0.0});
  CHECK(os.str() == std::string("s,mu\n0,") + fmt_g17(1.0 / 3.0) + "\n0.5,0\n");

  std::ostringstream ot;
  write_table_csv(ot, {"delta", "n", "seed"}, {{1e-2, 3, 7}, {1e-3, 4, 8}});
  CHECK(ot.str() == "delta,n,seed\n0.01,3,7\n0.001,4,8\n");
}

TEST_CASE("emitted indices are one-based in JSON") {
  CHECK(one_based({0, 2, 10}) == json::array({1, 3, 11}));
  CHECK(one_based({}) == json::array());
}

TEST_CASE("condition reports serialize with a fixed key set") {
  auto sp = enumerate_spectrum(domain::interval(1.0), 32);
  json j = check_exponential_moments(sp, ramp{1.0}, 32);
  CHECK(j["id"] == "exp_moment_nonzero");
  CHECK(j["verdict"] == "holds");
  CHECK(j["offending_modes"].is_array());
  CHECK(j["evidence"].is_object());
  CHECK(j.contains("tolerance"));
  CHECK(j.contains("note"));

  time_profile mu = exp_linear{sp.lambda(0), 0.5, 1.0};
  json jf = check_exponential_moments(sp, mu, 8);
  CHECK(jf["verdict"] == "fails");
  CHECK(jf["offending_modes"] == json::array({1}));
}

TEST_CASE("schema validator enforces the subset it promises") {
  json schema = json::parse(R"({
    "type": "object",
    "required": ["name", "count"],
    "additionalProperties": false,
    "properties": {
      "name": {"type": "string", "enum": ["a", "b"]},
      "count": {"type": "integer"},
      "tags": {"type": "array", "minItems": 2, "items": {"type": "number"}}
    }
  })");

  CHECK(validate_against_schema(json{{"name", "a"}, {"count", 3}}, schema).empty());

  auto v1 = validate_against_schema(json{{"name", "c"}, {"count", 3}}, schema);
  REQUIRE(v1.size() == 1);
  CHECK(v1[0].path == "/name");

  auto v2 = validate_against_schema(json{{"name", "a"}}, schema);
  REQUIRE(v2.size() == 1);
  CHECK(v2[0].message.find("count") != std::string::npos);

  auto v3 = validate_against_schema(json{{"name", "a"}, {"count", 3}, {"extra", 1}}, schema);
  REQUIRE(v3.size() == 1);
  CHECK(v3[0].path == "/extra");

  auto v4 = validate_against_schema(
      json{{"name", "a"}, {"count", 3}, {"tags", json::array({1.5})}}, schema);
  REQUIRE(v4.size() == 1);
  CHECK(v4[0].message.find("minItems") != std::string::npos);

  auto v5 = validate_against_schema(
      json{{"name", "a"}, {"count", 3}, {"tags", json::array({1.5, "x", 2.0})}}, schema);
  REQUIRE(v5.size() == 1);
  CHECK(v5[0].path == "/tags/1");

  // type mismatch reports once and stops descending
  auto v6 = validate_against_schema(json::array(), schema);
  REQUIRE(v6.size() == 1);

  // the number type accepts integers but not vice versa
  json num_schema = json::parse(R"({"type": "number"})");
  CHECK(validate_against_schema(json(3), num_schema).empty());
  json int_schema = json::parse(R"({"type": "integer"})");
  CHECK_FALSE(validate_against_schema(json(3.5), int_schema).empty());

  CHECK_THROWS_AS(validate_against_schema(json(3), json::parse(R"({"type": "frob"})")), error);
}

TEST_CASE("shipped schemas parse and accept canonical documents") {
  json config_schema = load_schema("config.schema.json");
  json checks_schema = load_schema("checks.schema.json");
  json summary_schema = load_schema("summary.schema.json");
  json report_schema = load_schema("report.schema.json");

  json config = json::parse(R"({
    "schema_version": 1,
    "domain": {"shape": "interval", "length": 1.0, "bc": "dirichlet"},
    "equation": "heat",
    "n_max": 64,
    "mu": {"kind": "ramp", "T": 1.0},
    "f": {"kind": "bump", "center": [0.5], "radius": 0.25},
    "observation": {"kind": "point", "points": [[0.31]], "T1": 1.01, "T2": 1.2, "dt": 0.01},
    "noise": {"model": "gaussian", "delta": 1e-4, "seed": 7}
  })");
  CHECK(validate_against_schema(config, config_schema).empty());

  json bad = config;
  bad["equation"] = "advection";
  CHECK_FALSE(validate_against_schema(bad, config_schema).empty());
  json extra = config;
  extra["surprise"] = true;
  CHECK_FALSE(validate_against_schema(extra, config_schema).empty());

  // a checks document assembled from live condition reports
  auto sp = enumerate_spectrum(domain::interval(1.0), 40);
  json checks = json::array();
  checks.push_back(json(muntz_classify(sp)));
  checks.push_back(json(density_limit(sp)));
  checks.push_back(json(check_exponential_moments(sp, ramp{1.0}, 40)));
  CHECK(validate_against_schema(checks, checks_schema).empty());

  CHECK(summary_schema.contains("required"));
  CHECK(report_schema["properties"].contains("method"));
}
