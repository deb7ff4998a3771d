#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lagrangeforge/error.hpp"
#include "model.hpp"
#include "output.hpp"
#include "presets.hpp"
#include "problem_spec.hpp"
#include "support/common.hpp"

using namespace lagrangeforge;
using namespace lagrangeforge::cli;
using lagrangeforge::testing::code_of;

namespace {

ProblemSpec spec_of(const std::string& text) { return parse_problem_spec(Json::parse(text)); }

const Classification& row(const std::vector<Classification>& rows, const std::string& family) {
  for (const auto& r : rows) {
    if (r.family == family) return r;
  }
  FAIL("family missing: " << family);
  return rows.front();
}

}  // namespace

TEST_CASE("csv quoting follows RFC 4180") {
  CHECK(CsvTable::quote("plain") == "plain");
  CHECK(CsvTable::quote("a,b") == "\"a,b\"");
  CHECK(CsvTable::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(CsvTable::quote("two\nlines") == "\"two\nlines\"");
  CsvTable t({"name", "value"});
  t.add_row({"x,y", "1.5"});
  t.add_row({"short"});
  CHECK(t.str() == "name,value\r\n\"x,y\",1.5\r\nshort,\r\n");
}

TEST_CASE("numbers are written locale-free and round-trip exactly") {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 12345678.9, 0.0}) {
    CHECK(std::stod(number_text(v)) == v);
    CHECK(number_text(v).find(',') == std::string::npos);
  }
  CHECK(number_text(std::nan("")) == "nan");
}

TEST_CASE("atomic writes replace the target and leave no temporaries") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lagrangeforge_atomic_test";
  fs::remove_all(dir);
  write_atomic(dir / "a.txt", "first");
  write_atomic(dir / "a.txt", "second");
  std::ifstream in(dir / "a.txt");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == "second");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  fs::remove_all(dir);
}

TEST_CASE("spec validation reports the offending path") {
  auto message_of = [](const std::string& text) {
    try {
      spec_of(text);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(code_of([] { spec_of(R"({"schema_version":1,"equation":{"form":"raw","rhs":"0"},"extra":1})"); }) ==
        ErrorCode::kSchema);
  CHECK(message_of(R"({"schema_version":1,"equation":{"form":"raw","rhs":"0","zz":1}})")
            .find("$.equation.zz") != std::string::npos);
  CHECK(message_of(R"({"schema_version":2,"equation":{"form":"raw","rhs":"0"}})")
            .find("$.schema_version") != std::string::npos);
  CHECK(message_of(R"({"schema_version":1,"equation":{"form":"raw","rhs":"q*x"}})")
            .find("$.equation.rhs") != std::string::npos);
  CHECK(code_of([] { spec_of(R"({"schema_version":1,"equation":{"form":"raw","rhs":"q*x"}})"); }) ==
        ErrorCode::kUnknownIdentifier);
  CHECK(code_of([] { spec_of(R"({"schema_version":1,"equation":{"form":"standard","rhs":"0"}})"); }) ==
        ErrorCode::kSchema);
  CHECK(code_of([] { spec_of(R"({"schema_version":1,"parameters":{"v":1},"equation":{"form":"raw","rhs":"0"}})"); }) ==
        ErrorCode::kSchema);
  CHECK(code_of([] { spec_of(R"({"schema_version":1,"equation":{"form":"monomial","a":"0"}})"); }) ==
        ErrorCode::kSchema);
  CHECK(code_of([] { spec_of(R"({"schema_version":1,"equation":{"form":"raw","rhs":"0"},"domain":{"x":[1,0]}})"); }) ==
        ErrorCode::kSchema);
  CHECK(code_of([] {
          spec_of(R"({"schema_version":1,"equation":{"form":"raw","rhs":"0"},"integration":{"t0":1,"t1":1}})");
        }) == ErrorCode::kSchema);
}

TEST_CASE("normalized specs are fixed points of parsing") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const ProblemSpec spec = spec_of(*preset_text(name));
    const Json once = normalized_spec(spec);
    const Json twice = normalized_spec(parse_problem_spec(once));
    CHECK(once.dump() == twice.dump());
  }
}

TEST_CASE("classifier examples") {
  SUBCASE("damped oscillator") {
    const Problem p(spec_of(R"({"schema_version":1,"parameters":{"g":0.1},
        "equation":{"form":"raw","rhs":"-g*v - x"}})"));
    const auto rows = classify(p, std::nullopt);
    CHECK(row(rows, "standard").applicable);
    CHECK(row(rows, "reciprocal-linear").applicable);
    CHECK_FALSE(row(rows, "radical-linear").applicable);
    CHECK(row(rows, "radical-linear").detail.find("c x") != std::string::npos);
  }
  SUBCASE("x'' + k x' = 0 admits the five families of the multi-Lagrangian example") {
    const Problem p(spec_of(R"({"schema_version":1,"parameters":{"k":0.5},
        "equation":{"form":"raw","rhs":"-k*v"},"domain":{"v":[0.2,2]}})"));
    const auto rows = classify(p, std::nullopt);
    for (const char* f : {"standard", "reciprocal-linear", "reciprocal-nu2", "monomial",
                          "generalized-kinetic", "radical-equal", "exponential"}) {
      CAPTURE(f);
      CHECK(row(rows, f).applicable);
    }
  }
  SUBCASE("x'' + x t v^2 = 0 fails the standard condition with residual max |2x|") {
    const Problem p(spec_of(R"({"schema_version":1,"equation":{"form":"raw","rhs":"-x*t*v^2"},
        "domain":{"x":[-1.5,1]}})"));
    const auto& r = row(classify(p, std::nullopt), "standard");
    CHECK_FALSE(r.applicable);
    CHECK(r.residual == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("builder exponent conflicting with the equation is rejected") {
    const Problem p(spec_of(R"({"schema_version":1,
        "equation":{"form":"monomial","b":"1","exponent":3}})"));
    BuilderSpec b;
    b.family = "monomial";
    b.exponent = 2.5;
    CHECK(code_of([&] { build_lagrangian(p, b, "L"); }) == ErrorCode::kInadmissible);
  }
}

TEST_CASE("every preset validates and builds what it declares") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const ProblemSpec spec = spec_of(*preset_text(name));
    const Problem problem(spec);
    if (spec.builder) {
      const BuiltLagrangian b = build_lagrangian(problem, *spec.builder, "L");
      CHECK(el_residual_field(b.lagrangian, problem.ode, b.lagrangian.domain,
                              spec.verification_tol())
                .pass);
    }
  }
  CHECK_FALSE(preset_text("no-such-preset").has_value());
}
