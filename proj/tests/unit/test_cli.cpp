#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <bfstab/errors.hpp>

#include "app.hpp"
#include "measure_spec.hpp"

using namespace bfstab;
using namespace bfstab::cli;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const char* name) { return std::string("file:") + BFSTAB_TEST_DATA + "/" + name; }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) cells.push_back(std::exchange(cell, {}));
      else cell += c;
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("measure specs") {
  CHECK(dimension(parse_measure("std")) == 1);
  const auto g = std::get<Density1D>(parse_measure("gauss:1,4"));
  CHECK(g.variance() == doctest::Approx(4.0));
  CHECK(g.mean() == doctest::Approx(1.0));
  const auto m = std::get<Density1D>(parse_measure("mix:[0.5,-1,1;0.5,1,1]"));
  CHECK(m.as_mixture()->components().size() == 2);
  CHECK(dimension(parse_measure(data("diag41.json"))) == 2);
  CHECK_THROWS_AS(parse_measure("gauss:1"), ValidationError);
  CHECK_THROWS_AS(parse_measure("gauss:1,-4"), ValidationError);
  CHECK_THROWS_AS(parse_measure("mix:[0.5,0,1;0.4,0,1]"), ValidationError);
  CHECK_THROWS_AS(parse_measure("gauss:1x,2"), ValidationError);
  CHECK_THROWS_AS(parse_g("cubic:1"), ValidationError);
  CHECK(parse_g("sin-bump").name() == "sin-bump");
}

TEST_CASE("distance golden run") {
  const auto r = invoke({"distance", "--u", "gauss:0,4", "--v", "gauss:0,1"});
  CHECK(r.code == kExitPass);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["value"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(j["tool"] == "bfstab");
  CHECK(j["config"]["seed"] == 0);

  // "std" adopts the dimension of the other operand.
  const auto promoted = invoke({"distance", "--u", data("diag41.json"), "--v", "std"});
  REQUIRE(promoted.code == kExitPass);
  CHECK(nlohmann::json::parse(promoted.out)["value"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(invoke({"distance", "--u", "gauss:0,4", "--v", data("diag41.json")}).code == kExitUsage);
  const auto nd = invoke({"distance", "--u", data("diag41.json"), "--v", data("diag41.json")});
  CHECK(nd.code == kExitPass);
}

TEST_CASE("deficit golden run") {
  const auto r = invoke({"deficit", "--measure", data("diag41.json"), "--theorem", "main"});
  CHECK(r.code == kExitPass);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["status"] == "pass");
  CHECK(j["reports"][0]["margin"].get<double>() == doctest::Approx(0.193147180559945).epsilon(1e-7));

  const auto grid = invoke({"deficit", "--measure", data("wide_gaussian.csv"), "--format", "csv"});
  CHECK(grid.code == kExitPass);
  const auto rows = csv_rows(grid.out);
  REQUIRE(rows.size() == 2);
  CHECK(std::stod(rows[1][4]) == doctest::Approx(0.193147180559945).epsilon(1e-3));

  const auto t = invoke({"talagrand", "--measure", "gauss:0,4"});
  CHECK(t.code == kExitPass);
  CHECK(nlohmann::json::parse(t.out)["reports"][0]["margin"].get<double>() ==
        doctest::Approx(0.488705638880109).epsilon(1e-7));
}

TEST_CASE("usage errors exit 1 and name the offending field") {
  auto r = invoke({"deficit", "--measure", data("bad_cov.json")});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("components[0].cov") != std::string::npos);

  r = invoke({"verify", "--suite", "equality-cases", "--bogus"});
  CHECK(r.code == kExitUsage);
  r = invoke({"distance", "--u", "gauss:0"});
  CHECK(r.code == kExitUsage);
  r = invoke({"sweep", "--family", "scaled-gaussian", "--values", "1,abc"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("--values") != std::string::npos);
  r = invoke({"deficit", "--measure", data("wide_gaussian.csv"), "--theorem", "corollary"});
  CHECK(r.code == kExitUsage);
  r = invoke({});
  CHECK(r.code == kExitUsage);
  r = invoke({"--help"});
  CHECK(r.code == kExitPass);
  CHECK(r.out.find("verify") != std::string::npos);
}

TEST_CASE("exit status follows the combined report status") {
  CHECK(exit_code(Status::pass) == 0);
  CHECK(exit_code(Status::fail) == 2);
  CHECK(exit_code(Status::inconclusive) == 3);

  // A case that cannot run becomes an inconclusive row; the sweep goes on.
  const auto r = invoke({"verify", "--suite", "pl", "--lambda", "0.5,1.5", "--format", "csv"});
  CHECK(r.code == kExitInconclusive);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 9);
  CHECK(rows[1][6] == "pass");
  CHECK(rows[2][6] == "inconclusive");
}

TEST_CASE("sweeps") {
  auto r = invoke({"sweep", "--family", "scaled-gaussian"});
  CHECK(r.code == kExitPass);
  auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][0] == "case_id");
  CHECK(rows[1][0] == "sigma=1");
  CHECK(std::abs(std::stod(rows[1][4])) <= 1e-12);
  for (int i = 1; i < 4; ++i) CHECK(std::stod(rows[i][4]) >= 0.0);

  r = invoke({"sweep", "--family", "extremal", "--dim", "2"});
  CHECK(r.code == kExitPass);
  rows = csv_rows(r.out);
  REQUIRE(rows.size() == 4);
  for (int i = 1; i < 4; ++i) CHECK(std::stod(rows[i][2]) <= 1e-7);

  r = invoke({"sweep", "--family", "pl", "--g", "sin-bump", "--values", "0.1,0.5,0.9"});
  CHECK(r.code == kExitPass);
  rows = csv_rows(r.out);
  REQUIRE(rows.size() == 4);
  for (int i = 1; i < 4; ++i) CHECK(std::stod(rows[i][4]) >= 0.0);
}

TEST_CASE("pl-check diagnostics table") {
  const auto r = invoke({"pl-check", "--g", "linear:1", "--lambda", "0.3", "--diagnostics"});
  CHECK(r.code == kExitPass);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["limit_diagnostics"]["residuals_contract"] == true);
  CHECK(j["limit_diagnostics"]["rows"].size() == 6);
}

TEST_CASE("reports are identical across worker counts and runs") {
  for (const char* suite : {"talagrand-1d", "pl", "equality-cases"}) {
    const auto one = invoke({"verify", "--suite", suite, "--jobs", "1"});
    const auto three = invoke({"verify", "--suite", suite, "--jobs", "3"});
    const auto again = invoke({"verify", "--suite", suite, "--jobs", "3"});
    CHECK(one.code == kExitPass);
    CHECK(one.out == three.out);
    CHECK(three.out == again.out);
  }
}

TEST_CASE("atomic output file") {
  const auto path = std::filesystem::temp_directory_path() / "bfstab_cli_out.json";
  std::filesystem::remove(path);
  const auto r = invoke({"distance", "--u", "std", "--v", "gauss:2,1", "--out", path.string()});
  CHECK(r.code == kExitPass);
  CHECK(r.out.empty());
  std::ifstream f(path);
  std::stringstream content;
  content << f.rdbuf();
  const auto direct = invoke({"distance", "--u", "std", "--v", "gauss:2,1"});
  CHECK(content.str() == direct.out);
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}
