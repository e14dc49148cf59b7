#include "pqft/cli.hpp"

#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pqft;
using namespace pqft::cli;

namespace {

RunConfig config(std::string command) {
  RunConfig c;
  c.command = std::move(command);
  c.timestamp = false;
  return c;
}

nlohmann::json run_json(const RunConfig& c) { return nlohmann::json::parse(render(c, dispatch(c))); }

}  // namespace

TEST_CASE("beta documents carry the schema and pass") {
  for (std::string model : {"phi3_d6", "phi4_d4", "phi2_d4_example"}) {
    auto c = config("beta");
    c.model = model;
    auto r = dispatch(c);
    INFO(model);
    CHECK(r.exit_code() == kOk);
    auto j = nlohmann::json::parse(render(c, r));
    CHECK(j["schema"] == kSchema);
    CHECK(j["ok"] == true);
    CHECK_FALSE(j.contains("timestamp"));
  }
}

TEST_CASE("phi^3 beta lands on the expected coefficient") {
  auto c = config("beta");
  c.model = "phi3_d6";
  auto j = run_json(c);
  bool found = false;
  for (auto& b : j["result"]["beta"])
    if (b["basis"] == "phi^3") {
      found = true;
      CHECK(b["coefficient"]["symbolic"] == "-3/256 * i^0 * pi^-3 * prod(hbar^1, g^3)");
    }
  CHECK(found);
}

TEST_CASE("unknown model is a usage error") {
  auto c = config("beta");
  c.model = "bogus";
  CHECK_THROWS_AS(dispatch(c), UsageError);
}

TEST_CASE("extend reports the box delta coefficient") {
  auto c = config("extend");
  c.dim = 6;
  c.sig = 5;
  c.power = 4;
  auto j = run_json(c);
  REQUIRE(j["result"]["violation"].size() == 1);
  CHECK(j["result"]["violation"][0]["box"] == 1);
  CHECK(j["result"]["violation"][0]["coefficient"]["symbolic"] == "1/12 * i^1 * pi^3 * prod()");
}

TEST_CASE("extend of a subcritical power is unique") {
  auto c = config("extend");
  c.dim = 4;
  c.sig = 3;
  c.power = 1;
  auto j = run_json(c);
  CHECK(j["result"]["unique"] == true);
  CHECK(j["result"]["violation"].empty());
}

TEST_CASE("extend oracle") {
  auto c = config("extend");
  c.dim = 4;
  c.sig = 0;
  c.power = 2;
  c.oracle = true;
  auto r = dispatch(c);
  CHECK(r.exit_code() == kOk);
  CHECK(r.body["oracle"]["agree"] == true);
  c.sig = 3;
  CHECK_THROWS_AS(dispatch(c), UsageError);
}

TEST_CASE("check suites pass") {
  for (std::string suite : {"products", "flow", "cocycle", "hadamard", "feynmanI"}) {
    auto c = config("check");
    c.suite = suite;
    c.order = 3;
    INFO(suite);
    auto r = dispatch(c);
    CHECK(r.mismatches.empty());
  }
  for (int d : {2, 3, 4, 6}) {
    auto c = config("check");
    c.suite = "hadamard";
    c.dim = d;
    INFO("d = " << d);
    CHECK(dispatch(c).exit_code() == kOk);
  }
}

TEST_CASE("too tight a tolerance is reported as a mismatch") {
  auto c = config("check");
  c.suite = "feynmanI";
  c.tol = 1e-30;
  auto r = dispatch(c);
  CHECK(r.exit_code() == kMismatch);
}

TEST_CASE("unknown suite and command") {
  auto c = config("check");
  c.suite = "bogus";
  CHECK_THROWS_AS(dispatch(c), UsageError);
  CHECK_THROWS_AS(dispatch(config("bogus")), UsageError);
}

TEST_CASE("configuration validation") {
  auto c = config("check");
  c.suite = "feynmanI";
  c.tol = 0;
  CHECK_THROWS_AS(dispatch(c), UsageError);
  c.tol = 1e-8;
  c.format = "xml";
  CHECK_THROWS_AS(dispatch(c), UsageError);
  c.format = "json";
  c.lambdaGrid = {10};
  CHECK_THROWS_AS(dispatch(c), UsageError);
}

TEST_CASE("flow driver") {
  auto j = run_json(config("flow"));
  CHECK(j["result"]["ok"] == true);
  CHECK(j["result"]["fits"].size() == 2);
}

TEST_CASE("hadamard point evaluation") {
  auto c = config("hadamard");
  c.dim = 3;
  c.m2 = 1;
  c.x2 = -1;
  auto j = run_json(c);
  const double v = std::stod(j["result"]["value"].get<std::string>());
  CHECK(std::abs(v - std::cosh(1.0) / (4 * M_PI)) < 1e-12);
  c.x2 = 1;
  CHECK_THROWS_AS(dispatch(c), UsageError);
}

TEST_CASE("output is deterministic apart from the timestamp") {
  auto c = config("beta");
  c.model = "phi4_d4";
  CHECK(render(c, dispatch(c)) == render(c, dispatch(c)));
  c.timestamp = true;
  auto j1 = nlohmann::json::parse(render(c, dispatch(c)));
  auto j2 = nlohmann::json::parse(render(c, dispatch(c)));
  CHECK(j1.contains("timestamp"));
  j1.erase("timestamp");
  j2.erase("timestamp");
  CHECK(j1.dump() == j2.dump());
}

TEST_CASE("worker count does not change the result") {
  auto c = config("check");
  c.suite = "flow";
  c.order = 2;
  auto serial = render(c, dispatch(c));
  c.jobs = 4;
  CHECK(render(c, dispatch(c)) == serial);
  std::vector<std::function<int()>> tasks;
  for (int j = 0; j < 50; ++j) tasks.push_back([j] { return j * j; });
  auto squares = parallel_map(tasks, 8);
  for (int j = 0; j < 50; ++j) CHECK(squares[j] == j * j);
}

TEST_CASE("CSV coefficient tables") {
  auto c = config("beta");
  c.model = "phi4_d4";
  c.format = "csv";
  auto text = render(c, dispatch(c));
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  CHECK(header == "name,symbolic,atoms,re,im");
  CHECK(text.find("\"-1/128 * i^1") != std::string::npos);  // multi-term scalars are quoted
}

TEST_CASE("output directory override") {
  auto dir = std::filesystem::temp_directory_path() / "pqft_cli_test";
  std::filesystem::remove_all(dir);
  ::setenv("PQFT_OUTPUT_DIR", dir.c_str(), 1);
  CHECK(output_path("out.json") == dir / "out.json");
  CHECK(output_path("/abs/out.json") == std::filesystem::path("/abs/out.json"));
  auto c = config("extend");
  c.dim = 4;
  c.power = 1;
  c.out = "sub/out.json";
  std::ostringstream unused;
  write_output(c, render(c, dispatch(c)), unused);
  CHECK(unused.str().empty());
  std::ifstream f(dir / "sub/out.json");
  REQUIRE(f);
  CHECK(nlohmann::json::parse(f)["schema"] == kSchema);
  ::unsetenv("PQFT_OUTPUT_DIR");
  std::filesystem::remove_all(dir);
}
