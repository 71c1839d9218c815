#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/expr.hpp"
#include "core/runio.hpp"

using namespace hydroschro;

TEST_CASE("expression grammar") {
  SUBCASE("cosine profile") {
    const Expr e = Expr::parse("1 + 0.3*cos(2*pi*x)");
    CHECK(e.eval(0.0) == doctest::Approx(1.3));
    CHECK(e.eval(0.25) == doctest::Approx(1.0));
    CHECK(e.eval(0.5) == doctest::Approx(0.7));
  }
  SUBCASE("nesting, unary minus, exp and sin") {
    const Expr e = Expr::parse("-exp(-x) + sin(pi*x)*2");
    CHECK(e.eval(1.0) == doctest::Approx(-std::exp(-1.0) + 0.0).epsilon(1e-12));
    CHECK(e.eval(0.5) == doctest::Approx(-std::exp(-0.5) + 2.0));
  }
  SUBCASE("parse errors carry positions") {
    CHECK_THROWS_AS(Expr::parse("1 +"), std::invalid_argument);
    CHECK_THROWS_AS(Expr::parse("foo(x)"), std::invalid_argument);
    CHECK_THROWS_AS(Expr::parse("cos 2"), std::invalid_argument);
    CHECK_THROWS_AS(Expr::parse("1 2"), std::invalid_argument);
  }
}

TEST_CASE("git-style content hash") {
  // sha1 of "blob 0\0" equals git's empty-blob id
  CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(content_hash("x") != content_hash("y"));
}

TEST_CASE("run log is append-only JSON lines") {
  const std::string path = "/tmp/hydroschro_test_runlog.jsonl";
  std::filesystem::remove(path);
  append_run_log(path, "opA", {{"a", 1}}, {{"m", 2.5}}, {"flag1"}, 0.25);
  append_run_log(path, "opB", {{"a", 1}}, {{"m", 3.5}}, {}, 0.5);
  std::ifstream in(path);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto doc = nlohmann::json::parse(line);
    CHECK(doc.contains("timestamp"));
    CHECK(doc.contains("config_hash"));
    CHECK(doc.at("config_hash") == content_hash(nlohmann::json({{"a", 1}}).dump()));
    ++count;
  }
  CHECK(count == 2);
}

TEST_CASE("bridge solution directory layout") {
  const Grid g = make_grid(16, 1.0);
  BridgeSolution sol;
  sol.rho = CellPath(0.1, std::vector<CellField>(3, CellField(g, 1.0)));
  sol.H = CellPath(0.1, std::vector<CellField>(3, CellField(g, 0.0)));
  sol.j = FacePath(0.1, std::vector<FaceField>(3, FaceField(g, 0.0)));
  sol.value = 0.5;
  const std::string dir = "/tmp/hydroschro_test_soldir";
  std::filesystem::remove_all(dir);
  save_bridge_solution(dir, sol, {{"T", 0.1}});
  for (const char* f : {"rho.csv", "H.csv", "j.csv", "solution.json"})
    CHECK(std::filesystem::exists(dir + std::string("/") + f));
  std::ifstream in(dir + std::string("/solution.json"));
  nlohmann::json doc;
  in >> doc;
  CHECK(doc.at("value") == doctest::Approx(0.5));
  CHECK(doc.at("config").at("T") == doctest::Approx(0.1));
  CHECK(doc.at("content_hash").get<std::string>().size() == 40);
}
