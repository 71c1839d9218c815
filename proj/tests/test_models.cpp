#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "core/models.hpp"

using namespace hydroschro;

namespace {
std::vector<double> sweep(double lo, double hi, int n) {
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = lo + (hi - lo) * (i + 0.5) / n;
  return s;
}
}  // namespace

TEST_CASE("independent builtin carries the paper coefficients") {
  const TransportModel m = builtin_model("independent");
  CHECK(m.D_h(0.3) == 1.0);
  CHECK(m.sigma(0.7) == doctest::Approx(0.7));
  CHECK((*m.D_s)(2.0) == 1.0);
  CHECK(m.f(2.0) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(m.f(1.0) == doctest::Approx(0.0));
  CHECK(m.f_prime(1.0) == doctest::Approx(1.0));
  CHECK(m.f_prime_gauged(1.0) == doctest::Approx(0.0));  // Born gauge
}

TEST_CASE("zero_range with identity phi matches independent coefficients") {
  const TransportModel zr = zero_range_model(zero_range_phi_identity());
  const TransportModel ind = builtin_model("independent");
  for (double rho : sweep(0.05, 8.0, 50)) {
    CHECK(zr.D_h(rho) == doctest::Approx(ind.D_h(rho)).epsilon(1e-14));
    CHECK(zr.sigma(rho) == doctest::Approx(ind.sigma(rho)).epsilon(1e-14));
    CHECK((*zr.D_s)(rho) == doctest::Approx((*ind.D_s)(rho)).epsilon(1e-14));
    CHECK(zr.f_prime(rho) == doctest::Approx(ind.f_prime(rho)).epsilon(1e-13));
    CHECK(zr.f(rho) == doctest::Approx(ind.f(rho)).epsilon(1e-11));
  }
}

TEST_CASE("kmp mobility and forced free energy") {
  const TransportModel m = builtin_model("kmp");
  CHECK(m.sigma(1.5) == doctest::Approx(2.25));
  CHECK(m.D_h(0.4) == 1.0);
  // f'' = 1/rho^2 via centered differences of f'
  const double rho = 0.8, h = 1e-5;
  const double fpp = (m.f_prime(rho + h) - m.f_prime(rho - h)) / (2 * h);
  CHECK(fpp == doctest::Approx(1.0 / (rho * rho)).epsilon(1e-8));
  CHECK_FALSE(m.has_Ds());
}

TEST_CASE("ssep domain and metadata") {
  const TransportModel m = builtin_model("ssep");
  CHECK(m.rho_max == 1.0);
  CHECK(m.sigma(0.5) == doctest::Approx(0.25));
  CHECK_FALSE(m.has_Ds());
  CHECK(m.metadata.at("provenance").find("literature") != std::string::npos);
  const TransportModel with =
      model_with_Ds(m, {0.0, 0.25, 0.5, 0.75, 1.0}, {1.0, 0.8, 0.6, 0.4, 0.2});
  CHECK(with.has_Ds());
  CHECK((*with.D_s)(0.5) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("unknown builtin and invalid phi are rejected") {
  CHECK_THROWS_AS(builtin_model("inclusion"), std::invalid_argument);
  ZeroRangeSpec bad{"dec", [](double r) { return -r; }, [](double) { return -1.0; }};
  CHECK_THROWS_AS(zero_range_model(bad), std::invalid_argument);
  ZeroRangeSpec offset{"off", [](double r) { return r + 1.0; }, [](double) { return 1.0; }};
  CHECK_THROWS_AS(zero_range_model(offset), std::invalid_argument);
}

TEST_CASE("einstein residual") {
  SUBCASE("independent model satisfies the relation") {
    const TransportModel m = builtin_model("independent");
    CHECK(einstein_residual(m, sweep(0.1, 10.0, 100)) <= 1e-10);
  }
  SUBCASE("every zero-range spec satisfies it by construction") {
    for (auto spec : {zero_range_phi_identity(), zero_range_phi_power(1.0, 2.0),
                      zero_range_phi_poly2(0.5, 1.0)}) {
      const TransportModel m = zero_range_model(spec);
      CHECK(einstein_residual(m, sweep(0.25, 4.0, 60)) <= 1e-10);
    }
  }
  SUBCASE("doubled D_h is caught and equals max |f'' sigma|") {
    TransportModel m = builtin_model("independent");
    m.D_h = [](double) { return 2.0; };
    const auto samples = sweep(0.5, 2.0, 20);
    const double r = einstein_residual(m, samples);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-6));  // |2 - 1| with f'' sigma = 1
  }
  SUBCASE("samples outside the domain are rejected") {
    const TransportModel m = builtin_model("ssep");
    CHECK_THROWS_AS(einstein_residual(m, {1.5}), std::domain_error);
  }
}

TEST_CASE("free energy difference") {
  const TransportModel m = builtin_model("independent");
  const Grid g = make_grid(64, 1.0);

  SUBCASE("vanishes on the reference profile") {
    CHECK(free_energy_difference(m, CellField(g, 1.3), 1.3) == doctest::Approx(0.0));
  }
  SUBCASE("closed form for rho=2, m=1") {
    CHECK(free_energy_difference(m, CellField(g, 2.0), 1.0) ==
          doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-12));
  }
  SUBCASE("strictly positive off the reference, for several models") {
    const CellField rho = make_cell_field(
        g, [](double x) { return 1.0 + 0.4 * std::cos(2 * M_PI * x); });
    for (const auto& m2 : {builtin_model("independent"), builtin_model("kmp"),
                           zero_range_model(zero_range_phi_power(1.0, 2.0))}) {
      CHECK(free_energy_difference(m2, rho, 1.0) > 0.0);
    }
  }
  SUBCASE("domain violations are rejected") {
    const TransportModel ssep = builtin_model("ssep");
    CHECK_THROWS_AS(free_energy_difference(ssep, CellField(g, 1.5), 0.5),
                    std::domain_error);
  }
}

TEST_CASE("custom models from JSON") {
  SUBCASE("parametric family plus table") {
    const std::string spec = R"({
      "type": "custom", "name": "toy",
      "rho_domain": [0.01, 10.0], "m_ref": 1.0,
      "D_h": {"type": "poly2", "a": 0.0, "b": 0.0, "c": 1.0},
      "sigma": {"type": "power", "c": 1.0, "a": 1.0}
    })";
    const TransportModel m = model_from_json_text(spec);
    CHECK(m.D_h(3.0) == doctest::Approx(1.0));
    CHECK(m.sigma(3.0) == doctest::Approx(3.0));
    // f' derived from the Einstein relation: integral of D_h/sigma = log rho
    CHECK(m.f_prime(2.0) - m.f_prime(1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    CHECK(einstein_residual(m, sweep(0.5, 5.0, 30)) <= 1e-8);
  }
  SUBCASE("tabulated coefficient as a cubic spline") {
    std::vector<double> rho, val;
    for (int i = 0; i <= 20; ++i) {
      rho.push_back(0.1 + i * 0.2);
      val.push_back(std::pow(rho.back(), 2));
    }
    nlohmann::json doc;
    doc["type"] = "custom";
    doc["rho_domain"] = {0.1, 4.0};
    doc["D_h"] = {{"type", "poly2"}, {"a", 0.0}, {"b", 0.0}, {"c", 1.0}};
    doc["sigma"] = {{"type", "table"}, {"rho", rho}, {"value", val}};
    const TransportModel m = model_from_json(doc);
    CHECK(m.sigma(1.234) == doctest::Approx(1.234 * 1.234).epsilon(1e-4));
  }
  SUBCASE("builtin and zero_range passthrough") {
    CHECK(model_from_json_text(R"({"type":"builtin","name":"kmp"})").name == "kmp");
    const TransportModel zr = model_from_json_text(
        R"({"type":"zero_range","phi":{"type":"power","c":1.0,"a":2.0}})");
    CHECK(zr.sigma(2.0) == doctest::Approx(4.0));
    CHECK(zr.D_h(2.0) == doctest::Approx(4.0));
  }
}

TEST_CASE("cubic spline basics") {
  std::vector<double> x, y;
  for (int i = 0; i <= 10; ++i) {
    x.push_back(i * 0.5);
    y.push_back(std::sin(x.back()));
  }
  const CubicSpline s(x, y);
  CHECK(s.eval(2.3) == doctest::Approx(std::sin(2.3)).epsilon(2e-3));
  CHECK(s.derivative(2.3) == doctest::Approx(std::cos(2.3)).epsilon(2e-2));
  CHECK_THROWS_AS(CubicSpline({1.0, 0.5, 2.0}, {0, 0, 0}), std::invalid_argument);
}
