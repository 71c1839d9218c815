#include <doctest.h>

#include <cmath>

#include "core/csvio.hpp"
#include "core/fields.hpp"
#include "core/rng.hpp"

using namespace hydroschro;

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(make_grid(4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(16, -1.0), std::invalid_argument);
  const Grid g = make_grid(16, 2.0);
  CHECK(g.dx() == doctest::Approx(0.125));
}

TEST_CASE("gradient of a constant field vanishes") {
  const Grid g = make_grid(32, 1.0);
  const CellField c(g, 3.7);
  const FaceField f = grad(c);
  CHECK(max_abs(f) == 0.0);
}

TEST_CASE("gradient converges at second order against the analytic derivative") {
  // c = sin(2 pi x / L): centered-difference truncation is bounded by
  // (2 pi / L) (pi dx / L)^2 / 6 per the exact sinc expansion
  const double L = 1.0;
  for (int n : {64, 256}) {
    const Grid g = make_grid(n, L);
    const CellField c = make_cell_field(g, [&](double x) { return std::sin(2 * M_PI * x / L); });
    const FaceField gr = grad(c);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = g.face_pos(i);
      err = std::max(err, std::fabs(gr[i] - 2 * M_PI / L * std::cos(2 * M_PI * x / L)));
    }
    const double bound = (2 * M_PI / L) * std::pow(M_PI * g.dx() / L, 2) / 6.0 * 1.1;
    CHECK(err <= bound);
  }
}

TEST_CASE("sawtooth gradient is flat except at the wrap face") {
  const Grid g = make_grid(16, 1.0);
  CellField c(g);
  for (int i = 0; i < 16; ++i) c[i] = 0.25 * i;
  const FaceField f = grad(c);
  for (int i = 0; i + 1 < 16; ++i) CHECK(f[i] == doctest::Approx(0.25 / g.dx()));
  CHECK(f[15] == doctest::Approx(-0.25 * 15 / g.dx()));
}

TEST_CASE("line-mode grids are rejected by the periodic calculus") {
  Grid g = make_grid(16, 1.0, Boundary::line);
  CHECK_THROWS_AS(grad(CellField(g, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(divergence(FaceField(g, 1.0)), std::invalid_argument);
}

TEST_CASE("divergence identities") {
  const Grid g = make_grid(64, 2.0);
  Philox rng(3, 0);

  SUBCASE("constant face field has zero divergence") {
    CHECK(max_abs(divergence(FaceField(g, -1.25))) == 0.0);
  }
  SUBCASE("div(grad) equals the 3-point Laplacian") {
    CellField c(g);
    for (int i = 0; i < c.n(); ++i) c[i] = rng.next_unit();
    const CellField lhs = divergence(grad(c));
    const double dx2 = g.dx() * g.dx();
    for (int i = 0; i < c.n(); ++i) {
      const double expect =
          (c[(i + 1) % 64] - 2 * c[i] + c[(i + 63) % 64]) / dx2;
      CHECK(lhs[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("cell sum of a divergence telescopes to zero") {
    FaceField f(g);
    for (int i = 0; i < f.n(); ++i) f[i] = 2.0 * rng.next_unit() - 1.0;
    CHECK(std::fabs(cell_integral(divergence(f))) <= 1e-13);
  }
  SUBCASE("grad and div are exact negative adjoints") {
    CellField c(g);
    FaceField f(g);
    for (int i = 0; i < c.n(); ++i) {
      c[i] = rng.next_unit();
      f[i] = rng.next_unit() - 0.5;
    }
    double lhs = 0.0, rhs = 0.0;
    const CellField df = divergence(f);
    const FaceField gc = grad(c);
    for (int i = 0; i < c.n(); ++i) {
      lhs += df[i] * c[i];
      rhs -= f[i] * gc[i];
    }
    CHECK(lhs * g.dx() == doctest::Approx(rhs * g.dx()).epsilon(1e-13));
  }
}

TEST_CASE("mass") {
  const Grid g = make_grid(64, 2.5);
  SUBCASE("constant density") {
    CHECK(mass(CellField(g, 0.8)) == doctest::Approx(0.8 * 2.5).epsilon(1e-14));
  }
  SUBCASE("midpoint rule is exact for a single cosine mode") {
    const Grid u = make_grid(128, 1.0);
    const CellField c = make_cell_field(
        u, [](double x) { return 1.0 + 0.3 * std::cos(2 * M_PI * x); });
    CHECK(std::fabs(mass(c) - 1.0) <= 1e-14);
  }
  SUBCASE("zero field") { CHECK(mass(CellField(g, 0.0)) == 0.0); }
  SUBCASE("negative entries are flagged") {
    CellField c(g, 1.0);
    c[3] = -0.5;
    CHECK_THROWS_AS(mass(c), std::domain_error);
    CHECK(mass(c, false) == doctest::Approx((64 - 1.5) * g.dx()));
  }
}

TEST_CASE("continuity residual") {
  const Grid g = make_grid(32, 1.0);
  const int K = 10;
  const double T = 0.1;

  SUBCASE("static pair is exactly conservative") {
    CellPath rho(T, std::vector<CellField>(K + 1, CellField(g, 1.0)));
    FacePath j(T, std::vector<FaceField>(K + 1, FaceField(g, 0.0)));
    CHECK(continuity_residual(rho, j) == 0.0);
  }
  SUBCASE("a point perturbation shows up as 1/dt") {
    CellPath rho(T, std::vector<CellField>(K + 1, CellField(g, 1.0)));
    FacePath j(T, std::vector<FaceField>(K + 1, FaceField(g, 0.0)));
    rho[4][7] += 0.1;
    const double dt = T / K;
    CHECK(continuity_residual(rho, j) == doctest::Approx(0.1 / dt).epsilon(1e-12));
  }
  SUBCASE("mismatched discretizations are rejected") {
    CellPath rho(T, std::vector<CellField>(K + 1, CellField(g, 1.0)));
    FacePath j(T, std::vector<FaceField>(K, FaceField(g, 0.0)));
    CHECK_THROWS_AS(continuity_residual(rho, j), std::invalid_argument);
  }
}

TEST_CASE("node currents reproduce interval fluxes through midpoint averages") {
  const Grid g = make_grid(16, 1.0);
  Philox rng(5, 1);
  const int K = 12;
  std::vector<FaceField> G(K, FaceField(g));
  std::vector<FaceField> guess(K + 1, FaceField(g));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < 16; ++i) G[k][i] = std::sin(0.3 * k) + 0.1 * rng.next_unit() + i * 0.01;
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < 16; ++i)
      guess[k][i] = std::sin(0.3 * (k - 0.5)) + 0.05 + i * 0.01;
  const FacePath j = node_currents_from_interval_fluxes(G, guess, 1.0);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < 16; ++i)
      CHECK(0.5 * (j[k][i] + j[k + 1][i]) == doctest::Approx(G[k][i]).epsilon(1e-13));
}

TEST_CASE("field CSV round trip") {
  const Grid g = make_grid(16, 2.0);
  CellPath p(0.5, {});
  for (int k = 0; k <= 4; ++k)
    p.slices.push_back(make_cell_field(
        g, [&](double x) { return std::cos(2 * M_PI * x / 2.0) + 0.1 * k; }));
  const std::string path = "/tmp/hydroschro_test_field.csv";
  write_csv(path, p);
  const CellPath q = read_cell_path_csv(path);
  REQUIRE(q.slices.size() == p.slices.size());
  CHECK(q.t_final == doctest::Approx(p.t_final));
  CHECK(q.front().grid.n_cells == 16);
  CHECK(q.front().grid.length == doctest::Approx(2.0));
  for (int k = 0; k <= 4; ++k)
    CHECK(max_abs_diff(q[k], p[k]) <= 1e-15);
}
