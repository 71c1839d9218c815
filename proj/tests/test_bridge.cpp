#include <doctest.h>

#include <cmath>

#include "core/bridge.hpp"
#include "core/colehopf.hpp"

using namespace hydroschro;

namespace {

BridgeProblem cosine_problem(const TransportModel& model, int n, double amp, double T,
                             int n_steps) {
  BridgeProblem p;
  p.model = model;
  p.grid = make_grid(n, 1.0);
  p.T = T;
  p.n_steps = n_steps;
  p.mu0 = make_cell_field(p.grid,
                          [&](double x) { return 1.0 + amp * std::cos(2 * M_PI * x); });
  p.mu1 = make_cell_field(p.grid,
                          [&](double x) { return 1.0 - amp * std::cos(2 * M_PI * x); });
  return p;
}

}  // namespace

TEST_CASE("equilibrium endpoints give a zero-cost stationary bridge") {
  const TransportModel m = builtin_model("independent");
  BridgeProblem p = cosine_problem(m, 32, 0.0, 0.1, 50);
  const BridgeSolution sol = solve_hsp(p);
  CHECK(sol.diagnostics.converged);
  CHECK(sol.value <= 1e-12);
  for (int k = 0; k <= p.n_steps; ++k) {
    CHECK(max_abs_diff(sol.rho[k], p.mu0) <= 1e-10);
    // H constant in space (gauge-fixed to zero mean)
    CHECK(max_abs(sol.H[k]) <= 1e-10);
  }
}

TEST_CASE("problem validation") {
  const TransportModel m = builtin_model("independent");
  BridgeProblem p = cosine_problem(m, 32, 0.2, 0.1, 40);
  SUBCASE("unequal masses are rejected") {
    for (double& x : p.mu1.v) x += 0.1;
    CHECK_THROWS_AS(solve_hsp(p), std::invalid_argument);
  }
  SUBCASE("endpoints must sit strictly inside the domain") {
    const TransportModel ssep = builtin_model("ssep");
    BridgeProblem q = p;
    q.model = ssep;  // cosine endpoints exceed rho_max = 1
    CHECK_THROWS_AS(solve_hsp(q), std::invalid_argument);
  }
}

TEST_CASE("independent bridge matches the Cole-Hopf oracle") {
  const TransportModel m = builtin_model("independent");
  BridgeProblem p = cosine_problem(m, 64, 0.3, 0.1, 400);
  const BridgeSolution sol = solve_hsp(p);
  REQUIRE(sol.diagnostics.converged);
  const IndependentBridgeResult oracle =
      solve_independent_bridge(p.mu0, p.mu1, p.T, p.n_steps);
  REQUIRE(oracle.converged);
  double dmax = 0.0;
  for (int k = 0; k <= p.n_steps; ++k)
    dmax = std::max(dmax, max_abs_diff(sol.rho[k], oracle.solution.rho[k]));
  CHECK(dmax <= 1e-3);
  CHECK(std::fabs(sol.value - oracle.solution.value) <=
        1e-4 * oracle.solution.value);
}

TEST_CASE("zero_range identity phi reproduces the independent bridge") {
  BridgeProblem p1 = cosine_problem(builtin_model("independent"), 32, 0.2, 0.05, 50);
  BridgeProblem p2 = cosine_problem(zero_range_model(zero_range_phi_identity()), 32,
                                    0.2, 0.05, 50);
  const BridgeSolution a = solve_hsp(p1);
  const BridgeSolution b = solve_hsp(p2);
  CHECK(std::fabs(a.value - b.value) <= 1e-12 * std::max(1.0, a.value));
  double dmax = 0.0;
  for (int k = 0; k <= 50; ++k) dmax = std::max(dmax, max_abs_diff(a.rho[k], b.rho[k]));
  CHECK(dmax <= 1e-12);
}

TEST_CASE("hamiltonian") {
  const TransportModel m = builtin_model("independent");
  const Grid g = make_grid(128, 1.0);
  SUBCASE("constant momentum gives zero") {
    const CellField rho = make_cell_field(
        g, [](double x) { return 1.0 + 0.4 * std::sin(2 * M_PI * x); });
    CHECK(hamiltonian(m, rho, CellField(g, 2.0)) == 0.0);
  }
  SUBCASE("flat density, sinusoidal momentum: 2 pi^2 up to O(dx^2)") {
    const CellField H = make_cell_field(g, [](double x) { return std::sin(2 * M_PI * x); });
    const double val = hamiltonian(m, CellField(g, 1.0), H);
    const double tol = 2 * M_PI * M_PI * std::pow(M_PI * g.dx(), 2) / 3.0 * 1.5;
    CHECK(std::fabs(val - 2 * M_PI * M_PI) <= tol);
  }
}

TEST_CASE("hamiltonian is conserved along converged bridges and improves with dt") {
  const TransportModel m = builtin_model("independent");
  BridgeProblem p = cosine_problem(m, 48, 0.2, 0.05, 50);
  const BridgeSolution coarse = solve_hsp(p);
  REQUIRE(coarse.diagnostics.converged);
  CHECK(coarse.diagnostics.hamiltonian_drift <= 1e-3);
  p.n_steps = 100;
  const BridgeSolution fine = solve_hsp(p);
  REQUIRE(fine.diagnostics.converged);
  CHECK(coarse.diagnostics.hamiltonian_drift / fine.diagnostics.hamiltonian_drift >= 1.8);
}

TEST_CASE("canonical residual") {
  const TransportModel m = builtin_model("independent");
  const Grid g = make_grid(48, 1.0);
  SUBCASE("stationary pair is exact") {
    CellPath rho(0.1, std::vector<CellField>(11, CellField(g, 1.0)));
    CellPath H(0.1, std::vector<CellField>(11, CellField(g, 0.3)));
    auto [r1, r2] = canonical_residual(m, rho, H);
    CHECK(r1 == 0.0);
    CHECK(r2 == 0.0);
  }
  SUBCASE("relaxation trajectory solves the system with H = 0") {
    const CellField rho0 = make_cell_field(
        g, [](double x) { return 1.0 + 0.2 * std::cos(2 * M_PI * x); });
    const HydroTrajectory t = solve_nde(m, rho0, 0.02, 40);
    CellPath H(0.02, std::vector<CellField>(41, CellField(g, 0.0)));
    auto [r1, r2] = canonical_residual(m, t.rho, H);
    CHECK(r2 == 0.0);
    CHECK(r1 <= 0.5);  // centered-difference truncation only
  }
  SUBCASE("bridge residuals shrink under refinement") {
    BridgeProblem p = cosine_problem(m, 32, 0.2, 0.05, 40);
    const BridgeSolution c = solve_hsp(p);
    BridgeProblem q = cosine_problem(m, 64, 0.2, 0.05, 80);
    const BridgeSolution f = solve_hsp(q);
    CHECK(f.diagnostics.canonical_residual_rho < c.diagnostics.canonical_residual_rho);
    CHECK(f.diagnostics.canonical_residual_H < c.diagnostics.canonical_residual_H);
  }
}

TEST_CASE("optimal drift") {
  const Grid g = make_grid(32, 1.0);
  SUBCASE("independent: drift = 2 grad H, diffusion 1") {
    const TransportModel m = builtin_model("independent");
    CellPath rho(0.1, std::vector<CellField>(5, CellField(g, 1.0)));
    CellPath H(0.1, {});
    for (int k = 0; k <= 4; ++k)
      H.slices.push_back(make_cell_field(
          g, [&](double x) { return 0.3 * std::sin(2 * M_PI * x) * (1 + 0.1 * k); }));
    const DriftSpec spec = optimal_drift(m, rho, H);
    for (int k = 0; k <= 4; ++k) {
      const FaceField gh = grad(H[k]);
      for (int i = 0; i < g.n_cells; ++i) {
        CHECK(spec.drift[k][i] == doctest::Approx(2.0 * gh[i]).epsilon(1e-13));
        CHECK(spec.diffusion[k][i] == doctest::Approx(1.0));
      }
    }
  }
  SUBCASE("zero-range drift matches its symbolic expansion") {
    const ZeroRangeSpec phi = zero_range_phi_power(1.0, 2.0);
    const TransportModel m = zero_range_model(phi);
    CellPath rho(0.1, {});
    CellPath H(0.1, {});
    for (int k = 0; k <= 3; ++k) {
      rho.slices.push_back(make_cell_field(
          g, [&](double x) { return 1.0 + 0.3 * std::cos(2 * M_PI * x + 0.2 * k); }));
      H.slices.push_back(make_cell_field(
          g, [&](double x) { return 0.2 * std::sin(2 * M_PI * x); }));
    }
    const DriftSpec spec = optimal_drift(m, rho, H);
    for (int k = 0; k <= 3; ++k) {
      // 2 (phi/rho) grad H + grad(phi/rho) + [phi/rho - phi'] grad rho / rho
      CellField ratio(g), gap(g);
      for (int i = 0; i < g.n_cells; ++i) {
        ratio[i] = phi.phi(rho[k][i]) / rho[k][i];
        gap[i] = (phi.phi(rho[k][i]) / rho[k][i] - phi.phi_prime(rho[k][i])) / rho[k][i];
      }
      const FaceField t1 = grad(ratio);
      const FaceField gr = grad(rho[k]);
      const FaceField gh = grad(H[k]);
      const FaceField ratio_f = face_mean(ratio);
      const FaceField gap_f = face_mean(gap);
      for (int i = 0; i < g.n_cells; ++i) {
        const double expect = 2.0 * ratio_f[i] * gh[i] + t1[i] + gap_f[i] * gr[i];
        CHECK(spec.drift[k][i] == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  SUBCASE("zero-range LLN drift vanishes identically in the continuum") {
    // grad D_s + (D_s - D_h) grad rho / rho = 0 for D_s = phi/rho: the
    // discrete mismatch is pure O(dx^2)
    const TransportModel m = zero_range_model(zero_range_phi_power(1.0, 2.0));
    auto drift_scale = [&](int n) {
      const Grid gg = make_grid(n, 1.0);
      const CellField r = make_cell_field(
          gg, [](double x) { return 1.0 + 0.3 * std::cos(2 * M_PI * x); });
      CellPath rho(0.1, {r, r});
      CellPath H(0.1, std::vector<CellField>(2, CellField(gg, 0.0)));
      return max_abs(optimal_drift(m, rho, H).drift[0]);
    };
    const double c = drift_scale(32), f = drift_scale(64);
    CHECK(c / f >= 3.5);  // second order
  }
  SUBCASE("missing D_s is refused") {
    const TransportModel kmp = builtin_model("kmp");
    CellPath rho(0.1, std::vector<CellField>(3, CellField(g, 1.0)));
    CellPath H(0.1, std::vector<CellField>(3, CellField(g, 0.0)));
    CHECK_THROWS_AS(optimal_drift(kmp, rho, H), std::invalid_argument);
  }
}

TEST_CASE("time reversal and Born duality") {
  const TransportModel m = builtin_model("independent");
  SUBCASE("equilibrium bridge at m = 1 reverses to zero momentum") {
    BridgeProblem p = cosine_problem(m, 32, 0.0, 0.05, 30);
    const BridgeSolution sol = solve_hsp(p);
    const ReversedBridge rev = reverse_bridge(m, sol);
    for (const auto& s : rev.H_hat.slices) CHECK(max_abs(s) <= 1e-9);
  }

  BridgeProblem p = cosine_problem(m, 48, 0.25, 0.05, 60);
  const BridgeSolution sol = solve_hsp(p);
  REQUIRE(sol.diagnostics.converged);
  const ReversedBridge rev = reverse_bridge(m, sol);

  SUBCASE("euclidean Born formula: hat H = log rho* - H*") {
    double worst = 0.0;
    for (int k = 0; k <= p.n_steps; ++k)
      for (int i = 0; i < p.grid.n_cells; ++i)
        worst = std::max(worst, std::fabs(rev.H_hat[k][i] -
                                          (std::log(sol.rho[k][i]) - sol.H[k][i])));
    CHECK(worst <= 1e-13);
  }
  SUBCASE("reversed pair solves the canonical equations under refinement") {
    auto residual_at = [&](int n, int steps) {
      BridgeProblem q = cosine_problem(m, n, 0.25, 0.05, steps);
      const BridgeSolution s = solve_hsp(q);
      const ReversedBridge r = reverse_bridge(m, s);
      auto [r1, r2] = canonical_residual(m, r.rho_hat, reversed_in_time(r.H_hat));
      return std::max(r1, r2);
    };
    const double coarse = residual_at(32, 40);
    const double fine = residual_at(64, 80);
    CHECK(fine < coarse);
  }
  SUBCASE("reversal is an involution") {
    // reversing the reversed data must reproduce (rho*, H*) exactly
    BridgeSolution as_solution;
    as_solution.rho = rev.rho_hat;
    as_solution.H = reversed_in_time(rev.H_hat);
    as_solution.j = sol.j;  // placeholder, not used by reverse_bridge
    const ReversedBridge back = reverse_bridge(m, as_solution);
    double worst = 0.0;
    for (int k = 0; k <= p.n_steps; ++k) {
      worst = std::max(worst, max_abs_diff(back.rho_hat[k], sol.rho[k]));
      worst = std::max(worst,
                       max_abs_diff(reversed_in_time(back.H_hat)[k], sol.H[k]));
    }
    CHECK(worst <= 1e-13);
  }
  SUBCASE("dual equation residual is reported and small") {
    CHECK(rev.dual_equation_residual < 10.0);
    CHECK(rev.dual_equation_residual > 0.0);
  }
}

TEST_CASE("canonical flow solves the two-point problem") {
  const TransportModel kmp = builtin_model("kmp");
  const Grid g = make_grid(64, 1.0);
  const CellField rho0 = make_cell_field(
      g, [](double x) { return 1.0 + 0.2 * std::exp(-std::pow((x - 0.5) / 0.08, 2)); });
  const CellField HT = make_cell_field(
      g, [](double x) { return 0.15 * std::exp(-std::pow((x - 0.5) / 0.08, 2)); });
  const CanonicalFlow flow = canonical_flow(kmp, rho0, HT, 0.01, 50);
  CHECK(flow.converged);
  CHECK(max_abs_diff(flow.rho[0], rho0) == 0.0);
  CHECK(max_abs_diff(flow.H[50], HT) <= 1e-11);
  auto [r1, r2] = canonical_residual(kmp, flow.rho, flow.H);
  CHECK(r1 < 5.0);
  CHECK(r2 < 5.0);
  CHECK(continuity_residual(flow.rho, flow.j) <= 1e-12);
}
