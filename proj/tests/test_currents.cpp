#include <doctest.h>

#include <cmath>

#include "core/currents.hpp"
#include "core/rng.hpp"

using namespace hydroschro;

TEST_CASE("u_of_j") {
  const Grid g = make_grid(32, 1.0);
  SUBCASE("independent, J=2, m=1: U = J^2 L/(4m) = 1 with a flat profile") {
    const UofJResult r = u_of_j(builtin_model("independent"), 2.0, 1.0, g, 1, 3);
    CHECK(r.converged);
    CHECK(std::fabs(r.value - 1.0) <= 1e-6);
    CHECK(max_abs_diff(r.rho_profile, CellField(g, 1.0)) <= 1e-3);
  }
  SUBCASE("zero current costs nothing") {
    const UofJResult r = u_of_j(builtin_model("kmp"), 0.0, 1.0, g, 1, 2);
    CHECK(r.value <= 1e-12);
  }
  SUBCASE("kmp at small current: U = J^2 L/(4 m^2), flat optimizer") {
    const double jb = 0.25;
    const UofJResult r = u_of_j(builtin_model("kmp"), jb, 1.0, g, 1, 3);
    CHECK(r.value == doctest::Approx(jb * jb / 4.0).epsilon(1e-6));
    CHECK(max_abs_diff(r.rho_profile, CellField(g, 1.0)) <= 1e-3);
  }
}

TEST_CASE("control adjoint matches finite differences") {
  // the acceptance suite runs the full 20-direction sweep; this is a smaller
  // smoke version on a nonlinear model with active multipliers
  const Grid g = make_grid(16, 1.0);
  ControlObjective obj;
  obj.model = builtin_model("kmp");
  obj.grid = g;
  obj.T = 0.002;
  obj.n_steps = 8;
  obj.J_bar = 0.7;
  obj.m = 1.0;
  obj.init_mode = InitMode::gibbs;
  obj.mu1 = CellField(g, 1.0);
  Philox rng(21, 3);
  obj.lambda_cur.assign(g.n_cells, 0.0);
  obj.kappa_end.assign(g.n_cells, 0.0);
  for (int i = 0; i < g.n_cells; ++i) {
    obj.lambda_cur[i] = 0.5 * (rng.next_unit() - 0.5);
    obj.kappa_end[i] = 0.3 * (rng.next_unit() - 0.5);
  }
  obj.mu_cur = 3.0;
  obj.nu_end = 2.0;

  CellField rho0(g);
  std::vector<FaceField> E(obj.n_steps, FaceField(g));
  for (int i = 0; i < g.n_cells; ++i) rho0[i] = 1.0 + 0.1 * (rng.next_unit() - 0.5);
  for (auto& slab : E)
    for (double& v : slab.v) v = 0.4 * (rng.next_unit() - 0.5);

  const ControlState st = control_forward(obj, rho0, E);
  REQUIRE(std::isfinite(st.objective));
  CellField g0(g);
  std::vector<FaceField> gE;
  control_gradient(obj, st, rho0, E, &g0, &gE);

  const double h = 1e-6;
  for (int dir = 0; dir < 6; ++dir) {
    CellField d0(g);
    std::vector<FaceField> dE(obj.n_steps, FaceField(g));
    for (int i = 0; i < g.n_cells; ++i) d0[i] = rng.next_unit() - 0.5;
    for (auto& slab : dE)
      for (double& v : slab.v) v = rng.next_unit() - 0.5;

    double analytic = 0.0;
    for (int i = 0; i < g.n_cells; ++i) analytic += g0[i] * d0[i];
    for (int k = 0; k < obj.n_steps; ++k)
      for (int i = 0; i < g.n_cells; ++i) analytic += gE[k][i] * dE[k][i];

    CellField rp = rho0, rm = rho0;
    std::vector<FaceField> Ep = E, Em = E;
    for (int i = 0; i < g.n_cells; ++i) {
      rp[i] += h * d0[i];
      rm[i] -= h * d0[i];
    }
    for (int k = 0; k < obj.n_steps; ++k)
      for (int i = 0; i < g.n_cells; ++i) {
        Ep[k][i] += h * dE[k][i];
        Em[k][i] -= h * dE[k][i];
      }
    const double fd = (control_forward(obj, rp, Ep).objective -
                       control_forward(obj, rm, Em).objective) /
                      (2 * h);
    CHECK(std::fabs(analytic - fd) <= 1e-5 * std::max({1.0, std::fabs(analytic), std::fabs(fd)}));
  }
}

TEST_CASE("hspc") {
  SUBCASE("zero target current with deterministic flat start costs nothing") {
    CurrentProblem p;
    p.model = builtin_model("independent");
    p.grid = make_grid(24, 1.0);
    p.T = 0.05;
    p.n_steps = 96;
    p.J_bar = 0.0;
    p.init_mode = InitMode::deterministic;
    p.mu0 = CellField(p.grid, 1.0);
    const CurrentSolution sol = solve_hspc(p);
    CHECK(sol.converged);
    CHECK(sol.value_per_time <= 1e-10);
    CHECK(max_abs(sol.E.back()) <= 1e-5);
  }
  SUBCASE("independent model attains the constant-profile bound") {
    CurrentProblem p;
    p.model = builtin_model("independent");
    p.grid = make_grid(24, 1.0);
    p.T = 0.05;
    p.n_steps = 96;
    p.J_bar = 1.5;
    p.init_mode = InitMode::gibbs;
    const CurrentSolution sol = solve_hspc(p);
    CHECK(sol.converged);
    CHECK(sol.constraint_error <= 1e-8);
    CHECK(sol.value_per_time <= sol.u_bound + 1e-6);
    CHECK(std::fabs(sol.value_per_time - sol.u_bound) <= 0.01 * sol.u_bound);
    CHECK_FALSE(sol.time_dependent);
    // the trapezoid average of the stored currents is the constrained one
    FaceField avg(p.grid, 0.0);
    const int K = sol.j.n_steps();
    for (int k = 0; k <= K; ++k) {
      const double w = (k == 0 || k == K) ? 0.5 : 1.0;
      for (int i = 0; i < p.grid.n_cells; ++i) avg[i] += w * sol.j[k][i] / K;
    }
    for (int i = 0; i < p.grid.n_cells; ++i)
      CHECK(std::fabs(avg[i] - p.J_bar) <= 1e-8);
  }
  SUBCASE("kmp value stays below the bound") {
    CurrentProblem p;
    p.model = builtin_model("kmp");
    p.grid = make_grid(24, 1.0);
    p.T = 0.05;
    p.n_steps = 96;
    p.J_bar = 2.0;
    p.init_mode = InitMode::gibbs;
    const CurrentSolution sol = solve_hspc(p);
    CHECK(sol.constraint_error <= 1e-8);
    CHECK(sol.value_per_time <= sol.u_bound + 1e-6);
  }
}

TEST_CASE("hspdc") {
  CurrentProblem p;
  p.model = builtin_model("independent");
  p.grid = make_grid(24, 1.0);
  p.T = 0.05;
  p.n_steps = 96;
  p.m = 1.0;
  SUBCASE("compatibility requires equal endpoints in d = 1") {
    p.mu0 = CellField(p.grid, 1.0);
    p.mu1 = make_cell_field(p.grid,
                            [](double x) { return 1.0 + 0.1 * std::cos(2 * M_PI * x); });
    p.J_bar = 1.0;
    CHECK_THROWS_AS(solve_hspdc(p), std::invalid_argument);
  }
  SUBCASE("flat endpoints with zero current cost nothing") {
    p.mu0 = CellField(p.grid, 1.0);
    p.mu1 = CellField(p.grid, 1.0);
    p.J_bar = 0.0;
    const CurrentSolution sol = solve_hspdc(p);
    CHECK(sol.converged);
    CHECK(sol.value_per_time <= 1e-8);
    CHECK(sol.endpoint_error <= 1e-6);
    REQUIRE(sol.A0.has_value());
    // A1 = A0 - T J_bar
    for (int i = 0; i < p.grid.n_cells; ++i)
      CHECK((*sol.A1)[i] == doctest::Approx((*sol.A0)[i]).epsilon(1e-14));
  }
  SUBCASE("nonconstant equal endpoints, zero current: nonnegative constrained value") {
    p.mu0 = make_cell_field(p.grid,
                            [](double x) { return 1.0 + 0.15 * std::cos(2 * M_PI * x); });
    p.mu1 = p.mu0;
    p.J_bar = 0.0;
    const CurrentSolution sol = solve_hspdc(p);
    CHECK(sol.constraint_error <= 1e-8);
    CHECK(sol.endpoint_error <= 1e-5);
    CHECK(sol.value_per_time >= -1e-12);
  }
}

TEST_CASE("vector potential correspondence") {
  const TransportModel m = builtin_model("kmp");
  const Grid g = make_grid(32, 1.0);
  const CellField rho0 = make_cell_field(
      g, [](double x) { return 1.0 + 0.2 * std::cos(2 * M_PI * x); });
  const double m_bar = mass(rho0) / g.length;

  SUBCASE("A from a relaxation trajectory has near-zero action") {
    const HydroTrajectory t = solve_nde(m, rho0, 0.01, 64);
    const FacePath A = potential_from_trajectory(t.rho, t.j, m_bar);
    CHECK(action_A(m, A, m_bar) <= 1e-8);
    // div A_k = rho_k - m propagates exactly
    for (int k = 0; k <= 64; k += 16) {
      const CellField u = divergence(A[k]);
      for (int i = 0; i < g.n_cells; ++i)
        CHECK(u[i] + m_bar == doctest::Approx(t.rho[k][i]).epsilon(1e-10));
    }
  }
  SUBCASE("action equals rate_dyn under the correspondence") {
    // driven trajectory with nonzero cost
    FacePath E(0.01, {});
    for (int k = 0; k <= 64; ++k)
      E.slices.push_back(make_face_field(
          g, [&](double x) { return 0.5 * std::sin(2 * M_PI * x) + 0.2; }));
    const HydroTrajectory t = solve_perturbed(m, rho0, E);
    const FacePath A = potential_from_trajectory(t.rho, t.j, m_bar);
    const TrajectoryFromPotential back = trajectory_from_potential(A, m_bar);
    const double via_A = action_A(m, A, m_bar);
    const double direct = rate_dyn(m, back.rho, back.j);
    CHECK(std::fabs(via_A - direct) <= 1e-10 * std::max(1.0, direct));
    // and the reconstruction is O(dt^2)-close to the original trajectory
    CHECK(std::fabs(via_A - rate_dyn(m, t.rho, t.j)) <= 1e-4 * std::max(1.0, direct));
  }
  SUBCASE("gauge shift leaves the action unchanged") {
    const HydroTrajectory t = solve_nde(m, rho0, 0.01, 32);
    FacePath A = potential_from_trajectory(t.rho, t.j, m_bar);
    const double a0 = action_A(m, A, m_bar);
    for (auto& s : A.slices)
      for (double& v : s.v) v += 3.7;
    CHECK(action_A(m, A, m_bar) == doctest::Approx(a0).epsilon(1e-12));
  }
}

TEST_CASE("extended canonical system") {
  const TransportModel m = builtin_model("kmp");
  const Grid g = make_grid(32, 1.0);
  SUBCASE("stationary pair is exact") {
    FacePath A(0.1, std::vector<FaceField>(9, FaceField(g, 0.5)));
    FacePath B(0.1, std::vector<FaceField>(9, FaceField(g, 0.0)));
    auto [r1, r2] = extended_canonical_residual(m, A, B, 1.0);
    CHECK(r1 == 0.0);
    CHECK(r2 == 0.0);
  }
  SUBCASE("(A, B) built from a bridge solve the extended system under refinement") {
    auto residual_at = [&](int n, int steps) {
      BridgeProblem p;
      p.model = builtin_model("kmp");
      p.grid = make_grid(n, 1.0);
      p.T = 0.05;
      p.n_steps = steps;
      p.mu0 = make_cell_field(p.grid,
                              [](double x) { return 1.0 + 0.15 * std::cos(2 * M_PI * x); });
      p.mu1 = make_cell_field(p.grid,
                              [](double x) { return 1.0 - 0.15 * std::cos(2 * M_PI * x); });
      const BridgeSolution sol = solve_hsp(p);
      REQUIRE(sol.diagnostics.converged);
      const double m_bar = mass(sol.rho.front()) / p.grid.length;
      const FacePath A = potential_from_trajectory(sol.rho, sol.j, m_bar);
      const FacePath B = conjugate_from_H(sol.H);
      auto [r1, r2] = extended_canonical_residual(p.model, A, B, m_bar);
      return std::max(r1, r2);
    };
    const double coarse = residual_at(32, 50);
    const double fine = residual_at(64, 100);
    CHECK(fine < coarse);
  }
}

TEST_CASE("reverse current bridge") {
  const Grid g = make_grid(32, 1.0);
  SUBCASE("equilibrium data reverses to zero field") {
    const TransportModel m = builtin_model("independent");
    CellPath rho(0.1, std::vector<CellField>(5, CellField(g, 1.0)));
    FacePath E(0.1, std::vector<FaceField>(5, FaceField(g, 0.0)));
    const ReversedCurrentBridge rev = reverse_current_bridge(m, rho, E);
    for (const auto& s : rev.E_hat.slices) CHECK(max_abs(s) <= 1e-13);
  }
  SUBCASE("gradient fields reduce to the scalar Born map") {
    const TransportModel m = builtin_model("independent");
    BridgeProblem p;
    p.model = m;
    p.grid = g;
    p.T = 0.05;
    p.n_steps = 40;
    p.mu0 = make_cell_field(g, [](double x) { return 1.0 + 0.2 * std::cos(2 * M_PI * x); });
    p.mu1 = make_cell_field(g, [](double x) { return 1.0 - 0.2 * std::cos(2 * M_PI * x); });
    const BridgeSolution sol = solve_hsp(p);
    FacePath E(p.T, {});
    for (const auto& s : sol.H.slices) E.slices.push_back(grad(s));
    const ReversedCurrentBridge rev = reverse_current_bridge(m, sol.rho, E);
    const ReversedBridge scalar = reverse_bridge(m, sol);
    // hat E = grad f'(rho) - grad H = grad(hat H)
    double worst = 0.0;
    for (int k = 0; k <= p.n_steps; ++k) {
      const FaceField gh = grad(scalar.H_hat[k]);
      for (int i = 0; i < g.n_cells; ++i)
        worst = std::max(worst, std::fabs(rev.E_hat[k][i] - gh[i]));
    }
    CHECK(worst <= 1e-12);
    // and the reversed drifts coincide
    worst = 0.0;
    for (int k = 0; k <= p.n_steps; ++k)
      for (int i = 0; i < g.n_cells; ++i)
        worst = std::max(worst, std::fabs(rev.reversed_drift.drift[k][i] -
                                          scalar.reversed_drift.drift[k][i]));
    CHECK(worst <= 1e-12);
  }
  SUBCASE("missing D_s is refused") {
    const TransportModel kmp = builtin_model("kmp");
    CellPath rho(0.1, std::vector<CellField>(3, CellField(g, 1.0)));
    FacePath E(0.1, std::vector<FaceField>(3, FaceField(g, 0.1)));
    CHECK_THROWS_AS(reverse_current_bridge(kmp, rho, E), std::invalid_argument);
  }
}
