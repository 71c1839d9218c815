#include "core/verify.hpp"

#include <cmath>
#include <sstream>

#include "core/colehopf.hpp"
#include "core/currents.hpp"
#include "core/rng.hpp"

namespace hydroschro {

namespace {

std::vector<double> domain_sweep(const TransportModel& m, int count) {
  const double lo = std::max(m.rho_min, 1e-3) + 1e-3;
  const double hi = std::isfinite(m.rho_max) ? m.rho_max - 1e-3 : 10.0;
  std::vector<double> s(count);
  for (int i = 0; i < count; ++i) s[i] = lo + (hi - lo) * (i + 0.5) / count;
  return s;
}

CellField smooth_random(const Grid& g, double base, double amp, Philox& rng) {
  CellField c(g, base);
  for (int mode = 1; mode <= 3; ++mode) {
    const double a = amp * (2.0 * rng.next_unit() - 1.0) / mode;
    const double p = 2.0 * M_PI * rng.next_unit();
    for (int i = 0; i < g.n_cells; ++i)
      c[i] += a * std::cos(2.0 * M_PI * mode * g.cell_center(i) / g.length + p);
  }
  return c;
}

struct ResidualScales {
  double canonical_rho = 0.0, canonical_H = 0.0, akns = 0.0;
};

// small independent bridge + KMP canonical flow at one resolution
ResidualScales residuals_at(int n, int n_steps) {
  ResidualScales out;
  const Grid g = make_grid(n, 1.0);
  {
    const TransportModel indep = builtin_model("independent");
    BridgeProblem p;
    p.model = indep;
    p.grid = g;
    p.T = 0.05;
    p.n_steps = n_steps;
    p.mu0 = make_cell_field(g, [&](double x) { return 1.0 + 0.1 * std::cos(2.0 * M_PI * x); });
    p.mu1 = make_cell_field(g, [&](double x) { return 1.0 - 0.1 * std::cos(2.0 * M_PI * x); });
    const BridgeSolution sol = solve_hsp(p);
    auto [r1, r2] = canonical_residual(indep, sol.rho, sol.H);
    out.canonical_rho = r1;
    out.canonical_H = r2;
  }
  {
    const TransportModel kmp = builtin_model("kmp");
    const Grid gw = make_grid(2 * n, 2.0);
    const CellField rho0 = make_cell_field(
        gw, [&](double x) { return 1.0 + 0.2 * std::exp(-std::pow((x - 1.0) / 0.08, 2)); });
    const CellField HT = make_cell_field(
        gw, [&](double x) { return 0.2 * std::exp(-std::pow((x - 1.0) / 0.08, 2)); });
    const CanonicalFlow flow = canonical_flow(kmp, rho0, HT, 0.004, n_steps);
    const XiEtaPair pair =
        akns_transform(kmp, as_line_window(flow.rho), as_line_window(flow.H));
    auto [rx, re] = akns_residual(pair);
    out.akns = std::max(rx, re);
  }
  return out;
}

}  // namespace

VerifyReport run_verification(const std::optional<TransportModel>& extra_model,
                              int refine) {
  VerifyReport rep;
  auto add = [&](const std::string& name, double value, double threshold) {
    rep.checks.push_back({name, value, threshold, value <= threshold});
  };

  // Einstein relation on all builtins
  for (const std::string name : {"independent", "stirring", "ssep", "kmp"}) {
    const TransportModel m = builtin_model(name);
    add("einstein/" + name, einstein_residual(m, domain_sweep(m, 100)), 1e-8);
  }
  {
    const TransportModel zr1 = zero_range_model(zero_range_phi_identity());
    const TransportModel zr2 = zero_range_model(zero_range_phi_power(1.0, 2.0));
    add("einstein/zero_range[identity]", einstein_residual(zr1, domain_sweep(zr1, 100)), 1e-8);
    add("einstein/zero_range[rho^2]", einstein_residual(zr2, domain_sweep(zr2, 100)), 1e-8);
  }
  if (extra_model)
    add("einstein/" + extra_model->name,
        einstein_residual(*extra_model, domain_sweep(*extra_model, 100)), 1e-8);

  // discrete calculus identities
  {
    Philox rng(7, 0);
    const Grid g = make_grid(64, 2.0);
    const CellField c = smooth_random(g, 1.0, 0.5, rng);
    FaceField f(g);
    for (int i = 0; i < g.n_cells; ++i) f[i] = rng.next_unit() - 0.5;
    const CellField lap = laplacian(c);
    const CellField dg = divergence(grad(c));
    double id_err = 0.0;
    for (int i = 0; i < g.n_cells; ++i) id_err = std::max(id_err, std::fabs(lap[i] - dg[i]));
    add("fields/div_grad_is_laplacian", id_err, 1e-13);
    add("fields/divergence_telescopes", std::fabs(cell_integral(divergence(f))), 1e-12);
    // adjointness <div f, c> = -<f, grad c>
    double lhs = 0.0, rhs = 0.0;
    const CellField df = divergence(f);
    const FaceField gc = grad(c);
    for (int i = 0; i < g.n_cells; ++i) {
      lhs += df[i] * c[i];
      rhs -= f[i] * gc[i];
    }
    add("fields/grad_div_adjoint", std::fabs(lhs - rhs) * g.dx(), 1e-12);
  }

  // rate identities on a perturbed solve
  {
    Philox rng(11, 0);
    const Grid g = make_grid(48, 1.0);
    const TransportModel zr = zero_range_model(zero_range_phi_power(1.0, 2.0));
    const CellField rho0 = smooth_random(g, 1.0, 0.2, rng);
    FacePath E(0.02, {});
    for (int k = 0; k <= 40; ++k) {
      FaceField e(g);
      for (int i = 0; i < g.n_cells; ++i)
        e[i] = 0.3 * std::sin(2.0 * M_PI * g.face_pos(i)) * std::cos(1.7 * k * 0.02 / 40);
      E.slices.push_back(std::move(e));
    }
    const HydroTrajectory traj = solve_perturbed(zr, rho0, E);
    const double rd = rate_dyn(zr, traj.rho, traj.j);
    const auto ef = field_from_current(zr, traj.rho, traj.j);
    const double rv = rate_via_field(zr, traj.rho, ef.E);
    add("hydro/rate_dyn_vs_field_identity", std::fabs(rd - rv) / std::max(1e-12, rd), 1e-10);
    const double ez = entropy_zero_range(zr, traj.rho, traj.j);
    add("hydro/girsanov_identity", std::fabs(ez - rd) / std::max(1e-12, rd), 1e-8);
    add("hydro/continuity", continuity_residual(traj.rho, traj.j), 1e-12);
    add("hydro/mass_conservation",
        std::fabs(mass(traj.rho.back()) - mass(traj.rho.front())), 1e-12);
  }

  // bridge conservation + Born reversal (independent, small)
  {
    const Grid g = make_grid(48, 1.0);
    const TransportModel indep = builtin_model("independent");
    BridgeProblem p;
    p.model = indep;
    p.grid = g;
    p.T = 0.05;
    p.n_steps = 60;
    p.mu0 = make_cell_field(g, [](double x) { return 1.0 + 0.2 * std::cos(2.0 * M_PI * x); });
    p.mu1 = make_cell_field(g, [](double x) { return 1.0 - 0.2 * std::cos(2.0 * M_PI * x); });
    const BridgeSolution sol = solve_hsp(p);
    add("bridge/endpoint_error", sol.diagnostics.endpoint_error, p.tol_endpoint * 10);
    add("bridge/hamiltonian_drift", sol.diagnostics.hamiltonian_drift, 1e-3);
    const ReversedBridge rev = reverse_bridge(indep, sol);
    double invol = 0.0;
    for (int k = 0; k <= p.n_steps; ++k) {
      CellField back(g);
      for (int i = 0; i < g.n_cells; ++i)
        back[i] = indep.f_prime_gauged(sol.rho[k][i]) - rev.H_hat[k][i];
      invol = std::max(invol, max_abs_diff(back, sol.H[k]));
    }
    add("bridge/born_involution", invol, 1e-13);
    const auto [hr1, hr2] =
        canonical_residual(indep, rev.rho_hat, reversed_in_time(rev.H_hat));
    add("bridge/reversed_pair_residual", std::max(hr1, hr2), 2.0);
  }

  // AKNS closed-form residual (homogeneous solution)
  {
    const Grid g = Grid{64, 1.0, Boundary::line};
    const double xi0 = 0.8, eta0 = 0.5, c = xi0 * eta0;
    const int K = 64;
    const double T = 0.5;
    XiEtaPair pair;
    pair.xi.t_final = T;
    pair.eta.t_final = T;
    for (int k = 0; k <= K; ++k) {
      const double t = T * k / K;
      pair.xi.slices.push_back(CellField(g, xi0 * std::exp(-2.0 * c * t)));
      pair.eta.slices.push_back(CellField(g, eta0 * std::exp(2.0 * c * t)));
    }
    auto [rx, re] = akns_residual(pair);
    const double dt = T / K;
    const double bound = 3.0 * (8.0 * c * c * c * dt * dt / 6.0) *
                             std::max(xi0 * std::exp(2 * c * T), eta0 * std::exp(2 * c * T)) +
                         1e-12;
    add("akns/homogeneous_closed_form", std::max(rx, re), bound);
    add("akns/hamiltonian_drift_closed_form",
        akns_hamiltonian_drift(pair, AknsHamiltonianKind::quadratic_mobility), 1e-10);
  }

  // vector/scalar Hamiltonian reduction
  {
    Philox rng(13, 0);
    const Grid g = make_grid(64, 1.0);
    const TransportModel kmp = builtin_model("kmp");
    const CellField rho = smooth_random(g, 1.0, 0.25, rng);
    const CellField H = smooth_random(g, 0.0, 0.3, rng);
    const double m_bar = mass(rho) / g.length;
    // A with div A = rho - m, B = -grad H
    FaceField A(g);
    double acc = 0.0;
    for (int i = 0; i < g.n_cells; ++i) {
      acc += (rho[i] - m_bar) * g.dx();
      A[i] = acc;
    }
    FaceField B = grad(H);
    for (double& x : B.v) x = -x;
    const double ha = hamiltonian_A(kmp, A, B, m_bar);
    const double hs = hamiltonian(kmp, rho, H);
    add("currents/hamiltonian_reduction", std::fabs(ha - hs) / (1.0 + std::fabs(hs)), 1e-10);
  }

  // constant-profile bound, independent model
  {
    const Grid g = make_grid(32, 1.0);
    const UofJResult u = u_of_j(builtin_model("independent"), 2.0, 1.0, g, 1, 2);
    add("currents/u_of_j_independent", std::fabs(u.value - 1.0), 1e-6);
  }

  // refinement study of the residual checks
  if (refine > 1) {
    const int n0 = 32, k0 = 40;
    ResidualScales prev = residuals_at(n0, k0);
    for (int lvl = 1; lvl < refine; ++lvl) {
      const ResidualScales fine = residuals_at(n0 << lvl, k0 << lvl);
      add("refine/canonical_rho_shrink_l" + std::to_string(lvl),
          -prev.canonical_rho / std::max(1e-300, fine.canonical_rho), -1.5);
      add("refine/canonical_H_shrink_l" + std::to_string(lvl),
          -prev.canonical_H / std::max(1e-300, fine.canonical_H), -1.5);
      add("refine/akns_shrink_l" + std::to_string(lvl),
          -prev.akns / std::max(1e-300, fine.akns), -1.5);
      prev = fine;
    }
  }

  for (const auto& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

std::string format_table(const VerifyReport& report) {
  std::ostringstream out;
  out << "check                                      value         threshold     result\n";
  out << "-----------------------------------------------------------------------------\n";
  char line[160];
  for (const auto& c : report.checks) {
    std::snprintf(line, sizeof line, "%-42s %-13.4g %-13.4g %s\n", c.name.c_str(),
                  c.value, c.threshold, c.pass ? "pass" : "FAIL");
    out << line;
  }
  out << (report.all_pass ? "all checks passed\n" : "FAILURES present\n");
  return out.str();
}

}  // namespace hydroschro
