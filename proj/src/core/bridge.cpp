#include "core/bridge.hpp"

#include <algorithm>
#include <cmath>

namespace hydroschro {

namespace {

CellField apply_fn(const ScalarFn& fn, const CellField& rho) {
  CellField out(rho.grid);
  for (int i = 0; i < rho.n(); ++i) out[i] = fn(rho[i]);
  return out;
}

// RHS of the momentum equation read backward in time:
// W(rho,H) = D_h(rho) lap H + sigma'(rho) <|grad H|^2>_cell
CellField momentum_rhs(const TransportModel& model, const CellField& rho,
                       const CellField& H) {
  const CellField lapH = laplacian(H);
  const CellField sq = cell_mean_sq(grad(H));
  CellField out(rho.grid);
  for (int i = 0; i < rho.n(); ++i)
    out[i] = model.D_h(rho[i]) * lapH[i] + model.sigma_prime(rho[i]) * sq[i];
  return out;
}

std::vector<double> solve_cyclic_tridiag_local(std::vector<double> a,
                                               std::vector<double> b,
                                               std::vector<double> c,
                                               std::vector<double> r) {
  const int n = static_cast<int>(b.size());
  auto thomas = [n](const std::vector<double>& aa, const std::vector<double>& bb,
                    const std::vector<double>& cc, std::vector<double> rr) {
    std::vector<double> cp(n), x(n);
    double beta = bb[0];
    cp[0] = cc[0] / beta;
    x[0] = rr[0] / beta;
    for (int i = 1; i < n; ++i) {
      beta = bb[i] - aa[i] * cp[i - 1];
      cp[i] = cc[i] / beta;
      x[i] = (rr[i] - aa[i] * x[i - 1]) / beta;
    }
    for (int i = n - 2; i >= 0; --i) x[i] -= cp[i] * x[i + 1];
    return x;
  };
  const double alpha = a[0];
  const double beta = c[n - 1];
  const double gamma = -b[0];
  std::vector<double> bm = b;
  bm[0] -= gamma;
  bm[n - 1] -= alpha * beta / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = beta;
  std::vector<double> a0 = a, c0 = c;
  a0[0] = 0.0;
  c0[n - 1] = 0.0;
  const std::vector<double> x = thomas(a0, bm, c0, std::move(r));
  const std::vector<double> z = thomas(a0, bm, c0, u);
  const double fact = (x[0] + alpha * x[n - 1] / gamma) /
                      (1.0 + z[0] + alpha * z[n - 1] / gamma);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
  return out;
}

// One backward step H_{k-1} from H_k. Explicit: H_{k-1} = H_k + dt W(k).
// Semi-implicit: trapezoid with the Laplacian implicit and the quadratic
// term handled by Picard.
CellField momentum_back_step(const TransportModel& model, const SolverOptions& opt,
                             double dt, const CellField& rho_prev,
                             const CellField& rho_here, const CellField& H_here) {
  const int n = H_here.n();
  if (opt.scheme == Scheme::explicit_two_stage) {
    const CellField W = momentum_rhs(model, rho_here, H_here);
    CellField out(H_here.grid);
    for (int i = 0; i < n; ++i) out[i] = H_here[i] + dt * W[i];
    return out;
  }
  const double dx = H_here.grid.dx();
  const double lam = dt / (2.0 * dx * dx);
  const CellField W_here = momentum_rhs(model, rho_here, H_here);
  CellField guess = H_here;
  CellField sol = H_here;
  for (int it = 0; it < opt.max_picard; ++it) {
    const CellField sq = cell_mean_sq(grad(guess));
    std::vector<double> a(n), b(n), c(n), rhs(n);
    for (int i = 0; i < n; ++i) {
      const double D = model.D_h(rho_prev[i]);
      a[i] = -lam * D;
      c[i] = -lam * D;
      b[i] = 1.0 + 2.0 * lam * D;
      rhs[i] = H_here[i] + 0.5 * dt * W_here[i] +
               0.5 * dt * model.sigma_prime(rho_prev[i]) * sq[i];
    }
    sol.v = solve_cyclic_tridiag_local(std::move(a), std::move(b), std::move(c),
                                       std::move(rhs));
    double delta = 0.0, scale = 1.0;
    for (int i = 0; i < n; ++i) {
      delta = std::max(delta, std::fabs(sol[i] - guess[i]));
      scale = std::max(scale, std::fabs(sol[i]));
    }
    guess = sol;
    if (delta <= opt.picard_tol * scale) break;
  }
  return sol;
}

CellPath momentum_backward_sweep(const TransportModel& model, const SolverOptions& opt,
                                 const CellPath& rho, const CellField& H_terminal) {
  const int K = rho.n_steps();
  const double dt = rho.dt();
  std::vector<CellField> H(K + 1, CellField(rho.front().grid));
  H[K] = H_terminal;
  for (int k = K; k >= 1; --k)
    H[k - 1] = momentum_back_step(model, opt, dt, rho[k - 1], rho[k], H[k]);
  return CellPath(rho.t_final, std::move(H));
}

FacePath gradient_path(const CellPath& H) {
  std::vector<FaceField> g;
  g.reserve(H.slices.size());
  for (const auto& s : H.slices) g.push_back(grad(s));
  return FacePath(H.t_final, std::move(g));
}

void subtract_spacetime_mean(CellPath& H) {
  double sum = 0.0;
  size_t count = 0;
  for (const auto& s : H.slices) {
    for (double x : s.v) sum += x;
    count += s.v.size();
  }
  const double mean = sum / count;
  for (auto& s : H.slices)
    for (double& x : s.v) x -= mean;
}

double path_max_diff(const CellPath& a, const CellPath& b) {
  double m = 0.0;
  for (size_t k = 0; k < a.slices.size(); ++k)
    m = std::max(m, max_abs_diff(a.slices[k], b.slices[k]));
  return m;
}

}  // namespace

double hamiltonian(const TransportModel& model, const CellField& rho,
                   const CellField& H) {
  if (rho.grid != H.grid) throw std::invalid_argument("hamiltonian: grid mismatch");
  const FaceField gH = grad(H);
  const FaceField gr = grad(rho);
  const FaceField sf = face_mean(apply_fn(model.sigma, rho));
  const FaceField Df = face_mean(apply_fn(model.D_h, rho));
  double acc = 0.0;
  for (int i = 0; i < gH.n(); ++i)
    acc += sf[i] * gH[i] * gH[i] - gH[i] * Df[i] * gr[i];
  return acc * rho.grid.dx();
}

double hamiltonian_drift(const TransportModel& model, const CellPath& rho,
                         const CellPath& H) {
  const double h0 = hamiltonian(model, rho[0], H[0]);
  double drift = 0.0;
  for (int k = 1; k <= rho.n_steps(); ++k)
    drift = std::max(drift, std::fabs(hamiltonian(model, rho[k], H[k]) - h0));
  return drift / (1.0 + std::fabs(h0));
}

std::pair<double, double> canonical_residual(const TransportModel& model,
                                             const CellPath& rho, const CellPath& H) {
  if (rho.slices.size() != H.slices.size() || rho.n_steps() < 2)
    throw std::invalid_argument("canonical_residual: need aligned paths, >= 2 steps");
  const int K = rho.n_steps();
  const double dt = rho.dt();
  double r1 = 0.0, r2 = 0.0;
  for (int k = 1; k < K; ++k) {
    const CellField& rk = rho[k];
    const FaceField Df = face_mean(apply_fn(model.D_h, rk));
    const FaceField sf = face_mean(apply_fn(model.sigma, rk));
    const FaceField gr = grad(rk);
    const FaceField gH = grad(H[k]);
    FaceField flux1(rk.grid), flux2(rk.grid);
    for (int i = 0; i < gr.n(); ++i) {
      flux1[i] = Df[i] * gr[i];
      flux2[i] = sf[i] * gH[i];
    }
    const CellField d1 = divergence(flux1);
    const CellField d2 = divergence(flux2);
    const CellField W = momentum_rhs(model, rk, H[k]);
    for (int i = 0; i < rk.n(); ++i) {
      const double drho = (rho[k + 1][i] - rho[k - 1][i]) / (2.0 * dt);
      const double dH = (H[k + 1][i] - H[k - 1][i]) / (2.0 * dt);
      r1 = std::max(r1, std::fabs(drho - (d1[i] - 2.0 * d2[i])));
      r2 = std::max(r2, std::fabs(dH + W[i]));
    }
  }
  return {r1, r2};
}

BridgeSolution solve_hsp(const BridgeProblem& problem) {
  const TransportModel& model = problem.model;
  const CellField& mu0 = problem.mu0;
  const CellField& mu1 = problem.mu1;
  if (mu0.grid != problem.grid || mu1.grid != problem.grid)
    throw std::invalid_argument("solve_hsp: endpoint grids do not match");
  if (problem.n_steps < 2)
    throw std::invalid_argument("solve_hsp: n_steps must be >= 2");
  const double m0 = mass(mu0), m1 = mass(mu1);
  if (std::fabs(m0 - m1) > 1e-10 * std::max(1.0, m0))
    throw std::invalid_argument("solve_hsp: endpoint masses differ (" +
                                std::to_string(m0) + " vs " + std::to_string(m1) + ")");
  for (const CellField* mu : {&mu0, &mu1})
    for (double x : mu->v)
      if (!(x > model.rho_min && x < model.rho_max))
        throw std::invalid_argument("solve_hsp: endpoints must lie strictly inside the model domain");

  const int K = problem.n_steps;
  CellPath H(problem.T, std::vector<CellField>(K + 1, CellField(problem.grid, 0.0)));
  if (problem.H_init) {
    if (problem.H_init->slices.size() != static_cast<size_t>(K + 1) ||
        problem.H_init->front().grid != problem.grid)
      throw std::invalid_argument("solve_hsp: H_init discretization mismatch");
    H = *problem.H_init;
  }

  BridgeSolution best;
  double best_err = std::numeric_limits<double>::infinity();
  double prev_err = std::numeric_limits<double>::infinity();
  double theta = problem.theta0;
  double fp_change = std::numeric_limits<double>::infinity();

  BridgeDiagnostics diag;
  for (int iter = 1; iter <= problem.max_iter; ++iter) {
    const FacePath E = gradient_path(H);
    HydroTrajectory traj = solve_perturbed(model, mu0, E, problem.solver);
    const double err = max_abs_diff(traj.rho.back(), mu1);

    if (err < best_err) {
      best_err = err;
      best.rho = traj.rho;
      best.H = H;
      best.j = traj.j;
    }
    diag.iterations = iter;
    diag.endpoint_error = err;
    diag.fixed_point_change = fp_change;
    if (err <= problem.tol_endpoint && fp_change <= problem.tol_fixed_point) {
      best.rho = std::move(traj.rho);
      best.H = H;
      best.j = std::move(traj.j);
      best_err = err;
      diag.converged = true;
      break;
    }

    if (err > prev_err) theta = std::max(0.5 * theta, 1.0 / 64.0);
    prev_err = err;

    CellField H_T = H[K];
    for (int i = 0; i < H_T.n(); ++i)
      H_T[i] += theta * (model.f_prime(mu1[i]) - model.f_prime(traj.rho.back()[i]));

    CellPath H_new = momentum_backward_sweep(model, problem.solver, traj.rho, H_T);
    subtract_spacetime_mean(H_new);
    fp_change = path_max_diff(H_new, H);
    H = std::move(H_new);
    diag.theta_final = theta;
  }

  diag.endpoint_error = best_err;
  best.value = rate_dyn(model, best.rho, best.j);
  auto [r1, r2] = canonical_residual(model, best.rho, best.H);
  diag.canonical_residual_rho = r1;
  diag.canonical_residual_H = r2;
  diag.hamiltonian_drift = hamiltonian_drift(model, best.rho, best.H);
  diag.theta_final = theta;
  best.diagnostics = diag;
  return best;
}

CanonicalFlow canonicalflow_impl(const TransportModel& model, const CellField& rho0,
                                 const CellField& H_T, double T, int n_steps,
                                 const SolverOptions& opt, int max_iter, double tol) {
  CellPath H(T, std::vector<CellField>(n_steps + 1, CellField(rho0.grid, 0.0)));
  H[n_steps] = H_T;
  CanonicalFlow out;
  for (int iter = 1; iter <= max_iter; ++iter) {
    const FacePath E = gradient_path(H);
    HydroTrajectory traj = solve_perturbed(model, rho0, E, opt);
    CellPath H_new = momentum_backward_sweep(model, opt, traj.rho, H_T);
    const double dH = path_max_diff(H_new, H);
    H = std::move(H_new);
    out.iterations = iter;
    if (dH <= tol) {
      const FacePath E2 = gradient_path(H);
      HydroTrajectory final_traj = solve_perturbed(model, rho0, E2, opt);
      out.rho = std::move(final_traj.rho);
      out.j = std::move(final_traj.j);
      out.H = H;
      out.converged = true;
      return out;
    }
  }
  const FacePath E2 = gradient_path(H);
  HydroTrajectory final_traj = solve_perturbed(model, rho0, E2, opt);
  out.rho = std::move(final_traj.rho);
  out.j = std::move(final_traj.j);
  out.H = H;
  out.converged = false;
  return out;
}

CanonicalFlow canonical_flow(const TransportModel& model, const CellField& rho0,
                             const CellField& H_T, double T, int n_steps,
                             const SolverOptions& opt, int max_iter, double tol) {
  return canonicalflow_impl(model, rho0, H_T, T, n_steps, opt, max_iter, tol);
}

DriftSpec drift_from_field(const TransportModel& model, const CellPath& rho,
                           const FacePath& E) {
  if (!model.has_Ds())
    throw std::invalid_argument("optimal_drift: model '" + model.name +
                                "' has no closed-form D_s");
  for (const auto& s : rho.slices)
    for (double x : s.v)
      if (!(x >= kRhoFloor))
        throw std::domain_error("optimal_drift: density below positivity floor");

  DriftSpec spec;
  spec.diffusion.t_final = rho.t_final;
  spec.drift.t_final = rho.t_final;
  const ScalarFn& Ds = *model.D_s;
  for (int k = 0; k <= rho.n_steps(); ++k) {
    const CellField& rk = rho[k];
    CellField ds_c = apply_fn(Ds, rk);
    CellField gap(rk.grid);        // (D_s - D_h)/rho at cells
    CellField mob_ratio(rk.grid);  // sigma/rho at cells
    for (int i = 0; i < rk.n(); ++i) {
      gap[i] = (ds_c[i] - model.D_h(rk[i])) / rk[i];
      mob_ratio[i] = model.sigma(rk[i]) / rk[i];
    }
    const FaceField g_ds = grad(ds_c);
    const FaceField gr = grad(rk);
    const FaceField gap_f = face_mean(gap);
    const FaceField ratio_f = face_mean(mob_ratio);
    FaceField b(rk.grid);
    for (int i = 0; i < b.n(); ++i)
      b[i] = g_ds[i] + gap_f[i] * gr[i] + 2.0 * ratio_f[i] * E[k][i];
    spec.diffusion.slices.push_back(std::move(ds_c));
    spec.drift.slices.push_back(std::move(b));
  }
  return spec;
}

DriftSpec optimal_drift(const TransportModel& model, const CellPath& rho,
                        const CellPath& H) {
  std::vector<FaceField> g;
  g.reserve(H.slices.size());
  for (const auto& s : H.slices) g.push_back(grad(s));
  return drift_from_field(model, rho, FacePath(H.t_final, std::move(g)));
}

DriftSpec optimal_drift(const TransportModel& model, const BridgeSolution& sol) {
  return optimal_drift(model, sol.rho, sol.H);
}

ReversedBridge reverse_bridge(const TransportModel& model, const BridgeSolution& sol) {
  ReversedBridge out;
  const int K = sol.rho.n_steps();
  out.H_hat.t_final = sol.rho.t_final;
  for (int k = 0; k <= K; ++k) {
    CellField h(sol.rho.front().grid);
    for (int i = 0; i < h.n(); ++i)
      h[i] = model.f_prime_gauged(sol.rho[k][i]) - sol.H[k][i];
    out.H_hat.slices.push_back(std::move(h));
  }
  out.rho_hat = reversed_in_time(sol.rho);
  const CellPath H_hat_rev = reversed_in_time(out.H_hat);
  out.reversed_drift = optimal_drift(model, out.rho_hat, H_hat_rev);

  // centered residual of d hat H/dt = +D_h lap hat H + sigma' |grad hat H|^2
  const double dt = sol.rho.dt();
  double r = 0.0;
  for (int k = 1; k < K; ++k) {
    const CellField W = momentum_rhs(model, sol.rho[k], out.H_hat[k]);
    for (int i = 0; i < sol.rho[k].n(); ++i) {
      const double dH = (out.H_hat[k + 1][i] - out.H_hat[k - 1][i]) / (2.0 * dt);
      r = std::max(r, std::fabs(dH - W[i]));
    }
  }
  out.dual_equation_residual = r;
  return out;
}

}  // namespace hydroschro
