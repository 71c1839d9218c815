#include "core/currents.hpp"

#include <algorithm>
#include <cmath>

#include "core/rng.hpp"

namespace hydroschro {

namespace {

double fd_derivative(const ScalarFn& fn, double x) {
  const double h = 1e-6 * std::max(1.0, std::fabs(x));
  return (fn(x + h) - fn(x - h)) / (2.0 * h);
}

FaceField face_of(const ScalarFn& fn, const CellField& rho) {
  CellField c(rho.grid);
  for (int i = 0; i < rho.n(); ++i) c[i] = fn(rho[i]);
  return face_mean(c);
}

bool in_domain(const TransportModel& m, const CellField& rho) {
  for (double x : rho.v)
    if (!(x >= m.rho_min && x <= m.rho_max)) return false;
  return true;
}

}  // namespace

// ------------------------------------------------------- control core

ControlState control_forward(const ControlObjective& obj, const CellField& rho0,
                             const std::vector<FaceField>& E) {
  const int K = obj.n_steps;
  const int n = obj.grid.n_cells;
  const double dt = obj.T / K;
  const double dx = obj.grid.dx();
  if (static_cast<int>(E.size()) != K)
    throw std::invalid_argument("control_forward: need one control slab per interval");

  ControlState st;
  st.rho.reserve(K + 1);
  st.flux.reserve(K);
  st.rho.push_back(rho0);

  double run_cost = 0.0;
  std::vector<double> fsum(n, 0.0);
  bool domain_ok = in_domain(obj.model, rho0);
  for (int k = 0; k < K && domain_ok; ++k) {
    const CellField& rk = st.rho[k];
    const FaceField Df = face_of(obj.model.D_h, rk);
    const FaceField sf = face_of(obj.model.sigma, rk);
    const FaceField g = grad(rk);
    FaceField F(obj.grid);
    for (int i = 0; i < n; ++i) {
      F[i] = -Df[i] * g[i] + 2.0 * sf[i] * E[k][i];
      fsum[i] += F[i];
      run_cost += sf[i] * E[k][i] * E[k][i];
    }
    const CellField d = divergence(F);
    CellField next(obj.grid);
    for (int i = 0; i < n; ++i) next[i] = rk[i] - dt * d[i];
    domain_ok = in_domain(obj.model, next);
    st.flux.push_back(std::move(F));
    st.rho.push_back(std::move(next));
  }
  if (!domain_ok) {
    st.objective = std::numeric_limits<double>::infinity();
    st.value_per_time = st.objective;
    return st;
  }
  run_cost *= dt * dx;

  st.i_in = 0.0;
  if (obj.init_mode == InitMode::gibbs)
    st.i_in = free_energy_difference(obj.model, rho0, obj.m);

  st.constraint.assign(n, 0.0);
  for (int i = 0; i < n; ++i) st.constraint[i] = fsum[i] / K - obj.J_bar;

  double al = 0.0;
  if (!obj.lambda_cur.empty() || obj.mu_cur > 0.0) {
    for (int i = 0; i < n; ++i) {
      const double lam = obj.lambda_cur.empty() ? 0.0 : obj.lambda_cur[i];
      al += dx * (lam * st.constraint[i] +
                  0.5 * obj.mu_cur * st.constraint[i] * st.constraint[i]);
    }
  }
  if (obj.mu1) {
    st.endpoint.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      st.endpoint[i] = st.rho.back()[i] - (*obj.mu1)[i];
      const double kap = obj.kappa_end.empty() ? 0.0 : obj.kappa_end[i];
      al += dx * (kap * st.endpoint[i] + 0.5 * obj.nu_end * st.endpoint[i] * st.endpoint[i]);
    }
  }

  st.value_per_time = (st.i_in + run_cost) / obj.T;
  st.objective = st.value_per_time + al;
  return st;
}

void control_gradient(const ControlObjective& obj, const ControlState& st,
                      const CellField& rho0, const std::vector<FaceField>& E,
                      CellField* grad_rho0, std::vector<FaceField>* grad_E) {
  const int K = obj.n_steps;
  const int n = obj.grid.n_cells;
  const double dt = obj.T / K;
  const double dx = obj.grid.dx();

  const auto& model = obj.model;
  auto Dp = [&](double r) { return fd_derivative(model.D_h, r); };

  grad_E->assign(K, FaceField(obj.grid));
  std::vector<double> lam(n, 0.0);
  if (obj.mu1) {
    for (int i = 0; i < n; ++i) {
      const double kap = obj.kappa_end.empty() ? 0.0 : obj.kappa_end[i];
      lam[i] = dx * (kap + obj.nu_end * st.endpoint[i]);
    }
  }

  for (int k = K - 1; k >= 0; --k) {
    const CellField& rk = st.rho[k];
    const FaceField Df = face_of(model.D_h, rk);
    const FaceField sf = face_of(model.sigma, rk);
    const FaceField g = grad(rk);

    // covector on the interval-k flux: state propagation + current AL
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1) % n;
      const double grad_lam = (lam[ip] - lam[i]) / dx;
      const double al_cur = obj.lambda_cur.empty() && obj.mu_cur == 0.0
                                ? 0.0
                                : (dx / K) * ((obj.lambda_cur.empty() ? 0.0 : obj.lambda_cur[i]) +
                                              obj.mu_cur * st.constraint[i]);
      q[i] = dt * grad_lam + al_cur;
    }

    for (int i = 0; i < n; ++i)
      (*grad_E)[k][i] = (dt * dx / obj.T) * 2.0 * sf[i] * E[k][i] + q[i] * 2.0 * sf[i];

    std::vector<double> lam_new(lam);  // direct d rho_{k+1} / d rho_k = I
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1) % n;
      const double spi = model.sigma_prime(rk[i]);
      const double spip = model.sigma_prime(rk[ip]);
      const double dFi = -0.5 * Dp(rk[i]) * g[i] + Df[i] / dx + spi * E[k][i];
      const double dFip = -0.5 * Dp(rk[ip]) * g[i] - Df[i] / dx + spip * E[k][i];
      lam_new[i] += q[i] * dFi;
      lam_new[ip] += q[i] * dFip;
      // running cost through sigma at the faces
      lam_new[i] += (dt * dx / obj.T) * 0.5 * spi * E[k][i] * E[k][i];
      lam_new[ip] += (dt * dx / obj.T) * 0.5 * spip * E[k][i] * E[k][i];
    }
    lam = std::move(lam_new);
  }

  if (grad_rho0) {
    *grad_rho0 = CellField(obj.grid);
    for (int i = 0; i < n; ++i) {
      (*grad_rho0)[i] = lam[i];
      if (obj.init_mode == InitMode::gibbs)
        (*grad_rho0)[i] += (dx / obj.T) * (model.f_prime(rho0[i]) - model.f_prime(obj.m));
    }
  }
}

// -------------------------------------------------------------- u_of_j

namespace {

double u_objective(const TransportModel& model, double J_bar, const CellField& rho,
                   std::vector<double>* grad_out) {
  const int n = rho.n();
  const double dx = rho.grid.dx();
  const FaceField Df = face_of(model.D_h, rho);
  const FaceField sf = face_of(model.sigma, rho);
  const FaceField g = grad(rho);
  double val = 0.0;
  if (grad_out) grad_out->assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    const double N = J_bar + Df[i] * g[i];
    const double s = std::max(sf[i], 1e-30);
    val += 0.25 * dx * N * N / s;
    if (grad_out) {
      const double dN_i = 0.5 * fd_derivative(model.D_h, rho[i]) * g[i] - Df[i] / dx;
      const double dN_ip = 0.5 * fd_derivative(model.D_h, rho[ip]) * g[i] + Df[i] / dx;
      const double common = 0.25 * dx * (2.0 * N / s);
      const double sig_term = -0.25 * dx * N * N / (s * s) * 0.5;
      (*grad_out)[i] += common * dN_i + sig_term * model.sigma_prime(rho[i]);
      (*grad_out)[ip] += common * dN_ip + sig_term * model.sigma_prime(rho[ip]);
    }
  }
  return val;
}

void project_mass_and_domain(const TransportModel& model, double target_mass,
                             CellField& rho) {
  const double dx = rho.grid.dx();
  const int n = rho.n();
  const double lo = model.rho_min + 1e-8;
  const double hi = std::isfinite(model.rho_max) ? model.rho_max - 1e-8 : 1e300;
  for (int pass = 0; pass < 4; ++pass) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += rho[i] * dx;
    const double shift = (target_mass - m) / (n * dx);
    bool clamped = false;
    for (int i = 0; i < n; ++i) {
      rho[i] += shift;
      if (rho[i] < lo) {
        rho[i] = lo;
        clamped = true;
      } else if (rho[i] > hi) {
        rho[i] = hi;
        clamped = true;
      }
    }
    if (!clamped) return;
  }
}

}  // namespace

UofJResult u_of_j(const TransportModel& model, double J_bar, double m, const Grid& grid,
                  std::uint64_t seed, int multistart) {
  model.require_in_domain(m, "u_of_j");
  UofJResult best;
  best.value = std::numeric_limits<double>::infinity();
  const double target_mass = m * grid.length;

  for (int start = 0; start < std::max(1, multistart); ++start) {
    CellField rho(grid, m);
    if (start > 0) {
      Philox rng(seed, start);
      const double amp = 0.15 * m;
      const double a1 = amp * (2.0 * rng.next_unit() - 1.0);
      const double a2 = amp * (2.0 * rng.next_unit() - 1.0);
      const double p1 = 2.0 * M_PI * rng.next_unit();
      const double p2 = 2.0 * M_PI * rng.next_unit();
      for (int i = 0; i < grid.n_cells; ++i) {
        const double x = grid.cell_center(i) / grid.length;
        rho[i] = m + a1 * std::cos(2.0 * M_PI * x + p1) +
                 a2 * std::cos(4.0 * M_PI * x + p2);
      }
      project_mass_and_domain(model, target_mass, rho);
    }

    std::vector<double> g, g_prev, step_prev;
    double val = u_objective(model, J_bar, rho, &g);
    double alpha = 1e-2;
    bool converged = false;
    int it = 0;
    for (; it < 5000; ++it) {
      // zero-mean projection keeps the mass constraint
      double gm = 0.0;
      for (double x : g) gm += x;
      gm /= g.size();
      for (double& x : g) x -= gm;
      double gnorm = 0.0;
      for (double x : g) gnorm = std::max(gnorm, std::fabs(x));
      if (gnorm <= 1e-11 * (1.0 + std::fabs(val))) {
        converged = true;
        break;
      }
      if (!g_prev.empty()) {  // Barzilai-Borwein step
        double sy = 0.0, yy = 0.0;
        for (size_t i = 0; i < g.size(); ++i) {
          const double y = g[i] - g_prev[i];
          sy += step_prev[i] * y;
          yy += y * y;
        }
        if (yy > 0.0 && sy > 0.0) alpha = sy / yy;
      }
      alpha = std::clamp(alpha, 1e-12, 1e6);
      CellField trial = rho;
      double tried = alpha;
      double val_new = val;
      std::vector<double> step(g.size());
      for (int bt = 0; bt < 60; ++bt) {
        trial = rho;
        for (int i = 0; i < trial.n(); ++i) {
          step[i] = -tried * g[i];
          trial[i] += step[i];
        }
        project_mass_and_domain(model, target_mass, trial);
        val_new = u_objective(model, J_bar, trial, nullptr);
        if (val_new <= val - 1e-4 * tried * gnorm * gnorm || tried < 1e-14) break;
        tried *= 0.5;
      }
      if (!(val_new < val)) {
        converged = true;  // no descent direction left at this scale
        break;
      }
      step_prev.assign(trial.n(), 0.0);
      for (int i = 0; i < trial.n(); ++i) step_prev[i] = trial[i] - rho[i];
      rho = std::move(trial);
      val = val_new;
      g_prev = g;
      val = u_objective(model, J_bar, rho, &g);
    }
    if (val < best.value) {
      best.value = val;
      best.rho_profile = rho;
      best.converged = converged;
      best.iterations = it;
    }
  }
  return best;
}

// --------------------------------------------------------- HSPC/HSPDC

namespace {

struct InnerResult {
  CellField rho0;
  std::vector<FaceField> E;
  ControlState state;
  bool converged = false;
  int iterations = 0;
};

InnerResult minimize_inner(const ControlObjective& obj, CellField rho0,
                           std::vector<FaceField> E, bool optimize_rho0,
                           double target_mass, int max_inner, double grad_tol) {
  const int K = obj.n_steps;
  const int n = obj.grid.n_cells;

  ControlState st = control_forward(obj, rho0, E);
  CellField g0(obj.grid);
  std::vector<FaceField> gE;
  control_gradient(obj, st, rho0, E, &g0, &gE);

  auto flat_gnorm = [&](const CellField& a, const std::vector<FaceField>& b) {
    double m = 0.0;
    if (optimize_rho0)
      for (double x : a.v) m = std::max(m, std::fabs(x));
    for (const auto& f : b)
      for (double x : f.v) m = std::max(m, std::fabs(x));
    return m;
  };
  auto project_g0 = [&](CellField& g) {
    if (!optimize_rho0) return;
    double mean = 0.0;
    for (double x : g.v) mean += x;
    mean /= n;
    for (double& x : g.v) x -= mean;
  };

  project_g0(g0);
  double alpha = 1e-2;
  std::vector<double> sprev, yprev;
  std::vector<double> gflat_prev;
  InnerResult out;
  int it = 0;
  int stall_count = 0;
  for (; it < max_inner; ++it) {
    const double gnorm = flat_gnorm(g0, gE);
    if (gnorm <= grad_tol * (1.0 + std::fabs(st.objective))) break;
    if (stall_count >= 3) break;  // objective no longer improves measurably

    // flatten for the BB step
    std::vector<double> gflat;
    gflat.reserve((optimize_rho0 ? n : 0) + K * n);
    if (optimize_rho0)
      for (double x : g0.v) gflat.push_back(x);
    for (const auto& f : gE)
      for (double x : f.v) gflat.push_back(x);
    if (!gflat_prev.empty()) {
      double sy = 0.0, yy = 0.0;
      for (size_t i = 0; i < gflat.size(); ++i) {
        const double y = gflat[i] - gflat_prev[i];
        sy += sprev[i] * y;
        yy += y * y;
      }
      if (yy > 0.0 && sy > 0.0) alpha = sy / yy;
    }
    alpha = std::clamp(alpha, 1e-14, 1e8);

    double tried = alpha;
    CellField rho0_new = rho0;
    std::vector<FaceField> E_new = E;
    ControlState st_new;
    bool ok = false;
    for (int bt = 0; bt < 60; ++bt) {
      rho0_new = rho0;
      E_new = E;
      if (optimize_rho0) {
        for (int i = 0; i < n; ++i) rho0_new[i] -= tried * g0[i];
        project_mass_and_domain(obj.model, target_mass, rho0_new);
      }
      for (int k = 0; k < K; ++k)
        for (int i = 0; i < n; ++i) E_new[k][i] -= tried * gE[k][i];
      st_new = control_forward(obj, rho0_new, E_new);
      if (st_new.objective <= st.objective - 1e-4 * tried * gnorm * gnorm) {
        ok = true;
        break;
      }
      tried *= 0.5;
      if (tried < 1e-16) break;
    }
    if (!ok) break;
    if (st.objective - st_new.objective <= 1e-14 * (1.0 + std::fabs(st.objective)))
      ++stall_count;
    else
      stall_count = 0;

    sprev.assign(gflat.size(), 0.0);
    size_t idx = 0;
    if (optimize_rho0)
      for (int i = 0; i < n; ++i) sprev[idx++] = rho0_new[i] - rho0[i];
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < n; ++i) sprev[idx++] = E_new[k][i] - E[k][i];
    gflat_prev = std::move(gflat);

    rho0 = std::move(rho0_new);
    E = std::move(E_new);
    st = std::move(st_new);
    control_gradient(obj, st, rho0, E, &g0, &gE);
    project_g0(g0);
  }
  out.rho0 = std::move(rho0);
  out.E = std::move(E);
  out.state = std::move(st);
  out.iterations = it;
  out.converged = it < max_inner;
  return out;
}

CurrentSolution assemble_solution(const CurrentProblem& problem, const ControlObjective& obj,
                                  const InnerResult& inner) {
  const int K = obj.n_steps;
  const int n = obj.grid.n_cells;
  const double dt = obj.T / K;

  CurrentSolution sol;
  sol.rho.t_final = obj.T;
  sol.rho.slices = inner.state.rho;
  sol.E.t_final = obj.T;
  for (int k = 0; k < K; ++k) sol.E.slices.push_back(inner.E[k]);
  sol.E.slices.push_back(inner.E[K - 1]);  // node convention: repeat last slab

  // node currents with exact trapezoid averages matching the interval fluxes
  std::vector<FaceField> guess(K + 1, FaceField(obj.grid));
  for (int k = 0; k < K; ++k) guess[k] = inner.state.flux[k];
  guess[K] = perturbed_flux(obj.model, sol.rho[K], &sol.E[K]);
  sol.j = node_currents_from_interval_fluxes(inner.state.flux, guess, obj.T);

  sol.value_per_time = inner.state.value_per_time;
  sol.i_in = inner.state.i_in;
  double cmax = 0.0;
  for (double c : inner.state.constraint) cmax = std::max(cmax, std::fabs(c));
  sol.constraint_error = cmax;
  if (obj.mu1) {
    double emax = 0.0;
    for (double d : inner.state.endpoint) emax = std::max(emax, std::fabs(d));
    sol.endpoint_error = emax;
  }
  sol.iterations = inner.iterations;

  // time-dependence detection against the trapezoid time average
  CellField avg(obj.grid, 0.0);
  for (int k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? 0.5 : 1.0;
    for (int i = 0; i < n; ++i) avg[i] += w * sol.rho[k][i];
  }
  for (int i = 0; i < n; ++i) avg[i] /= K;
  double dev = 0.0;
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < n; ++i) dev = std::max(dev, std::fabs(sol.rho[k][i] - avg[i]));
  sol.time_dependent = dev > 1e-3;
  (void)dt;

  const UofJResult u = u_of_j(problem.model, problem.J_bar, problem.m, problem.grid,
                              problem.seed, 3);
  sol.u_bound = u.value;
  sol.u_profile = u.rho_profile;
  sol.gap = sol.u_bound - sol.value_per_time;
  return sol;
}

CurrentSolution solve_current_problem(const CurrentProblem& problem, bool with_endpoints) {
  const int K = problem.n_steps;
  const int n = problem.grid.n_cells;
  if (K < 2) throw std::invalid_argument("current solver: n_steps must be >= 2");
  problem.model.require_in_domain(problem.m, "current solver");

  // explicit forward scheme: enforce the CFL bound up front
  {
    const double dx = problem.grid.dx();
    const double dt = problem.T / K;
    const double Dm = problem.model.D_h(problem.m);
    if (dt > dx * dx / (2.0 * std::max(1e-12, 1.5 * Dm)))
      throw StabilityError("current solver: n_steps too small for the explicit scheme "
                           "(diffusive CFL)");
  }

  ControlObjective obj;
  obj.model = problem.model;
  obj.grid = problem.grid;
  obj.T = problem.T;
  obj.n_steps = K;
  obj.J_bar = problem.J_bar;
  obj.m = problem.m;
  obj.init_mode = problem.init_mode;

  CellField rho0(problem.grid, problem.m);
  bool optimize_rho0 = problem.init_mode == InitMode::gibbs;
  if (with_endpoints) {
    if (!problem.mu0 || !problem.mu1)
      throw std::invalid_argument("solve_hspdc: endpoints required");
    // d = 1 with constant J_bar: the compatibility condition forces mu0 = mu1
    if (max_abs_diff(*problem.mu0, *problem.mu1) > 1e-10)
      throw std::invalid_argument(
          "solve_hspdc: compatibility requires mu0 = mu1 in d = 1 (constant J_bar)");
    rho0 = *problem.mu0;
    obj.mu1 = *problem.mu1;
    optimize_rho0 = false;
    obj.init_mode = InitMode::deterministic;
  } else if (problem.init_mode == InitMode::deterministic && problem.mu0) {
    rho0 = *problem.mu0;
    optimize_rho0 = false;
  }

  const double target_mass = problem.m * problem.grid.length;
  std::vector<FaceField> E(K, FaceField(problem.grid, 0.0));
  {
    // warm start: constant field carrying J_bar at the flat profile
    const double sig = problem.model.sigma(problem.m);
    const double e0 = sig > 1e-12 ? problem.J_bar / (2.0 * sig) : 0.0;
    for (auto& slab : E)
      for (double& v : slab.v) v = e0;
  }

  obj.lambda_cur.assign(n, 0.0);
  obj.mu_cur = 10.0;
  if (obj.mu1) {
    obj.kappa_end.assign(n, 0.0);
    obj.nu_end = 10.0;
  }

  InnerResult inner;
  bool ok = false;
  int outer = 0;
  for (; outer < problem.max_outer; ++outer) {
    inner = minimize_inner(obj, rho0, E, optimize_rho0, target_mass,
                           problem.max_inner, problem.grad_tol);
    rho0 = inner.rho0;
    E = inner.E;
    double cmax = 0.0;
    for (double c : inner.state.constraint) cmax = std::max(cmax, std::fabs(c));
    double emax = 0.0;
    if (obj.mu1)
      for (double d : inner.state.endpoint) emax = std::max(emax, std::fabs(d));
    if (cmax <= problem.constraint_tol && (!obj.mu1 || emax <= problem.endpoint_tol)) {
      ok = true;
      break;
    }
    for (int i = 0; i < n; ++i)
      obj.lambda_cur[i] += obj.mu_cur * inner.state.constraint[i];
    if (obj.mu1)
      for (int i = 0; i < n; ++i)
        obj.kappa_end[i] += obj.nu_end * inner.state.endpoint[i];
    obj.mu_cur = std::min(obj.mu_cur * 10.0, 1e8);
    if (obj.mu1) obj.nu_end = std::min(obj.nu_end * 10.0, 1e8);
  }

  CurrentSolution sol = assemble_solution(problem, obj, inner);
  sol.converged = ok && inner.converged;
  sol.iterations = outer + 1;
  if (with_endpoints) {
    FaceField A0(problem.grid);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += ((*problem.mu0)[i] - problem.m) * problem.grid.dx();
      A0[i] = acc;
    }
    FaceField A1 = A0;
    for (int i = 0; i < n; ++i) A1[i] -= problem.T * problem.J_bar;
    sol.A0 = std::move(A0);
    sol.A1 = std::move(A1);
  }
  return sol;
}

}  // namespace

CurrentSolution solve_hspc(const CurrentProblem& problem) {
  return solve_current_problem(problem, false);
}

CurrentSolution solve_hspdc(const CurrentProblem& problem) {
  return solve_current_problem(problem, true);
}

// --------------------------------------------- vector potential tools

FacePath potential_from_trajectory(const CellPath& rho, const FacePath& j, double m) {
  const Grid& g = rho.front().grid;
  const int n = g.n_cells;
  const int K = rho.n_steps();
  const double dx = g.dx();
  const double dt = rho.dt();
  std::vector<FaceField> A(K + 1, FaceField(g));
  {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += (rho[0][i] - m) * dx;
      A[0][i] = acc;
    }
  }
  for (int k = 0; k < K; ++k) {
    const FaceField mid = midpoint_flux(j[k], j[k + 1]);
    for (int i = 0; i < n; ++i) A[k + 1][i] = A[k][i] - dt * mid[i];
  }
  return FacePath(rho.t_final, std::move(A));
}

TrajectoryFromPotential trajectory_from_potential(const FacePath& A, double m) {
  const int K = A.n_steps();
  if (K < 2) throw std::invalid_argument("trajectory_from_potential: need >= 2 steps");
  const double dt = A.dt();
  const Grid& g = A.front().grid;
  const int n = g.n_cells;
  TrajectoryFromPotential out;
  out.rho.t_final = A.t_final;
  out.j.t_final = A.t_final;
  for (int k = 0; k <= K; ++k) {
    CellField r = divergence(A[k]);
    for (int i = 0; i < n; ++i) r[i] += m;
    out.rho.slices.push_back(std::move(r));
    FaceField jj(g);
    if (k == 0) {
      for (int i = 0; i < n; ++i)
        jj[i] = -(-3.0 * A[0][i] + 4.0 * A[1][i] - A[2][i]) / (2.0 * dt);
    } else if (k == K) {
      for (int i = 0; i < n; ++i)
        jj[i] = -(3.0 * A[K][i] - 4.0 * A[K - 1][i] + A[K - 2][i]) / (2.0 * dt);
    } else {
      for (int i = 0; i < n; ++i) jj[i] = -(A[k + 1][i] - A[k - 1][i]) / (2.0 * dt);
    }
    out.j.slices.push_back(std::move(jj));
  }
  return out;
}

double action_A(const TransportModel& model, const FacePath& A, double m) {
  const TrajectoryFromPotential t = trajectory_from_potential(A, m);
  return rate_dyn(model, t.rho, t.j);
}

double hamiltonian_A(const TransportModel& model, const FaceField& A, const FaceField& B,
                     double m) {
  if (A.grid != B.grid) throw std::invalid_argument("hamiltonian_A: grid mismatch");
  const Grid& g = A.grid;
  const int n = g.n_cells;
  CellField u = divergence(A);
  CellField rho(g);
  for (int i = 0; i < n; ++i) rho[i] = u[i] + m;
  const FaceField sf = face_of(model.sigma, rho);
  const FaceField Df = face_of(model.D_h, rho);
  FaceField DB(g);
  for (int i = 0; i < n; ++i) DB[i] = Df[i] * B[i];
  const CellField divDB = divergence(DB);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += sf[i] * B[i] * B[i];
  for (int i = 0; i < n; ++i) acc -= u[i] * divDB[i];
  return acc * g.dx();
}

std::pair<double, double> extended_canonical_residual(const TransportModel& model,
                                                      const FacePath& A, const FacePath& B,
                                                      double m) {
  if (A.slices.size() != B.slices.size() || A.n_steps() < 2)
    throw std::invalid_argument("extended_canonical_residual: need aligned paths, >= 2 steps");
  const int K = A.n_steps();
  const int n = A.front().n();
  const double dt = A.dt();
  double r1 = 0.0, r2 = 0.0;
  for (int k = 1; k < K; ++k) {
    CellField u = divergence(A[k]);
    CellField rho(u.grid);
    for (int i = 0; i < n; ++i) rho[i] = u[i] + m;
    const FaceField Df = face_of(model.D_h, rho);
    const FaceField sf = face_of(model.sigma, rho);
    const FaceField gu = grad(u);
    // dA/dt = D~ grad(divA) + 2 sigma~ B
    for (int i = 0; i < n; ++i) {
      const double dA = (A[k + 1][i] - A[k - 1][i]) / (2.0 * dt);
      r1 = std::max(r1, std::fabs(dA - (Df[i] * gu[i] + 2.0 * sf[i] * B[k][i])));
    }
    // dB/dt = -grad[ D~ divB - sigma~' |B|^2 ]
    const CellField divB = divergence(B[k]);
    const CellField Bsq = cell_mean_sq(B[k]);
    CellField bracket(u.grid);
    for (int i = 0; i < n; ++i)
      bracket[i] = model.D_h(rho[i]) * divB[i] - model.sigma_prime(rho[i]) * Bsq[i];
    const FaceField gb = grad(bracket);
    for (int i = 0; i < n; ++i) {
      const double dB = (B[k + 1][i] - B[k - 1][i]) / (2.0 * dt);
      r2 = std::max(r2, std::fabs(dB + gb[i]));
    }
  }
  return {r1, r2};
}

FacePath conjugate_from_H(const CellPath& H) {
  FacePath B;
  B.t_final = H.t_final;
  for (const auto& s : H.slices) {
    FaceField b = grad(s);
    for (double& x : b.v) x = -x;
    B.slices.push_back(std::move(b));
  }
  return B;
}

ReversedCurrentBridge reverse_current_bridge(const TransportModel& model,
                                             const CellPath& rho, const FacePath& E) {
  if (rho.slices.size() != E.slices.size())
    throw std::invalid_argument("reverse_current_bridge: mismatched paths");
  ReversedCurrentBridge out;
  out.E_hat.t_final = rho.t_final;
  for (int k = 0; k <= rho.n_steps(); ++k) {
    CellField fp(rho.front().grid);
    for (int i = 0; i < fp.n(); ++i) fp[i] = model.f_prime(rho[k][i]);
    FaceField eh = grad(fp);
    for (int i = 0; i < eh.n(); ++i) eh[i] -= E[k][i];
    out.E_hat.slices.push_back(std::move(eh));
  }
  const CellPath rho_rev = reversed_in_time(rho);
  const FacePath Ehat_rev = reversed_in_time(out.E_hat);
  out.reversed_drift = drift_from_field(model, rho_rev, Ehat_rev);
  return out;
}

}  // namespace hydroschro
