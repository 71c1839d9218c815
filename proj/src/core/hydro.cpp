#include "core/hydro.hpp"

#include <algorithm>
#include <cmath>

namespace hydroschro {

namespace {

FaceField face_coeff(const TransportModel& model, const ScalarFn& fn,
                     const CellField& rho) {
  CellField c(rho.grid);
  for (int i = 0; i < rho.n(); ++i) c[i] = fn(rho[i]);
  (void)model;
  return face_mean(c);
}

void check_domain(const TransportModel& model, const CellField& rho, int step) {
  for (double x : rho.v)
    if (!(x >= model.rho_min && x <= model.rho_max))
      throw DomainExitError("solver: density left the model domain at step " +
                            std::to_string(step) + " (rho = " + std::to_string(x) + ")");
}

// Cyclic tridiagonal solve (Thomas + Sherman-Morrison). a = sub, b = diag,
// c = super; a[0] couples row 0 to n-1, c[n-1] couples row n-1 to 0.
std::vector<double> solve_cyclic_tridiag(std::vector<double> a, std::vector<double> b,
                                         std::vector<double> c, std::vector<double> r) {
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

  const double alpha = a[0];     // corner (0, n-1)
  const double beta = c[n - 1];  // corner (n-1, 0)
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

struct Stepper {
  const TransportModel& model;
  const SolverOptions& opt;
  double dt;

  FaceField flux(const CellField& rho, const FaceField* E) const {
    return perturbed_flux(model, rho, E);
  }

  void cfl_guard(const CellField& rho) const {
    const FaceField D = face_coeff(model, model.D_h, rho);
    const double dmax = max_abs(D);
    const double dx = rho.grid.dx();
    if (dmax > 0.0 && dt > opt.cfl_safety * dx * dx / (2.0 * dmax))
      throw StabilityError("explicit scheme: dt violates the diffusive CFL bound (dt " +
                           std::to_string(dt) + " > " +
                           std::to_string(dx * dx / (2.0 * dmax)) + ")");
  }

  // Returns rho_{k+1}; j_next receives the stored node current.
  CellField step_explicit(const CellField& rho, const FaceField& j_here,
                          const FaceField* E_next, FaceField& j_next) const {
    cfl_guard(rho);
    CellField pred(rho.grid);
    {
      const CellField d = divergence(j_here);
      for (int i = 0; i < rho.n(); ++i) pred[i] = rho[i] - dt * d[i];
    }
    j_next = flux(pred, E_next);
    const CellField d = divergence(midpoint_flux(j_here, j_next));
    CellField out(rho.grid);
    for (int i = 0; i < rho.n(); ++i) out[i] = rho[i] - dt * d[i];
    return out;
  }

  CellField step_cn(const CellField& rho, const FaceField& j_here,
                    const FaceField* E_next, FaceField& j_next) const {
    const int n = rho.n();
    const double dx = rho.grid.dx();
    const double lam = dt / (2.0 * dx * dx);

    CellField r0(rho.grid);
    {
      const CellField d = divergence(j_here);
      for (int i = 0; i < n; ++i) r0[i] = rho[i] - 0.5 * dt * d[i];
    }

    CellField guess = rho;
    CellField sol = rho;
    for (int it = 0; it < opt.max_picard; ++it) {
      const FaceField Df = face_coeff(model, model.D_h, guess);
      std::vector<double> rhs(r0.v);
      if (E_next) {
        const FaceField sf = face_coeff(model, model.sigma, guess);
        FaceField drive(rho.grid);
        for (int i = 0; i < n; ++i) drive[i] = 2.0 * sf[i] * (*E_next)[i];
        const CellField dd = divergence(drive);
        for (int i = 0; i < n; ++i) rhs[i] -= 0.5 * dt * dd[i];
      }
      std::vector<double> a(n), b(n), c(n);
      for (int i = 0; i < n; ++i) {
        const double Dl = Df[(i + n - 1) % n];
        const double Dr = Df[i];
        a[i] = -lam * Dl;
        c[i] = -lam * Dr;
        b[i] = 1.0 + lam * (Dl + Dr);
      }
      sol.v = solve_cyclic_tridiag(std::move(a), std::move(b), std::move(c), std::move(rhs));
      double delta = 0.0, scale = 1.0;
      for (int i = 0; i < n; ++i) {
        delta = std::max(delta, std::fabs(sol[i] - guess[i]));
        scale = std::max(scale, std::fabs(sol[i]));
      }
      guess = sol;
      if (delta <= opt.picard_tol * scale) break;
    }
    j_next = flux(sol, E_next);
    const CellField d = divergence(midpoint_flux(j_here, j_next));
    CellField out(rho.grid);
    for (int i = 0; i < n; ++i) out[i] = rho[i] - dt * d[i];
    return out;
  }
};

HydroTrajectory run(const TransportModel& model, const CellField& rho0,
                    const FacePath* E, double T, int n_steps,
                    const SolverOptions& opt) {
  if (n_steps < 1) throw std::invalid_argument("solver: n_steps must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("solver: T must be > 0");
  model.require_in_domain(rho0, "solver");
  if (E && (E->n_steps() != n_steps || E->front().grid != rho0.grid))
    throw std::invalid_argument("solver: drive field discretization mismatch");

  const double dt = T / n_steps;
  Stepper st{model, opt, dt};

  std::vector<CellField> rho;
  std::vector<FaceField> j;
  rho.reserve(n_steps + 1);
  j.reserve(n_steps + 1);
  rho.push_back(rho0);
  j.push_back(st.flux(rho0, E ? &(*E)[0] : nullptr));

  for (int k = 0; k < n_steps; ++k) {
    const FaceField* Enext = E ? &(*E)[k + 1] : nullptr;
    FaceField jn(rho0.grid);
    CellField next = (opt.scheme == Scheme::explicit_two_stage)
                         ? st.step_explicit(rho[k], j[k], Enext, jn)
                         : st.step_cn(rho[k], j[k], Enext, jn);
    check_domain(model, next, k + 1);
    rho.push_back(std::move(next));
    j.push_back(std::move(jn));
  }
  return HydroTrajectory{CellPath(T, std::move(rho)), FacePath(T, std::move(j))};
}

}  // namespace

FaceField perturbed_flux(const TransportModel& model, const CellField& rho,
                         const FaceField* E) {
  const FaceField Df = face_coeff(model, model.D_h, rho);
  const FaceField g = grad(rho);
  FaceField f(rho.grid);
  for (int i = 0; i < f.n(); ++i) f[i] = -Df[i] * g[i];
  if (E) {
    const FaceField sf = face_coeff(model, model.sigma, rho);
    for (int i = 0; i < f.n(); ++i) f[i] += 2.0 * sf[i] * (*E)[i];
  }
  return f;
}

HydroTrajectory solve_nde(const TransportModel& model, const CellField& rho0,
                          double T, int n_steps, const SolverOptions& opt) {
  return run(model, rho0, nullptr, T, n_steps, opt);
}

HydroTrajectory solve_perturbed(const TransportModel& model, const CellField& rho0,
                                const FacePath& E, const SolverOptions& opt) {
  return run(model, rho0, &E, E.t_final, E.n_steps(), opt);
}

double rate_dyn(const TransportModel& model, const CellPath& rho, const FacePath& j) {
  if (rho.slices.size() != j.slices.size() || rho.t_final != j.t_final)
    throw std::invalid_argument("rate_dyn: mismatched paths");
  const int K = rho.n_steps();
  const double dt = rho.dt();
  const double dx = rho.front().grid.dx();
  double acc = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? 0.5 : 1.0;
    const FaceField Df = face_coeff(model, model.D_h, rho[k]);
    const FaceField sf = face_coeff(model, model.sigma, rho[k]);
    const FaceField g = grad(rho[k]);
    for (int i = 0; i < g.n(); ++i) {
      const double num = j[k][i] + Df[i] * g[i];
      if (sf[i] > kSigmaZero) {
        acc += w * num * num / sf[i];
      } else if (std::fabs(num) > kZeroNumeratorTol) {
        return std::numeric_limits<double>::infinity();
      }
    }
  }
  return 0.25 * acc * dt * dx;
}

double rate_dyn(const TransportModel& model, const HydroTrajectory& traj) {
  return rate_dyn(model, traj.rho, traj.j);
}

FieldFromCurrent field_from_current(const TransportModel& model, const CellField& rho,
                                    const FaceField& j) {
  const FaceField Df = face_coeff(model, model.D_h, rho);
  const FaceField sf = face_coeff(model, model.sigma, rho);
  const FaceField g = grad(rho);
  FieldFromCurrent out;
  out.E = FaceField(rho.grid);
  for (int i = 0; i < j.n(); ++i) {
    double s = sf[i];
    if (s < kSigmaClampFloor) {
      s = kSigmaClampFloor;
      out.clamped = true;
    }
    out.E[i] = (j[i] + Df[i] * g[i]) / (2.0 * s);
  }
  return out;
}

FieldPathFromCurrent field_from_current(const TransportModel& model, const CellPath& rho,
                                        const FacePath& j) {
  FieldPathFromCurrent out;
  out.E.t_final = rho.t_final;
  for (int k = 0; k <= rho.n_steps(); ++k) {
    FieldFromCurrent one = field_from_current(model, rho[k], j[k]);
    out.clamped = out.clamped || one.clamped;
    out.E.slices.push_back(std::move(one.E));
  }
  return out;
}

double rate_via_field(const TransportModel& model, const CellPath& rho,
                      const FacePath& E) {
  if (rho.slices.size() != E.slices.size() || rho.t_final != E.t_final)
    throw std::invalid_argument("rate_via_field: mismatched paths");
  const int K = rho.n_steps();
  const double dt = rho.dt();
  const double dx = rho.front().grid.dx();
  double acc = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? 0.5 : 1.0;
    const FaceField sf = face_coeff(model, model.sigma, rho[k]);
    for (int i = 0; i < sf.n(); ++i) acc += w * sf[i] * E[k][i] * E[k][i];
  }
  return acc * dt * dx;
}

double entropy_zero_range(const TransportModel& zr_model, const CellPath& rho,
                          const FacePath& j) {
  const auto family = zr_model.metadata.find("family");
  const bool is_zr = (family != zr_model.metadata.end() && family->second == "zero_range") ||
                     zr_model.name == "independent";
  if (!is_zr)
    throw std::invalid_argument("entropy_zero_range: model is not a zero-range set");
  const int K = rho.n_steps();
  const double dt = rho.dt();
  const double dx = rho.front().grid.dx();
  const FieldPathFromCurrent E = field_from_current(zr_model, rho, j);
  double acc = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? 0.5 : 1.0;
    const FaceField Df = face_coeff(zr_model, zr_model.D_h, rho[k]);
    const FaceField phif = face_coeff(zr_model, zr_model.sigma, rho[k]);
    const FaceField g = grad(rho[k]);
    for (int i = 0; i < g.n(); ++i) {
      const double e = E.E[k][i];
      acc += w * (j[k][i] * e + Df[i] * g[i] * e - phif[i] * e * e);
    }
  }
  return acc * dt * dx;
}

}  // namespace hydroschro
