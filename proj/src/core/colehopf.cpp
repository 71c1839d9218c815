#include "core/colehopf.hpp"

#include <algorithm>
#include <cmath>

namespace hydroschro {

std::pair<CellField, CellField> ch_forward(const CellField& rho, const CellField& H) {
  if (rho.grid != H.grid) throw std::invalid_argument("ch_forward: grid mismatch");
  for (double x : rho.v)
    if (!(x >= 0.0)) throw std::domain_error("ch_forward: rho must be nonnegative");
  CellField xi(rho.grid), eta(rho.grid);
  for (int i = 0; i < rho.n(); ++i) {
    xi[i] = rho[i] * std::exp(-H[i]);
    eta[i] = std::exp(H[i]);
  }
  return {xi, eta};
}

std::pair<CellField, CellField> ch_inverse(const CellField& xi, const CellField& eta) {
  if (xi.grid != eta.grid) throw std::invalid_argument("ch_inverse: grid mismatch");
  CellField rho(xi.grid), H(xi.grid);
  for (int i = 0; i < xi.n(); ++i) {
    if (!(eta[i] > 0.0)) throw std::domain_error("ch_inverse: eta must be positive");
    rho[i] = xi[i] * eta[i];
    H[i] = std::log(eta[i]);
  }
  return {rho, H};
}

HeatSemigroup::HeatSemigroup(const Grid& grid, double t) : grid_(grid) {
  if (grid.boundary != Boundary::periodic)
    throw std::invalid_argument("HeatSemigroup: periodic grid required");
  if (t < 0.0) throw std::invalid_argument("HeatSemigroup: t must be >= 0");
  const int n = grid.n_cells;
  const double dx = grid.dx();
  kernel_.assign(n, 0.0);
  for (int r = 0; r < n; ++r) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double lam = 2.0 / (dx * dx) * (1.0 - std::cos(2.0 * M_PI * k / n));
      acc += std::exp(-lam * t) * std::cos(2.0 * M_PI * k * r / n);
    }
    kernel_[r] = std::max(0.0, acc / n);
  }
  double sum = 0.0;
  for (double v : kernel_) sum += v;
  for (double& v : kernel_) v /= sum;  // exact sum conservation
}

CellField HeatSemigroup::apply(const CellField& v) const {
  if (v.grid != grid_) throw std::invalid_argument("HeatSemigroup: grid mismatch");
  const int n = grid_.n_cells;
  CellField out(grid_);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int r = 0; r < n; ++r) acc += kernel_[r] * v[(i + r) % n];
    out[i] = acc;
  }
  return out;
}

IndependentBridgeResult solve_independent_bridge(const CellField& mu0,
                                                 const CellField& mu1, double T,
                                                 int n_steps, double tol,
                                                 int max_iter) {
  if (mu0.grid != mu1.grid) throw std::invalid_argument("independent_bridge: grid mismatch");
  for (const CellField* mu : {&mu0, &mu1})
    for (double x : mu->v)
      if (!(x > 0.0))
        throw std::invalid_argument("independent_bridge: endpoint densities must be positive");
  const double m0 = mass(mu0), m1 = mass(mu1);
  if (std::fabs(m0 - m1) > 1e-10 * std::max(1.0, m0))
    throw std::invalid_argument("independent_bridge: endpoint masses differ");
  if (n_steps < 2) throw std::invalid_argument("independent_bridge: n_steps must be >= 2");

  const Grid& g = mu0.grid;
  const int n = g.n_cells;
  const double dt = T / n_steps;
  const HeatSemigroup P(g, dt);

  auto propagate = [&](const CellField& v, int steps) {
    CellField out = v;
    for (int s = 0; s < steps; ++s) out = P.apply(out);
    return out;
  };

  IndependentBridgeResult res;
  CellField xi0 = mu0;
  CellField etaT(g, 1.0);
  double err = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const CellField xiT = propagate(xi0, n_steps);
    err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::fabs(xiT[i] * etaT[i] - mu1[i]));
    if (err <= tol) break;
    for (int i = 0; i < n; ++i) etaT[i] = mu1[i] / xiT[i];
    const CellField eta0 = propagate(etaT, n_steps);
    for (int i = 0; i < n; ++i) xi0[i] = mu0[i] / eta0[i];
  }
  res.iterations = iter;
  res.marginal_error = err;
  res.converged = err <= tol;

  // full paths: xi forward, eta backward (forward flow in reversed index)
  std::vector<CellField> xi(n_steps + 1, CellField(g)), eta(n_steps + 1, CellField(g));
  xi[0] = xi0;
  for (int k = 1; k <= n_steps; ++k) xi[k] = P.apply(xi[k - 1]);
  eta[n_steps] = etaT;
  for (int k = n_steps - 1; k >= 0; --k) eta[k] = P.apply(eta[k + 1]);

  std::vector<CellField> rho(n_steps + 1, CellField(g)), H(n_steps + 1, CellField(g));
  for (int k = 0; k <= n_steps; ++k)
    for (int i = 0; i < n; ++i) {
      rho[k][i] = xi[k][i] * eta[k][i];
      H[k][i] = std::log(eta[k][i]);
    }

  const TransportModel indep = builtin_model("independent");
  CellPath rho_path(T, std::move(rho));
  CellPath H_path(T, std::move(H));

  // constitutive node fluxes, used as value integrand and as the smooth
  // guess for the continuity-exact current construction
  std::vector<FaceField> formula(n_steps + 1, FaceField(g));
  for (int k = 0; k <= n_steps; ++k) {
    const FaceField gh = grad(H_path[k]);
    const FaceField gr = grad(rho_path[k]);
    const FaceField rf = face_mean(rho_path[k]);
    for (int i = 0; i < n; ++i) formula[k][i] = -gr[i] + 2.0 * rf[i] * gh[i];
  }

  // interval fluxes G_k with div G_k = (rho_k - rho_{k+1})/dt exactly
  std::vector<FaceField> G;
  G.reserve(n_steps);
  const double dx = g.dx();
  for (int k = 0; k < n_steps; ++k) {
    CellField s(g);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      s[i] = (rho_path[k][i] - rho_path[k + 1][i]) / dt;
      mean += s[i];
    }
    mean /= n;
    FaceField Gk(g);
    double target_mean = 0.0;
    for (int i = 0; i < n; ++i) target_mean += 0.5 * (formula[k][i] + formula[k + 1][i]);
    target_mean /= n;
    double acc = 0.0, facesum = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += dx * (s[i] - mean);
      Gk[i] = acc;
      facesum += acc;
    }
    const double shift = target_mean - facesum / n;
    for (int i = 0; i < n; ++i) Gk[i] += shift;
    G.push_back(std::move(Gk));
  }
  FacePath j = node_currents_from_interval_fluxes(G, formula, T);

  BridgeSolution sol;
  sol.rho = rho_path;
  sol.H = H_path;
  sol.j = std::move(j);
  {
    FacePath E(T, {});
    for (int k = 0; k <= n_steps; ++k) E.slices.push_back(grad(sol.H[k]));
    sol.value = rate_via_field(indep, sol.rho, E);
  }
  sol.diagnostics.iterations = res.iterations;
  sol.diagnostics.converged = res.converged;
  sol.diagnostics.endpoint_error = res.marginal_error;
  auto [r1, r2] = canonical_residual(indep, sol.rho, sol.H);
  sol.diagnostics.canonical_residual_rho = r1;
  sol.diagnostics.canonical_residual_H = r2;
  sol.diagnostics.hamiltonian_drift = hamiltonian_drift(indep, sol.rho, sol.H);

  res.xi = CellPath(T, std::move(xi));
  res.eta = CellPath(T, std::move(eta));
  res.solution = std::move(sol);
  return res;
}

double torus_heat_kernel(double x, double t, double L) {
  if (!(t > 0.0) || !(L > 0.0))
    throw std::invalid_argument("torus_heat_kernel: t and L must be > 0");
  x = std::remainder(x, L);
  const double k1 = 2.0 * M_PI / L;
  if (t * k1 * k1 >= 0.05) {
    // Fourier series, tail below 1e-14 of the leading term
    double acc = 1.0;
    for (int k = 1;; ++k) {
      const double term = 2.0 * std::exp(-(k1 * k) * (k1 * k) * t) * std::cos(k1 * k * x);
      acc += term;
      if (std::exp(-(k1 * k) * (k1 * k) * t) < 1e-16) break;
      if (k > 10000) break;
    }
    return acc / L;
  }
  // image sum
  const int M = static_cast<int>(std::ceil(std::sqrt(4.0 * t * 40.0) / L)) + 2;
  double acc = 0.0;
  for (int m = -M; m <= M; ++m) {
    const double d = x + m * L;
    acc += std::exp(-d * d / (4.0 * t));
  }
  return acc / std::sqrt(4.0 * M_PI * t);
}

StaticPlan solve_static_sinkhorn(const CellField& mu0, const CellField& mu1, double T,
                                 double tol, int max_iter) {
  if (mu0.grid != mu1.grid) throw std::invalid_argument("sinkhorn: grid mismatch");
  for (const CellField* mu : {&mu0, &mu1})
    for (double x : mu->v)
      if (!(x > 0.0)) throw std::invalid_argument("sinkhorn: endpoint densities must be positive");
  const double m0 = mass(mu0), m1 = mass(mu1);
  if (std::fabs(m0 - m1) > 1e-10 * std::max(1.0, m0))
    throw std::invalid_argument("sinkhorn: endpoint masses differ");

  const Grid& g = mu0.grid;
  const int n = g.n_cells;
  const double dx = g.dx();
  // transition masses between cells of a stationary torus Brownian
  std::vector<double> ker(n);
  for (int r = 0; r < n; ++r) ker[r] = torus_heat_kernel(r * dx, T, g.length) * dx;

  std::vector<double> r(n), c(n);
  for (int i = 0; i < n; ++i) {
    r[i] = mu0[i] * dx;
    c[i] = mu1[i] * dx;
  }
  std::vector<double> a(n, 1.0), b(n, 1.0);
  auto K = [&](int i, int j) { return ker[(j - i + n) % n]; };

  double err = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += K(i, j) * b[j];
      a[i] = r[i] / s;
    }
    err = 0.0;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += a[i] * K(i, j);
      const double colsum = s * b[j];
      err = std::max(err, std::fabs(colsum - c[j]) / dx);  // density units
      b[j] = c[j] / s;
    }
    if (err <= tol) break;
  }

  StaticPlan plan;
  plan.iterations = iter;
  plan.marginal_error = err;
  plan.converged = err <= tol;
  plan.coupling.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) plan.coupling[i][j] = a[i] * K(i, j) * b[j];

  plan.potential_a = CellField(g);
  plan.potential_b = CellField(g);
  for (int i = 0; i < n; ++i) {
    plan.potential_a[i] = std::log(a[i]);
    plan.potential_b[i] = std::log(b[i]);
  }

  // entropic values against the mu0-initialized and stationary references
  const double m_bar = m0 / g.length;
  double v_cond = 0.0, v_stat = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double p = plan.coupling[i][j];
      if (p <= 0.0) continue;
      const double kij = K(i, j);
      v_cond += p * std::log(p / (r[i] * kij));
      v_stat += p * std::log(p / (m_bar * dx * kij));
    }
  plan.value = v_cond;
  plan.value_stationary = v_stat;
  return plan;
}

namespace {

// interior first derivative with one-sided second-order ends (line mode)
std::vector<double> dx_line(const std::vector<double>& v, double dx) {
  const int n = static_cast<int>(v.size());
  std::vector<double> d(n);
  for (int i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
  return d;
}

void require_flat_tails(const CellPath& p, const char* what) {
  const int n = p.front().n();
  const int w = std::max(1, n / 10);
  for (const auto& s : p.slices) {
    for (const auto& range : {std::pair<int, int>{0, w}, {n - w, n}}) {
      double lo = s[range.first], hi = s[range.first];
      for (int i = range.first; i < range.second; ++i) {
        lo = std::min(lo, s[i]);
        hi = std::max(hi, s[i]);
      }
      if (hi - lo > 1e-6)
        throw std::invalid_argument(std::string(what) +
                                    ": boundary flatness violated (outer 10% of cells)");
    }
  }
}

}  // namespace

CellPath as_line_window(const CellPath& p) {
  CellPath out = p;
  for (auto& s : out.slices) s.grid.boundary = Boundary::line;
  return out;
}

XiEtaPair akns_transform(const TransportModel& model, const CellPath& rho,
                         const CellPath& H) {
  if (rho.slices.size() != H.slices.size())
    throw std::invalid_argument("akns_transform: mismatched paths");
  if (rho.front().grid.boundary != Boundary::line)
    throw std::invalid_argument("akns_transform: line-mode grid required");
  // the transform assumes constant hydrodynamic diffusion
  {
    const double d1 = model.D_h(0.7), d2 = model.D_h(1.3);
    if (std::fabs(d1 - d2) > 1e-12 * std::max(1.0, std::fabs(d1)))
      throw std::invalid_argument("akns_transform: model must have constant D_h");
  }
  require_flat_tails(rho, "akns_transform[rho]");
  require_flat_tails(H, "akns_transform[H]");

  const Grid& g = rho.front().grid;
  const int n = g.n_cells;
  const double dx = g.dx();
  XiEtaPair out;
  out.xi.t_final = rho.t_final;
  out.eta.t_final = rho.t_final;
  for (size_t k = 0; k < rho.slices.size(); ++k) {
    const CellField& rk = rho.slices[k];
    const CellField& Hk = H.slices[k];
    std::vector<double> sp(n), w(n);
    const std::vector<double> dH = dx_line(Hk.v, dx);
    for (int i = 0; i < n; ++i) {
      sp[i] = model.sigma_prime(rk[i]);
      if (std::fabs(sp[i]) < 1e-12)
        throw std::domain_error("akns_transform: sigma'(rho) crosses zero");
      w[i] = sp[i] * dH[i];
    }
    // cumulative trapezoid from the left boundary to cell centers
    std::vector<double> h(n);
    h[0] = 0.5 * dx * w[0];
    for (int i = 1; i < n; ++i) h[i] = h[i - 1] + 0.5 * dx * (w[i - 1] + w[i]);
    std::vector<double> u(n), v(n);
    for (int i = 0; i < n; ++i) {
      u[i] = model.sigma(rk[i]) * std::exp(-h[i]);
      v[i] = std::exp(h[i]);
    }
    const std::vector<double> du = dx_line(u, dx);
    const std::vector<double> dv = dx_line(v, dx);
    CellField xi(g), eta(g);
    for (int i = 0; i < n; ++i) {
      xi[i] = du[i] / sp[i];
      eta[i] = -dv[i] / sp[i];
    }
    out.xi.slices.push_back(std::move(xi));
    out.eta.slices.push_back(std::move(eta));
  }
  return out;
}

std::pair<double, double> akns_residual(const XiEtaPair& pair) {
  const CellPath& xi = pair.xi;
  const CellPath& eta = pair.eta;
  if (xi.slices.size() != eta.slices.size() || xi.n_steps() < 2)
    throw std::invalid_argument("akns_residual: need aligned paths with >= 2 steps");
  const int K = xi.n_steps();
  const int n = xi.front().n();
  const double dt = xi.dt();
  const double dx = xi.front().grid.dx();
  const int skip = std::max(2, n / 10);  // keep away from the held boundary cells
  double rx = 0.0, re = 0.0;
  for (int k = 1; k < K; ++k) {
    for (int i = skip; i < n - skip; ++i) {
      const double xtt = (xi[k + 1][i] - xi[k - 1][i]) / (2.0 * dt);
      const double ett = (eta[k + 1][i] - eta[k - 1][i]) / (2.0 * dt);
      const double xxx = (xi[k][i + 1] - 2.0 * xi[k][i] + xi[k][i - 1]) / (dx * dx);
      const double exx = (eta[k][i + 1] - 2.0 * eta[k][i] + eta[k][i - 1]) / (dx * dx);
      const double x = xi[k][i], e = eta[k][i];
      rx = std::max(rx, std::fabs(xtt - (xxx - 2.0 * e * x * x)));
      re = std::max(re, std::fabs(ett - (-exx + 2.0 * x * e * e)));
    }
  }
  return {rx, re};
}

double akns_hamiltonian(const CellField& xi, const CellField& eta,
                        AknsHamiltonianKind kind) {
  if (xi.grid != eta.grid) throw std::invalid_argument("akns_hamiltonian: grid mismatch");
  const int n = xi.n();
  const double dx = xi.grid.dx();
  double grad_term = 0.0;
  if (xi.grid.boundary == Boundary::periodic) {
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1) % n;
      grad_term += (xi[ip] - xi[i]) * (eta[ip] - eta[i]) / (dx * dx);
    }
  } else {
    for (int i = 0; i + 1 < n; ++i)
      grad_term += (xi[i + 1] - xi[i]) * (eta[i + 1] - eta[i]) / (dx * dx);
  }
  grad_term *= dx;
  if (kind == AknsHamiltonianKind::independent) return -grad_term;
  double quart = 0.0;
  for (int i = 0; i < n; ++i) quart += xi[i] * xi[i] * eta[i] * eta[i];
  quart *= dx;
  return grad_term - quart;
}

double akns_hamiltonian_drift(const XiEtaPair& pair, AknsHamiltonianKind kind) {
  const double h0 = akns_hamiltonian(pair.xi[0], pair.eta[0], kind);
  double drift = 0.0;
  for (int k = 1; k <= pair.xi.n_steps(); ++k)
    drift = std::max(drift,
                     std::fabs(akns_hamiltonian(pair.xi[k], pair.eta[k], kind) - h0));
  return drift / (1.0 + std::fabs(h0));
}

}  // namespace hydroschro
