#include "core/fields.hpp"

#include <algorithm>
#include <cmath>

namespace hydroschro {

Grid make_grid(int n_cells, double length, Boundary boundary) {
  if (n_cells < 8) throw std::invalid_argument("grid: n_cells must be >= 8");
  if (!(length > 0.0)) throw std::invalid_argument("grid: length must be > 0");
  return Grid{n_cells, length, boundary};
}

CellField make_cell_field(const Grid& g, const std::function<double(double)>& fn) {
  CellField c(g);
  for (int i = 0; i < g.n_cells; ++i) c[i] = fn(g.cell_center(i));
  return c;
}

FaceField make_face_field(const Grid& g, const std::function<double(double)>& fn) {
  FaceField f(g);
  for (int i = 0; i < g.n_cells; ++i) f[i] = fn(g.face_pos(i));
  return f;
}

static void require_periodic(const Grid& g, const char* op) {
  if (g.boundary != Boundary::periodic)
    throw std::invalid_argument(std::string(op) + ": line-mode grid rejected");
}

FaceField grad(const CellField& c) {
  require_periodic(c.grid, "grad");
  const int n = c.n();
  const double inv_dx = 1.0 / c.grid.dx();
  FaceField f(c.grid);
  for (int i = 0; i < n - 1; ++i) f[i] = (c[i + 1] - c[i]) * inv_dx;
  f[n - 1] = (c[0] - c[n - 1]) * inv_dx;
  return f;
}

CellField divergence(const FaceField& f) {
  require_periodic(f.grid, "div");
  const int n = f.n();
  const double inv_dx = 1.0 / f.grid.dx();
  CellField c(f.grid);
  c[0] = (f[0] - f[n - 1]) * inv_dx;
  for (int i = 1; i < n; ++i) c[i] = (f[i] - f[i - 1]) * inv_dx;
  return c;
}

CellField laplacian(const CellField& c) { return divergence(grad(c)); }

FaceField face_mean(const CellField& c) {
  require_periodic(c.grid, "face_mean");
  const int n = c.n();
  FaceField f(c.grid);
  for (int i = 0; i < n - 1; ++i) f[i] = 0.5 * (c[i] + c[i + 1]);
  f[n - 1] = 0.5 * (c[n - 1] + c[0]);
  return f;
}

CellField cell_mean(const FaceField& f) {
  require_periodic(f.grid, "cell_mean");
  const int n = f.n();
  CellField c(f.grid);
  c[0] = 0.5 * (f[n - 1] + f[0]);
  for (int i = 1; i < n; ++i) c[i] = 0.5 * (f[i - 1] + f[i]);
  return c;
}

CellField cell_mean_sq(const FaceField& f) {
  require_periodic(f.grid, "cell_mean_sq");
  const int n = f.n();
  CellField c(f.grid);
  c[0] = 0.5 * (f[n - 1] * f[n - 1] + f[0] * f[0]);
  for (int i = 1; i < n; ++i) c[i] = 0.5 * (f[i - 1] * f[i - 1] + f[i] * f[i]);
  return c;
}

// Pairwise summation keeps integrals and mass checks reproducible and
// accurate on long vectors.
static double pairwise_sum(const double* a, int n) {
  if (n <= 8) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const int h = n / 2;
  return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

double cell_integral(const CellField& c) {
  return pairwise_sum(c.v.data(), c.n()) * c.grid.dx();
}

double face_integral(const FaceField& f) {
  return pairwise_sum(f.v.data(), f.n()) * f.grid.dx();
}

double mass(const CellField& rho, bool validate_nonnegative) {
  if (validate_nonnegative) {
    for (double x : rho.v)
      if (!(x >= 0.0))
        throw std::domain_error("mass: negative (or NaN) density entry");
  }
  return cell_integral(rho);
}

double max_abs(const CellField& c) {
  double m = 0.0;
  for (double x : c.v) m = std::max(m, std::fabs(x));
  return m;
}

double max_abs(const FaceField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::fabs(x));
  return m;
}

double max_abs_diff(const CellField& a, const CellField& b) {
  if (a.grid != b.grid) throw std::invalid_argument("max_abs_diff: grid mismatch");
  double m = 0.0;
  for (int i = 0; i < a.n(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double l1_distance(const CellField& a, const CellField& b) {
  if (a.grid != b.grid) throw std::invalid_argument("l1_distance: grid mismatch");
  double s = 0.0;
  for (int i = 0; i < a.n(); ++i) s += std::fabs(a[i] - b[i]);
  return s * a.grid.dx();
}

FaceField midpoint_flux(const FaceField& a, const FaceField& b) {
  FaceField m(a.grid);
  for (int i = 0; i < a.n(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return m;
}

double continuity_residual(const CellPath& rho, const FacePath& j) {
  if (rho.slices.empty() || j.slices.empty())
    throw std::invalid_argument("continuity_residual: empty path");
  if (rho.slices.size() != j.slices.size() ||
      rho.front().grid != j.front().grid || rho.t_final != j.t_final)
    throw std::invalid_argument("continuity_residual: mismatched discretizations");
  const double dt = rho.dt();
  double worst = 0.0;
  for (int k = 0; k + 1 <= rho.n_steps(); ++k) {
    const CellField d = divergence(midpoint_flux(j[k], j[k + 1]));
    const CellField& a = rho[k];
    const CellField& b = rho[k + 1];
    for (int i = 0; i < a.n(); ++i)
      worst = std::max(worst, std::fabs((b[i] - a[i]) / dt + d[i]));
  }
  return worst;
}

FacePath node_currents_from_interval_fluxes(const std::vector<FaceField>& G,
                                            const std::vector<FaceField>& guess,
                                            double t_final) {
  if (G.empty() || guess.size() != G.size() + 1)
    throw std::invalid_argument("node_currents: need K interval fluxes and K+1 guesses");
  const int K = static_cast<int>(G.size());
  const Grid& g = G[0].grid;
  std::vector<FaceField> u(K + 1, FaceField(g));
  u[0] = guess[0];
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < g.n_cells; ++i)
      u[k + 1][i] = 2.0 * G[k][i] - u[k][i];
  // Least-squares amplitude of the (-1)^k mode in (u - guess), removed per
  // face. The mode is in the null space of interval averaging, so the
  // midpoint identities are untouched.
  for (int i = 0; i < g.n_cells; ++i) {
    double e = 0.0;
    for (int k = 0; k <= K; ++k) {
      const double s = (k % 2 == 0) ? 1.0 : -1.0;
      e += s * (u[k][i] - guess[k][i]);
    }
    e /= (K + 1);
    for (int k = 0; k <= K; ++k) {
      const double s = (k % 2 == 0) ? 1.0 : -1.0;
      u[k][i] -= s * e;
    }
  }
  return FacePath(t_final, std::move(u));
}

CellPath reversed_in_time(const CellPath& p) {
  CellPath r = p;
  std::reverse(r.slices.begin(), r.slices.end());
  return r;
}

FacePath reversed_in_time(const FacePath& p) {
  FacePath r = p;
  std::reverse(r.slices.begin(), r.slices.end());
  return r;
}

}  // namespace hydroschro
