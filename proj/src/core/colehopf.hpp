#pragma once

#include <utility>
#include <vector>

#include "core/bridge.hpp"

namespace hydroschro {

// Exact and symplectic machinery for the decoupled cases: Cole-Hopf
// variables and discrete heat flows for independent particles, the static
// Sinkhorn problem, and the generalized transform to the AKNS system for
// quadratic mobility.

struct XiEtaPair {
  CellPath xi;
  CellPath eta;
};

// xi = rho exp(-H), eta = exp(H), cellwise.
std::pair<CellField, CellField> ch_forward(const CellField& rho, const CellField& H);
std::pair<CellField, CellField> ch_inverse(const CellField& xi, const CellField& eta);

// Exact semigroup exp(t L) of the discrete 3-point Laplacian on a periodic
// grid, built as a circulant kernel from the DFT eigenvalues. Conserves the
// cell sum exactly (the kernel row is renormalized) and is positivity
// preserving.
class HeatSemigroup {
 public:
  HeatSemigroup(const Grid& grid, double t);
  CellField apply(const CellField& v) const;
  const std::vector<double>& kernel() const { return kernel_; }

 private:
  Grid grid_;
  std::vector<double> kernel_;
};

struct IndependentBridgeResult {
  BridgeSolution solution;
  CellPath xi;
  CellPath eta;
  double marginal_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Classical IPFP in Cole-Hopf variables: xi flows by the forward discrete
// heat semigroup, eta by the backward one (forward flow in reversed time
// index); the endpoint factors are alternately rescaled until the marginals
// match to `tol`. Returns rho = xi eta, H = log eta; the value is the
// control-form functional evaluated on (rho, grad H).
IndependentBridgeResult solve_independent_bridge(const CellField& mu0,
                                                 const CellField& mu1, double T,
                                                 int n_steps, double tol = 1e-10,
                                                 int max_iter = 5000);

// Continuum heat kernel on the torus for generator Laplacian (tagged
// diffusion coefficient 2): Fourier series with tail < 1e-14, image-sum
// fallback when T (2 pi / L)^2 < 0.05.
double torus_heat_kernel(double x, double t, double L);

struct StaticPlan {
  std::vector<std::vector<double>> coupling;  // cell masses, rows = mu0 cells
  CellField potential_a;  // coupling_ij = exp(a_i) K_ij exp(b_j)
  CellField potential_b;
  double value = 0.0;             // Ent(plan | mu0-initialized kernel), matches the dynamic value
  double value_stationary = 0.0;  // Ent(plan | stationary reference), = value + I_in(mu0)
  double marginal_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

StaticPlan solve_static_sinkhorn(const CellField& mu0, const CellField& mu1, double T,
                                 double tol = 1e-8, int max_iter = 20000);

// Generalized Cole-Hopf transform to AKNS variables on a line-mode grid
// (flat tails held fixed). Requires constant D_h, sigma' != 0 on the data,
// and sup deviation <= 1e-6 from a constant in the outer 10% of cells.
XiEtaPair akns_transform(const TransportModel& model, const CellPath& rho,
                         const CellPath& H);

// Sup-norm residuals of d_t xi = dxx xi - 2 eta xi^2 and
// d_t eta = -dxx eta + 2 xi eta^2, centered differences on interior nodes.
std::pair<double, double> akns_residual(const XiEtaPair& pair);

enum class AknsHamiltonianKind { quadratic_mobility, independent };

// quadratic: int (grad xi . grad eta - xi^2 eta^2) dx;
// independent: -int grad xi . grad eta dx.
double akns_hamiltonian(const CellField& xi, const CellField& eta,
                        AknsHamiltonianKind kind);
double akns_hamiltonian_drift(const XiEtaPair& pair, AknsHamiltonianKind kind);

// Re-tags a periodic path as a line-mode window (tails must already be flat).
CellPath as_line_window(const CellPath& p);

}  // namespace hydroschro
