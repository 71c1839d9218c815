#pragma once

#include <utility>

#include "core/hydro.hpp"

namespace hydroschro {

struct BridgeProblem {
  TransportModel model;
  Grid grid;
  double T = 0.1;
  int n_steps = 100;
  CellField mu0, mu1;  // endpoint densities, equal mass, strictly inside the domain
  double tol_endpoint = 1e-8;
  double tol_fixed_point = 1e-10;
  int max_iter = 600;
  double theta0 = 0.5;  // terminal-momentum damping
  SolverOptions solver;
  std::optional<CellPath> H_init;  // warm start / multistart seed
};

struct BridgeDiagnostics {
  int iterations = 0;
  bool converged = false;
  double endpoint_error = 0.0;
  double fixed_point_change = 0.0;
  double canonical_residual_rho = 0.0;
  double canonical_residual_H = 0.0;
  double hamiltonian_drift = 0.0;
  double theta_final = 0.0;
};

struct BridgeSolution {
  CellPath rho;
  CellPath H;
  FacePath j;
  double value = 0.0;  // V_T = rate_dyn(rho*, j*)
  BridgeDiagnostics diagnostics;
};

// Damped forward-backward sweep for the endpoint-constrained problem:
// integrate rho forward with drive E = grad H, update the terminal momentum
// H_T += theta [f'(mu1) - f'(rho_T)], integrate H backward, repeat. theta is
// halved (floor 1/64) whenever the endpoint error increases. The additive
// constant of H (the gauge freedom) is fixed by subtracting the space-time
// mean once per sweep. Non-convergence returns the best iterate, flagged.
BridgeSolution solve_hsp(const BridgeProblem& problem);

// Canonical two-point flow with rho(0) and H(T) prescribed (no endpoint
// matching); Picard iteration of the same sweeps.
struct CanonicalFlow {
  CellPath rho;
  CellPath H;
  FacePath j;
  int iterations = 0;
  bool converged = false;
};
CanonicalFlow canonical_flow(const TransportModel& model, const CellField& rho0,
                             const CellField& H_T, double T, int n_steps,
                             const SolverOptions& opt = {}, int max_iter = 200,
                             double tol = 1e-11);

// int dx [sigma(rho)|grad H|^2 - grad H . D_h(rho) grad rho]
double hamiltonian(const TransportModel& model, const CellField& rho, const CellField& H);

// max_t |H(t) - H(0)| / (1 + |H(0)|) along a trajectory
double hamiltonian_drift(const TransportModel& model, const CellPath& rho, const CellPath& H);

// Sup-norm residuals of the two canonical equations, centered differences at
// interior time nodes (independent of the solver's own stencil).
std::pair<double, double> canonical_residual(const TransportModel& model,
                                             const CellPath& rho, const CellPath& H);

// Generator data of the optimal path measure: diffusion D_s(rho_t), drift
// b = grad D_s(rho) + [D_s - D_h](grad rho)/rho + 2 (sigma/rho) grad H.
// The SDE form is dX = b dt + sqrt(2 D_s(rho)) dW.
struct DriftSpec {
  CellPath diffusion;
  FacePath drift;
};
DriftSpec optimal_drift(const TransportModel& model, const CellPath& rho, const CellPath& H);
DriftSpec optimal_drift(const TransportModel& model, const BridgeSolution& sol);

// Same generator data with a general (not necessarily gradient) field E in
// place of grad H.
DriftSpec drift_from_field(const TransportModel& model, const CellPath& rho,
                           const FacePath& E);

// Time reversal: hat H_t = f'(rho*_t) - H*_t (in the gauge where the
// reference profile has zero momentum), hat rho_t = rho*_{T-t}; the reversed
// drift uses (rho*_{T-t}, hat H_{T-t}).
struct ReversedBridge {
  CellPath rho_hat;  // reversed in time
  CellPath H_hat;    // forward time index
  DriftSpec reversed_drift;
  double dual_equation_residual = 0.0;  // backward dual equation, centered
};
ReversedBridge reverse_bridge(const TransportModel& model, const BridgeSolution& sol);

constexpr double kRhoFloor = 1e-8;  // positivity floor for drift construction

}  // namespace hydroschro
