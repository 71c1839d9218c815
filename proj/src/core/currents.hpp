#pragma once

#include <cstdint>
#include <optional>

#include "core/bridge.hpp"

namespace hydroschro {

// Current-constrained Schrodinger problems. The control solver is
// discretize-then-optimize: explicit Euler forward states, controls E on the
// space-time face grid (one slab per time interval), exact adjoint gradients
// for the coded discrete objective, and an augmented Lagrangian for the
// time-averaged-current (and, for HSPDC, terminal-density) equality
// constraints.

enum class InitMode { deterministic, gibbs };

struct CurrentProblem {
  TransportModel model;
  Grid grid;
  double T = 1.0;
  int n_steps = 64;
  double J_bar = 0.0;  // divergence-free field in d = 1 is a constant
  double m = 1.0;      // mean density; total mass m L
  InitMode init_mode = InitMode::gibbs;
  std::optional<CellField> mu0, mu1;  // HSPDC endpoints

  int max_outer = 25;
  int max_inner = 4000;
  double grad_tol = 1e-8;
  double constraint_tol = 1e-8;
  double endpoint_tol = 1e-6;
  std::uint64_t seed = 0;
  int multistart = 1;
};

struct CurrentSolution {
  CellPath rho;
  FacePath j;
  FacePath E;
  double value_per_time = 0.0;  // (I_in + dynamical cost)/T at the optimum
  double i_in = 0.0;
  double u_bound = 0.0;  // U(J_bar) from the constant-profile strategy
  CellField u_profile;
  double gap = 0.0;  // u_bound - value_per_time, >= -tol for converged runs
  bool time_dependent = false;
  double constraint_error = 0.0;
  double endpoint_error = 0.0;
  bool converged = false;
  int iterations = 0;
  // HSPDC vector-potential pinning data: A_1 = A_0 - T J_bar
  std::optional<FaceField> A0, A1;
};

struct UofJResult {
  double value = 0.0;
  CellField rho_profile;
  bool converged = false;
  int iterations = 0;
};

// U(J) = inf over time-independent profiles with mass m L of
// (1/4) int |J + D_h(rho) rho'|^2 / sigma(rho) dx, projected gradient
// descent with multi-start.
UofJResult u_of_j(const TransportModel& model, double J_bar, double m, const Grid& grid,
                  std::uint64_t seed = 0, int multistart = 3);

CurrentSolution solve_hspc(const CurrentProblem& problem);
CurrentSolution solve_hspdc(const CurrentProblem& problem);

// ------------------------------------------------------------------
// Discrete objective used by the control solver, exposed so the adjoint can
// be validated against finite differences.
struct ControlObjective {
  TransportModel model;
  Grid grid;
  double T = 1.0;
  int n_steps = 16;
  double J_bar = 0.0;
  double m = 1.0;
  InitMode init_mode = InitMode::deterministic;
  std::optional<CellField> mu1;  // terminal equality target (HSPDC)
  std::vector<double> lambda_cur;  // per-face multipliers
  double mu_cur = 0.0;
  std::vector<double> kappa_end;  // per-cell multipliers
  double nu_end = 0.0;
};

struct ControlState {
  std::vector<CellField> rho;       // n_steps + 1 nodes
  std::vector<FaceField> flux;      // n_steps interval fluxes
  std::vector<double> constraint;   // per-face time-average minus J_bar
  std::vector<double> endpoint;     // per-cell terminal mismatch
  double objective = 0.0;
  double value_per_time = 0.0;      // objective without AL terms
  double i_in = 0.0;
};

ControlState control_forward(const ControlObjective& obj, const CellField& rho0,
                             const std::vector<FaceField>& E);
void control_gradient(const ControlObjective& obj, const ControlState& st,
                      const CellField& rho0, const std::vector<FaceField>& E,
                      CellField* grad_rho0, std::vector<FaceField>* grad_E);

// ------------------------------------------------------------------
// Vector-potential formulation.

// A_0 by the 1-D cumulative integral of rho_0 - m; A_{k+1} = A_k - dt (j_k+j_{k+1})/2,
// preserving div A_k = rho_k - m exactly.
FacePath potential_from_trajectory(const CellPath& rho, const FacePath& j, double m);

// Reconstructs (rho = div A + m, j = -dA/dt by centered differences) and
// evaluates rate_dyn on it; the shifted coefficients D~(u) = D(u+m) are the
// original ones composed with rho.
struct TrajectoryFromPotential {
  CellPath rho;
  FacePath j;
};
TrajectoryFromPotential trajectory_from_potential(const FacePath& A, double m);
double action_A(const TransportModel& model, const FacePath& A, double m);

// H(A,B) = int [sigma~(divA)|B|^2 - divA div(D~(divA) B)] dx; reduces to the
// scalar Hamiltonian when div A = rho - m and B = -grad H.
double hamiltonian_A(const TransportModel& model, const FaceField& A, const FaceField& B,
                     double m);

// Sup-norm centered residuals of the extended canonical system
//   dA/dt =  D~(divA) grad(divA) + 2 sigma~(divA) B
//   dB/dt = -grad[ D~(divA) divB - sigma~'(divA) |B|^2 ]
// (the momentum equation as generated by H(A,B); see notes in the repo docs).
std::pair<double, double> extended_canonical_residual(const TransportModel& model,
                                                      const FacePath& A, const FacePath& B,
                                                      double m);

FacePath conjugate_from_H(const CellPath& H);  // B = -grad H

// Time reversal of a current-constrained optimizer: hat E = grad f'(rho*) - E*,
// reversed drift from (rho*_{T-t}, hat E_{T-t}).
struct ReversedCurrentBridge {
  FacePath E_hat;       // forward time index
  DriftSpec reversed_drift;
};
ReversedCurrentBridge reverse_current_bridge(const TransportModel& model,
                                             const CellPath& rho, const FacePath& E);

}  // namespace hydroschro
