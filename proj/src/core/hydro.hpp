#pragma once

#include <optional>

#include "core/fields.hpp"
#include "core/models.hpp"

namespace hydroschro {

// Two time steppers. The explicit one is a two-stage (predictor/trapezoid)
// scheme under a diffusive CFL guard; the semi-implicit one is
// Crank-Nicolson with frozen-coefficient linearization iterated to a tight
// fixed point, usable at dt far above the CFL limit. Both store node
// currents so that (rho_{k+1}-rho_k)/dt + div((j_k+j_{k+1})/2) = 0 holds to
// rounding.
enum class Scheme { explicit_two_stage, semi_implicit_cn };

struct SolverOptions {
  Scheme scheme = Scheme::semi_implicit_cn;
  double cfl_safety = 0.95;
  int max_picard = 64;
  double picard_tol = 1e-14;
};

struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainExitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HydroTrajectory {
  CellPath rho;
  FacePath j;
};

// d rho/dt = div(D_h(rho) grad rho), j = -D_h grad rho at faces.
HydroTrajectory solve_nde(const TransportModel& model, const CellField& rho0,
                          double T, int n_steps, const SolverOptions& opt = {});

// d rho/dt = -div j with j = -D_h(rho) grad rho + 2 sigma(rho) E; E given at
// the time nodes (face coefficients by arithmetic mean of adjacent cells).
HydroTrajectory solve_perturbed(const TransportModel& model, const CellField& rho0,
                                const FacePath& E, const SolverOptions& opt = {});

// constitutive flux at one node
FaceField perturbed_flux(const TransportModel& model, const CellField& rho,
                         const FaceField* E);

// (1/4) int dt dx |j + D_h(rho) grad rho|^2 / sigma(rho), trapezoid in time,
// midpoint in space; 0/0 counts as 0, a positive numerator over vanishing
// sigma yields +infinity.
double rate_dyn(const TransportModel& model, const CellPath& rho, const FacePath& j);
double rate_dyn(const TransportModel& model, const HydroTrajectory& traj);

struct FieldFromCurrent {
  FaceField E;
  bool clamped = false;  // sigma fell below the clamp floor somewhere
};
FieldFromCurrent field_from_current(const TransportModel& model, const CellField& rho,
                                    const FaceField& j);

struct FieldPathFromCurrent {
  FacePath E;
  bool clamped = false;
};
FieldPathFromCurrent field_from_current(const TransportModel& model, const CellPath& rho,
                                        const FacePath& j);

// int dt dx sigma(rho) |E|^2
double rate_via_field(const TransportModel& model, const CellPath& rho, const FacePath& E);

// Girsanov form of the zero-range path cost:
// int dt dx [ j.E + grad(phi(rho)).E - phi(rho)|E|^2 ] with E recovered from
// the current. grad(phi(rho)) is discretized as D_face(rho) grad rho (chain
// rule with the same face means) so the identity with rate_dyn is exact on
// the grid. Requires a zero-range coefficient set (phi = sigma, phi' = D_h).
double entropy_zero_range(const TransportModel& zr_model, const CellPath& rho,
                          const FacePath& j);

constexpr double kSigmaClampFloor = 1e-10;  // field_from_current clamp
constexpr double kSigmaZero = 1e-12;        // rate functional 0/0 threshold
constexpr double kZeroNumeratorTol = 1e-9;

}  // namespace hydroschro
