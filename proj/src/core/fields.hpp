#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydroschro {

// Staggered periodic 1-D grid: densities and momenta live at cell centers,
// currents and fields at cell faces. Face i sits between cell i and cell
// (i+1) mod n, at position (i+1)*dx.
enum class Boundary { periodic, line };

struct Grid {
  int n_cells = 0;
  double length = 0.0;
  Boundary boundary = Boundary::periodic;

  double dx() const { return length / n_cells; }
  double cell_center(int i) const { return (i + 0.5) * dx(); }
  double face_pos(int i) const { return (i + 1.0) * dx(); }
  bool operator==(const Grid&) const = default;
};

// n_cells >= 8, length > 0. Line mode holds boundary values fixed; only the
// AKNS transform accepts it.
Grid make_grid(int n_cells, double length, Boundary boundary = Boundary::periodic);

namespace detail {
template <class Derived>
struct GridVector {
  Grid grid;
  std::vector<double> v;

  GridVector() = default;
  GridVector(const Grid& g, double fill, int size) : grid(g), v(size, fill) {}

  int n() const { return static_cast<int>(v.size()); }
  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
};
}  // namespace detail

struct CellField : detail::GridVector<CellField> {
  CellField() = default;
  explicit CellField(const Grid& g, double fill = 0.0)
      : GridVector(g, fill, g.n_cells) {}
};

struct FaceField : detail::GridVector<FaceField> {
  FaceField() = default;
  explicit FaceField(const Grid& g, double fill = 0.0)
      : GridVector(g, fill, g.n_cells) {}
};

CellField make_cell_field(const Grid& g, const std::function<double(double)>& fn);
FaceField make_face_field(const Grid& g, const std::function<double(double)>& fn);

// Discrete calculus. grad and div are exact adjoints up to sign under the
// dx-weighted inner products, so div(grad(c)) is the 3-point Laplacian and
// the cell sum of any divergence telescopes to zero.
FaceField grad(const CellField& c);            // face i: (c[i+1]-c[i])/dx
CellField divergence(const FaceField& f);      // cell i: (f[i]-f[i-1])/dx
CellField laplacian(const CellField& c);

FaceField face_mean(const CellField& c);       // arithmetic mean of the two cells
CellField cell_mean(const FaceField& f);
CellField cell_mean_sq(const FaceField& f);    // mean of the squared adjacent faces

double cell_integral(const CellField& c);      // midpoint rule, sum * dx
double face_integral(const FaceField& f);
double mass(const CellField& rho, bool validate_nonnegative = true);

double max_abs(const CellField& c);
double max_abs(const FaceField& f);
double max_abs_diff(const CellField& a, const CellField& b);
double l1_distance(const CellField& a, const CellField& b);  // integral of |a-b|

template <class Field>
struct TimeSeries {
  double t_final = 0.0;
  std::vector<Field> slices;  // n_steps + 1 nodes, uniform dt

  TimeSeries() = default;
  TimeSeries(double T, std::vector<Field> s) : t_final(T), slices(std::move(s)) {}

  int n_steps() const { return static_cast<int>(slices.size()) - 1; }
  double dt() const { return t_final / n_steps(); }
  double node_time(int k) const { return t_final * k / n_steps(); }
  const Field& front() const { return slices.front(); }
  const Field& back() const { return slices.back(); }
  Field& operator[](int k) { return slices[k]; }
  const Field& operator[](int k) const { return slices[k]; }
};

using CellPath = TimeSeries<CellField>;
using FacePath = TimeSeries<FaceField>;

// Max over time intervals of ||(rho_{k+1}-rho_k)/dt + div((j_k+j_{k+1})/2)||_inf.
// Solvers construct j so this is zero up to rounding.
double continuity_residual(const CellPath& rho, const FacePath& j);

// Interval midpoint fluxes, (j[k]+j[k+1])/2, shared with the solvers and the
// residual above so both see bit-identical values.
FaceField midpoint_flux(const FaceField& a, const FaceField& b);

// Recover node currents j_0..j_K from interval fluxes G_0..G_{K-1} such that
// (j_k + j_{k+1})/2 == G_k exactly. The recursion j_{k+1} = 2 G_k - j_k has a
// (+-1)^k null mode; `guess` (a smooth candidate at every node, typically the
// constitutive flux) is used to project that mode out without disturbing the
// midpoint identities.
FacePath node_currents_from_interval_fluxes(const std::vector<FaceField>& G,
                                            const std::vector<FaceField>& guess,
                                            double t_final);

CellPath reversed_in_time(const CellPath& p);
FacePath reversed_in_time(const FacePath& p);

}  // namespace hydroschro
