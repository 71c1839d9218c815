#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/fields.hpp"

namespace hydroschro {

using ScalarFn = std::function<double(double)>;

// Transport-coefficient set (D_h, sigma, D_s, f) for one particle system.
// Coefficients are plain scalar functions of the density; the Einstein
// relation D_h = f'' sigma ties them together and is checked by
// einstein_residual rather than enforced at construction.
struct TransportModel {
  std::string name;
  ScalarFn D_h;
  ScalarFn sigma;
  ScalarFn sigma_prime;
  ScalarFn f;        // free energy per unit volume, f(m_ref) = 0
  ScalarFn f_prime;
  std::optional<ScalarFn> D_s;  // absent when no closed form is known (ssep, kmp)

  double rho_min = 0.0;
  double rho_max = std::numeric_limits<double>::infinity();
  double m_ref = 1.0;  // reference density fixing the additive constant of f
  std::map<std::string, std::string> metadata;

  bool has_Ds() const { return D_s.has_value(); }
  bool contains(double rho) const { return rho >= rho_min && rho <= rho_max; }
  void require_in_domain(double rho, const char* what) const;
  void require_in_domain(const CellField& rho, const char* what) const;
  // Momentum gauge for the Born/time-reversal map: f'(rho) - f'(m_ref), zero
  // on the reference profile.
  double f_prime_gauged(double rho) const { return f_prime(rho) - f_prime(m_ref); }
};

// Zero-range jump-rate data through the fugacity function phi: coefficients
// D_h = phi', sigma = phi, D_s = phi(rho)/rho, f'' = phi'/phi.
struct ZeroRangeSpec {
  std::string label;
  ScalarFn phi;
  ScalarFn phi_prime;
};

ZeroRangeSpec zero_range_phi_identity();
ZeroRangeSpec zero_range_phi_power(double c, double a);     // phi = c rho^a
ZeroRangeSpec zero_range_phi_poly2(double a2, double a1);   // phi = a2 rho^2 + a1 rho

TransportModel zero_range_model(const ZeroRangeSpec& spec, double m_ref = 1.0);

// Builtins: independent | stirring | ssep | kmp. zero_range models come from
// zero_range_model; "zero_range" with a phi block is accepted by the JSON
// loader. SSEP has no closed-form D_s; attach a table with model_with_Ds
// before building bridge measures.
TransportModel builtin_model(const std::string& name);

TransportModel model_with_Ds(TransportModel model, const std::vector<double>& rho,
                             const std::vector<double>& Ds);

// JSON document: {"name":..., "rho_domain":[lo,hi], "m_ref":...,
//   "D_h"|"sigma"|"D_s"|"f_prime": {"type":"power","c":..,"a":..}
//                                | {"type":"poly2","a":..,"b":..,"c":..}
//                                | {"type":"table","rho":[..],"value":[..]}}
// or {"type":"builtin","name":...} / {"type":"zero_range","phi":{...}}.
// f is reconstructed by integrating f_prime (or D_h/sigma when f_prime is
// omitted); nothing is cross-validated at load so deliberately inconsistent
// models flow through to the Einstein check.
TransportModel model_from_json(const nlohmann::json& doc);
TransportModel model_from_json_text(const std::string& text);

// max over samples of |D_h - f'' sigma| with f'' from centered differencing
// of f_prime.
double einstein_residual(const TransportModel& model, const std::vector<double>& rho_samples);

// Gibbs initial-condition rate: integral of f(rho0) - f(m) - f'(m)(rho0 - m).
double free_energy_difference(const TransportModel& model, const CellField& rho0, double m);

// Natural cubic spline, exposed for coefficient tables.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);
  double eval(double x) const;
  double derivative(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, y2_;
};

}  // namespace hydroschro
