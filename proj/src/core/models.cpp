#include "core/models.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace hydroschro {

using nlohmann::json;

void TransportModel::require_in_domain(double rho, const char* what) const {
  if (!contains(rho))
    throw std::domain_error(std::string(what) + ": density " + std::to_string(rho) +
                            " outside [" + std::to_string(rho_min) + ", " +
                            std::to_string(rho_max) + "] for model " + name);
}

void TransportModel::require_in_domain(const CellField& rho, const char* what) const {
  for (double x : rho.v) require_in_domain(x, what);
}

// ------------------------------------------------------------- spline

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const size_t n = x_.size();
  if (n < 3 || y_.size() != n)
    throw std::invalid_argument("spline: need >= 3 nodes and matching arrays");
  for (size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("spline: x not increasing");
  y2_.assign(n, 0.0);
  std::vector<double> u(n, 0.0);
  for (size_t i = 1; i + 1 < n; ++i) {
    const double sig = (x_[i] - x_[i - 1]) / (x_[i + 1] - x_[i - 1]);
    const double p = sig * y2_[i - 1] + 2.0;
    y2_[i] = (sig - 1.0) / p;
    u[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]) -
           (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
    u[i] = (6.0 * u[i] / (x_[i + 1] - x_[i - 1]) - sig * u[i - 1]) / p;
  }
  for (size_t k = n - 1; k-- > 0;) y2_[k] = y2_[k] * y2_[k + 1] + u[k];
}

double CubicSpline::eval(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  size_t hi = std::clamp<size_t>(it - x_.begin(), 1, x_.size() - 1);
  const size_t lo = hi - 1;
  const double h = x_[hi] - x_[lo];
  const double a = (x_[hi] - x) / h, b = (x - x_[lo]) / h;
  return a * y_[lo] + b * y_[hi] +
         ((a * a * a - a) * y2_[lo] + (b * b * b - b) * y2_[hi]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  size_t hi = std::clamp<size_t>(it - x_.begin(), 1, x_.size() - 1);
  const size_t lo = hi - 1;
  const double h = x_[hi] - x_[lo];
  const double a = (x_[hi] - x) / h, b = (x - x_[lo]) / h;
  return (y_[hi] - y_[lo]) / h +
         ((3.0 * b * b - 1.0) * y2_[hi] - (3.0 * a * a - 1.0) * y2_[lo]) * h / 6.0;
}

// --------------------------------------------------- numeric utilities

namespace {

// 16-point Gauss-Legendre on [-1, 1].
constexpr double kGlX[8] = {0.0950125098376374, 0.2816035507792589,
                            0.4580167776572274, 0.6178762444026438,
                            0.7554044083550030, 0.8656312023878318,
                            0.9445750230732326, 0.9894009349916499};
constexpr double kGlW[8] = {0.1894506104550685, 0.1826034150449236,
                            0.1691565193950025, 0.1495959888165767,
                            0.1246289712555339, 0.0951585116824928,
                            0.0622535239386479, 0.0271524594117541};

double gl_integrate(const ScalarFn& fn, double a, double b) {
  const double span = b - a;
  const int segs = std::max(2, static_cast<int>(std::ceil(std::fabs(span) / 0.25)));
  double total = 0.0;
  for (int s = 0; s < segs; ++s) {
    const double lo = a + span * s / segs;
    const double hi = a + span * (s + 1) / segs;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int i = 0; i < 8; ++i)
      acc += kGlW[i] * (fn(mid + half * kGlX[i]) + fn(mid - half * kGlX[i]));
    total += acc * half;
  }
  return total;
}

ScalarFn antiderivative_from(const ScalarFn& fp, double m_ref) {
  return [fp, m_ref](double rho) { return gl_integrate(fp, m_ref, rho); };
}

void validate_phi(const ZeroRangeSpec& spec) {
  if (std::fabs(spec.phi(0.0)) > 1e-12)
    throw std::invalid_argument("zero_range: phi(0) must be 0");
  double prev = 0.0;
  for (int i = 1; i <= 64; ++i) {
    const double r = 10.0 * i / 64.0;
    const double val = spec.phi(r);
    if (!(val > prev))
      throw std::invalid_argument("zero_range: phi must be strictly increasing");
    prev = val;
  }
}

}  // namespace

// ------------------------------------------------------------ builtins

ZeroRangeSpec zero_range_phi_identity() {
  return {"identity", [](double r) { return r; }, [](double) { return 1.0; }};
}

ZeroRangeSpec zero_range_phi_power(double c, double a) {
  if (!(c > 0.0) || !(a > 0.0))
    throw std::invalid_argument("zero_range power phi needs c > 0, a > 0");
  return {"power(c=" + std::to_string(c) + ",a=" + std::to_string(a) + ")",
          [c, a](double r) { return c * std::pow(r, a); },
          [c, a](double r) { return c * a * std::pow(r, a - 1.0); }};
}

ZeroRangeSpec zero_range_phi_poly2(double a2, double a1) {
  if (a2 < 0.0 || a1 < 0.0 || a2 + a1 <= 0.0)
    throw std::invalid_argument("zero_range poly2 phi needs a2, a1 >= 0, not both 0");
  return {"poly2(" + std::to_string(a2) + "," + std::to_string(a1) + ")",
          [a2, a1](double r) { return a2 * r * r + a1 * r; },
          [a2, a1](double r) { return 2.0 * a2 * r + a1; }};
}

TransportModel zero_range_model(const ZeroRangeSpec& spec, double m_ref) {
  validate_phi(spec);
  if (!(m_ref > 0.0)) throw std::invalid_argument("zero_range: m_ref must be > 0");
  TransportModel m;
  m.name = "zero_range[" + spec.label + "]";
  m.D_h = spec.phi_prime;
  m.sigma = spec.phi;
  m.sigma_prime = spec.phi_prime;
  const ScalarFn phi = spec.phi;
  const ScalarFn phip = spec.phi_prime;
  m.D_s = [phi, phip](double r) { return r > 1e-12 ? phi(r) / r : phip(0.0); };
  // f' = log(phi(rho)/phi(m_ref)) + 1; the constant makes phi = identity,
  // m_ref = 1 coincide with the independent-particle free energy rho log rho.
  const double log_phi_ref = std::log(phi(m_ref));
  m.f_prime = [phi, log_phi_ref](double r) { return std::log(phi(r)) - log_phi_ref + 1.0; };
  m.f = antiderivative_from(m.f_prime, m_ref);
  m.rho_min = 0.0;
  m.m_ref = m_ref;
  m.metadata["family"] = "zero_range";
  m.metadata["phi"] = spec.label;
  m.metadata["provenance"] = "paper";
  return m;
}

TransportModel builtin_model(const std::string& name) {
  TransportModel m;
  m.name = name;
  if (name == "independent") {
    m.D_h = [](double) { return 1.0; };
    m.sigma = [](double r) { return r; };
    m.sigma_prime = [](double) { return 1.0; };
    m.D_s = [](double) { return 1.0; };
    m.f = [](double r) { return r > 0.0 ? r * std::log(r) : 0.0; };
    m.f_prime = [](double r) { return std::log(r) + 1.0; };
    m.rho_min = 0.0;
    m.m_ref = 1.0;
    m.metadata["provenance"] = "paper";
  } else if (name == "stirring") {
    // density/current statistics coincide with ssep, tagged motion is free
    m.D_h = [](double) { return 1.0; };
    m.sigma = [](double r) { return r * (1.0 - r); };
    m.sigma_prime = [](double r) { return 1.0 - 2.0 * r; };
    m.D_s = [](double) { return 1.0; };
    m.f_prime = [](double r) { return std::log(r / (1.0 - r)); };
    m.f = [](double r) {
      auto term = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
      return term(r) + term(1.0 - r) + std::log(2.0);
    };
    m.rho_min = 0.0;
    m.rho_max = 1.0;
    m.m_ref = 0.5;
    m.metadata["provenance"] = "paper (D_h, D_s); literature (sigma)";
  } else if (name == "ssep") {
    m.D_h = [](double) { return 1.0; };
    m.sigma = [](double r) { return r * (1.0 - r); };
    m.sigma_prime = [](double r) { return 1.0 - 2.0 * r; };
    m.D_s = std::nullopt;  // no closed form; attach a table via model_with_Ds
    m.f_prime = [](double r) { return std::log(r / (1.0 - r)); };
    m.f = [](double r) {
      auto term = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
      return term(r) + term(1.0 - r) + std::log(2.0);
    };
    m.rho_min = 0.0;
    m.rho_max = 1.0;
    m.m_ref = 0.5;
    m.metadata["provenance"] = "literature (sigma)";
  } else if (name == "kmp") {
    m.D_h = [](double) { return 1.0; };
    m.sigma = [](double r) { return r * r; };
    m.sigma_prime = [](double r) { return 2.0 * r; };
    m.D_s = std::nullopt;
    // f'' = 1/rho^2 forced by the Einstein relation
    m.f_prime = [](double r) { return 1.0 - 1.0 / r; };
    m.f = [](double r) { return r - 1.0 - std::log(r); };
    m.rho_min = 0.0;
    m.m_ref = 1.0;
    m.metadata["provenance"] = "paper (sigma); f'' via Einstein relation";
  } else {
    throw std::invalid_argument("unknown builtin model: " + name);
  }
  return m;
}

TransportModel model_with_Ds(TransportModel model, const std::vector<double>& rho,
                             const std::vector<double>& Ds) {
  auto spline = std::make_shared<CubicSpline>(rho, Ds);
  model.D_s = [spline](double r) { return spline->eval(r); };
  model.metadata["D_s"] = "tabulated";
  return model;
}

// ---------------------------------------------------------- JSON load

namespace {

struct Coeff {
  ScalarFn fn, dfn;
};

Coeff coeff_from_json(const json& spec, const std::string& label) {
  const std::string type = spec.at("type").get<std::string>();
  if (type == "power") {
    const double c = spec.at("c").get<double>();
    const double a = spec.at("a").get<double>();
    return {[c, a](double r) { return c * std::pow(r, a); },
            [c, a](double r) { return a == 0.0 ? 0.0 : c * a * std::pow(r, a - 1.0); }};
  }
  if (type == "poly2") {
    const double a = spec.at("a").get<double>();
    const double b = spec.at("b").get<double>();
    const double c = spec.value("c", 0.0);
    return {[a, b, c](double r) { return a * r * r + b * r + c; },
            [a, b](double r) { return 2.0 * a * r + b; }};
  }
  if (type == "table") {
    auto spline = std::make_shared<CubicSpline>(
        spec.at("rho").get<std::vector<double>>(),
        spec.at("value").get<std::vector<double>>());
    return {[spline](double r) { return spline->eval(r); },
            [spline](double r) { return spline->derivative(r); }};
  }
  throw std::invalid_argument("coefficient '" + label + "': unknown type " + type);
}

}  // namespace

TransportModel model_from_json(const json& doc) {
  const std::string type = doc.value("type", "custom");
  if (type == "builtin") return builtin_model(doc.at("name").get<std::string>());
  if (type == "zero_range") {
    const json& phi = doc.at("phi");
    const std::string ptype = phi.at("type").get<std::string>();
    ZeroRangeSpec spec;
    if (ptype == "identity") spec = zero_range_phi_identity();
    else if (ptype == "power")
      spec = zero_range_phi_power(phi.value("c", 1.0), phi.at("a").get<double>());
    else if (ptype == "poly2")
      spec = zero_range_phi_poly2(phi.at("a").get<double>(), phi.value("b", 0.0));
    else
      throw std::invalid_argument("zero_range phi: unknown type " + ptype);
    return zero_range_model(spec, doc.value("m_ref", 1.0));
  }
  if (type != "custom") throw std::invalid_argument("model: unknown type " + type);

  TransportModel m;
  m.name = doc.value("name", "custom");
  const Coeff dh = coeff_from_json(doc.at("D_h"), "D_h");
  const Coeff sg = coeff_from_json(doc.at("sigma"), "sigma");
  m.D_h = dh.fn;
  m.sigma = sg.fn;
  m.sigma_prime = sg.dfn;
  if (doc.contains("D_s")) m.D_s = coeff_from_json(doc.at("D_s"), "D_s").fn;
  if (doc.contains("rho_domain")) {
    m.rho_min = doc.at("rho_domain").at(0).get<double>();
    m.rho_max = doc.at("rho_domain").at(1).get<double>();
  }
  m.m_ref = doc.value("m_ref", 1.0);
  if (doc.contains("f_prime")) {
    m.f_prime = coeff_from_json(doc.at("f_prime"), "f_prime").fn;
  } else {
    // Einstein relation as the definition: f'' = D_h / sigma
    const ScalarFn num = m.D_h, den = m.sigma;
    const ScalarFn fpp = [num, den](double r) { return num(r) / den(r); };
    const double m_ref = m.m_ref;
    m.f_prime = [fpp, m_ref](double r) { return gl_integrate(fpp, m_ref, r); };
  }
  m.f = antiderivative_from(m.f_prime, m.m_ref);
  m.metadata["provenance"] = "custom";
  return m;
}

TransportModel model_from_json_text(const std::string& text) {
  return model_from_json(json::parse(text));
}

// ----------------------------------------------------------- checks

double einstein_residual(const TransportModel& model,
                         const std::vector<double>& rho_samples) {
  double worst = 0.0;
  for (double rho : rho_samples) {
    model.require_in_domain(rho, "einstein_residual");
    // five-point centered stencil: the O(h^4) truncation admits an h large
    // enough to keep the rounding term eps |f'| sigma / h below 1e-10.
    // Near finite boundaries f' is typically log-singular with derivatives
    // scaling as dist^{-k}; h proportional to the boundary distance keeps
    // the truncation (h/dist)^4 scale-invariant.
    double h = 1e-3 * std::max(std::fabs(rho), 0.1);
    if (std::isfinite(model.rho_max)) h = std::min(h, 0.008 * (model.rho_max - rho));
    h = std::min(h, 0.008 * std::max(0.0, rho - model.rho_min));
    if (!(h > 0.0))
      throw std::domain_error("einstein_residual: sample on the domain boundary");
    const double fpp = (-model.f_prime(rho + 2 * h) + 8.0 * model.f_prime(rho + h) -
                        8.0 * model.f_prime(rho - h) + model.f_prime(rho - 2 * h)) /
                       (12.0 * h);
    worst = std::max(worst, std::fabs(model.D_h(rho) - fpp * model.sigma(rho)));
  }
  return worst;
}

double free_energy_difference(const TransportModel& model, const CellField& rho0,
                              double m) {
  model.require_in_domain(m, "free_energy_difference");
  model.require_in_domain(rho0, "free_energy_difference");
  const double fm = model.f(m);
  const double fpm = model.f_prime(m);
  CellField integrand(rho0.grid);
  for (int i = 0; i < rho0.n(); ++i)
    integrand[i] = model.f(rho0[i]) - fm - fpm * (rho0[i] - m);
  return cell_integral(integrand);
}

}  // namespace hydroschro
