#include "hydroschro.h"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/colehopf.hpp"
#include "core/csvio.hpp"
#include "core/currents.hpp"
#include "core/expr.hpp"
#include "core/micro.hpp"
#include "core/rng.hpp"
#include "core/runio.hpp"
#include "core/verify.hpp"

using nlohmann::json;
namespace hs = hydroschro;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class Fn>
hs_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const hs::StabilityError& e) {
    g_last_error = e.what();
    return HS_ERR_INVALID_ARGUMENT;
  } catch (const hs::DomainExitError& e) {
    g_last_error = e.what();
    return HS_ERR_DOMAIN;
  } catch (const std::domain_error& e) {
    g_last_error = e.what();
    return HS_ERR_DOMAIN;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return HS_ERR_INVALID_ARGUMENT;
  } catch (const json::exception& e) {
    g_last_error = std::string("config: ") + e.what();
    return HS_ERR_INVALID_ARGUMENT;
  } catch (const std::runtime_error& e) {
    g_last_error = e.what();
    return HS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HS_ERR_INTERNAL;
  }
}

// ------------------------------------------------------ config helpers

hs::Grid grid_from_json(const json& doc) {
  const json& g = doc.at("grid");
  return hs::make_grid(g.at("n").get<int>(), g.at("length").get<double>());
}

hs::CellField field_from_spec(const json& spec, const hs::Grid& grid) {
  if (spec.is_string()) {
    const hs::Expr e = hs::Expr::parse(spec.get<std::string>());
    return hs::make_cell_field(grid, [&](double x) { return e.eval(x); });
  }
  if (spec.is_object() && spec.contains("csv")) {
    const hs::CellPath p = hs::read_cell_path_csv(spec.at("csv").get<std::string>());
    if (p.front().grid.n_cells != grid.n_cells)
      throw std::invalid_argument("field csv resolution does not match the grid");
    hs::CellField c = p.front();
    c.grid = grid;
    return c;
  }
  throw std::invalid_argument("field spec must be an expression string or {\"csv\": path}");
}

hs::SolverOptions solver_from_json(const json& doc) {
  hs::SolverOptions opt;
  const std::string scheme = doc.value("scheme", "semi_implicit");
  if (scheme == "explicit") opt.scheme = hs::Scheme::explicit_two_stage;
  else if (scheme == "semi_implicit") opt.scheme = hs::Scheme::semi_implicit_cn;
  else throw std::invalid_argument("scheme must be 'explicit' or 'semi_implicit'");
  return opt;
}

hs::BridgeProblem bridge_problem_from_json(const json& doc) {
  hs::BridgeProblem p;
  p.model = hs::model_from_json(doc.at("model"));
  p.grid = grid_from_json(doc);
  p.T = doc.at("T").get<double>();
  p.n_steps = doc.at("n_steps").get<int>();
  p.mu0 = field_from_spec(doc.at("mu0"), p.grid);
  p.mu1 = field_from_spec(doc.at("mu1"), p.grid);
  p.tol_endpoint = doc.value("tol_endpoint", 1e-8);
  p.tol_fixed_point = doc.value("tol_fixed_point", 1e-10);
  p.max_iter = doc.value("max_iter", 600);
  p.theta0 = doc.value("theta0", 0.5);
  p.solver = solver_from_json(doc);
  return p;
}

hs::ZeroRangeRate rate_from_json(const json& doc) {
  hs::ZeroRangeRate rate;  // default g(k) = k
  if (!doc.contains("g")) return rate;
  const json& g = doc.at("g");
  const std::string type = g.at("type").get<std::string>();
  if (type == "k") return rate;
  if (type == "power") {
    const double a = g.at("a").get<double>();
    rate.label = "g(k)=k^" + std::to_string(a);
    rate.g = [a](int k) { return k == 0 ? 0.0 : std::pow(static_cast<double>(k), a); };
    return rate;
  }
  if (type == "capped") {
    const int cap = g.at("cap").get<int>();
    rate.label = "g(k)=min(k," + std::to_string(cap) + ")";
    rate.g = [cap](int k) { return static_cast<double>(std::min(k, cap)); };
    return rate;
  }
  throw std::invalid_argument("g: unknown type " + type);
}

json bridge_diag_json(const hs::BridgeSolution& sol) {
  return json{{"iterations", sol.diagnostics.iterations},
              {"converged", sol.diagnostics.converged},
              {"endpoint_error", sol.diagnostics.endpoint_error},
              {"fixed_point_change", sol.diagnostics.fixed_point_change},
              {"canonical_residual_rho", sol.diagnostics.canonical_residual_rho},
              {"canonical_residual_H", sol.diagnostics.canonical_residual_H},
              {"hamiltonian_drift", sol.diagnostics.hamiltonian_drift},
              {"theta_final", sol.diagnostics.theta_final},
              {"value", sol.value}};
}

json current_metrics_json(const hs::CurrentSolution& sol) {
  return json{{"value_per_time", sol.value_per_time},
              {"i_in", sol.i_in},
              {"u_bound", sol.u_bound},
              {"gap", sol.gap},
              {"time_dependent", sol.time_dependent},
              {"constraint_error", sol.constraint_error},
              {"endpoint_error", sol.endpoint_error},
              {"converged", sol.converged},
              {"iterations", sol.iterations}};
}

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void maybe_log(const char* out_dir, const std::string& op, const json& config,
               const json& metrics, const std::vector<std::string>& flags, double wall) {
  if (!out_dir) return;
  std::filesystem::create_directories(out_dir);
  hs::append_run_log(std::string(out_dir) + "/runlog.jsonl", op, config, metrics, flags,
                     wall);
}

}  // namespace

// ------------------------------------------------------------- basics

extern "C" const char* hs_version(void) { return "0.1.0"; }

extern "C" const char* hs_last_error(void) { return g_last_error.c_str(); }

extern "C" void hs_string_free(char* s) { std::free(s); }

// ------------------------------------------------------------- models

struct hs_model {
  hs::TransportModel model;
};

extern "C" hs_status hs_model_create(const char* spec_json, hs_model** out) {
  return guarded([&]() {
    if (!spec_json || !out) throw std::invalid_argument("null argument");
    auto handle = std::make_unique<hs_model>();
    handle->model = hs::model_from_json_text(spec_json);
    *out = handle.release();
    return HS_OK;
  });
}

extern "C" hs_status hs_model_einstein_residual(const hs_model* model, const double* rho,
                                                size_t n_samples, double* out) {
  return guarded([&]() {
    if (!model || !rho || !out) throw std::invalid_argument("null argument");
    *out = hs::einstein_residual(model->model, std::vector<double>(rho, rho + n_samples));
    return HS_OK;
  });
}

extern "C" hs_status hs_model_coefficients(const hs_model* model, double rho, double* D_h,
                                           double* sigma, double* D_s, double* f,
                                           double* f_prime, int* has_Ds) {
  return guarded([&]() {
    if (!model) throw std::invalid_argument("null model");
    const hs::TransportModel& m = model->model;
    if (D_h) *D_h = m.D_h(rho);
    if (sigma) *sigma = m.sigma(rho);
    if (has_Ds) *has_Ds = m.has_Ds() ? 1 : 0;
    if (D_s) *D_s = m.has_Ds() ? (*m.D_s)(rho) : 0.0;
    if (f) *f = m.f(rho);
    if (f_prime) *f_prime = m.f_prime(rho);
    return HS_OK;
  });
}

extern "C" void hs_model_free(hs_model* model) { delete model; }

// ------------------------------------------------------------- bridge

struct hs_bridge_solution {
  hs::BridgeSolution sol;
  json config;
};

extern "C" hs_status hs_bridge_solve(const char* config_json, hs_bridge_solution** out) {
  return guarded([&]() {
    if (!config_json || !out) throw std::invalid_argument("null argument");
    const json doc = json::parse(config_json);
    const hs::BridgeProblem p = bridge_problem_from_json(doc);
    auto handle = std::make_unique<hs_bridge_solution>();
    handle->sol = hs::solve_hsp(p);
    handle->config = doc;
    const bool ok = handle->sol.diagnostics.converged;
    *out = handle.release();
    if (!ok) {
      g_last_error = "bridge sweep did not converge; best iterate returned";
      return HS_ERR_NOT_CONVERGED;
    }
    return HS_OK;
  });
}

extern "C" hs_status hs_bridge_value(const hs_bridge_solution* sol, double* out) {
  return guarded([&]() {
    if (!sol || !out) throw std::invalid_argument("null argument");
    *out = sol->sol.value;
    return HS_OK;
  });
}

extern "C" hs_status hs_bridge_shape(const hs_bridge_solution* sol, int* n_cells,
                                     int* n_steps) {
  return guarded([&]() {
    if (!sol) throw std::invalid_argument("null argument");
    if (n_cells) *n_cells = sol->sol.rho.front().n();
    if (n_steps) *n_steps = sol->sol.rho.n_steps();
    return HS_OK;
  });
}

extern "C" hs_status hs_bridge_field(const hs_bridge_solution* sol, const char* field,
                                     int node, double* buf, size_t buf_len) {
  return guarded([&]() {
    if (!sol || !field || !buf) throw std::invalid_argument("null argument");
    const std::string name(field);
    const int K = sol->sol.rho.n_steps();
    if (node < 0 || node > K) throw std::invalid_argument("node out of range");
    const std::vector<double>* v = nullptr;
    if (name == "rho") v = &sol->sol.rho[node].v;
    else if (name == "H") v = &sol->sol.H[node].v;
    else if (name == "j") v = &sol->sol.j[node].v;
    else throw std::invalid_argument("field must be rho, H, or j");
    if (buf_len < v->size()) throw std::invalid_argument("buffer too small");
    std::memcpy(buf, v->data(), v->size() * sizeof(double));
    return HS_OK;
  });
}

extern "C" hs_status hs_bridge_diagnostics(const hs_bridge_solution* sol, char** json_out) {
  return guarded([&]() {
    if (!sol || !json_out) throw std::invalid_argument("null argument");
    *json_out = dup_string(bridge_diag_json(sol->sol).dump());
    return HS_OK;
  });
}

extern "C" hs_status hs_bridge_save(const hs_bridge_solution* sol, const char* dir) {
  return guarded([&]() {
    if (!sol || !dir) throw std::invalid_argument("null argument");
    hs::save_bridge_solution(dir, sol->sol, sol->config);
    return HS_OK;
  });
}

extern "C" void hs_bridge_free(hs_bridge_solution* sol) { delete sol; }

// ------------------------------------------------------------ currents

struct hs_current_solution {
  hs::CurrentSolution sol;
  json config;
};

namespace {

hs::CurrentProblem current_problem_from_json(const json& doc) {
  hs::CurrentProblem p;
  p.model = hs::model_from_json(doc.at("model"));
  p.grid = grid_from_json(doc);
  p.T = doc.at("T").get<double>();
  p.n_steps = doc.at("n_steps").get<int>();
  p.J_bar = doc.value("J_bar", 0.0);
  p.m = doc.value("m", 1.0);
  const std::string mode = doc.value("init_mode", "gibbs");
  if (mode == "gibbs") p.init_mode = hs::InitMode::gibbs;
  else if (mode == "deterministic") p.init_mode = hs::InitMode::deterministic;
  else throw std::invalid_argument("init_mode must be 'gibbs' or 'deterministic'");
  if (doc.contains("mu0")) p.mu0 = field_from_spec(doc.at("mu0"), p.grid);
  if (doc.contains("mu1")) p.mu1 = field_from_spec(doc.at("mu1"), p.grid);
  p.seed = doc.value("seed", 0ull);
  p.max_inner = doc.value("max_inner", 4000);
  p.max_outer = doc.value("max_outer", 25);
  return p;
}

}  // namespace

extern "C" hs_status hs_current_solve(const char* config_json, hs_current_solution** out) {
  return guarded([&]() {
    if (!config_json || !out) throw std::invalid_argument("null argument");
    const json doc = json::parse(config_json);
    const hs::CurrentProblem p = current_problem_from_json(doc);
    auto handle = std::make_unique<hs_current_solution>();
    handle->sol = doc.value("endpoints", false) ? hs::solve_hspdc(p) : hs::solve_hspc(p);
    handle->config = doc;
    const bool ok = handle->sol.converged;
    *out = handle.release();
    if (!ok) {
      g_last_error = "current solver did not meet its constraint tolerances";
      return HS_ERR_NOT_CONVERGED;
    }
    return HS_OK;
  });
}

extern "C" hs_status hs_current_metrics(const hs_current_solution* sol, char** json_out) {
  return guarded([&]() {
    if (!sol || !json_out) throw std::invalid_argument("null argument");
    *json_out = dup_string(current_metrics_json(sol->sol).dump());
    return HS_OK;
  });
}

extern "C" void hs_current_free(hs_current_solution* sol) { delete sol; }

extern "C" hs_status hs_u_of_j(const char* model_json, double J_bar, double m, int n_cells,
                               double length, double* u_out) {
  return guarded([&]() {
    if (!model_json || !u_out) throw std::invalid_argument("null argument");
    const hs::TransportModel model = hs::model_from_json_text(model_json);
    const hs::UofJResult r = hs::u_of_j(model, J_bar, m, hs::make_grid(n_cells, length));
    *u_out = r.value;
    return HS_OK;
  });
}

// --------------------------------------------------------------- micro

struct hs_sim_record {
  hs::EmpiricalRecord rec;
  json config;
};

namespace {

hs::SimConfig sim_config_from_json(const json& doc) {
  hs::SimConfig cfg;
  cfg.kind = hs::micro_model_from_string(doc.at("kind").get<std::string>());
  cfg.rate = rate_from_json(doc);
  cfg.ell = doc.at("ell").get<int>();
  cfg.length = doc.value("length", 1.0);
  cfg.T = doc.at("T").get<double>();
  cfg.n_snapshots = doc.value("snapshots", 8);
  cfg.seed = doc.value("seed", 0ull);
  cfg.stream = doc.value("stream", 0ull);
  cfg.tag_particle = doc.value("tag_particle", false);
  if (doc.contains("drive_H_csv"))
    cfg.drive = hs::DriveSpec{hs::read_cell_path_csv(doc.at("drive_H_csv").get<std::string>())};
  return cfg;
}

}  // namespace

extern "C" hs_status hs_simulate(const char* config_json, hs_sim_record** out) {
  return guarded([&]() {
    if (!config_json || !out) throw std::invalid_argument("null argument");
    const json doc = json::parse(config_json);
    const hs::SimConfig cfg = sim_config_from_json(doc);
    const hs::Grid g = hs::make_grid(cfg.ell, cfg.length);
    const hs::Expr expr = hs::Expr::parse(doc.value("rho0", "1"));
    const hs::CellField rho0 = hs::make_cell_field(g, [&](double x) { return expr.eval(x); });
    auto handle = std::make_unique<hs_sim_record>();
    handle->rec = hs::simulate(cfg, rho0);
    handle->config = doc;
    *out = handle.release();
    return HS_OK;
  });
}

extern "C" hs_status hs_sim_metrics(const hs_sim_record* rec, char** json_out) {
  return guarded([&]() {
    if (!rec || !json_out) throw std::invalid_argument("null argument");
    json m;
    m["total_events"] = rec->rec.total_events;
    m["total_jumps"] = rec->rec.total_jumps;
    m["continuity_violation"] = hs::record_continuity_violation(rec->rec);
    m["final_mass"] = hs::mass(rec->rec.density.back());
    *json_out = dup_string(m.dump());
    return HS_OK;
  });
}

extern "C" hs_status hs_sim_save(const hs_sim_record* rec, const char* dir) {
  return guarded([&]() {
    if (!rec || !dir) throw std::invalid_argument("null argument");
    std::filesystem::create_directories(dir);
    hs::write_csv(std::string(dir) + "/density.csv", rec->rec.density);
    hs::write_csv(std::string(dir) + "/current.csv", rec->rec.integrated_current);
    return HS_OK;
  });
}

extern "C" void hs_sim_free(hs_sim_record* rec) { delete rec; }

// ---------------------------------------------------- whole-run wrappers

extern "C" hs_status hs_run_bridge(const char* config_json, const char* out_dir,
                                   char** report_json) {
  return guarded([&]() {
    if (!config_json) throw std::invalid_argument("null config");
    Stopwatch clock;
    const json doc = json::parse(config_json);
    hs::BridgeProblem p = bridge_problem_from_json(doc);
    const int multistart = doc.value("multistart", 1);
    const std::uint64_t seed = doc.value("seed", 0ull);

    json starts = json::array();
    hs::BridgeSolution best;
    bool have = false;
    for (int s = 0; s < std::max(1, multistart); ++s) {
      if (s > 0) {
        hs::Philox rng(seed, s);
        hs::CellPath H(p.T, std::vector<hs::CellField>(p.n_steps + 1,
                                                       hs::CellField(p.grid, 0.0)));
        const double a = 0.05 * (2.0 * rng.next_unit() - 1.0);
        const double ph = 2.0 * M_PI * rng.next_unit();
        for (auto& slice : H.slices)
          for (int i = 0; i < p.grid.n_cells; ++i)
            slice[i] = a * std::cos(2.0 * M_PI * p.grid.cell_center(i) / p.grid.length + ph);
        p.H_init = std::move(H);
      } else {
        p.H_init.reset();
      }
      hs::BridgeSolution sol = hs::solve_hsp(p);
      starts.push_back({{"start", s},
                        {"value", sol.value},
                        {"endpoint_error", sol.diagnostics.endpoint_error},
                        {"converged", sol.diagnostics.converged}});
      if (!have || (sol.diagnostics.converged && sol.value < best.value)) {
        best = std::move(sol);
        have = true;
      }
    }

    json report;
    report["diagnostics"] = bridge_diag_json(best);
    report["value"] = best.value;
    report["starts"] = starts;
    report["mass"] = hs::mass(best.rho.front());
    report["continuity_residual"] = hs::continuity_residual(best.rho, best.j);

    if (doc.value("oracle", "") == std::string("colehopf")) {
      const hs::IndependentBridgeResult oracle = hs::solve_independent_bridge(
          p.mu0, p.mu1, p.T, p.n_steps);
      double dmax = 0.0;
      for (int k = 0; k <= p.n_steps; ++k)
        dmax = std::max(dmax, hs::max_abs_diff(best.rho[k], oracle.solution.rho[k]));
      report["oracle"] = {
          {"kind", "colehopf"},
          {"value", oracle.solution.value},
          {"max_density_discrepancy", dmax},
          {"relative_value_discrepancy",
           std::fabs(best.value - oracle.solution.value) / std::max(1e-300, oracle.solution.value)},
          {"marginal_error", oracle.marginal_error}};
    }

    if (out_dir) {
      hs::save_bridge_solution(std::string(out_dir) + "/bridge", best, doc);
      std::ofstream rj(std::string(out_dir) + "/bridge/report.json");
      rj << report.dump(2) << '\n';
    }
    std::vector<std::string> flags;
    if (!best.diagnostics.converged) flags.push_back("non_converged");
    maybe_log(out_dir, "bridge", doc, report["diagnostics"], flags, clock.seconds());
    if (report_json) *report_json = dup_string(report.dump());
    return best.diagnostics.converged ? HS_OK : HS_ERR_NOT_CONVERGED;
  });
}

extern "C" hs_status hs_run_current(const char* config_json, const char* out_dir,
                                    char** report_json) {
  return guarded([&]() {
    if (!config_json) throw std::invalid_argument("null config");
    Stopwatch clock;
    const json doc = json::parse(config_json);
    json report;
    bool all_ok = true;

    if (doc.contains("sweep")) {
      const auto jbars = doc.at("sweep").at("J_bar").get<std::vector<double>>();
      const auto Ts = doc.at("sweep").value("T", std::vector<double>{doc.at("T").get<double>()});
      json rows = json::array();
      std::vector<std::vector<double>> csv;
      for (double T : Ts)
        for (double jb : jbars) {
          json one = doc;
          one["J_bar"] = jb;
          one["T"] = T;
          one.erase("sweep");
          const hs::CurrentProblem p = current_problem_from_json(one);
          const hs::CurrentSolution sol =
              doc.value("endpoints", false) ? hs::solve_hspdc(p) : hs::solve_hspc(p);
          all_ok = all_ok && sol.converged;
          rows.push_back({{"J_bar", jb},
                          {"T", T},
                          {"value_per_time", sol.value_per_time},
                          {"u_bound", sol.u_bound},
                          {"gap", sol.gap},
                          {"time_dependent", sol.time_dependent},
                          {"converged", sol.converged}});
          csv.push_back({jb, T, sol.value_per_time, sol.u_bound, sol.gap,
                         sol.time_dependent ? 1.0 : 0.0});
        }
      report["sweep"] = rows;
      if (out_dir) {
        std::filesystem::create_directories(out_dir);
        std::ofstream f(std::string(out_dir) + "/sweep.csv");
        f << "J_bar,T,value_per_time,u_bound,gap,time_dependent\n";
        for (const auto& row : csv) {
          char line[200];
          std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", row[0],
                        row[1], row[2], row[3], row[4], static_cast<int>(row[5]));
          f << line;
        }
      }
    } else {
      const hs::CurrentProblem p = current_problem_from_json(doc);
      const hs::CurrentSolution sol =
          doc.value("endpoints", false) ? hs::solve_hspdc(p) : hs::solve_hspc(p);
      all_ok = sol.converged;
      report = current_metrics_json(sol);
      if (out_dir) {
        const std::string dir = std::string(out_dir) + "/current";
        std::filesystem::create_directories(dir);
        hs::write_csv(dir + "/rho.csv", sol.rho);
        hs::write_csv(dir + "/j.csv", sol.j);
        hs::write_csv(dir + "/E.csv", sol.E);
        if (sol.A0) {  // HSPDC vector-potential pinning data, A1 = A0 - T J_bar
          hs::write_csv(dir + "/A0.csv", hs::FacePath(0.0, {*sol.A0}));
          hs::write_csv(dir + "/A1.csv", hs::FacePath(0.0, {*sol.A1}));
        }
        std::ofstream f(dir + "/current.json");
        json full = report;
        full["config"] = doc;
        f << full.dump(2) << '\n';
      }
    }
    std::vector<std::string> flags;
    if (!all_ok) flags.push_back("non_converged");
    maybe_log(out_dir, "current", doc, report, flags, clock.seconds());
    if (report_json) *report_json = dup_string(report.dump());
    return all_ok ? HS_OK : HS_ERR_NOT_CONVERGED;
  });
}

extern "C" hs_status hs_run_simulate(const char* config_json, const char* out_dir,
                                     char** report_json) {
  return guarded([&]() {
    if (!config_json) throw std::invalid_argument("null config");
    Stopwatch clock;
    const json doc = json::parse(config_json);
    const std::string experiment = doc.value("experiment", "snapshots");
    json report;

    if (experiment == "snapshots") {
      const hs::SimConfig base = sim_config_from_json(doc);
      const hs::Grid g = hs::make_grid(base.ell, base.length);
      const hs::Expr expr = hs::Expr::parse(doc.value("rho0", "1"));
      const hs::CellField rho0 =
          hs::make_cell_field(g, [&](double x) { return expr.eval(x); });
      const int replicas = doc.value("replicas", 1);
      json reps = json::array();
      for (int r = 0; r < replicas; ++r) {
        hs::SimConfig cfg = base;
        cfg.stream = r;
        const hs::EmpiricalRecord rec = hs::simulate(cfg, rho0);
        reps.push_back({{"replica", r},
                        {"events", rec.total_events},
                        {"jumps", rec.total_jumps},
                        {"continuity_violation", hs::record_continuity_violation(rec)},
                        {"final_mass", hs::mass(rec.density.back())}});
        if (out_dir && r == 0) {
          const std::string dir = std::string(out_dir) + "/simulate";
          std::filesystem::create_directories(dir);
          hs::write_csv(dir + "/density.csv", rec.density);
          hs::write_csv(dir + "/current.csv", rec.integrated_current);
        }
      }
      report["replicas"] = reps;
      report["model"] = hs::to_string(base.kind);
      report["ell"] = base.ell;
      report["T"] = base.T;
      report["seed"] = base.seed;
    } else if (experiment == "lln") {
      const auto ells = doc.at("ells").get<std::vector<int>>();
      const int replicas = doc.value("replicas", 16);
      const hs::TransportModel model = hs::model_from_json(doc.at("model"));
      const hs::Expr expr = hs::Expr::parse(doc.value("rho0", "1"));
      json rows = json::array();
      double prev = std::numeric_limits<double>::infinity();
      bool monotone = true;
      for (int ell : ells) {
        hs::SimConfig cfg = sim_config_from_json(doc);
        cfg.ell = ell;
        const hs::Grid g = hs::make_grid(ell, cfg.length);
        const hs::CellField rho0 =
            hs::make_cell_field(g, [&](double x) { return expr.eval(x); });
        hs::CellField mean_final(g, 0.0);
        for (int r = 0; r < replicas; ++r) {
          cfg.stream = r;
          const hs::EmpiricalRecord rec = hs::simulate(cfg, rho0);
          for (int i = 0; i < g.n_cells; ++i)
            mean_final[i] += rec.density.back()[i] / replicas;
        }
        const int pde_steps = std::max(64, 8 * cfg.n_snapshots);
        const hs::HydroTrajectory pde = hs::solve_nde(model, rho0, cfg.T, pde_steps);
        int macro = 16;
        while (ell % macro != 0) macro /= 2;
        const double l1 = hs::l1_distance(hs::coarsen(mean_final, macro),
                                          hs::coarsen(pde.rho.back(), macro));
        rows.push_back({{"ell", ell}, {"l1_error", l1}, {"replicas", replicas}});
        monotone = monotone && l1 < prev;
        prev = l1;
      }
      report["lln"] = rows;
      report["monotone_decreasing"] = monotone;
    } else if (experiment == "driven_bridge") {
      const json bcfg = doc.at("bridge");
      const hs::BridgeProblem p = bridge_problem_from_json(bcfg);
      const hs::BridgeSolution bridge = hs::solve_hsp(p);
      const hs::TransportModel model = hs::model_from_json(bcfg.at("model"));
      const hs::DrivenBridgeReport rep = hs::driven_bridge_experiment(
          hs::micro_model_from_string(doc.at("kind").get<std::string>()),
          rate_from_json(doc), doc.at("ell").get<int>(), model, bridge,
          doc.value("replicas", 16), doc.value("seed", 0ull));
      report["endpoint_l1"] = rep.endpoint_l1;
      report["current_l1"] = rep.current_l1;
      report["replicas"] = rep.replicas;
      report["bridge_converged"] = bridge.diagnostics.converged;
    } else if (experiment == "tagged") {
      const hs::TaggedReport rep = hs::tagged_diffusion(
          hs::micro_model_from_string(doc.at("kind").get<std::string>()),
          rate_from_json(doc), doc.at("ell").get<int>(), doc.value("m", 1.0),
          doc.value("T_msd", 1.0), doc.value("replicas", 64), doc.value("seed", 0ull));
      report["Ds_estimate"] = rep.Ds_estimate;
      report["Ds_ci_half_width"] = rep.Ds_ci_half_width;
      report["msd_exponent"] = rep.msd_exponent;
      report["msd_exponent_ci"] = rep.msd_exponent_ci;
      report["subdiffusive"] = rep.subdiffusive;
      report["insufficient_stats"] = rep.insufficient_stats;
    } else {
      throw std::invalid_argument("unknown experiment: " + experiment);
    }

    maybe_log(out_dir, "simulate/" + experiment, doc, report, {}, clock.seconds());
    if (report_json) *report_json = dup_string(report.dump());
    return HS_OK;
  });
}

extern "C" hs_status hs_run_verify(const char* config_json, char** report_json) {
  return guarded([&]() {
    const json doc = config_json ? json::parse(config_json) : json::object();
    std::optional<hs::TransportModel> extra;
    if (doc.contains("model")) extra = hs::model_from_json(doc.at("model"));
    const hs::VerifyReport rep = hs::run_verification(extra, doc.value("refine", 1));
    json out;
    out["table"] = hs::format_table(rep);
    out["all_pass"] = rep.all_pass;
    json checks = json::array();
    for (const auto& c : rep.checks)
      checks.push_back({{"name", c.name},
                        {"value", c.value},
                        {"threshold", c.threshold},
                        {"pass", c.pass}});
    out["checks"] = checks;
    if (report_json) *report_json = dup_string(out.dump());
    return rep.all_pass ? HS_OK : HS_ERR_VERIFICATION;
  });
}

extern "C" hs_status hs_run_transform(const char* config_json, const char* out_dir,
                                      char** report_json) {
  return guarded([&]() {
    if (!config_json) throw std::invalid_argument("null config");
    Stopwatch clock;
    const json doc = json::parse(config_json);
    const std::string op = doc.at("op").get<std::string>();
    json report;

    if (op == "cole_hopf" || op == "akns") {
      hs::CellPath rho = hs::read_cell_path_csv(doc.at("rho_csv").get<std::string>());
      hs::CellPath H = hs::read_cell_path_csv(doc.at("H_csv").get<std::string>());
      hs::XiEtaPair pair;
      if (op == "cole_hopf") {
        pair.xi.t_final = rho.t_final;
        pair.eta.t_final = rho.t_final;
        for (size_t k = 0; k < rho.slices.size(); ++k) {
          auto [xi, eta] = hs::ch_forward(rho.slices[k], H.slices[k]);
          pair.xi.slices.push_back(std::move(xi));
          pair.eta.slices.push_back(std::move(eta));
        }
      } else {
        const hs::TransportModel model = hs::model_from_json(doc.at("model"));
        pair = hs::akns_transform(model, hs::as_line_window(rho), hs::as_line_window(H));
        auto [rx, re] = hs::akns_residual(pair);
        report["akns_residual_xi"] = rx;
        report["akns_residual_eta"] = re;
        report["akns_hamiltonian_drift"] =
            hs::akns_hamiltonian_drift(pair, hs::AknsHamiltonianKind::quadratic_mobility);
      }
      if (out_dir) {
        std::filesystem::create_directories(out_dir);
        hs::write_csv_multi(std::string(out_dir) + "/xi_eta.csv",
                            {{"xi", &pair.xi}, {"eta", &pair.eta}});
      }
    } else if (op == "cole_hopf_inverse") {
      hs::CellPath xi = hs::read_cell_path_csv(doc.at("xi_csv").get<std::string>());
      hs::CellPath eta = hs::read_cell_path_csv(doc.at("eta_csv").get<std::string>());
      hs::CellPath rho, H;
      rho.t_final = H.t_final = xi.t_final;
      for (size_t k = 0; k < xi.slices.size(); ++k) {
        auto [r, h] = hs::ch_inverse(xi.slices[k], eta.slices[k]);
        rho.slices.push_back(std::move(r));
        H.slices.push_back(std::move(h));
      }
      if (out_dir) {
        std::filesystem::create_directories(out_dir);
        hs::write_csv(std::string(out_dir) + "/rho.csv", rho);
        hs::write_csv(std::string(out_dir) + "/H.csv", H);
      }
    } else if (op == "sinkhorn") {
      const hs::Grid g = grid_from_json(doc);
      const hs::CellField mu0 = field_from_spec(doc.at("mu0"), g);
      const hs::CellField mu1 = field_from_spec(doc.at("mu1"), g);
      const hs::StaticPlan plan =
          hs::solve_static_sinkhorn(mu0, mu1, doc.at("T").get<double>());
      report["value"] = plan.value;
      report["value_stationary"] = plan.value_stationary;
      report["marginal_error"] = plan.marginal_error;
      report["iterations"] = plan.iterations;
      report["converged"] = plan.converged;
      if (out_dir) {
        std::filesystem::create_directories(out_dir);
        hs::write_matrix_csv(std::string(out_dir) + "/plan.csv", plan.coupling);
        hs::write_csv(std::string(out_dir) + "/potential_a.csv", plan.potential_a);
        hs::write_csv(std::string(out_dir) + "/potential_b.csv", plan.potential_b);
      }
      if (!plan.converged) {
        g_last_error = "sinkhorn hit its iteration cap";
        maybe_log(out_dir, "transform/sinkhorn", doc, report, {"non_converged"},
                  clock.seconds());
        if (report_json) *report_json = dup_string(report.dump());
        return HS_ERR_NOT_CONVERGED;
      }
    } else {
      throw std::invalid_argument(
          "transform op must be cole_hopf, cole_hopf_inverse, akns, or sinkhorn");
    }
    maybe_log(out_dir, "transform/" + op, doc, report, {}, clock.seconds());
    if (report_json) *report_json = dup_string(report.dump());
    return HS_OK;
  });
}

extern "C" hs_status hs_run_rate(const char* config_json, const char* out_dir,
                                 char** report_json) {
  return guarded([&]() {
    if (!config_json) throw std::invalid_argument("null config");
    Stopwatch clock;
    const json doc = json::parse(config_json);
    const hs::TransportModel model = hs::model_from_json(doc.at("model"));
    const hs::CellPath rho = hs::read_cell_path_csv(doc.at("rho_csv").get<std::string>());
    const hs::FacePath j = hs::read_face_path_csv(doc.at("j_csv").get<std::string>());

    json report;
    std::vector<std::string> flags;
    const double rd = hs::rate_dyn(model, rho, j);
    report["rate_dyn"] = rd;
    if (std::isinf(rd)) flags.push_back("infinite_rate");
    report["continuity_residual"] = hs::continuity_residual(rho, j);
    const auto ef = hs::field_from_current(model, rho, j);
    if (ef.clamped) flags.push_back("sigma_clamped");
    report["rate_via_field"] = hs::rate_via_field(model, rho, ef.E);
    const auto family = model.metadata.find("family");
    if ((family != model.metadata.end() && family->second == "zero_range") ||
        model.name == "independent")
      report["entropy_zero_range"] = hs::entropy_zero_range(model, rho, j);
    report["flags"] = flags;
    maybe_log(out_dir, "rate", doc, report, flags, clock.seconds());
    if (report_json) *report_json = dup_string(report.dump());
    return HS_OK;
  });
}
