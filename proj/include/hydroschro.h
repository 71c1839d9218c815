/* hydroschro - Schrodinger bridges for interacting particle systems in the
 * hydrodynamic regime: bridge/current solvers, exact transforms, lattice-gas
 * Monte Carlo, and a verification suite, behind a C API with opaque handles
 * and status codes. Rich configuration and results travel as JSON text;
 * strings returned through char** are heap-allocated and must be released
 * with hs_string_free.
 */
#ifndef HYDROSCHRO_H
#define HYDROSCHRO_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_ERR_INVALID_ARGUMENT = 1, /* bad config, precondition violation */
  HS_ERR_NOT_CONVERGED = 2,    /* solver returned a flagged best iterate */
  HS_ERR_VERIFICATION = 3,     /* verify suite reported failures */
  HS_ERR_DOMAIN = 4,           /* state left the model's density domain */
  HS_ERR_IO = 5,
  HS_ERR_INTERNAL = 6
} hs_status;

const char* hs_version(void);
/* thread-local message describing the last failing call */
const char* hs_last_error(void);
void hs_string_free(char* s);

/* ---------------------------------------------------------------- models */
typedef struct hs_model hs_model;

/* spec_json: {"type":"builtin","name":"independent|stirring|ssep|kmp"}
 *          | {"type":"zero_range","phi":{"type":"identity|power|poly2",...}}
 *          | {"type":"custom", "D_h":{...},"sigma":{...},["D_s":{...}],...}
 * Coefficient blocks: {"type":"power","c":..,"a":..},
 * {"type":"poly2","a":..,"b":..,"c":..} or
 * {"type":"table","rho":[...],"value":[...]} (piecewise cubic). */
hs_status hs_model_create(const char* spec_json, hs_model** out);
hs_status hs_model_einstein_residual(const hs_model* model, const double* rho,
                                     size_t n_samples, double* out);
/* D_h, sigma, D_s, f, f' at one density; null outputs are skipped.
 * has_Ds receives 0/1. */
hs_status hs_model_coefficients(const hs_model* model, double rho, double* D_h,
                                double* sigma, double* D_s, double* f, double* f_prime,
                                int* has_Ds);
void hs_model_free(hs_model* model);

/* ---------------------------------------------------------------- bridge */
typedef struct hs_bridge_solution hs_bridge_solution;

/* config: {"model":{...}, "grid":{"n":128,"length":1.0}, "T":0.1,
 *   "n_steps":200, "mu0":"1+0.3*cos(2*pi*x)"|{"csv":"path"}, "mu1":...,
 *   "scheme":"semi_implicit"|"explicit", "tol_endpoint":..,
 *   "tol_fixed_point":.., "max_iter":.., "theta0":.., "seed":..}
 * Returns HS_ERR_NOT_CONVERGED with a valid handle (best iterate) when the
 * sweep does not meet its tolerances. */
hs_status hs_bridge_solve(const char* config_json, hs_bridge_solution** out);
hs_status hs_bridge_value(const hs_bridge_solution* sol, double* out);
hs_status hs_bridge_shape(const hs_bridge_solution* sol, int* n_cells, int* n_steps);
/* copies time node `node` of the named field ("rho"|"H"|"j") into buf */
hs_status hs_bridge_field(const hs_bridge_solution* sol, const char* field, int node,
                          double* buf, size_t buf_len);
hs_status hs_bridge_diagnostics(const hs_bridge_solution* sol, char** json_out);
/* writes rho.csv, H.csv, j.csv, solution.json into dir */
hs_status hs_bridge_save(const hs_bridge_solution* sol, const char* dir);
void hs_bridge_free(hs_bridge_solution* sol);

/* --------------------------------------------------------------- currents */
typedef struct hs_current_solution hs_current_solution;

/* config: {"model":{...},"grid":{...},"T":..,"n_steps":..,"J_bar":..,
 *   "m":..,"init_mode":"gibbs"|"deterministic",["endpoints":true,
 *   "mu0":...,"mu1":...],"seed":..} */
hs_status hs_current_solve(const char* config_json, hs_current_solution** out);
hs_status hs_current_metrics(const hs_current_solution* sol, char** json_out);
void hs_current_free(hs_current_solution* sol);

hs_status hs_u_of_j(const char* model_json, double J_bar, double m, int n_cells,
                    double length, double* u_out);

/* ------------------------------------------------------------------ micro */
typedef struct hs_sim_record hs_sim_record;

/* config: {"kind":"independent_rw|zero_range|ssep|stirring",
 *   ["g":{"type":"k"|"power","a":..|"capped","cap":..}], "ell":..,
 *   "length":..,"T":..,"snapshots":..,"rho0":"expr","seed":..,"stream":..,
 *   ["tag_particle":true], ["drive_H_csv":"path"]} */
hs_status hs_simulate(const char* config_json, hs_sim_record** out);
hs_status hs_sim_metrics(const hs_sim_record* rec, char** json_out);
/* writes density.csv and current.csv (field CSV schema) into dir */
hs_status hs_sim_save(const hs_sim_record* rec, const char* dir);
void hs_sim_free(hs_sim_record* rec);

/* ------------------------------------------------- whole-run entry points */
/* These mirror the CLI subcommands: they run the operation, write outputs
 * under out_dir (unless null), append to the run log, and return a JSON
 * report. Non-convergence maps to HS_ERR_NOT_CONVERGED, verify failures to
 * HS_ERR_VERIFICATION. */
hs_status hs_run_bridge(const char* config_json, const char* out_dir, char** report_json);
hs_status hs_run_current(const char* config_json, const char* out_dir, char** report_json);
hs_status hs_run_simulate(const char* config_json, const char* out_dir, char** report_json);
hs_status hs_run_verify(const char* config_json, char** report_json);
hs_status hs_run_transform(const char* config_json, const char* out_dir, char** report_json);
hs_status hs_run_rate(const char* config_json, const char* out_dir, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* HYDROSCHRO_H */
