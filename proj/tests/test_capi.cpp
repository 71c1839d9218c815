// Exercises the shared-library surface exactly as an external C client
// would: opaque handles, status codes, JSON config in, JSON metrics out.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "hydroschro.h"

static int failures = 0;

#define REQUIRE_MSG(cond, msg)                                     \
  do {                                                             \
    if (!(cond)) {                                                 \
      std::printf("[FAIL] %s:%d: %s\n", __FILE__, __LINE__, msg);  \
      ++failures;                                                  \
    }                                                              \
  } while (0)

static void test_model_roundtrip() {
  hs_model* model = nullptr;
  REQUIRE_MSG(hs_model_create(R"json({"type":"builtin","name":"independent"})json", &model) == HS_OK,
              "builtin model creation");
  double dh = 0, sg = 0, ds = 0, f = 0, fp = 0;
  int has_ds = 0;
  REQUIRE_MSG(hs_model_coefficients(model, 2.0, &dh, &sg, &ds, &f, &fp, &has_ds) == HS_OK,
              "coefficients call");
  REQUIRE_MSG(dh == 1.0 && std::fabs(sg - 2.0) < 1e-14, "independent coefficients");
  REQUIRE_MSG(has_ds == 1 && ds == 1.0, "D_s present");
  REQUIRE_MSG(std::fabs(f - 2.0 * std::log(2.0)) < 1e-12, "free energy value");
  double res = 0;
  const double samples[3] = {0.5, 1.0, 2.0};
  REQUIRE_MSG(hs_model_einstein_residual(model, samples, 3, &res) == HS_OK, "einstein call");
  REQUIRE_MSG(res <= 1e-10, "einstein residual small");
  hs_model_free(model);

  hs_model* bad = nullptr;
  REQUIRE_MSG(hs_model_create(R"json({"type":"builtin","name":"nope"})json", &bad) ==
                  HS_ERR_INVALID_ARGUMENT,
              "unknown builtin maps to invalid-argument");
  REQUIRE_MSG(std::strlen(hs_last_error()) > 0, "error message populated");
}

static void test_bridge_solution() {
  const char* cfg = R"json({
    "model": {"type":"builtin","name":"independent"},
    "grid": {"n": 48, "length": 1.0},
    "T": 0.05, "n_steps": 60,
    "mu0": "1 + 0.2*cos(2*pi*x)",
    "mu1": "1 - 0.2*cos(2*pi*x)"
  })json";
  hs_bridge_solution* sol = nullptr;
  REQUIRE_MSG(hs_bridge_solve(cfg, &sol) == HS_OK, "bridge solve converges");
  double value = 0;
  REQUIRE_MSG(hs_bridge_value(sol, &value) == HS_OK && value > 0, "positive value");
  int n = 0, K = 0;
  REQUIRE_MSG(hs_bridge_shape(sol, &n, &K) == HS_OK && n == 48 && K == 60, "shape");
  double buf[48];
  REQUIRE_MSG(hs_bridge_field(sol, "rho", 0, buf, 48) == HS_OK, "field copy");
  REQUIRE_MSG(std::fabs(buf[0] - (1.0 + 0.2 * std::cos(2 * M_PI * 0.5 / 48))) < 1e-12,
              "initial density pinned");
  REQUIRE_MSG(hs_bridge_field(sol, "nope", 0, buf, 48) == HS_ERR_INVALID_ARGUMENT,
              "unknown field rejected");
  char* diag = nullptr;
  REQUIRE_MSG(hs_bridge_diagnostics(sol, &diag) == HS_OK, "diagnostics json");
  REQUIRE_MSG(diag && std::strstr(diag, "\"converged\":true"), "converged flag in json");
  hs_string_free(diag);
  REQUIRE_MSG(hs_bridge_save(sol, "/tmp/hydroschro_capi_bridge") == HS_OK, "save");
  hs_bridge_free(sol);

  // infeasible config: unequal masses -> invalid argument
  const char* bad_cfg = R"json({
    "model": {"type":"builtin","name":"independent"},
    "grid": {"n": 48, "length": 1.0},
    "T": 0.05, "n_steps": 60,
    "mu0": "1 + 0.2*cos(2*pi*x)",
    "mu1": "1.5"
  })json";
  hs_bridge_solution* none = nullptr;
  REQUIRE_MSG(hs_bridge_solve(bad_cfg, &none) == HS_ERR_INVALID_ARGUMENT,
              "unequal masses rejected");
}

static void test_u_of_j_and_simulate() {
  double u = 0;
  REQUIRE_MSG(hs_u_of_j(R"json({"type":"builtin","name":"independent"})json", 2.0, 1.0, 32, 1.0,
                        &u) == HS_OK,
              "u_of_j call");
  REQUIRE_MSG(std::fabs(u - 1.0) <= 1e-6, "U(2) = 1 for independent at m = 1");

  const char* sim_cfg = R"json({
    "kind": "zero_range", "ell": 32, "T": 0.02, "snapshots": 4,
    "rho0": "1 + 0.3*cos(2*pi*x)", "seed": 9
  })json";
  hs_sim_record* rec = nullptr;
  REQUIRE_MSG(hs_simulate(sim_cfg, &rec) == HS_OK, "simulate");
  char* metrics = nullptr;
  REQUIRE_MSG(hs_sim_metrics(rec, &metrics) == HS_OK, "sim metrics");
  REQUIRE_MSG(metrics && std::strstr(metrics, "\"continuity_violation\":0.0"),
              "exact bookkeeping");
  hs_string_free(metrics);
  REQUIRE_MSG(hs_sim_save(rec, "/tmp/hydroschro_capi_sim") == HS_OK, "sim save");
  hs_sim_free(rec);
}

static void test_run_verify() {
  char* report = nullptr;
  REQUIRE_MSG(hs_run_verify(R"json({"refine":1})json", &report) == HS_OK, "verify passes");
  REQUIRE_MSG(report && std::strstr(report, "\"all_pass\":true"), "all_pass true");
  hs_string_free(report);

  // corrupted custom model: D_h doubled against sigma/f''
  const char* bad = R"json({
    "refine": 1,
    "model": {"type":"custom","name":"corrupted",
      "rho_domain": [0.01, 10.0],
      "D_h": {"type":"poly2","a":0,"b":0,"c":2.0},
      "sigma": {"type":"power","c":1.0,"a":1.0},
      "f_prime": {"type":"table",
        "rho":[0.01,0.5,1.0,1.5,2.0,3.0,5.0,10.0],
        "value":[-4.6052,-0.6931,0.0,0.4055,0.6931,1.0986,1.6094,2.3026]}}
  })json";
  report = nullptr;
  REQUIRE_MSG(hs_run_verify(bad, &report) == HS_ERR_VERIFICATION,
              "corrupted model fails verification");
  REQUIRE_MSG(report && std::strstr(report, "\"all_pass\":false"), "all_pass false");
  hs_string_free(report);
}

int main() {
  std::printf("hydroschro C API %s\n", hs_version());
  test_model_roundtrip();
  test_bridge_solution();
  test_u_of_j_and_simulate();
  test_run_verify();
  if (failures == 0) {
    std::printf("capi tests: all passed\n");
    return 0;
  }
  std::printf("capi tests: %d failure(s)\n", failures);
  return 1;
}
