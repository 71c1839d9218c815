// hydroschro command-line driver. All functionality goes through the C API
// in hydroschro.h; this file only parses flags, merges them into the JSON
// config, and maps statuses to exit codes (0 ok, 1 config error,
// 2 solver non-convergence, 3 verification failure).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hydroschro.h"

using nlohmann::json;

namespace {

int exit_code_for(hs_status st) {
  switch (st) {
    case HS_OK: return 0;
    case HS_ERR_NOT_CONVERGED: return 2;
    case HS_ERR_VERIFICATION: return 3;
    default: return 1;
  }
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  std::string oracle;
  int refine = 0;
  int replicas = 0;
};

void add_common(CLI::App* cmd, CommonFlags& fl, bool config_required = true) {
  auto* c = cmd->add_option("--config", fl.config_path, "JSON config file");
  if (config_required) c->required();
  cmd->add_option("--out", fl.out_dir, "output directory");
  cmd->add_option("--seed", fl.seed, "RNG seed override");
  cmd->add_option("--oracle", fl.oracle, "cross-check oracle (bridge: colehopf)");
  cmd->add_option("--refine", fl.refine, "refinement levels (verify)");
  cmd->add_option("--replicas", fl.replicas, "replica count override");
}

json load_config(const CommonFlags& fl) {
  json doc = json::object();
  if (!fl.config_path.empty()) {
    std::ifstream in(fl.config_path);
    if (!in) throw std::runtime_error("cannot open config: " + fl.config_path);
    in >> doc;
  }
  if (fl.seed >= 0) doc["seed"] = fl.seed;
  if (!fl.oracle.empty()) doc["oracle"] = fl.oracle;
  if (fl.refine > 0) doc["refine"] = fl.refine;
  if (fl.replicas > 0) doc["replicas"] = fl.replicas;
  return doc;
}

int finish(hs_status st, char* report) {
  if (report) {
    std::cout << report << std::endl;
    hs_string_free(report);
  }
  if (st != HS_OK) std::cerr << "error: " << hs_last_error() << std::endl;
  return exit_code_for(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hydroschro: Schrodinger bridges for interacting particle systems"};
  app.require_subcommand(1);

  CommonFlags fl_bridge, fl_current, fl_sim, fl_verify, fl_transform, fl_rate;
  auto* cmd_bridge = app.add_subcommand("bridge", "endpoint-constrained bridge solve");
  add_common(cmd_bridge, fl_bridge);
  auto* cmd_current = app.add_subcommand("current", "current-constrained solve / sweep");
  add_common(cmd_current, fl_current);
  auto* cmd_sim = app.add_subcommand("simulate", "lattice-gas Monte Carlo experiments");
  add_common(cmd_sim, fl_sim);
  auto* cmd_verify = app.add_subcommand("verify", "invariant verification suite");
  add_common(cmd_verify, fl_verify, /*config_required=*/false);
  auto* cmd_transform = app.add_subcommand("transform", "Cole-Hopf / AKNS utilities");
  add_common(cmd_transform, fl_transform);
  auto* cmd_rate = app.add_subcommand("rate", "rate functionals on CSV trajectories");
  add_common(cmd_rate, fl_rate);

  CLI11_PARSE(app, argc, argv);

  try {
    char* report = nullptr;
    if (cmd_bridge->parsed()) {
      const json doc = load_config(fl_bridge);
      const char* out = fl_bridge.out_dir.empty() ? nullptr : fl_bridge.out_dir.c_str();
      const hs_status st = hs_run_bridge(doc.dump().c_str(), out, &report);
      return finish(st, report);
    }
    if (cmd_current->parsed()) {
      const json doc = load_config(fl_current);
      const char* out = fl_current.out_dir.empty() ? nullptr : fl_current.out_dir.c_str();
      const hs_status st = hs_run_current(doc.dump().c_str(), out, &report);
      return finish(st, report);
    }
    if (cmd_sim->parsed()) {
      const json doc = load_config(fl_sim);
      const char* out = fl_sim.out_dir.empty() ? nullptr : fl_sim.out_dir.c_str();
      const hs_status st = hs_run_simulate(doc.dump().c_str(), out, &report);
      return finish(st, report);
    }
    if (cmd_verify->parsed()) {
      const json doc = load_config(fl_verify);
      char* rep = nullptr;
      const hs_status st = hs_run_verify(doc.dump().c_str(), &rep);
      if (rep) {
        const json parsed = json::parse(rep);
        std::cout << parsed.value("table", std::string{});
        hs_string_free(rep);
      }
      if (st != HS_OK && st != HS_ERR_VERIFICATION)
        std::cerr << "error: " << hs_last_error() << std::endl;
      return exit_code_for(st);
    }
    if (cmd_transform->parsed()) {
      const json doc = load_config(fl_transform);
      const char* out = fl_transform.out_dir.empty() ? nullptr : fl_transform.out_dir.c_str();
      const hs_status st = hs_run_transform(doc.dump().c_str(), out, &report);
      return finish(st, report);
    }
    if (cmd_rate->parsed()) {
      const json doc = load_config(fl_rate);
      const char* out = fl_rate.out_dir.empty() ? nullptr : fl_rate.out_dir.c_str();
      const hs_status st = hs_run_rate(doc.dump().c_str(), out, &report);
      return finish(st, report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
