#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "core/bridge.hpp"

namespace hydroschro {

// git-style content hash: SHA-1 of "blob <len>\0<content>", hex‑encoded.
std::string content_hash(const std::string& content);
std::string sha1_hex(const std::string& data);

// Append-only JSON-lines run log; one record per operation.
void append_run_log(const std::string& path, const std::string& op,
                    const nlohmann::json& config, const nlohmann::json& metrics,
                    const std::vector<std::string>& flags, double wall_time_s);

// BridgeSolution directory: rho.csv, H.csv, j.csv, solution.json (value,
// diagnostics, config echo, content hash). The config echo is the caller's
// effective configuration.
void save_bridge_solution(const std::string& dir, const BridgeSolution& sol,
                          const nlohmann::json& config_echo);

int env_thread_cap();

}  // namespace hydroschro
