#include "core/runio.hpp"

#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "core/csvio.hpp"

namespace hydroschro {

namespace {

// Compact SHA-1 (FIPS 180-1), sufficient for content addressing.
struct Sha1 {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                        0xC3D2E1F0u};
  std::uint64_t total = 0;
  unsigned char buf[64];
  size_t fill = 0;

  static std::uint32_t rol(std::uint32_t x, int s) { return (x << s) | (x >> (32 - s)); }

  void block(const unsigned char* p) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 80; ++i)
      w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  void update(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    total += len;
    while (len > 0) {
      const size_t take = std::min(len, sizeof buf - fill);
      std::memcpy(buf + fill, p, take);
      fill += take;
      p += take;
      len -= take;
      if (fill == sizeof buf) {
        block(buf);
        fill = 0;
      }
    }
  }

  std::string hex() {
    const std::uint64_t bits = total * 8;
    unsigned char pad = 0x80;
    update(&pad, 1);
    const unsigned char zero = 0;
    while (fill != 56) update(&zero, 1);
    unsigned char lenbuf[8];
    for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(lenbuf, 8);
    char out[41];
    for (int i = 0; i < 5; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
    return std::string(out, 40);
  }
};

}  // namespace

std::string sha1_hex(const std::string& data) {
  Sha1 s;
  s.update(data.data(), data.size());
  return s.hex();
}

std::string content_hash(const std::string& content) {
  return sha1_hex("blob " + std::to_string(content.size()) + '\0' + content);
}

void append_run_log(const std::string& path, const std::string& op,
                    const nlohmann::json& config, const nlohmann::json& metrics,
                    const std::vector<std::string>& flags, double wall_time_s) {
  nlohmann::json rec;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  rec["timestamp"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now).count() / 1000.0;
  rec["op"] = op;
  rec["config_hash"] = content_hash(config.dump());
  rec["metrics"] = metrics;
  rec["flags"] = flags;
  rec["wall_time_s"] = wall_time_s;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open run log: " + path);
  out << rec.dump() << '\n';
}

void save_bridge_solution(const std::string& dir, const BridgeSolution& sol,
                          const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);
  write_csv(dir + "/rho.csv", sol.rho);
  write_csv(dir + "/H.csv", sol.H);
  write_csv(dir + "/j.csv", sol.j);
  nlohmann::json doc;
  doc["value"] = sol.value;
  doc["diagnostics"] = {{"iterations", sol.diagnostics.iterations},
                        {"converged", sol.diagnostics.converged},
                        {"endpoint_error", sol.diagnostics.endpoint_error},
                        {"fixed_point_change", sol.diagnostics.fixed_point_change},
                        {"canonical_residual_rho", sol.diagnostics.canonical_residual_rho},
                        {"canonical_residual_H", sol.diagnostics.canonical_residual_H},
                        {"hamiltonian_drift", sol.diagnostics.hamiltonian_drift},
                        {"theta_final", sol.diagnostics.theta_final}};
  doc["config"] = config_echo;
  {
    std::ifstream rho_in(dir + "/rho.csv");
    std::string rho_text((std::istreambuf_iterator<char>(rho_in)),
                         std::istreambuf_iterator<char>());
    doc["content_hash"] = content_hash(rho_text + config_echo.dump());
  }
  std::ofstream out(dir + "/solution.json");
  out << doc.dump(2) << '\n';
}

int env_thread_cap() {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int cap = hw > 0 ? hw : 1;
  if (const char* env = std::getenv("HYDROSCHRO_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return cap;
}

}  // namespace hydroschro
