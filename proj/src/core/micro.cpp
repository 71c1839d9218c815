#include "core/micro.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "core/rng.hpp"

namespace hydroschro {

MicroModel micro_model_from_string(const std::string& s) {
  if (s == "independent_rw") return MicroModel::independent_rw;
  if (s == "zero_range") return MicroModel::zero_range;
  if (s == "ssep") return MicroModel::ssep;
  if (s == "stirring") return MicroModel::stirring;
  throw std::invalid_argument("unknown micro model: " + s);
}

std::string to_string(MicroModel m) {
  switch (m) {
    case MicroModel::independent_rw: return "independent_rw";
    case MicroModel::zero_range: return "zero_range";
    case MicroModel::ssep: return "ssep";
    case MicroModel::stirring: return "stirring";
  }
  return "?";
}

namespace {

bool is_exclusion(MicroModel m) {
  return m == MicroModel::ssep || m == MicroModel::stirring;
}

void validate_rate(const ZeroRangeRate& rate) {
  if (rate.g(0) != 0.0)
    throw std::invalid_argument("zero_range rate: g(0) must be 0");
  double prev = 0.0;
  for (int k = 1; k <= 64; ++k) {
    const double v = rate.g(k);
    if (!(v > 0.0)) throw std::invalid_argument("zero_range rate: g(k) must be > 0 for k >= 1");
    if (v + 1e-12 < prev)
      throw std::invalid_argument("zero_range rate: g must be nondecreasing");
    prev = v;
  }
}

// grand-canonical mean occupation at fugacity phi (cutoff when the tail is
// negligible)
double zr_mean(const ZeroRangeRate& rate, double phi) {
  double weight = 1.0;  // phi^k / g(k)!
  double z = 1.0, num = 0.0;
  for (int k = 1; k <= 100000; ++k) {
    weight *= phi / rate.g(k);
    z += weight;
    num += k * weight;
    if (weight < 1e-18 * z && k > 4) break;
    if (!std::isfinite(z)) return std::numeric_limits<double>::infinity();
  }
  return num / z;
}

struct SiteSampler {
  std::vector<double> cdf;  // occupation distribution at one density
  int sample(Philox& rng) const {
    const double u = rng.next_unit();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(it - cdf.begin());
  }
};

SiteSampler zr_site_sampler(const ZeroRangeRate& rate, double rho) {
  SiteSampler s;
  if (rho <= 0.0) {
    s.cdf = {1.0};
    return s;
  }
  const double phi = zero_range_fugacity(rate, rho);
  std::vector<double> w = {1.0};
  double weight = 1.0, z = 1.0;
  for (int k = 1; k <= 100000; ++k) {
    weight *= phi / rate.g(k);
    w.push_back(weight);
    z += weight;
    if (weight < 1e-18 * z && k > 4) break;
  }
  double acc = 0.0;
  s.cdf.resize(w.size());
  for (size_t k = 0; k < w.size(); ++k) {
    acc += w[k] / z;
    s.cdf[k] = acc;
  }
  s.cdf.back() = 1.0;
  return s;
}

// Fenwick tree over site weights; supports point updates and sampling
// proportional to weight.
class Fenwick {
 public:
  explicit Fenwick(int n) : n_(n), tree_(n + 1, 0.0) {}
  void add(int i, double delta) {
    for (++i; i <= n_; i += i & -i) tree_[i] += delta;
  }
  double total() const { return prefix(n_); }
  // smallest i with prefix(i+1) > u
  int find(double u) const {
    int pos = 0;
    int mask = 1;
    while ((mask << 1) <= n_) mask <<= 1;
    for (; mask > 0; mask >>= 1) {
      const int next = pos + mask;
      if (next <= n_ && tree_[next] < u) {
        pos = next;
        u -= tree_[next];
      }
    }
    return pos;  // 0-based site
  }

 private:
  double prefix(int i) const {
    double s = 0.0;
    for (; i > 0; i -= i & -i) s += tree_[i];
    return s;
  }
  int n_;
  std::vector<double> tree_;
};

// Drive sampled on lattice site centers, linear in macroscopic time.
class DriveSampler {
 public:
  DriveSampler(const DriveSpec* drive, int ell, double length, double T)
      : ell_(ell) {
    if (!drive) return;
    active_ = true;
    const CellPath& H = drive->H;
    n_nodes_ = static_cast<int>(H.slices.size());
    t_final_ = H.t_final > 0.0 ? H.t_final : T;
    values_.assign(n_nodes_, std::vector<double>(ell, 0.0));
    const Grid& g = H.front().grid;
    for (int k = 0; k < n_nodes_; ++k)
      for (int x = 0; x < ell; ++x) {
        const double pos = (x + 0.5) * length / ell;
        values_[k][x] = interp_periodic(H[k], pos * g.length / length);
      }
    // global bound on neighbor differences, for thinning
    max_delta_ = 0.0;
    for (int k = 0; k < n_nodes_; ++k)
      for (int x = 0; x < ell; ++x)
        max_delta_ = std::max(max_delta_,
                              std::fabs(values_[k][(x + 1) % ell] - values_[k][x]));
  }

  bool active() const { return active_; }
  double bound() const { return active_ ? std::exp(max_delta_) * (1.0 + 1e-12) : 1.0; }

  // H at (macro time t, site x)
  double at(double t, int x) const {
    if (!active_) return 0.0;
    const double s = std::clamp(t / t_final_, 0.0, 1.0) * (n_nodes_ - 1);
    const int k = std::min(static_cast<int>(s), n_nodes_ - 2);
    const double w = s - k;
    return (1.0 - w) * values_[k][x] + w * values_[k + 1][x];
  }

 private:
  static double interp_periodic(const CellField& c, double x) {
    const int n = c.n();
    const double dx = c.grid.dx();
    double u = x / dx - 0.5;
    u -= std::floor(u / n) * n;
    const int i = static_cast<int>(std::floor(u)) % n;
    const double w = u - std::floor(u);
    return (1.0 - w) * c[i] + w * c[(i + 1) % n];
  }

  bool active_ = false;
  int ell_ = 0;
  int n_nodes_ = 0;
  double t_final_ = 1.0;
  double max_delta_ = 0.0;
  std::vector<std::vector<double>> values_;
};

struct Bookkeeping {
  std::vector<long long> crossings;  // per face
  long long events = 0;
  long long jumps = 0;
  int tag_site = -1;
  long long tag_unwrapped = 0;  // lattice units
};

}  // namespace

double zero_range_fugacity(const ZeroRangeRate& rate, double rho) {
  validate_rate(rate);
  if (rho <= 0.0) return 0.0;
  double hi = 1.0;
  while (zr_mean(rate, hi) < rho) {
    hi *= 2.0;
    if (hi > 1e12) throw std::domain_error("zero_range_fugacity: density unreachable");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (zr_mean(rate, mid) < rho) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

EmpiricalRecord simulate(const SimConfig& cfg, const CellField& rho0) {
  if (cfg.ell < 4) throw std::invalid_argument("simulate: ell must be >= 4");
  if (!(cfg.T > 0.0)) throw std::invalid_argument("simulate: T must be > 0");
  if (cfg.n_snapshots < 1) throw std::invalid_argument("simulate: need >= 1 snapshot");
  const int ell = cfg.ell;
  const double dxl = cfg.length / ell;
  const Grid lattice = make_grid(ell, cfg.length);

  const bool exclusion = is_exclusion(cfg.kind);
  ZeroRangeRate rate = cfg.rate;
  if (cfg.kind == MicroModel::independent_rw)
    rate = ZeroRangeRate{};  // g(k) = k
  if (!exclusion) validate_rate(rate);

  Philox rng(cfg.seed, cfg.stream);

  // site-wise initial sampling at the local density
  std::vector<int> eta(ell, 0);
  {
    // cache samplers per distinct density value (profiles are smooth, but
    // exact caching keeps this correct in general)
    for (int x = 0; x < ell; ++x) {
      const double pos = (x + 0.5) * dxl;
      // nearest-cell lookup of rho0 on its own grid
      const Grid& g0 = rho0.grid;
      double u = pos * g0.length / cfg.length / g0.dx() - 0.5;
      u -= std::floor(u / g0.n_cells) * g0.n_cells;
      const int i0 = static_cast<int>(std::floor(u + 0.5)) % g0.n_cells;
      const double local = rho0[i0];
      if (exclusion) {
        const double p = std::clamp(local, 0.0, 1.0);
        eta[x] = rng.next_unit() < p ? 1 : 0;
      } else {
        const SiteSampler s = zr_site_sampler(rate, std::max(0.0, local));
        eta[x] = s.sample(rng);
      }
    }
  }

  const DriveSampler drive(cfg.drive ? &*cfg.drive : nullptr, ell, cfg.length, cfg.T);
  const double B = drive.bound();

  Bookkeeping bk;
  bk.crossings.assign(ell, 0);
  if (cfg.tag_particle) {
    for (int x = 0; x < ell; ++x)
      if (eta[x] > 0) {
        bk.tag_site = x;
        break;
      }
    if (bk.tag_site < 0)
      throw std::invalid_argument("simulate: no particle to tag (empty lattice)");
  }

  EmpiricalRecord rec;
  rec.grid = lattice;
  rec.seed = cfg.seed;
  rec.stream = cfg.stream;
  rec.density.t_final = cfg.T;
  rec.integrated_current.t_final = cfg.T;

  auto snapshot = [&]() {
    CellField d(lattice);
    for (int x = 0; x < ell; ++x) d[x] = eta[x];
    rec.density.slices.push_back(std::move(d));
    FaceField q(lattice);
    for (int x = 0; x < ell; ++x) q[x] = bk.crossings[x] * dxl;
    rec.integrated_current.slices.push_back(std::move(q));
    if (cfg.tag_particle) rec.tagged_position.push_back(bk.tag_unwrapped * dxl);
  };
  snapshot();

  const double speedup = static_cast<double>(ell) * ell;  // diffusive scaling

  if (exclusion) {
    const double total_rate = speedup * ell * B;  // one bound-B clock per edge
    double t = 0.0;
    for (int s = 1; s <= cfg.n_snapshots; ++s) {
      const double t_snap = cfg.T * s / cfg.n_snapshots;
      for (;;) {
        const double dt = rng.exponential() / total_rate;
        if (t + dt > t_snap) {
          t = t_snap;
          break;
        }
        t += dt;
        ++bk.events;
        const int e = static_cast<int>(rng.next_below(ell));  // face e: cells e, e+1
        const int xl = e, xr = (e + 1) % ell;
        const double u = rng.next_unit();  // always consumed: keeps streams aligned
        const int state = eta[xl] * 2 + eta[xr];
        if (state == 2) {  // (1,0): move right with rate exp(+delta)
          const double delta = drive.active() ? drive.at(t, xr) - drive.at(t, xl) : 0.0;
          if (u < std::exp(delta) / B) {
            eta[xl] = 0;
            eta[xr] = 1;
            ++bk.crossings[e];
            ++bk.jumps;
            if (bk.tag_site == xl) {
              bk.tag_site = xr;
              ++bk.tag_unwrapped;
            }
          }
        } else if (state == 1) {  // (0,1): move left
          const double delta = drive.active() ? drive.at(t, xl) - drive.at(t, xr) : 0.0;
          if (u < std::exp(delta) / B) {
            eta[xr] = 0;
            eta[xl] = 1;
            --bk.crossings[e];
            ++bk.jumps;
            if (bk.tag_site == xr) {
              bk.tag_site = xl;
              --bk.tag_unwrapped;
            }
          }
        } else if (state == 3 && cfg.kind == MicroModel::stirring) {
          // label exchange; occupations and currents unchanged
          if (u < 1.0 / B) {
            if (bk.tag_site == xl) {
              bk.tag_site = xr;
              ++bk.tag_unwrapped;
            } else if (bk.tag_site == xr) {
              bk.tag_site = xl;
              --bk.tag_unwrapped;
            }
          }
        }
      }
      snapshot();
    }
  } else {
    Fenwick tree(ell);
    for (int x = 0; x < ell; ++x) tree.add(x, rate.g(eta[x]));
    double t = 0.0;
    for (int s = 1; s <= cfg.n_snapshots; ++s) {
      const double t_snap = cfg.T * s / cfg.n_snapshots;
      for (;;) {
        const double W = tree.total();
        if (W <= 0.0) {
          t = t_snap;
          break;
        }
        const double total_rate = speedup * 2.0 * W * B;
        const double dt = rng.exponential() / total_rate;
        if (t + dt > t_snap) {
          t = t_snap;
          break;
        }
        t += dt;
        ++bk.events;
        const int x = tree.find(rng.next_unit() * W);
        const bool right = (rng.next_u32() & 1u) != 0;
        const int y = right ? (x + 1) % ell : (x + ell - 1) % ell;
        if (drive.active() || B > 1.0) {
          const double delta = drive.active() ? drive.at(t, y) - drive.at(t, x) : 0.0;
          if (rng.next_unit() >= std::exp(delta) / B) continue;
        }
        const int eta_x_before = eta[x];
        tree.add(x, rate.g(eta[x] - 1) - rate.g(eta[x]));
        tree.add(y, rate.g(eta[y] + 1) - rate.g(eta[y]));
        --eta[x];
        ++eta[y];
        ++bk.jumps;
        const int face = right ? x : y;
        bk.crossings[face] += right ? 1 : -1;
        if (bk.tag_site == x) {
          // the tagged particle is one of eta_x_before exchangeable particles
          if (rng.next_unit() * eta_x_before < 1.0) {
            bk.tag_site = y;
            bk.tag_unwrapped += right ? 1 : -1;
          }
        }
      }
      snapshot();
    }
  }

  rec.total_events = bk.events;
  rec.total_jumps = bk.jumps;
  return rec;
}

CellField coarsen(const CellField& fine, int macro_cells) {
  const int n = fine.n();
  if (macro_cells < 1 || n % macro_cells != 0)
    throw std::invalid_argument("coarsen: macro_cells must divide the cell count");
  const int per = n / macro_cells;
  CellField out;
  out.grid = Grid{macro_cells, fine.grid.length, Boundary::periodic};
  out.v.assign(macro_cells, 0.0);
  for (int i = 0; i < macro_cells; ++i) {
    double acc = 0.0;
    for (int k = 0; k < per; ++k) acc += fine[i * per + k];
    out[i] = acc / per;
  }
  return out;
}

double record_continuity_violation(const EmpiricalRecord& rec) {
  const int S = rec.density.n_steps();
  const double dx = rec.grid.dx();
  double worst = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < rec.grid.n_cells; ++i) {
      const int il = (i + rec.grid.n_cells - 1) % rec.grid.n_cells;
      const double drho = rec.density[s + 1][i] - rec.density[s][i];
      const double dql = rec.integrated_current[s + 1][il] - rec.integrated_current[s][il];
      const double dqr = rec.integrated_current[s + 1][i] - rec.integrated_current[s][i];
      worst = std::max(worst, std::fabs(drho + (dqr - dql) / dx));
    }
  }
  return worst;
}

namespace {

CellField resample_to(const CellField& src, const Grid& dst) {
  CellField out(dst);
  for (int i = 0; i < dst.n_cells; ++i) {
    const double pos = dst.cell_center(i) * src.grid.length / dst.length;
    const int n = src.n();
    double u = pos / src.grid.dx() - 0.5;
    u -= std::floor(u / n) * n;
    const int k = static_cast<int>(std::floor(u)) % n;
    const double w = u - std::floor(u);
    out[i] = (1.0 - w) * src[k] + w * src[(k + 1) % n];
  }
  return out;
}

int thread_budget(int replicas);

template <class Fn>
void run_replicas(int replicas, Fn&& body) {
  const int threads = thread_budget(replicas);
  if (threads <= 1) {
    for (int r = 0; r < replicas; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int tth = 0; tth < threads; ++tth)
    pool.emplace_back([&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= replicas) return;
        body(r);
      }
    });
  for (auto& th : pool) th.join();
}

int thread_budget(int replicas) {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int cap = hw > 0 ? hw : 1;
  if (const char* env = std::getenv("HYDROSCHRO_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return std::min(cap, replicas);
}

}  // namespace

DrivenBridgeReport driven_bridge_experiment(MicroModel kind, const ZeroRangeRate& rate,
                                            int ell, const TransportModel& model,
                                            const BridgeSolution& bridge, int replicas,
                                            std::uint64_t seed) {
  if (kind == MicroModel::ssep)
    throw std::invalid_argument(
        "driven_bridge_experiment: ssep excluded (vanishing self-diffusion in d = 1)");
  // model/bridge compatibility: the simulator's mobility must match the
  // transport model the bridge was solved with
  {
    ZeroRangeRate eff = rate;
    if (kind == MicroModel::independent_rw) eff = ZeroRangeRate{};
    for (double rho : {0.5, 1.0, 1.5}) {
      double sigma_micro;
      if (is_exclusion(kind)) {
        if (rho > 1.0) continue;
        sigma_micro = rho * (1.0 - rho);
      } else {
        sigma_micro = zero_range_fugacity(eff, rho);
      }
      if (std::fabs(sigma_micro - model.sigma(rho)) > 1e-6 * std::max(1.0, sigma_micro))
        throw std::invalid_argument(
            "driven_bridge_experiment: bridge model does not match the microscopic dynamics");
    }
  }

  const Grid lattice = make_grid(ell, bridge.rho.front().grid.length);
  const CellField mu1_lat = resample_to(bridge.rho.back(), lattice);

  // target time-averaged current on lattice faces
  FaceField javg_lat(lattice);
  {
    const FacePath& j = bridge.j;
    const int K = j.n_steps();
    FaceField avg(j.front().grid, 0.0);
    for (int k = 0; k <= K; ++k) {
      const double w = (k == 0 || k == K) ? 0.5 : 1.0;
      for (int i = 0; i < avg.n(); ++i) avg[i] += w * j[k][i] / K;
    }
    for (int i = 0; i < ell; ++i) {
      const double pos = lattice.face_pos(i) * avg.grid.length / lattice.length;
      double u = pos / avg.grid.dx() - 1.0;
      u -= std::floor(u / avg.n()) * avg.n();
      const int k = static_cast<int>(std::floor(u)) % avg.n();
      const double w = u - std::floor(u);
      javg_lat[i] = (1.0 - w) * avg[k] + w * avg[(k + 1) % avg.n()];
    }
  }

  DrivenBridgeReport rep;
  rep.replicas = replicas;
  rep.lattice_grid = lattice;
  rep.endpoint_l1_per_replica.assign(replicas, 0.0);

  std::vector<CellField> finals(replicas, CellField(lattice));
  std::vector<FaceField> javgs(replicas, FaceField(lattice));
  const CellField rho0 = bridge.rho.front();
  const double T = bridge.rho.t_final;

  run_replicas(replicas, [&](int r) {
    SimConfig cfg;
    cfg.kind = kind;
    cfg.rate = rate;
    cfg.ell = ell;
    cfg.length = lattice.length;
    cfg.T = T;
    cfg.n_snapshots = 4;
    cfg.drive = DriveSpec{bridge.H};
    cfg.seed = seed;
    cfg.stream = static_cast<std::uint64_t>(r);
    const EmpiricalRecord rec = simulate(cfg, rho0);
    finals[r] = rec.density.back();
    for (int i = 0; i < ell; ++i)
      javgs[r][i] = rec.integrated_current.back()[i] / T;
    rep.endpoint_l1_per_replica[r] = l1_distance(finals[r], mu1_lat);
  });

  CellField mean_final(lattice, 0.0);
  FaceField mean_javg(lattice, 0.0);
  for (int r = 0; r < replicas; ++r) {
    for (int i = 0; i < ell; ++i) {
      mean_final[i] += finals[r][i] / replicas;
      mean_javg[i] += javgs[r][i] / replicas;
    }
  }
  rep.endpoint_l1_site = l1_distance(mean_final, mu1_lat);
  int macro = 16;
  while (ell % macro != 0) macro /= 2;
  rep.endpoint_l1 = l1_distance(coarsen(mean_final, macro), coarsen(mu1_lat, macro));
  double cur = 0.0;
  for (int i = 0; i < ell; ++i) cur += std::fabs(mean_javg[i] - javg_lat[i]) * lattice.dx();
  rep.current_l1 = cur;
  rep.mean_final_density = std::move(mean_final);
  return rep;
}

TaggedReport tagged_diffusion(MicroModel kind, const ZeroRangeRate& rate, int ell,
                              double m, double T_msd, int replicas, std::uint64_t seed) {
  if (replicas < 8) throw std::invalid_argument("tagged_diffusion: need >= 8 replicas");
  const int snaps = 32;
  const Grid lattice = make_grid(ell, 1.0);
  const CellField rho0(lattice, m);

  std::vector<std::vector<double>> disp(replicas);
  run_replicas(replicas, [&](int r) {
    SimConfig cfg;
    cfg.kind = kind;
    cfg.rate = rate;
    cfg.ell = ell;
    cfg.length = 1.0;
    cfg.T = T_msd;
    cfg.n_snapshots = snaps;
    cfg.seed = seed;
    cfg.stream = static_cast<std::uint64_t>(r);
    cfg.tag_particle = true;
    const EmpiricalRecord rec = simulate(cfg, rho0);
    disp[r] = rec.tagged_position;
  });

  TaggedReport rep;
  rep.replicas = replicas;
  rep.msd_times.resize(snaps);
  rep.msd_values.assign(snaps, 0.0);
  for (int s = 1; s <= snaps; ++s) {
    rep.msd_times[s - 1] = T_msd * s / snaps;
    for (int r = 0; r < replicas; ++r) {
      const double d = disp[r][s] - disp[r][0];
      rep.msd_values[s - 1] += d * d / replicas;
    }
  }

  // D_s as the through-origin slope of MSD(t)/2 over the diffusive window
  // [T/4, T]; the confidence interval comes from replica-block slopes.
  {
    const int blocks = 8;
    const int per = replicas / blocks;
    auto slope_of = [&](int r_lo, int r_hi) {
      double num = 0.0, den = 0.0;
      for (int s = snaps / 4; s < snaps; ++s) {
        const double t = T_msd * (s + 1) / snaps;
        double msd = 0.0;
        for (int r = r_lo; r < r_hi; ++r) {
          const double d = disp[r][s + 1] - disp[r][0];
          msd += d * d / (r_hi - r_lo);
        }
        num += msd * t;
        den += t * t;
      }
      return num / (2.0 * den);
    };
    rep.Ds_estimate = slope_of(0, replicas);
    std::vector<double> bs(blocks);
    double mean = 0.0;
    for (int b = 0; b < blocks; ++b) {
      bs[b] = slope_of(b * per, (b + 1) * per);
      mean += bs[b] / blocks;
    }
    double var = 0.0;
    for (double x : bs) var += (x - mean) * (x - mean) / (blocks - 1);
    rep.Ds_ci_half_width = 2.0 * std::sqrt(var / blocks);
    rep.insufficient_stats =
        rep.Ds_ci_half_width > 0.25 * std::max(1e-12, rep.Ds_estimate);
  }

  // log-log exponent over [T/8, T]; point estimate from the pooled MSD,
  // confidence interval over replica blocks
  {
    const int blocks = 8;
    const int per = replicas / blocks;
    auto expo_of = [&](int r_lo, int r_hi) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int cnt = 0;
      for (int s = std::max(1, snaps / 8) - 1; s < snaps; ++s) {
        double msd = 0.0;
        for (int r = r_lo; r < r_hi; ++r) {
          const double d = disp[r][s + 1] - disp[r][0];
          msd += d * d / (r_hi - r_lo);
        }
        if (msd <= 0.0) continue;
        const double x = std::log(T_msd * (s + 1) / snaps);
        const double y = std::log(msd);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
      }
      if (cnt < 2) return 0.0;
      return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    };
    rep.msd_exponent = expo_of(0, replicas);
    std::vector<double> slopes(blocks);
    double mean = 0.0;
    for (int b = 0; b < blocks; ++b) {
      slopes[b] = expo_of(b * per, (b + 1) * per);
      mean += slopes[b] / blocks;
    }
    double var = 0.0;
    for (double s : slopes) var += (s - mean) * (s - mean) / (blocks - 1);
    rep.msd_exponent_ci = 2.0 * std::sqrt(var / blocks);
    rep.subdiffusive = rep.msd_exponent < 0.75;
  }
  return rep;
}

}  // namespace hydroschro
