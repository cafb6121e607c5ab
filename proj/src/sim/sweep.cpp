#include "rescuesim/sim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rescuesim/game/game.hpp"
#include "rescuesim/sim/consensus_run.hpp"
#include "rescuesim/sim/offload_run.hpp"

namespace rescuesim::sim {

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::pb: return "pb";
    case SweepParam::block_size: return "block_size";
    case SweepParam::chi: return "chi";
    case SweepParam::data: return "data";
    case SweepParam::psi: return "psi";
    case SweepParam::z: return "z";
  }
  return "?";
}

SweepParam parse_sweep_param(const std::string& s) {
  if (s == "pb") return SweepParam::pb;
  if (s == "block_size" || s == "block") return SweepParam::block_size;
  if (s == "chi" || s == "density") return SweepParam::chi;
  if (s == "data" || s == "d_jk" || s == "djk") return SweepParam::data;
  if (s == "psi") return SweepParam::psi;
  if (s == "z" || s == "committee") return SweepParam::z;
  throw ConfigError("unknown sweep parameter '" + s + "' (pb, block_size, chi, data, psi, z)");
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope: x values must differ");
  return sxy / sxx;
}

ScenarioConfig with_committee(const ScenarioConfig& base, std::size_t z) {
  ScenarioConfig c = base;
  c.consensus.committee = z;
  c.consensus.level1 = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(z))),
                                               1, z);
  c.network.full_nodes = std::max(c.network.full_nodes, 2 * z);
  return c;
}

void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      if (row[i].is_string()) {
        os << row[i].get<std::string>();
      } else {
        os << row[i].dump();
      }
    }
    os << '\n';
  }
}

namespace {

struct Stat {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

Stat stat(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_of_mean = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

// Consensus sweeps: one job per (value, scheme, seed).
Table consensus_sweep(const ScenarioConfig& base, const SweepOptions& o) {
  Table t;
  switch (o.param) {
    case SweepParam::pb:
      t.columns = {"pb", "scheme", "seeds", "mean_rounds", "stderr_rounds", "mean_latency_s", "completed"};
      break;
    case SweepParam::block_size:
      t.columns = {"block_txs", "scheme", "seeds", "throughput_tx_per_s", "mean_latency_s", "mean_rounds"};
      break;
    default:
      t.columns = {"committee", "scheme",           "seeds",          "messages_per_round",
                   "energy_per_block_j", "bytes_per_block", "mean_rounds"};
      break;
  }
  const std::size_t per_value = o.schemes.size() * o.seeds;
  std::vector<ConsensusMetrics> runs(o.values.size() * per_value);
  parallel_for(runs.size(), o.workers, [&](std::size_t job) {
    const double v = o.values[job / per_value];
    const auto scheme = o.schemes[(job % per_value) / o.seeds];
    const std::size_t s = job % o.seeds;
    ScenarioConfig c = base;
    if (o.param == SweepParam::z) c = with_committee(base, static_cast<std::size_t>(std::lround(v)));
    if (o.param == SweepParam::pb) c.adversary.byzantine_ratio = v;
    if (o.param == SweepParam::block_size) c.consensus.block_txs = static_cast<std::size_t>(std::lround(v));
    c.consensus.scheme = scheme;
    c.seed = base.seed + s;
    c.check();
    runs[job] = run_consensus(c);
  });
  for (std::size_t vi = 0; vi < o.values.size(); ++vi) {
    for (std::size_t si = 0; si < o.schemes.size(); ++si) {
      std::vector<double> rounds, latency, throughput, mpr, energy, bytes;
      std::size_t completed = 0;
      for (std::size_t s = 0; s < o.seeds; ++s) {
        const auto& m = runs[vi * per_value + si * o.seeds + s];
        rounds.push_back(m.mean_rounds);
        latency.push_back(m.mean_latency);
        throughput.push_back(m.throughput);
        mpr.push_back(m.messages_per_round);
        energy.push_back(m.energy_per_block);
        bytes.push_back(m.heights.empty() ? 0.0
                                          : static_cast<double>(m.bytes_sent) / static_cast<double>(m.heights.size()));
        if (m.completed) ++completed;
      }
      const double v = o.values[vi];
      const std::string name = to_string(o.schemes[si]);
      const auto r = stat(rounds);
      switch (o.param) {
        case SweepParam::pb:
          t.rows.push_back({v, name, o.seeds, r.mean, r.stderr_of_mean, stat(latency).mean, completed});
          break;
        case SweepParam::block_size:
          t.rows.push_back({std::lround(v), name, o.seeds, stat(throughput).mean, stat(latency).mean, r.mean});
          break;
        default:
          t.rows.push_back(
              {std::lround(v), name, o.seeds, stat(mpr).mean, stat(energy).mean, stat(bytes).mean, r.mean});
          break;
      }
    }
  }
  return t;
}

Table offload_sweep(const ScenarioConfig& base, const SweepOptions& o) {
  ScenarioConfig c = base;
  if (o.param == SweepParam::chi) {
    c.offload.densities = o.values;
  } else {
    c.offload.data_mbit = o.values;
  }
  c.check();
  Table t;
  t.columns = {"density",       "data_mbit",           "tasks",           "offloaded",
               "relayed",       "local",               "mean_vehicles",   "mean_delay_s",
               "stderr_delay_s", "mean_delay_no_vfc_s", "mean_saved_energy_j", "stderr_saved_energy_j",
               "mean_aocr_ghz", "mean_payment",        "mean_uav_payoff", "mean_vehicle_payoff"};
  if (o.values.empty()) return t;
  const auto m = run_offload(c);
  for (const auto& p : m.points) {
    t.rows.push_back({p.density, p.data_mbit, p.tasks, p.offloaded, p.relayed, p.local, p.mean_vehicles, p.mean_delay,
                      p.stderr_delay, p.mean_delay_no_vfc, p.mean_saved_energy, p.stderr_saved_energy, p.mean_aocr,
                      p.mean_payment, p.mean_uav_payoff, p.mean_vehicle_payoff});
  }
  return t;
}

Table psi_sweep(const ScenarioConfig& base, const SweepOptions& o) {
  Table t;
  t.columns = {"psi", "scheme", "seeds", "x", "y", "uav_payoff", "vehicle_payoff", "se_x", "se_y", "se_uav_payoff"};
  const std::size_t per_value = o.learners.size() * o.seeds;
  std::vector<learning::DynamicSummary> runs(o.values.size() * per_value);
  parallel_for(runs.size(), o.workers, [&](std::size_t job) {
    ScenarioConfig c = base;
    c.game.psi = o.values[job / per_value];
    c.seed = base.seed + job % o.seeds;
    c.check();
    auto d = dynamic_config(c);
    d.scheme = o.learners[(job % per_value) / o.seeds];
    d.vehicle_scheme.reset();
    runs[job] = learning::run_dynamic_game(d).summary;
  });
  for (std::size_t vi = 0; vi < o.values.size(); ++vi) {
    game::GameParams gp = base.game;
    gp.psi = o.values[vi];
    const auto se = game::equilibrium(gp);
    for (std::size_t li = 0; li < o.learners.size(); ++li) {
      std::vector<double> x, y, u, w;
      for (std::size_t s = 0; s < o.seeds; ++s) {
        const auto& r = runs[vi * per_value + li * o.seeds + s];
        x.push_back(stat(r.mean_greedy_x).mean);
        y.push_back(stat(r.mean_greedy_y).mean);
        u.push_back(r.mean_uav_reward);
        w.push_back(r.mean_vehicle_reward);
      }
      t.rows.push_back({o.values[vi], learning::to_string(o.learners[li]), o.seeds, stat(x).mean, stat(y).mean,
                        stat(u).mean, stat(w).mean, se.strategy.x, se.strategy.y, se.uav_payoff});
    }
  }
  return t;
}

}  // namespace

Table run_sweep(const ScenarioConfig& base, const SweepOptions& opts) {
  if (opts.seeds < 1) throw ConfigError("sweep needs at least one seed");
  if (opts.schemes.empty() || opts.learners.empty()) throw ConfigError("sweep needs at least one scheme");
  switch (opts.param) {
    case SweepParam::pb:
    case SweepParam::block_size:
    case SweepParam::z:
      return consensus_sweep(base, opts);
    case SweepParam::chi:
    case SweepParam::data:
      return offload_sweep(base, opts);
    case SweepParam::psi:
      return psi_sweep(base, opts);
  }
  return {};
}

}  // namespace rescuesim::sim
