#include "rescuesim/sim/offload_run.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "rescuesim/game/game.hpp"
#include "rescuesim/netmodel.hpp"
#include "rescuesim/rng.hpp"

namespace rescuesim::sim {

namespace {

constexpr double kGiga = 1e9;
constexpr double kMega = 1e6;

struct Vehicle {
  double x = 0.0;
  double y = 0.0;
  double direction = 1.0;
  double keep = 0.0;  // common uniform; the vehicle exists at chi when keep < chi / chi_top
  double psi = 0.0;
};

struct TaskDraw {
  std::size_t uav = 0;
  double cycles_per_bit = 0.0;
  double output_ratio = 0.0;
  double alpha = 0.0;
};

// One repetition's randomness, shared by every (chi, D) point.
struct Draw {
  std::vector<Vehicle> vehicles;
  std::vector<TaskDraw> tasks;  // interleaved across UAVs
};

double exponential(Rng& rng, double rate) { return -std::log1p(-rng.uniform()) / rate; }

// Gaps are min_gap plus an exponential, so thinning the top-density process keeps
// the safe distance and yields nested vehicle sets across densities.
Draw draw_repetition(const OffloadConfig& o, double chi_top, Rng& mobility, Rng& tasks) {
  Draw d;
  const double rate = 1.0 / (1.0 / chi_top - o.min_gap);
  for (std::size_t lane = 0; lane < o.lanes; ++lane) {
    const double y = (static_cast<double>(lane) - 0.5 * static_cast<double>(o.lanes - 1)) * o.lane_spacing;
    const double dir = lane % 2 == 0 ? 1.0 : -1.0;
    double x = exponential(mobility, rate);
    while (x < o.road_length) {
      Vehicle v;
      v.x = x;
      v.y = y;
      v.direction = dir;
      v.keep = mobility.uniform();
      v.psi = mobility.uniform(o.psi_min, o.psi_max);
      d.vehicles.push_back(v);
      x += o.min_gap + exponential(mobility, rate);
    }
  }
  std::vector<std::vector<TaskDraw>> per_uav(o.uavs);
  std::size_t longest = 0;
  for (std::size_t j = 0; j < o.uavs; ++j) {
    const std::size_t k = o.tasks_min + tasks.below(o.tasks_max - o.tasks_min + 1);
    for (std::size_t i = 0; i < k; ++i) {
      TaskDraw t;
      t.uav = j;
      t.cycles_per_bit = tasks.uniform(o.cycles_min, o.cycles_max);
      t.output_ratio = tasks.uniform(o.output_min, o.output_max);
      t.alpha = tasks.uniform(o.alpha_min, o.alpha_max);
      per_uav[j].push_back(t);
    }
    longest = std::max(longest, k);
  }
  for (std::size_t i = 0; i < longest; ++i) {
    for (std::size_t j = 0; j < o.uavs; ++j) {
      if (i < per_uav[j].size()) d.tasks.push_back(per_uav[j][i]);
    }
  }
  return d;
}

double slant(netmodel::Position a, netmodel::Position b, double altitude) {
  const double h = netmodel::horizontal_distance(a, b);
  return std::sqrt(h * h + altitude * altitude);
}

struct Outcome {
  double delay = 0.0;
  double saved = 0.0;
  double delay_no_vfc = 0.0;
  bool offloaded = false;
  bool relayed = false;
  double x = 0.0;
  double y = 0.0;
  double uav_payoff = 0.0;
  double vehicle_payoff = 0.0;
};

struct Candidate {
  std::size_t vehicle = 0;
  double finish = 0.0;
  double done = 0.0;
  double a2g_time = 0.0;
  double a2g_rate = 0.0;
  netmodel::ReturnPath path;
  game::GameParams params;
  game::Equilibrium eq;
};

class PointRun {
 public:
  PointRun(const ScenarioConfig& cfg, const Draw& draw, double chi, double chi_top, double data_mbit)
      : c_(cfg), o_(cfg.offload), draw_(draw), data_bits_(data_mbit * kMega) {
    for (std::size_t i = 0; i < draw.vehicles.size(); ++i) {
      if (draw.vehicles[i].keep * chi_top < chi) active_.push_back(i);
    }
    speed_ = netmodel::average_vehicle_velocity(chi, o_.channel);
    for (std::size_t j = 0; j < o_.uavs; ++j) {
      uav_pos_.push_back({o_.road_length * (static_cast<double>(j) + 0.5) / static_cast<double>(o_.uavs), 0.0});
    }
    for (std::size_t e = 0; e < o_.edge_nodes; ++e) {
      edge_pos_.push_back(
          {o_.road_length * (static_cast<double>(e) + 0.5) / static_cast<double>(o_.edge_nodes), 0.0});
    }
    vehicle_free_.assign(draw.vehicles.size(), 0.0);
    local_free_.assign(o_.uavs, 0.0);
    edge_free_.assign(o_.edge_nodes, 0.0);
    uav_energy_.assign(o_.uavs, o_.uav.energy);
    rr_next_.assign(o_.uavs, 0);
    flying_ = netmodel::flying_power_clamped(o_.uav.velocity, o_.uav.acceleration, o_.lambda1, o_.lambda2,
                                             o_.channel.hover_velocity_floor);
  }

  std::size_t vehicles() const { return active_.size(); }

  Outcome run(const TaskDraw& td) {
    netmodel::Task task;
    task.owner = static_cast<NodeId>(td.uav);
    task.data_bits = data_bits_;
    task.cycles_per_bit = td.cycles_per_bit;
    task.ttl = o_.ttl;
    task.urgency = td.alpha;
    task.output_ratio = td.output_ratio;

    Outcome out;
    out.delay_no_vfc = edge_delay(td, task);
    const netmodel::Position at = uav_pos_[td.uav];
    std::vector<Candidate> cands;
    for (std::size_t idx : active_) {
      const Vehicle& v = draw_.vehicles[idx];
      if (netmodel::horizontal_distance({v.x, v.y}, at) > o_.channel.a2g_range) continue;
      if (auto cand = evaluate(td, task, idx)) cands.push_back(*cand);
    }
    const Candidate* pick = nullptr;
    if (!cands.empty()) {
      if (o_.policy == "round_robin") {
        pick = &cands[rr_next_[td.uav] % cands.size()];
        ++rr_next_[td.uav];
      } else {
        pick = &*std::min_element(cands.begin(), cands.end(),
                                  [](const Candidate& a, const Candidate& b) { return a.finish < b.finish; });
      }
    }
    const double local_energy = netmodel::local_execution_energy(task, o_.uav, flying_);
    if (pick == nullptr) {
      const double start = local_free_[td.uav];
      local_free_[td.uav] = start + task.cycles_per_bit * task.data_bits / o_.uav.cpu_frequency;
      out.delay = local_free_[td.uav];
      uav_energy_[td.uav] -= local_energy;
      return out;
    }
    vehicle_free_[pick->vehicle] = pick->done;
    const double uav_cost = o_.uav.tx_power * pick->a2g_time + flying_ * pick->finish;
    uav_energy_[td.uav] -= uav_cost;
    out.offloaded = true;
    out.relayed = !pick->path.in_coverage;
    out.delay = pick->finish;
    out.saved = local_energy - uav_cost;
    out.x = pick->eq.strategy.x;
    out.y = pick->eq.strategy.y;
    game::GameParams gp = pick->params;
    const auto ctx = game::payoff_context(out.x, task, vehicle_state(pick->vehicle), pick->a2g_rate, pick->path);
    gp.delay = ctx.delay;
    gp.vehicle_energy = ctx.vehicle_energy;
    out.uav_payoff = game::uav_payoff(out.x, out.y, gp);
    out.vehicle_payoff = game::vehicle_payoff(out.x, out.y, gp);
    return out;
  }

 private:
  netmodel::VehicleState vehicle_state(std::size_t idx) const {
    netmodel::VehicleState s = o_.vehicle;
    s.id = static_cast<NodeId>(idx);
    s.position = {draw_.vehicles[idx].x, draw_.vehicles[idx].y};
    s.velocity = speed_ * draw_.vehicles[idx].direction;
    s.unit_cost = draw_.vehicles[idx].psi;
    return s;
  }

  std::optional<Candidate> evaluate(const TaskDraw& td, const netmodel::Task& task, std::size_t idx) const {
    const Vehicle& v = draw_.vehicles[idx];
    const netmodel::Position at = uav_pos_[td.uav];
    const auto vs = vehicle_state(idx);
    Candidate cand;
    cand.vehicle = idx;
    cand.params = c_.game;
    cand.params.psi = v.psi;
    cand.params.alpha = td.alpha;
    cand.eq = game::equilibrium(cand.params);
    const double x = cand.eq.strategy.x;
    if (!(x > 0.0)) return std::nullopt;

    cand.a2g_rate = netmodel::link_rates(slant({v.x, v.y}, at, o_.uav.altitude), o_.channel, o_.uav, vs).a2g;
    cand.a2g_time = task.data_bits / cand.a2g_rate;
    const double start = std::max(cand.a2g_time, vehicle_free_[idx]);
    cand.done = start + task.cycles_per_bit * task.data_bits / (x * kGiga);

    // Where the vehicle is when the result is ready decides the return path.
    const netmodel::Position moved{v.x + vs.velocity * cand.done, v.y};
    const double up_rate_at = [&](netmodel::Position uav) {
      return netmodel::link_rates(slant(moved, uav, o_.uav.altitude), o_.channel, o_.uav, vs).g2a;
    }(at);
    if (netmodel::horizontal_distance(moved, at) <= o_.channel.a2g_range) {
      cand.path.in_coverage = true;
      cand.path.g2a_rate = up_rate_at;
    } else {
      std::optional<std::size_t> relay;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < uav_pos_.size(); ++m) {
        const double dist = netmodel::horizontal_distance(moved, uav_pos_[m]);
        if (dist <= o_.channel.a2g_range && dist < best) {
          best = dist;
          relay = m;
        }
      }
      if (!relay) return std::nullopt;
      const double hop = netmodel::horizontal_distance(uav_pos_[*relay], at);
      if (hop > o_.channel.a2a_range) return std::nullopt;
      cand.path.in_coverage = false;
      cand.path.g2a_rate =
          netmodel::link_rates(slant(moved, uav_pos_[*relay], o_.uav.altitude), o_.channel, o_.uav, vs).g2a;
      cand.path.relay_a2a_rate = netmodel::a2a_rate(hop, o_.channel);
    }
    const double result_bits = task.output_ratio * task.data_bits;
    double back = result_bits / cand.path.g2a_rate;
    if (!cand.path.in_coverage) back += result_bits / cand.path.relay_a2a_rate;
    cand.finish = cand.done + back;
    if (cand.finish > task.ttl) return std::nullopt;

    netmodel::UavState uav = o_.uav;
    uav.energy = uav_energy_[td.uav];
    netmodel::OffloadEnergy e;
    e.a2g = uav.tx_power * cand.a2g_time;
    e.flying = flying_ * cand.finish;
    if (!netmodel::meets_energy_reserve(uav, e)) return std::nullopt;
    return cand;
  }

  // Baseline: nearest shared edge node, FIFO in task order.
  double edge_delay(const TaskDraw& td, const netmodel::Task& task) {
    const netmodel::Position at = uav_pos_[td.uav];
    std::size_t e = 0;
    for (std::size_t k = 1; k < edge_pos_.size(); ++k) {
      if (netmodel::horizontal_distance(edge_pos_[k], at) < netmodel::horizontal_distance(edge_pos_[e], at)) e = k;
    }
    const double d = slant(edge_pos_[e], at, o_.uav.altitude);
    const auto rates = netmodel::link_rates(d, o_.channel, o_.uav, o_.vehicle);
    const double arrival = task.data_bits / rates.a2g;
    const double start = std::max(arrival, edge_free_[e]);
    edge_free_[e] = start + task.cycles_per_bit * task.data_bits / (o_.edge_ghz * kGiga);
    return edge_free_[e] + task.output_ratio * task.data_bits / rates.g2a;
  }

  const ScenarioConfig& c_;
  const OffloadConfig& o_;
  const Draw& draw_;
  double data_bits_;
  double speed_ = 0.0;
  double flying_ = 0.0;
  std::vector<std::size_t> active_;
  std::vector<netmodel::Position> uav_pos_;
  std::vector<netmodel::Position> edge_pos_;
  std::vector<double> vehicle_free_;
  std::vector<double> local_free_;
  std::vector<double> edge_free_;
  std::vector<double> uav_energy_;
  std::vector<std::size_t> rr_next_;
};

struct Accum {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
};

}  // namespace

OffloadMetrics run_offload(const ScenarioConfig& cfg) {
  cfg.check();
  const auto& o = cfg.offload;
  OffloadMetrics m;
  m.seed = cfg.seed;
  m.repetitions = o.repetitions;
  m.policy = o.policy;
  if (o.densities.empty() || o.data_mbit.empty()) return m;
  const double chi_top = *std::max_element(o.densities.begin(), o.densities.end());

  struct Sums {
    Accum delay, saved;
    double no_vfc = 0.0, aocr = 0.0, payment = 0.0, uav = 0.0, veh = 0.0, vehicles = 0.0;
    std::size_t tasks = 0, offloaded = 0, relayed = 0, local = 0;
  };
  std::vector<Sums> sums(o.densities.size() * o.data_mbit.size());

  Rng mobility(derive_seed(cfg.seed, "mobility"));
  Rng task_rng(derive_seed(cfg.seed, "offload"));
  for (std::size_t rep = 0; rep < o.repetitions; ++rep) {
    const Draw draw = draw_repetition(o, chi_top, mobility, task_rng);
    for (std::size_t ci = 0; ci < o.densities.size(); ++ci) {
      for (std::size_t di = 0; di < o.data_mbit.size(); ++di) {
        Sums& s = sums[ci * o.data_mbit.size() + di];
        PointRun run(cfg, draw, o.densities[ci], chi_top, o.data_mbit[di]);
        s.vehicles += static_cast<double>(run.vehicles());
        double delay = 0.0, saved = 0.0;
        for (const auto& td : draw.tasks) {
          const Outcome r = run.run(td);
          delay += r.delay;
          saved += r.saved;
          s.no_vfc += r.delay_no_vfc;
          ++s.tasks;
          if (r.offloaded) {
            ++s.offloaded;
            s.aocr += r.x;
            s.payment += r.y;
            s.uav += r.uav_payoff;
            s.veh += r.vehicle_payoff;
          } else {
            ++s.local;
          }
          if (r.relayed) ++s.relayed;
        }
        const double n = static_cast<double>(draw.tasks.size());
        s.delay.add(delay / n);
        s.saved.add(saved / n);
      }
    }
  }

  for (std::size_t ci = 0; ci < o.densities.size(); ++ci) {
    for (std::size_t di = 0; di < o.data_mbit.size(); ++di) {
      const Sums& s = sums[ci * o.data_mbit.size() + di];
      OffloadPoint p;
      p.density = o.densities[ci];
      p.data_mbit = o.data_mbit[di];
      p.tasks = s.tasks;
      p.offloaded = s.offloaded;
      p.relayed = s.relayed;
      p.local = s.local;
      p.mean_vehicles = s.vehicles / static_cast<double>(o.repetitions);
      p.mean_delay = s.delay.mean();
      p.stderr_delay = s.delay.stderr_of_mean();
      p.mean_saved_energy = s.saved.mean();
      p.stderr_saved_energy = s.saved.stderr_of_mean();
      p.mean_delay_no_vfc = s.tasks ? s.no_vfc / static_cast<double>(s.tasks) : 0.0;
      if (s.offloaded) {
        const double k = static_cast<double>(s.offloaded);
        p.mean_aocr = s.aocr / k;
        p.mean_payment = s.payment / k;
        p.mean_uav_payoff = s.uav / k;
        p.mean_vehicle_payoff = s.veh / k;
      }
      m.points.push_back(p);
    }
  }
  return m;
}

void write_offload_csv(std::ostream& os, const OffloadMetrics& m) {
  os << "density,data_mbit,tasks,offloaded,relayed,local,mean_vehicles,mean_delay_s,stderr_delay_s,"
        "mean_delay_no_vfc_s,mean_saved_energy_j,stderr_saved_energy_j,mean_aocr_ghz,mean_payment,"
        "mean_uav_payoff,mean_vehicle_payoff\n";
  for (const auto& p : m.points) {
    os << p.density << ',' << p.data_mbit << ',' << p.tasks << ',' << p.offloaded << ',' << p.relayed << ','
       << p.local << ',' << p.mean_vehicles << ',' << p.mean_delay << ',' << p.stderr_delay << ','
       << p.mean_delay_no_vfc << ',' << p.mean_saved_energy << ',' << p.stderr_saved_energy << ',' << p.mean_aocr
       << ',' << p.mean_payment << ',' << p.mean_uav_payoff << ',' << p.mean_vehicle_payoff << '\n';
  }
}

Json offload_summary_json(const OffloadMetrics& m) {
  Json j;
  j["seed"] = m.seed;
  j["repetitions"] = m.repetitions;
  j["policy"] = m.policy;
  j["points"] = Json::array();
  for (const auto& p : m.points) {
    j["points"].push_back({{"density", p.density},
                           {"data_mbit", p.data_mbit},
                           {"tasks", p.tasks},
                           {"offloaded", p.offloaded},
                           {"relayed", p.relayed},
                           {"local", p.local},
                           {"mean_delay_s", p.mean_delay},
                           {"mean_delay_no_vfc_s", p.mean_delay_no_vfc},
                           {"mean_saved_energy_j", p.mean_saved_energy},
                           {"mean_aocr_ghz", p.mean_aocr},
                           {"mean_payment", p.mean_payment}});
  }
  return j;
}

}  // namespace rescuesim::sim
