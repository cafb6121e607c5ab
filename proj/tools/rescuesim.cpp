// rescuesim command-line front end.

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "rescuesim/game/game.hpp"
#include "rescuesim/learning/dynamic.hpp"
#include "rescuesim/rng.hpp"
#include "rescuesim/sim/config.hpp"
#include "rescuesim/sim/consensus_run.hpp"
#include "rescuesim/sim/offload_run.hpp"
#include "rescuesim/sim/sweep.hpp"

namespace fs = std::filesystem;
using namespace rescuesim;
using namespace rescuesim::sim;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kInvariant = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "rescuesim-out";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "scenario JSON file");
  cmd->add_option("--seed", c.seed, "base seed (falls back to RESCUESIM_SEED, then the config)");
  cmd->add_option("-o,--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("-s,--set", c.overrides, "dotted-key=value override, repeatable");
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("RESCUESIM_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw ConfigError(std::string("RESCUESIM_SEED is not an unsigned integer: '") + v + "'");
  }
}

// defaults < file < overrides; --seed beats the file, RESCUESIM_SEED only fills a missing seed
ScenarioConfig load(const Common& c) {
  Json doc = c.config.empty() ? Json::object() : read_json_file(c.config);
  if (!doc.is_object()) throw ConfigError("config file '" + c.config + "' must hold a JSON object");
  for (const auto& o : c.overrides) apply_override(doc, o);
  const bool file_seed = doc.contains("seeds") && doc["seeds"].is_object() && doc["seeds"].contains("base");
  if (c.seed) {
    doc["seeds"]["base"] = *c.seed;
  } else if (!file_seed) {
    if (auto s = env_seed()) doc["seeds"]["base"] = *s;
  }
  return from_json(doc);
}

fs::path prepare_out(const Common& c, const ScenarioConfig& cfg) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + c.out + "': " + ec.message());
  std::ofstream(dir / "effective_config.json") << to_json(cfg).dump(2) << '\n';
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  return f;
}

// ---- consensus ----

int cmd_consensus(const Common& c, bool trace) {
  const auto cfg = load(c);
  const auto dir = prepare_out(c, cfg);
  ConsensusMetrics m;
  try {
    if (trace) {
      auto t = open_out(dir / "trace.jsonl");
      m = run_consensus(cfg, RunOptions{&t});
    } else {
      m = run_consensus(cfg);
    }
  } catch (const InvariantViolation&) {
    // Rerun with tracing and keep the tail that led to the violation.
    std::ostringstream buf;
    try {
      run_consensus(cfg, RunOptions{&buf});
    } catch (const InvariantViolation&) {
    }
    std::deque<std::string> tail;
    std::istringstream in(buf.str());
    for (std::string line; std::getline(in, line);) {
      tail.push_back(line);
      if (tail.size() > 400) tail.pop_front();
    }
    auto f = open_out(dir / "repro_trace.jsonl");
    for (const auto& l : tail) f << l << '\n';
    std::cerr << "reproduction trace: " << (dir / "repro_trace.jsonl").string() << '\n';
    throw;
  }
  {
    auto f = open_out(dir / "heights.csv");
    write_heights_csv(f, m);
  }
  {
    auto f = open_out(dir / "reputation.csv");
    f << "slot,node,raw,normalized\n";
    f << std::setprecision(12);
    for (const auto& r : m.reputation) f << r.slot << ',' << r.node << ',' << r.raw << ',' << r.normalized << '\n';
  }
  const Json s = summary_json(m);
  open_out(dir / "summary.json") << s.dump(2) << '\n';
  std::cout << "scheme " << m.scheme << "  heights " << m.heights.size() << "  mean rounds " << m.mean_rounds
            << "  throughput " << m.throughput << " tx/s  latency " << m.mean_latency << " s  conflicts "
            << m.conflicting_commits << '\n';
  return m.conflicting_commits == 0 ? kOk : kInvariant;
}

// ---- offload ----

int cmd_offload(const Common& c) {
  const auto cfg = load(c);
  const auto dir = prepare_out(c, cfg);
  const auto m = run_offload(cfg);
  auto f = open_out(dir / "offload.csv");
  write_offload_csv(f, m);
  open_out(dir / "summary.json") << offload_summary_json(m).dump(2) << '\n';
  std::cout << "density  D_mbit  delay_s  no_vfc_s  saved_J\n";
  for (const auto& p : m.points) {
    std::cout << std::setw(7) << p.density << std::setw(8) << p.data_mbit << std::setw(9) << std::setprecision(4)
              << p.mean_delay << std::setw(10) << p.mean_delay_no_vfc << std::setw(9) << p.mean_saved_energy << '\n';
  }
  return kOk;
}

// ---- learn ----

int cmd_learn(const Common& c, const std::string& scheme, const std::string& vehicle_scheme) {
  auto cfg = load(c);
  if (!scheme.empty()) cfg.learning.scheme = learning::parse_scheme(scheme);
  if (!vehicle_scheme.empty()) cfg.learning.vehicle_scheme = learning::parse_scheme(vehicle_scheme);
  const auto dir = prepare_out(c, cfg);
  const auto d = dynamic_config(cfg);
  const auto r = learning::run_dynamic_game(d);
  auto f = open_out(dir / "training.csv");
  learning::write_training_csv(f, r, d);
  const auto se = game::equilibrium(d.vehicles.front());
  Json s;
  s["scheme"] = learning::to_string(d.scheme);
  s["slots"] = d.slots;
  s["se"] = {{"x", se.strategy.x}, {"y", se.strategy.y}, {"uav_payoff", se.uav_payoff}};
  s["final_greedy_x"] = r.summary.mean_greedy_x;
  s["final_greedy_y"] = r.summary.mean_greedy_y;
  s["final_x"] = r.summary.mean_x;
  s["final_y"] = r.summary.mean_y;
  s["mean_uav_reward"] = r.summary.mean_uav_reward;
  s["mean_vehicle_reward"] = r.summary.mean_vehicle_reward;
  s["truncations"] = r.truncations;
  open_out(dir / "summary.json") << s.dump(2) << '\n';
  std::cout << "scheme " << s["scheme"].get<std::string>() << "  SE (x, y) = (" << se.strategy.x << ", "
            << se.strategy.y << ")\n";
  for (std::size_t i = 0; i < r.summary.mean_greedy_x.size(); ++i) {
    std::cout << "vehicle " << i << "  final-window greedy (x, y) = (" << r.summary.mean_greedy_x[i] << ", "
              << r.summary.mean_greedy_y[i] << ")\n";
  }
  return kOk;
}

// ---- se-verify ----

int cmd_se_verify(const Common& c, std::size_t samples, std::size_t points) {
  const auto cfg = load(c);
  const auto dir = prepare_out(c, cfg);
  Rng rng(derive_seed(cfg.seed, "se-verify"));
  auto f = open_out(dir / "se_verify.csv");
  f << "sample,psi,alpha,x,y,leader_gap,resolution_bound,follower_cell_error,leader_ok,follower_ok\n";
  f << std::setprecision(12);
  std::size_t leader_ok = 0, follower_ok = 0;
  double worst_gap = -1e300, worst_cells = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    game::GameParams p = cfg.game;
    p.psi = rng.uniform(cfg.offload.psi_min, cfg.offload.psi_max);
    p.alpha = rng.uniform(cfg.offload.alpha_min, cfg.offload.alpha_max);
    const auto o = game::grid_oracle(p, points, points);
    const bool lok = o.leader_gap <= o.resolution_bound;
    const bool fok = o.follower_cell_error <= 1.0;
    leader_ok += lok;
    follower_ok += fok;
    worst_gap = std::max(worst_gap, o.leader_gap - o.resolution_bound);
    worst_cells = std::max(worst_cells, o.follower_cell_error);
    f << i << ',' << p.psi << ',' << p.alpha << ',' << o.x_hat << ',' << o.y_hat << ',' << o.leader_gap << ','
      << o.resolution_bound << ',' << o.follower_cell_error << ',' << lok << ',' << fok << '\n';
  }
  std::cout << "samples                         " << samples << '\n'
            << "grid points per axis            " << points << '\n'
            << "leader within resolution bound  " << leader_ok << '/' << samples << '\n'
            << "follower within one grid cell   " << follower_ok << '/' << samples << '\n'
            << "worst gap minus bound           " << worst_gap << '\n'
            << "worst follower error (cells)    " << worst_cells << '\n';
  return leader_ok == samples && follower_ok == samples ? kOk : kInvariant;
}

// ---- sweep ----

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values, const std::string& schemes,
              std::size_t seeds, std::size_t workers) {
  const auto cfg = load(c);
  SweepOptions o;
  o.param = parse_sweep_param(param);
  for (const auto& v : split(values)) {
    try {
      o.values.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw ConfigError("sweep value '" + v + "' is not a number");
    }
  }
  if (!schemes.empty()) {
    if (o.param == SweepParam::psi) {
      o.learners.clear();
      for (const auto& s : split(schemes)) o.learners.push_back(learning::parse_scheme(s));
    } else {
      o.schemes.clear();
      for (const auto& s : split(schemes)) o.schemes.push_back(parse_consensus_scheme(s));
    }
  }
  o.seeds = seeds;
  o.workers = workers;
  const auto dir = prepare_out(c, cfg);
  const auto t = run_sweep(cfg, o);
  auto f = open_out(dir / ("sweep_" + to_string(o.param) + ".csv"));
  write_csv(f, t);
  write_csv(std::cout, t);
  return kOk;
}

// ---- report ----

int cmd_report(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) {
    if (!fs::exists(p / "summary.json")) throw ConfigError("no summary.json under '" + path + "'");
    const Json s = read_json_file((p / "summary.json").string());
    for (const auto& [k, v] : s.items()) {
      if (!v.is_structured()) std::cout << std::left << std::setw(28) << k << v.dump() << '\n';
    }
    if (fs::exists(p / "trace.jsonl")) return cmd_report((p / "trace.jsonl").string());
    return kOk;
  }
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open trace '" + path + "'");
  std::size_t lines = 0;
  std::map<std::string, std::size_t> events;
  std::set<std::uint64_t> nodes;
  std::map<std::uint64_t, std::string> last_position;
  std::int64_t first_t = 0, last_t = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw ConfigError("trace line " + std::to_string(lines + 1) + " is not JSON");
    }
    const auto t = j.value("t", std::int64_t{0});
    if (lines == 0) first_t = t;
    last_t = t;
    ++lines;
    const auto node = j.value("node", std::uint64_t{0});
    nodes.insert(node);
    const auto ev = j.value("event", std::string{});
    events[ev.substr(0, ev.find(' ', ev.find(' ') + 1))]++;
    const auto tr = j.value("transition", std::string{});
    const auto arrow = tr.find("-> ");
    if (arrow != std::string::npos) last_position[node] = tr.substr(arrow + 3);
  }
  std::cout << "trace lines    " << lines << '\n'
            << "nodes          " << nodes.size() << '\n'
            << "time span (s)  " << sim_to_seconds(first_t) << " .. " << sim_to_seconds(last_t) << '\n';
  for (const auto& [k, v] : events) std::cout << "  " << std::left << std::setw(24) << k << v << '\n';
  for (const auto& [n, pos] : last_position) std::cout << "node " << n << " ends at " << pos << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rescuesim: consensus, offloading and pricing-game simulator"};
  app.require_subcommand(1);
  Common common;

  auto* consensus = app.add_subcommand("consensus", "run a consensus scenario");
  add_common(consensus, common);
  bool trace = false;
  consensus->add_flag("--trace", trace, "write trace.jsonl");

  auto* offload = app.add_subcommand("offload", "run static-equilibrium offloading over density and task size");
  add_common(offload, common);

  auto* learn = app.add_subcommand("learn", "run the dynamic pricing game with learning agents");
  add_common(learn, common);
  std::string scheme, vehicle_scheme;
  learn->add_option("--scheme", scheme, "dqn, qlearn or greedy");
  learn->add_option("--vehicle-scheme", vehicle_scheme, "vehicle scheme when it differs from the UAV's");

  auto* se = app.add_subcommand("se-verify", "compare the closed-form equilibrium with a grid oracle");
  add_common(se, common);
  std::size_t samples = 100, points = 1000;
  se->add_option("--samples", samples, "random (psi, alpha) draws")->capture_default_str();
  se->add_option("--points", points, "grid points per axis")->capture_default_str()->check(CLI::Range(100, 100000));

  auto* sweep = app.add_subcommand("sweep", "vary one parameter and write a figure-family CSV");
  add_common(sweep, common);
  std::string param, values, schemes;
  std::size_t seeds = 1, workers = 0;
  sweep->add_option("--param", param, "pb, block_size, chi, data, psi or z")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--schemes", schemes, "proposal,art,naive (or dqn,qlearn,greedy for psi)");
  sweep->add_option("--seeds", seeds, "seeds per point")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--workers", workers, "worker threads, 0 = all cores")->capture_default_str();

  auto* report = app.add_subcommand("report", "summarize a trace file or an output directory");
  std::string report_path;
  report->add_option("path", report_path, "trace.jsonl or output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*consensus) return cmd_consensus(common, trace);
    if (*offload) return cmd_offload(common);
    if (*learn) return cmd_learn(common, scheme, vehicle_scheme);
    if (*se) return cmd_se_verify(common, samples, points);
    if (*sweep) return cmd_sweep(common, param, values, schemes, seeds, workers);
    if (*report) return cmd_report(report_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  }
  return kConfigError;
}
