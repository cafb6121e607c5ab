#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rescuesim/crypto/hash.hpp"
#include "rescuesim/game/game.hpp"
#include "rescuesim/learning/dynamic.hpp"
#include "rescuesim/netmodel.hpp"
#include "rescuesim/reputation/reputation.hpp"
#include "rescuesim/sim/config.hpp"
#include "rescuesim/sim/consensus_run.hpp"
#include "rescuesim/sim/offload_run.hpp"
#include "rescuesim/sim/sweep.hpp"

namespace py = pybind11;
using namespace rescuesim;

namespace {

// Configs and results cross the boundary as JSON text; the Python side wraps them in dicts.
sim::ScenarioConfig parse_config(const std::string& text) {
  return sim::from_json(text.empty() ? sim::Json::object() : sim::Json::parse(text));
}

std::string consensus(const std::string& config) {
  const auto m = sim::run_consensus(parse_config(config));
  sim::Json j = sim::summary_json(m);
  std::ostringstream csv;
  sim::write_heights_csv(csv, m);
  j["heights_csv"] = csv.str();
  sim::Json reps = sim::Json::array();
  for (const auto& r : m.reports) {
    reps.push_back({{"evidence_height", r.evidence_height},
                    {"committed_height", r.committed_height},
                    {"kind", r.kind},
                    {"accused", r.accused},
                    {"accused_byzantine", r.accused_byzantine},
                    {"valid", r.valid}});
  }
  j["report_list"] = reps;
  j["byzantine"] = m.byzantine;
  return j.dump();
}

std::string offload(const std::string& config) {
  const auto m = sim::run_offload(parse_config(config));
  std::ostringstream csv;
  sim::write_offload_csv(csv, m);
  sim::Json j = sim::offload_summary_json(m);
  j["csv"] = csv.str();
  return j.dump();
}

std::string sweep(const std::string& config, const std::string& param, const std::vector<double>& values,
                  const std::vector<std::string>& schemes, std::size_t seeds) {
  sim::SweepOptions o;
  o.param = sim::parse_sweep_param(param);
  o.values = values;
  o.seeds = seeds;
  if (!schemes.empty()) {
    if (o.param == sim::SweepParam::psi) {
      o.learners.clear();
      for (const auto& s : schemes) o.learners.push_back(learning::parse_scheme(s));
    } else {
      o.schemes.clear();
      for (const auto& s : schemes) o.schemes.push_back(sim::parse_consensus_scheme(s));
    }
  }
  const auto t = sim::run_sweep(parse_config(config), o);
  sim::Json j;
  j["columns"] = t.columns;
  j["rows"] = t.rows;
  return j.dump();
}

std::string learn(const std::string& config) {
  const auto cfg = parse_config(config);
  const auto d = sim::dynamic_config(cfg);
  const auto r = learning::run_dynamic_game(d);
  sim::Json j;
  j["scheme"] = learning::to_string(d.scheme);
  j["final_greedy_x"] = r.summary.mean_greedy_x;
  j["final_greedy_y"] = r.summary.mean_greedy_y;
  j["final_x"] = r.summary.mean_x;
  j["final_y"] = r.summary.mean_y;
  j["mean_uav_reward"] = r.summary.mean_uav_reward;
  j["mean_vehicle_reward"] = r.summary.mean_vehicle_reward;
  sim::Json x = sim::Json::array(), y = sim::Json::array();
  for (const auto& s : r.trace) {
    x.push_back(s.x.front());
    y.push_back(s.y.front());
  }
  j["x"] = x;
  j["y"] = y;
  return j.dump();
}

std::string effective_config(const std::string& config) { return sim::to_json(parse_config(config)).dump(); }

py::dict equilibrium(const game::GameParams& p) {
  const auto e = game::equilibrium(p);
  py::dict d;
  d["x"] = e.strategy.x;
  d["y"] = e.strategy.y;
  d["participate"] = e.strategy.participate;
  d["boundary"] = e.payment.boundary;
  d["clipped"] = e.payment.clipped;
  d["vehicle_payoff"] = e.vehicle_payoff;
  d["uav_payoff"] = e.uav_payoff;
  return d;
}

py::dict oracle(const game::GameParams& p, std::size_t x_points, std::size_t y_points) {
  const auto o = game::grid_oracle(p, x_points, y_points);
  py::dict d;
  d["x_hat"] = o.x_hat;
  d["y_hat"] = o.y_hat;
  d["grid_leader_best"] = o.grid_leader_best;
  d["closed_leader"] = o.closed_leader;
  d["leader_gap"] = o.leader_gap;
  d["resolution_bound"] = o.resolution_bound;
  d["follower_cell_error"] = o.follower_cell_error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "rescuesim core: consensus, offloading and pricing-game simulation";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<InvariantViolation> invariant(m, "InvariantViolation", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const InvariantViolation& e) {
      py::set_error(invariant, e.what());
    } catch (const sim::Json::exception& e) {
      py::set_error(config_error, e.what());
    }
  });

  py::class_<game::GameParams>(m, "GameParams")
      .def(py::init<>())
      .def_readwrite("rho", &game::GameParams::rho)
      .def_readwrite("varpi", &game::GameParams::varpi)
      .def_readwrite("lambda_p", &game::GameParams::lambda_p)
      .def_readwrite("lambda_c", &game::GameParams::lambda_c)
      .def_readwrite("lambda_e", &game::GameParams::lambda_e)
      .def_readwrite("psi", &game::GameParams::psi)
      .def_readwrite("x_max", &game::GameParams::x_max)
      .def_readwrite("y_max", &game::GameParams::y_max)
      .def_readwrite("alpha", &game::GameParams::alpha)
      .def_readwrite("delay", &game::GameParams::delay)
      .def_readwrite("vehicle_energy", &game::GameParams::vehicle_energy)
      .def("check", &game::GameParams::check);

  m.def("equilibrium", &equilibrium, py::arg("params"));
  m.def("grid_oracle", &oracle, py::arg("params"), py::arg("x_points") = 1000, py::arg("y_points") = 1000);
  m.def("best_response_aocr", &game::best_response_aocr, py::arg("y"), py::arg("params"));
  m.def("vehicle_payoff", &game::vehicle_payoff, py::arg("x"), py::arg("y"), py::arg("params"));
  m.def("uav_payoff", py::overload_cast<double, double, const game::GameParams&>(&game::uav_payoff), py::arg("x"),
        py::arg("y"), py::arg("params"));

  m.def("sigmoid", &reputation::sigmoid);
  m.def(
      "reputation_stream",
      [](const std::vector<std::vector<std::string>>& slots, double initial, double eta) {
        reputation::ReputationParams p;
        p.initial = initial;
        p.eta = eta;
        p.check();
        const NodeId node = 0;
        reputation::ReputationLedger led(p, std::span<const NodeId>(&node, 1));
        std::vector<double> out{led.raw(0)};
        for (const auto& slot : slots) {
          for (const auto& name : slot) {
            const auto b = reputation::parse_behavior(name);
            if (!b) throw ConfigError("unknown behaviour '" + name + "'");
            led.record(reputation::make_record(0, led.slot() + 1, *b, p));
          }
          led.advance();
          out.push_back(led.raw(0));
        }
        return out;
      },
      py::arg("slots"), py::arg("initial") = 3.0, py::arg("eta") = 0.5,
      "Raw reputation of one node: the initial value, then one entry per slot of behaviour names.");

  m.def(
      "sha256",
      [](const py::bytes& data) {
        const std::string s = data;
        return crypto::to_hex(crypto::sha256(crypto::as_bytes(s)));
      },
      py::arg("data"));

  m.def("flying_power", &netmodel::flying_power, py::arg("velocity"), py::arg("acceleration"), py::arg("lambda1"),
        py::arg("lambda2"));

  m.def("_effective_config", &effective_config);
  m.def("_run_consensus", &consensus, py::call_guard<py::gil_scoped_release>());
  m.def("_run_offload", &offload, py::call_guard<py::gil_scoped_release>());
  m.def("_run_sweep", &sweep, py::call_guard<py::gil_scoped_release>());
  m.def("_run_learning", &learn, py::call_guard<py::gil_scoped_release>());
}
