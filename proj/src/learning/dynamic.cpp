#include "rescuesim/learning/dynamic.hpp"

#include <cmath>
#include <iostream>
#include <ostream>

#include "rescuesim/types.hpp"

namespace rescuesim::learning {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::dqn: return "dqn";
    case Scheme::qlearn: return "qlearn";
    case Scheme::greedy: return "greedy";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "dqn") return Scheme::dqn;
  if (s == "qlearn") return Scheme::qlearn;
  if (s == "greedy") return Scheme::greedy;
  throw ConfigError("unknown learning scheme '" + s + "' (dqn, qlearn, greedy)");
}

void DynamicGameConfig::check() const {
  if (vehicles.empty()) throw ConfigError("dynamic game needs at least one vehicle");
  for (const auto& v : vehicles) v.check();
  if (slots == 0) throw ConfigError("dynamic game needs at least one slot");
  if (payment_levels < 2 || aocr_levels < 2) throw ConfigError("action grids need at least two levels");
  if (summary_window == 0) throw ConfigError("summary window must be positive");
  uav.check();
  vehicle.check();
  if (fixed_payment && (*fixed_payment < 0.0 || *fixed_payment > vehicles.front().y_max)) {
    throw ConfigError("fixed payment outside [0, y_max]");
  }
}

double uav_reward_bound(const game::GameParams& p) {
  return p.rho * p.alpha * std::log1p(p.x_max) + p.varpi * p.lambda_p * p.y_max * p.x_max +
         (1.0 - p.varpi) * p.delay;
}

double vehicle_reward_bound(const game::GameParams& p) {
  return p.lambda_p * p.y_max * p.x_max + p.lambda_c * p.psi * p.x_max * p.x_max + p.lambda_e * p.vehicle_energy;
}

namespace {

// Grid-nearest myopic best responses for the greedy baseline.
std::uint32_t greedy_aocr(double y, const game::GameParams& p, const ActionGrid& g) {
  std::size_t best = 0;
  double best_v = game::vehicle_payoff(g.value(0), y, p);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double v = game::vehicle_payoff(g.value(i), y, p);
    if (v > best_v) best = i, best_v = v;
  }
  return static_cast<std::uint32_t>(best);
}

std::uint32_t greedy_payment(double x, const game::GameParams& p, const ActionGrid& g) {
  std::size_t best = 0;
  double best_v = game::uav_payoff(x, g.value(0), p);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double v = game::uav_payoff(x, g.value(i), p);
    if (v > best_v) best = i, best_v = v;
  }
  return static_cast<std::uint32_t>(best);
}

void probe_policies(DynamicResult& out, const DynamicGameConfig& c, const ActionGrid& ygrid, const ActionGrid& xgrid,
                    const DqnAgent* uav_dqn, const TabularAgent* uav_tab, const std::vector<DqnAgent>& veh_dqn,
                    const std::vector<TabularAgent>& veh_tab) {
  const std::size_t n_veh = c.vehicles.size();
  const std::size_t history = c.vehicle.random_slots;
  if (!veh_dqn.empty() || !veh_tab.empty()) {
    out.vehicle_policy.assign(n_veh, {});
    for (std::size_t i = 0; i < n_veh; ++i) {
      for (std::size_t w = 0; w < ygrid.size(); ++w) {
        if (!veh_dqn.empty()) {
          StateWindow win(history, 1, {ygrid.max()});
          for (std::size_t k = 0; k <= history; ++k) win.push(std::vector<double>{ygrid.value(w)});
          const auto q = veh_dqn[i].network().forward(encode_state(win));
          out.vehicle_policy[i].push_back(static_cast<std::uint32_t>(argmax(q)));
        } else {
          std::size_t best = 0;
          for (std::size_t a = 1; a < xgrid.size(); ++a) {
            if (veh_tab[i].q(0, w, a) > veh_tab[i].q(0, w, best)) best = a;
          }
          out.vehicle_policy[i].push_back(static_cast<std::uint32_t>(best));
        }
      }
    }
  }
  if (uav_dqn || uav_tab) {
    const std::size_t uh = c.uav.random_slots;
    for (std::size_t v = 0; v < xgrid.size(); ++v) {
      std::vector<std::uint32_t> row;
      if (uav_dqn) {
        StateWindow win(uh, n_veh, std::vector<double>(n_veh, xgrid.max()));
        for (std::size_t k = 0; k <= uh; ++k) win.push(std::vector<double>(n_veh, xgrid.value(v)));
        const auto q = uav_dqn->network().forward(encode_state(win));
        for (std::size_t i = 0; i < n_veh; ++i) {
          row.push_back(static_cast<std::uint32_t>(
              argmax(std::span<const double>(q.data() + i * ygrid.size(), ygrid.size()))));
        }
      } else {
        for (std::size_t i = 0; i < n_veh; ++i) {
          std::size_t best = 0;
          for (std::size_t a = 1; a < ygrid.size(); ++a) {
            if (uav_tab->q(i, v, a) > uav_tab->q(i, v, best)) best = a;
          }
          row.push_back(static_cast<std::uint32_t>(best));
        }
      }
      out.uav_policy.push_back(std::move(row));
    }
  }
}

}  // namespace

DynamicResult run_dynamic_game(const DynamicGameConfig& c) {
  c.check();
  const std::size_t n_veh = c.vehicles.size();
  const auto& base = c.vehicles.front();
  const ActionGrid ygrid(c.payment_levels, base.y_max);
  const ActionGrid xgrid(c.aocr_levels, base.x_max);

  AgentParams uav_p = c.uav;
  std::vector<AgentParams> veh_p(n_veh, c.vehicle);
  if (c.normalize_rewards) {
    double bound = 0.0;
    for (const auto& v : c.vehicles) bound = std::max(bound, uav_reward_bound(v));
    uav_p.reward_scale *= 1.0 / bound;
    for (std::size_t i = 0; i < n_veh; ++i) veh_p[i].reward_scale *= 1.0 / vehicle_reward_bound(c.vehicles[i]);
  }

  std::optional<DqnAgent> uav_dqn;
  std::optional<TabularAgent> uav_tab;
  std::vector<DqnAgent> veh_dqn;
  std::vector<TabularAgent> veh_tab;
  const bool learn_uav = !c.fixed_payment;
  const Scheme vs = c.vehicle_scheme.value_or(c.scheme);
  if (learn_uav && c.scheme == Scheme::dqn) {
    uav_dqn.emplace(n_veh, c.payment_levels, std::vector<double>(n_veh, base.x_max), uav_p, derive_seed(c.seed, "uav"));
  }
  if (learn_uav && c.scheme == Scheme::qlearn) {
    uav_tab.emplace(n_veh, c.aocr_levels, c.payment_levels, uav_p, derive_seed(c.seed, "uav"));
  }
  if (vs == Scheme::dqn) {
    for (std::size_t i = 0; i < n_veh; ++i) {
      veh_dqn.emplace_back(1, c.aocr_levels, std::vector<double>{base.y_max}, veh_p[i],
                           derive_seed(c.seed, "vehicle-" + std::to_string(i)));
    }
  } else if (vs == Scheme::qlearn) {
    for (std::size_t i = 0; i < n_veh; ++i) {
      veh_tab.emplace_back(1, c.payment_levels, c.aocr_levels, veh_p[i], derive_seed(c.seed, "vehicle-" + std::to_string(i)));
    }
  }
  Rng greedy_rng(derive_seed(c.seed, "greedy"));

  DynamicResult out;
  out.trace.reserve(c.slots);
  std::vector<double> last_x(n_veh, 0.0);
  std::vector<std::uint32_t> last_x_level(n_veh, 0);
  bool first = true;

  for (std::size_t n = 1; n <= c.slots; ++n) {
    SlotRecord rec;
    rec.slot = n;

    // UAV moves first with s^(n) = x^(n-1).
    Decision ud;
    if (c.fixed_payment) {
      const auto lvl = static_cast<std::uint32_t>(ygrid.nearest(*c.fixed_payment));
      ud.actions.assign(n_veh, lvl);
      ud.greedy = ud.actions;
    } else if (c.scheme == Scheme::dqn) {
      ud = uav_dqn->decide(last_x);
    } else if (c.scheme == Scheme::qlearn) {
      ud = uav_tab->decide(last_x_level);
    } else {
      for (std::size_t i = 0; i < n_veh; ++i) {
        const auto g = first ? static_cast<std::uint32_t>(greedy_rng.below(c.payment_levels))
                             : greedy_payment(last_x[i], c.vehicles[i], ygrid);
        ud.actions.push_back(g);
        ud.greedy.push_back(g);
      }
    }
    for (std::size_t i = 0; i < n_veh; ++i) {
      rec.y.push_back(c.fixed_payment ? *c.fixed_payment : ygrid.value(ud.actions[i]));
      rec.greedy_y.push_back(c.fixed_payment ? *c.fixed_payment : ygrid.value(ud.greedy[i]));
    }

    // Each vehicle acts on the payment it has just received.
    for (std::size_t i = 0; i < n_veh; ++i) {
      Decision vd;
      const double y = rec.y[i];
      if (vs == Scheme::dqn) {
        vd = veh_dqn[i].decide(std::vector<double>{y});
      } else if (vs == Scheme::qlearn) {
        vd = veh_tab[i].decide(std::vector<std::uint32_t>{static_cast<std::uint32_t>(ygrid.nearest(y))});
      } else {
        const auto g = greedy_aocr(y, c.vehicles[i], xgrid);
        vd.actions = {g};
        vd.greedy = {g};
      }
      rec.x.push_back(xgrid.value(vd.actions[0]));
      rec.greedy_x.push_back(xgrid.value(vd.greedy[0]));
      last_x_level[i] = vd.actions[0];
    }

    std::vector<double> uav_heads(n_veh);
    for (std::size_t i = 0; i < n_veh; ++i) {
      const double vr = game::vehicle_payoff(rec.x[i], rec.y[i], c.vehicles[i]);
      uav_heads[i] = game::uav_payoff(rec.x[i], rec.y[i], c.vehicles[i]);
      rec.vehicle_reward.push_back(vr);
      rec.uav_reward += uav_heads[i];
      if (vs == Scheme::dqn) veh_dqn[i].reward(std::vector<double>{vr});
      if (vs == Scheme::qlearn) veh_tab[i].reward(std::vector<double>{vr});
      last_x[i] = rec.x[i];
    }
    if (uav_dqn) uav_dqn->reward(uav_heads);
    if (uav_tab) uav_tab->reward(uav_heads);
    first = false;
    out.trace.push_back(std::move(rec));
  }
  if (uav_dqn) out.truncations = uav_dqn->truncations();
  probe_policies(out, c, ygrid, xgrid, uav_dqn ? &*uav_dqn : nullptr, uav_tab ? &*uav_tab : nullptr, veh_dqn, veh_tab);
  if (out.truncations) {
    std::clog << "learning: UAV state exceeded 36 entries on " << out.truncations
              << " slots; oldest entries were dropped\n";
  }

  auto& s = out.summary;
  const std::size_t w = std::min(c.summary_window, out.trace.size());
  s.mean_greedy_x.assign(n_veh, 0.0);
  s.mean_greedy_y.assign(n_veh, 0.0);
  s.mean_x.assign(n_veh, 0.0);
  s.mean_y.assign(n_veh, 0.0);
  for (std::size_t k = out.trace.size() - w; k < out.trace.size(); ++k) {
    const auto& r = out.trace[k];
    for (std::size_t i = 0; i < n_veh; ++i) {
      s.mean_greedy_x[i] += r.greedy_x[i] / static_cast<double>(w);
      s.mean_greedy_y[i] += r.greedy_y[i] / static_cast<double>(w);
      s.mean_x[i] += r.x[i] / static_cast<double>(w);
      s.mean_y[i] += r.y[i] / static_cast<double>(w);
      s.mean_vehicle_reward += r.vehicle_reward[i] / static_cast<double>(w * n_veh);
    }
    s.mean_uav_reward += r.uav_reward / static_cast<double>(w);
  }
  return out;
}

void write_training_csv(std::ostream& os, const DynamicResult& r, const DynamicGameConfig& c) {
  os << "slot,agent,action,greedy,reward,epsilon\n";
  const bool fixed = c.fixed_payment.has_value();
  auto eps = [&](const AgentParams& p, std::size_t slot) {
    if (c.scheme == Scheme::greedy) return 1.0;
    return slot <= p.random_slots ? 0.0 : p.epsilon;
  };
  for (const auto& s : r.trace) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << s.slot << ",uav." << i << ',' << s.y[i] << ',' << s.greedy_y[i] << ','
         << game::uav_payoff(s.x[i], s.y[i], c.vehicles[i]) << ',' << (fixed ? 1.0 : eps(c.uav, s.slot)) << '\n';
      os << s.slot << ",vehicle." << i << ',' << s.x[i] << ',' << s.greedy_x[i] << ',' << s.vehicle_reward[i] << ','
         << eps(c.vehicle, s.slot) << '\n';
    }
  }
}

}  // namespace rescuesim::learning
