#include "rescuesim/sim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "rescuesim/rng.hpp"

namespace rescuesim::sim {

std::string to_string(ConsensusScheme s) {
  switch (s) {
    case ConsensusScheme::proposal: return "proposal";
    case ConsensusScheme::art: return "art";
    case ConsensusScheme::naive: return "naive";
  }
  return "?";
}

ConsensusScheme parse_consensus_scheme(const std::string& s) {
  if (s == "proposal") return ConsensusScheme::proposal;
  if (s == "art") return ConsensusScheme::art;
  if (s == "naive") return ConsensusScheme::naive;
  throw ConfigError("unknown consensus scheme '" + s + "' (proposal, art, naive)");
}

std::string to_string(Behavior b) {
  switch (b) {
    case Behavior::honest: return "honest";
    case Behavior::cp: return "cp";
    case Behavior::cv: return "cv";
    case Behavior::vol: return "vol";
    case Behavior::silent: return "silent";
    case Behavior::invalid: return "invalid";
    case Behavior::spoofing: return "spoofing";
    case Behavior::collusion: return "collusion";
  }
  return "?";
}

Behavior parse_behavior(const std::string& s) {
  for (auto b : {Behavior::honest, Behavior::cp, Behavior::cv, Behavior::vol, Behavior::silent, Behavior::invalid,
                 Behavior::spoofing, Behavior::collusion}) {
    if (to_string(b) == s) return b;
  }
  throw ConfigError("unknown adversary behavior '" + s +
                    "' (honest, cp, cv, vol, silent, invalid, spoofing, collusion)");
}

namespace {

std::string optimizer_name(learning::Optimizer o) { return o == learning::Optimizer::adam ? "adam" : "sgd"; }
learning::Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return learning::Optimizer::sgd;
  if (s == "adam") return learning::Optimizer::adam;
  throw ConfigError("unknown optimizer '" + s + "' (sgd, adam)");
}

std::string activation_name(learning::OutputActivation a) {
  return a == learning::OutputActivation::relu ? "relu" : "linear";
}
learning::OutputActivation parse_activation(const std::string& s) {
  if (s == "linear") return learning::OutputActivation::linear;
  if (s == "relu") return learning::OutputActivation::relu;
  throw ConfigError("unknown output activation '" + s + "' (linear, relu)");
}

std::string noise_name(netmodel::NoiseModel m) {
  return m == netmodel::NoiseModel::total_power ? "total_power" : "spectral_density";
}
netmodel::NoiseModel parse_noise(const std::string& s) {
  if (s == "total_power") return netmodel::NoiseModel::total_power;
  if (s == "spectral_density") return netmodel::NoiseModel::spectral_density;
  throw ConfigError("unknown noise model '" + s + "' (total_power, spectral_density)");
}

// One field list per struct, walked by both the reader and the writer.

class Reader {
 public:
  Reader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void operator()(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) {
        throw ConfigError(where(key) + " must be a non-negative integer");
      }
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(where(key) + " must be a number");
    }
    try {
      out = it->template get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <class E, class ToStr, class Parse>
  void enumeration(const char* key, E& out, ToStr, Parse parse) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_string()) throw ConfigError(where(key) + " must be a string");
    try {
      out = parse(it->template get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <class Visit>
  void section(const char* key, Visit&& visit) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    Reader child(*it, where(key));
    visit(child);
    child.finish();
  }

  const Json* raw(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const char* key = nullptr) const {
    if (!key) return path_.empty() ? "config" : path_;
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + where(k.c_str()));
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(Json& obj) : obj_(obj) { obj_ = Json::object(); }

  template <class T>
  void operator()(const char* key, T& v) {
    obj_[key] = v;
  }

  template <class E, class ToStr, class Parse>
  void enumeration(const char* key, E& v, ToStr to_str, Parse) {
    obj_[key] = to_str(v);
  }

  template <class Visit>
  void section(const char* key, Visit&& visit) {
    Json child;
    Writer w(child);
    visit(w);
    obj_[key] = std::move(child);
  }

  Json& obj() { return obj_; }

 private:
  Json& obj_;
};

template <class V>
void visit_network(V& v, NetworkConfig& c) {
  v("full_nodes", c.full_nodes);
  v("delta", c.delta);
  v("gst", c.gst);
  v("pre_gst_drop", c.pre_gst_drop);
  v("post_gst_min", c.post_gst_min);
  v("post_gst_max", c.post_gst_max);
  v("uplink", c.uplink);
  v.section("partition", [&](auto& p) {
    p("start", c.partition.start);
    p("end", c.partition.end);
    p("fraction", c.partition.fraction);
    p("byzantine_share", c.partition.byzantine_share);
  });
}

template <class V>
void visit_consensus(V& v, ConsensusConfig& c) {
  v.enumeration("scheme", c.scheme, [](ConsensusScheme s) { return to_string(s); }, parse_consensus_scheme);
  v("committee", c.committee);
  v("level1", c.level1);
  v("heights", c.heights);
  v("reelection", c.reelection);
  v("election_sample", c.election_sample);
  v("block_txs", c.block_txs);
  v("tx_pool", c.tx_pool);
  v("propose_timeout", c.propose_timeout);
  v("propose_increment", c.propose_increment);
  v("prevote_timeout", c.prevote_timeout);
  v("precommit_timeout", c.precommit_timeout);
  v("commit_wait", c.commit_wait);
  v("chunk_size", c.chunk_size);
  v("report_lag", c.report_lag);
  v("report_fee", c.report_fee);
  v("max_time", c.max_time);
  v("energy_per_byte", c.energy_per_byte);
  v("energy_per_verification", c.energy_per_verification);
}

template <class V>
void visit_reputation(V& v, reputation::ReputationParams& c) {
  v("initial", c.initial);
  v("eta", c.eta);
  v("delta_sbc", c.delta_sbc);
  v("delta_sbv", c.delta_sbv);
  v("delta_cp", c.delta_cp);
  v("delta_cv", c.delta_cv);
  v("delta_wbc", c.delta_wbc);
  v("delta_nbc", c.delta_nbc);
  v("delta_vol", c.delta_vol);
  v("delta_rep", c.delta_rep);
  v("delta_acc", c.delta_acc);
}

template <class V>
void visit_game(V& v, game::GameParams& c) {
  v("rho", c.rho);
  v("varpi", c.varpi);
  v("lambda_p", c.lambda_p);
  v("lambda_c", c.lambda_c);
  v("lambda_e", c.lambda_e);
  v("psi", c.psi);
  v("x_max", c.x_max);
  v("y_max", c.y_max);
  v("alpha", c.alpha);
  v("delay", c.delay);
  v("vehicle_energy", c.vehicle_energy);
}

template <class V>
void visit_agent(V& v, learning::AgentParams& a) {
  v("epsilon", a.epsilon);
  v("random_slots", a.random_slots);
  v("memory", a.memory);
  v("discount", a.train.discount);
  v("updates", a.train.updates);
  v("learning_rate", a.train.learning_rate);
  v("batch_size", a.train.batch_size);
  v.enumeration("optimizer", a.train.optimizer, optimizer_name, parse_optimizer);
  v.enumeration("output", a.output, activation_name, parse_activation);
  v("reward_scale", a.reward_scale);
  v("tabular_learning_rate", a.tabular_learning_rate);
}

template <class V>
void visit_learning(V& v, learning::DynamicGameConfig& c) {
  v("slots", c.slots);
  v("payment_levels", c.payment_levels);
  v("aocr_levels", c.aocr_levels);
  v.enumeration("scheme", c.scheme, [](learning::Scheme s) { return learning::to_string(s); },
                learning::parse_scheme);
  v("normalize_rewards", c.normalize_rewards);
  v("summary_window", c.summary_window);
  v.section("uav", [&](auto& s) { visit_agent(s, c.uav); });
  v.section("vehicle", [&](auto& s) { visit_agent(s, c.vehicle); });
}

template <class V>
void visit_offload(V& v, OffloadConfig& c) {
  v("uavs", c.uavs);
  v("tasks_min", c.tasks_min);
  v("tasks_max", c.tasks_max);
  v("data_mbit", c.data_mbit);
  v("densities", c.densities);
  v("lanes", c.lanes);
  v("road_length", c.road_length);
  v("lane_spacing", c.lane_spacing);
  v("min_gap", c.min_gap);
  v("repetitions", c.repetitions);
  v("cycles_min", c.cycles_min);
  v("cycles_max", c.cycles_max);
  v("output_min", c.output_min);
  v("output_max", c.output_max);
  v("psi_min", c.psi_min);
  v("psi_max", c.psi_max);
  v("alpha_min", c.alpha_min);
  v("alpha_max", c.alpha_max);
  v("ttl", c.ttl);
  v("lambda1", c.lambda1);
  v("lambda2", c.lambda2);
  v("policy", c.policy);
  v("edge_nodes", c.edge_nodes);
  v("edge_ghz", c.edge_ghz);
  v.section("channel", [&](auto& s) {
    s("reference_gain", c.channel.reference_gain);
    s("path_loss_exponent", c.channel.path_loss_exponent);
    s("noise", c.channel.noise);
    s.enumeration("noise_model", c.channel.noise_model, noise_name, parse_noise);
    s("max_traffic_density", c.channel.max_traffic_density);
    s("min_vehicle_velocity", c.channel.min_vehicle_velocity);
    s("max_vehicle_velocity", c.channel.max_vehicle_velocity);
    s("a2a_bandwidth", c.channel.a2a_bandwidth);
    s("a2a_tx_power", c.channel.a2a_tx_power);
    s("a2g_range", c.channel.a2g_range);
    s("a2a_range", c.channel.a2a_range);
  });
  v.section("uav", [&](auto& s) {
    s("altitude", c.uav.altitude);
    s("velocity", c.uav.velocity);
    s("acceleration", c.uav.acceleration);
    s("capacity", c.uav.capacity);
    s("reserve", c.uav.reserve);
    s("tx_power", c.uav.tx_power);
    s("downlink_bandwidth", c.uav.downlink_bandwidth);
    s("max_velocity", c.uav.max_velocity);
    s("cpu_frequency", c.uav.cpu_frequency);
    s("switched_capacitance", c.uav.switched_capacitance);
  });
  v.section("vehicle", [&](auto& s) {
    s("tx_power", c.vehicle.tx_power);
    s("uplink_bandwidth", c.vehicle.uplink_bandwidth);
    s("switched_capacitance", c.vehicle.switched_capacitance);
  });
}

std::vector<std::string> behavior_names(const std::vector<Behavior>& bs) {
  std::vector<std::string> out;
  for (auto b : bs) out.push_back(to_string(b));
  return out;
}

template <class V>
void visit_adversary(V& v, AdversaryConfig& c) {
  v("byzantine_ratio", c.byzantine_ratio);
  v("switch_height", c.switch_height);
  v.enumeration("after_switch", c.after_switch, [](Behavior b) { return to_string(b); }, parse_behavior);
  v("strict_safety", c.strict_safety);
}

void check_ratio(double r, const char* name) {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
}

void check_range(double lo, double hi, const char* name) {
  if (!(lo <= hi)) throw ConfigError(std::string(name) + ": min exceeds max");
}

}  // namespace

std::size_t ScenarioConfig::byzantine_count() const {
  return static_cast<std::size_t>(std::llround(adversary.byzantine_ratio * static_cast<double>(consensus.committee)));
}

void ScenarioConfig::check() const {
  const auto& n = network;
  if (n.full_nodes < 1) throw ConfigError("network.full_nodes must be at least 1");
  if (!(n.delta > 0.0)) throw ConfigError("network.delta must be positive");
  if (n.gst < 0.0) throw ConfigError("network.gst must be non-negative");
  if (!(n.pre_gst_drop >= 0.0 && n.pre_gst_drop < 1.0)) throw ConfigError("network.pre_gst_drop must lie in [0,1)");
  if (!(n.post_gst_min >= 0.0 && n.post_gst_min <= n.post_gst_max && n.post_gst_max <= n.delta)) {
    throw ConfigError("network post-GST delays must satisfy 0 <= min <= max <= delta");
  }
  if (!(n.uplink > 0.0)) throw ConfigError("network.uplink must be positive");
  if (n.partition.start < 0.0) throw ConfigError("network.partition.start must be non-negative");
  check_ratio(n.partition.fraction, "network.partition.fraction");
  check_ratio(n.partition.byzantine_share, "network.partition.byzantine_share");

  const auto& k = consensus;
  if (k.committee < 1) throw ConfigError("consensus.committee must be at least 1");
  if (k.committee > n.full_nodes) throw ConfigError("consensus.committee exceeds network.full_nodes");
  if (k.level1 < 1 || k.level1 > k.committee) throw ConfigError("consensus.level1 must lie in [1, committee]");
  if (k.heights < 1) throw ConfigError("consensus.heights must be at least 1");
  if (k.reelection < 1) throw ConfigError("consensus.reelection must be at least 1");
  if (k.election_sample < 1) throw ConfigError("consensus.election_sample must be at least 1");
  if (k.block_txs < 1 || k.tx_pool < 1) throw ConfigError("consensus block_txs and tx_pool must be at least 1");
  if (!(k.propose_timeout > 0.0 && k.prevote_timeout > 0.0 && k.precommit_timeout > 0.0)) {
    throw ConfigError("consensus timeouts must be positive");
  }
  if (k.propose_increment < 0.0 || k.commit_wait < 0.0) throw ConfigError("consensus increments must be non-negative");
  if (k.chunk_size < 1) throw ConfigError("consensus.chunk_size must be at least 1");
  if (!(k.max_time > 0.0)) throw ConfigError("consensus.max_time must be positive");
  if (k.energy_per_byte < 0.0 || k.energy_per_verification < 0.0) {
    throw ConfigError("consensus energy constants must be non-negative");
  }

  try {
    reputation.check();
    game.check();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  learning.uav.check();
  learning.vehicle.check();

  const auto& a = adversary;
  check_ratio(a.byzantine_ratio, "adversary.byzantine_ratio");
  if (a.behaviors.empty()) throw ConfigError("adversary.behaviors must not be empty");
  if (a.switch_height < 1) throw ConfigError("adversary.switch_height must be at least 1");
  if (a.strict_safety) {
    const std::size_t bound = (k.committee - 1) / 3;
    if (byzantine_count() > bound) {
      std::ostringstream os;
      os << "adversary.byzantine_ratio " << a.byzantine_ratio << " gives " << byzantine_count()
         << " Byzantine members, above floor((Z-1)/3) = " << bound << " for Z = " << k.committee;
      throw ConfigError(os.str());
    }
  }

  const auto& o = offload;
  if (o.uavs < 1) throw ConfigError("offload.uavs must be at least 1");
  if (o.tasks_min < 1) throw ConfigError("offload.tasks_min must be at least 1");
  check_range(static_cast<double>(o.tasks_min), static_cast<double>(o.tasks_max), "offload.tasks");
  check_range(o.cycles_min, o.cycles_max, "offload.cycles");
  check_range(o.output_min, o.output_max, "offload.output");
  check_range(o.psi_min, o.psi_max, "offload.psi");
  check_range(o.alpha_min, o.alpha_max, "offload.alpha");
  if (!(o.output_min > 0.0 && o.output_max < 1.0)) throw ConfigError("offload output ratio must lie in (0,1)");
  if (!(o.psi_min > 0.0)) throw ConfigError("offload.psi_min must be positive");
  if (!(o.alpha_min >= 0.0 && o.alpha_max <= 1.0)) throw ConfigError("offload alpha must lie in [0,1]");
  if (!(o.cycles_min > 0.0)) throw ConfigError("offload.cycles_min must be positive");
  if (!(o.ttl > 0.0)) throw ConfigError("offload.ttl must be positive");
  if (o.lanes < 1 || o.repetitions < 1) throw ConfigError("offload lanes and repetitions must be at least 1");
  if (o.policy != "earliest_finish" && o.policy != "round_robin") {
    throw ConfigError("offload.policy must be earliest_finish or round_robin");
  }
  for (double d : o.data_mbit) {
    if (!(d > 0.0)) throw ConfigError("offload.data_mbit entries must be positive");
  }
  for (double chi : o.densities) {
    if (!(chi > 0.0 && chi <= o.channel.max_traffic_density)) {
      throw ConfigError("offload.densities entries must lie in (0, max_traffic_density]");
    }
    if (!(chi * o.min_gap < 1.0)) throw ConfigError("offload.densities entries must stay below 1/min_gap");
  }
  if (!(o.road_length > 0.0) || !(o.min_gap >= 0.0) || !(o.lane_spacing >= 0.0)) {
    throw ConfigError("offload road_length must be positive, min_gap and lane_spacing non-negative");
  }
  if (o.edge_nodes < 1 || !(o.edge_ghz > 0.0)) throw ConfigError("offload edge_nodes and edge_ghz must be positive");
  try {
    o.channel.check();
    netmodel::UavState u = o.uav;
    u.energy = u.capacity;
    u.check();
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("offload: ") + e.what());
  }
}

ScenarioConfig from_json(const Json& doc) {
  ScenarioConfig c;
  Reader r(doc, "");
  r.section("network", [&](Reader& s) { visit_network(s, c.network); });
  r.section("consensus", [&](Reader& s) { visit_consensus(s, c.consensus); });
  r.section("reputation", [&](Reader& s) { visit_reputation(s, c.reputation); });
  r.section("game", [&](Reader& s) { visit_game(s, c.game); });
  r.section("learning", [&](Reader& s) {
    visit_learning(s, c.learning);
    if (const Json* v = s.raw("vehicles")) {
      if (!v->is_number_unsigned() || v->get<std::size_t>() < 1) {
        throw ConfigError("learning.vehicles must be a positive integer");
      }
      c.learning.vehicles.assign(v->get<std::size_t>(), c.game);
    }
    if (const Json* v = s.raw("vehicle_scheme")) {
      if (!v->is_null()) {
        if (!v->is_string()) throw ConfigError("learning.vehicle_scheme must be a string or null");
        c.learning.vehicle_scheme = learning::parse_scheme(v->get<std::string>());
      }
    }
    if (const Json* v = s.raw("fixed_payment")) {
      if (!v->is_null()) {
        if (!v->is_number()) throw ConfigError("learning.fixed_payment must be a number or null");
        c.learning.fixed_payment = v->get<double>();
      }
    }
  });
  r.section("offload", [&](Reader& s) { visit_offload(s, c.offload); });
  r.section("adversary", [&](Reader& s) {
    visit_adversary(s, c.adversary);
    if (const Json* v = s.raw("behaviors")) {
      if (!v->is_array()) throw ConfigError("adversary.behaviors must be an array of names");
      c.adversary.behaviors.clear();
      for (const auto& b : *v) {
        if (!b.is_string()) throw ConfigError("adversary.behaviors must be an array of names");
        c.adversary.behaviors.push_back(parse_behavior(b.get<std::string>()));
      }
    }
  });
  r.section("seeds", [&](Reader& s) { s("base", c.seed); });
  r.finish();
  c.check();
  return c;
}

Json to_json(const ScenarioConfig& in) {
  ScenarioConfig c = in;
  Json doc;
  Writer w(doc);
  w.section("network", [&](Writer& s) { visit_network(s, c.network); });
  w.section("consensus", [&](Writer& s) { visit_consensus(s, c.consensus); });
  w.section("reputation", [&](Writer& s) { visit_reputation(s, c.reputation); });
  w.section("game", [&](Writer& s) { visit_game(s, c.game); });
  w.section("learning", [&](Writer& s) {
    visit_learning(s, c.learning);
    s.obj()["vehicles"] = c.learning.vehicles.size();
    s.obj()["vehicle_scheme"] =
        c.learning.vehicle_scheme ? Json(learning::to_string(*c.learning.vehicle_scheme)) : Json(nullptr);
    s.obj()["fixed_payment"] = c.learning.fixed_payment ? Json(*c.learning.fixed_payment) : Json(nullptr);
  });
  w.section("offload", [&](Writer& s) { visit_offload(s, c.offload); });
  w.section("adversary", [&](Writer& s) {
    visit_adversary(s, c.adversary);
    s.obj()["behaviors"] = behavior_names(c.adversary.behaviors);
  });
  w.section("seeds", [&](Writer& s) { s("base", c.seed); });
  return doc;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse config file '" + path + "': " + e.what());
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  if (!doc.is_object()) doc = Json::object();
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    Json& next = (*node)[part];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    node = &next;
    start = dot + 1;
  }
}

learning::DynamicGameConfig dynamic_config(const ScenarioConfig& c) {
  learning::DynamicGameConfig d = c.learning;
  d.vehicles.assign(std::max<std::size_t>(1, c.learning.vehicles.size()), c.game);
  d.seed = derive_seed(c.seed, "learning");
  return d;
}

}  // namespace rescuesim::sim
