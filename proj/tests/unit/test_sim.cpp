#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rescuesim/sim/config.hpp"
#include "rescuesim/sim/consensus_run.hpp"
#include "rescuesim/sim/offload_run.hpp"
#include "rescuesim/sim/sweep.hpp"
#include "rescuesim/sim/transport.hpp"

using namespace rescuesim;
using namespace rescuesim::sim;

namespace {

ScenarioConfig parse(const std::string& text) { return from_json(Json::parse(text)); }

ScenarioConfig small_offload() {
  ScenarioConfig c;
  c.offload.repetitions = 6;
  c.offload.data_mbit = {2.0, 8.0};
  return c;
}

}  // namespace

TEST_CASE("defaults carry the simulation constants") {
  const ScenarioConfig c;
  CHECK(c.consensus.committee == 10);
  CHECK(c.consensus.level1 == 7);
  CHECK(c.game.rho == 162.0);
  CHECK(c.game.varpi == 0.5);
  CHECK(c.game.lambda_p == 8.0);
  CHECK(c.game.lambda_c == 0.05);
  CHECK(c.game.x_max == 6.0);
  CHECK(c.game.y_max == 11.0);
  CHECK(c.learning.slots == 9000);
  CHECK(c.learning.payment_levels == 22);
  CHECK(c.learning.aocr_levels == 12);
  CHECK(c.learning.uav.epsilon == 0.92);
  CHECK(c.learning.vehicle.epsilon == 0.95);
  CHECK(c.learning.uav.random_slots == 11);
  CHECK(c.learning.uav.memory == 1000);
  CHECK(c.learning.uav.train.discount == 0.8);
  CHECK(c.learning.uav.train.updates == 4);
  CHECK(c.reputation.initial == 3.0);
  CHECK(c.reputation.delta_cp == 5.0);
  CHECK(c.reputation.delta_cv == 3.0);
  CHECK(c.reputation.delta_wbc == 5.0);
  CHECK(c.reputation.delta_nbc == 1.5);
  CHECK(c.reputation.delta_sbc == 4.0);
  CHECK(c.reputation.delta_sbv == 2.0);
  CHECK(c.reputation.delta_vol == 3.0);
  CHECK(c.reputation.delta_rep == 1.5);
  CHECK(c.reputation.delta_acc == 2.5);
  CHECK(c.offload.uav.max_velocity == 20.0);
  CHECK(c.offload.uav.tx_power == 1.0);
  CHECK(c.offload.vehicle.tx_power == 0.1);
  CHECK(c.offload.vehicle.uplink_bandwidth == 10e6);
  CHECK(c.offload.uav.downlink_bandwidth == 0.5e6);
  CHECK(c.offload.uav.capacity == 500e3);
  CHECK(c.offload.uav.acceleration == 2.0);
  CHECK(c.offload.lambda1 == 0.0037);
  CHECK(c.offload.lambda2 == 5.0206);
  CHECK(c.offload.channel.a2a_range == 400.0);
  CHECK(c.offload.channel.a2g_range == 200.0);
  CHECK(c.offload.channel.path_loss_exponent == 2.0);
  CHECK(c.offload.channel.noise == doctest::Approx(1e-13));  // -100 dBm in watts
  CHECK(c.consensus.propose_timeout == 6.0);
  CHECK_NOTHROW(c.check());
}

TEST_CASE("config parsing") {
  SUBCASE("empty document gives defaults") {
    const auto c = parse("{}");
    CHECK(to_json(c) == to_json(ScenarioConfig{}));
  }
  SUBCASE("unknown keys are named in the error") {
    try {
      parse(R"({"consensus": {"comittee": 4}})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("consensus.comittee") != std::string::npos);
    }
    CHECK_THROWS_AS(parse(R"({"bogus": {}})"), ConfigError);
  }
  SUBCASE("out of range ratios are rejected") {
    CHECK_THROWS_AS(parse(R"({"adversary": {"byzantine_ratio": 1.5}})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"network": {"partition": {"fraction": -0.1}}})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"network": {"pre_gst_drop": 1.0}})"), ConfigError);
  }
  SUBCASE("strict safety bound") {
    // floor((10-1)/3) = 3 Byzantine members at most
    CHECK_THROWS_AS(parse(R"({"adversary": {"byzantine_ratio": 0.4, "strict_safety": true}})"), ConfigError);
    CHECK_NOTHROW(parse(R"({"adversary": {"byzantine_ratio": 0.3, "strict_safety": true}})"));
    CHECK_NOTHROW(parse(R"({"adversary": {"byzantine_ratio": 0.4}})"));
  }
  SUBCASE("minimal 4-validator scenario") {
    const auto c = parse(R"({"network": {"full_nodes": 4}, "consensus": {"committee": 4, "level1": 3}})");
    CHECK(c.consensus.committee == 4);
    CHECK(c.byzantine_count() == 0);
  }
  SUBCASE("overrides round-trip through the effective config") {
    Json doc = Json::object();
    apply_override(doc, "consensus.block_txs=250");
    apply_override(doc, "adversary.behaviors=[\"cp\",\"cv\"]");
    apply_override(doc, "consensus.scheme=naive");
    const auto c = from_json(doc);
    const Json eff = to_json(c);
    CHECK(eff["consensus"]["block_txs"] == 250);
    CHECK(eff["consensus"]["scheme"] == "naive");
    CHECK(eff["adversary"]["behaviors"] == Json::array({"cp", "cv"}));
    CHECK(to_json(from_json(eff)) == eff);
    CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
  }
}

TEST_CASE("transport honours the partial synchrony contract") {
  NetworkConfig n;
  n.delta = 1.0;
  n.gst = 20.0;
  n.pre_gst_drop = 0.2;
  Transport t(n, 10, 3);
  std::size_t late_pre = 0;
  for (int i = 0; i < 4000; ++i) {
    const double now = 0.01 * i;
    const auto at = t.send(i % 10, (i + 3) % 10, 200, seconds_to_sim(now));
    if (!at) continue;
    const double delay = sim_to_seconds(*at) - now;
    if (now >= n.gst) {
      CHECK(delay <= n.delta);
    } else if (delay >= n.delta) {
      ++late_pre;
    }
  }
  CHECK(late_pre > 0);
  CHECK(t.stats().dropped_pre_gst > 0);
  CHECK(t.stats().late_after_gst == 0);
  CHECK(t.stats().max_post_gst_delay <= n.delta);
}

TEST_CASE("minimal 4-validator honest run") {
  auto c = parse(R"({"network": {"full_nodes": 4}, "consensus": {"committee": 4, "level1": 3, "heights": 10}})");
  const auto m = run_consensus(c);
  CHECK(m.completed);
  CHECK(m.heights.size() == 10);
  CHECK(m.conflicting_commits == 0);
}

TEST_CASE("honest 10-validator run commits 100 heights at round 0") {
  ScenarioConfig c;
  c.consensus.heights = 100;
  const auto m = run_consensus(c);
  REQUIRE(m.heights.size() == 100);
  for (const auto& h : m.heights) CHECK(h.round == 0);
  CHECK(m.mean_rounds == 1.0);
  CHECK(m.transport.late_after_gst == 0);
}

TEST_CASE("same seed gives byte-identical metrics") {
  ScenarioConfig c;
  c.consensus.heights = 30;
  c.network.gst = 30.0;
  c.adversary.byzantine_ratio = 0.3;
  c.adversary.behaviors = {Behavior::cp, Behavior::cv, Behavior::vol};
  std::ostringstream a, b;
  const auto m1 = run_consensus(c);
  const auto m2 = run_consensus(c);
  write_heights_csv(a, m1);
  write_heights_csv(b, m2);
  CHECK(a.str() == b.str());
  CHECK(summary_json(m1).dump() == summary_json(m2).dump());
  c.seed = 2;
  std::ostringstream d;
  write_heights_csv(d, run_consensus(c));
  CHECK(d.str() != a.str());
}

TEST_CASE("equivocating leaders are caught and safety holds") {
  ScenarioConfig c;
  c.consensus.heights = 60;
  c.adversary.byzantine_ratio = 0.3;
  c.adversary.behaviors = {Behavior::cp, Behavior::cv, Behavior::vol};
  c.adversary.strict_safety = true;
  const auto m = run_consensus(c);
  CHECK(m.completed);
  CHECK(m.conflicting_commits == 0);
  std::set<std::string> kinds;
  for (const auto& r : m.reports) {
    if (r.valid) {
      CHECK(r.accused_byzantine);
      kinds.insert(r.kind);
    }
  }
  CHECK(kinds.count("cp") == 1);
}

TEST_CASE("partition above one third halts and resumes after healing") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ScenarioConfig c;
    c.seed = seed;
    c.consensus.heights = 40;
    c.network.partition.start = 5.0;
    c.network.partition.end = 105.0;
    c.network.partition.fraction = 0.4;
    const auto m = run_consensus(c);
    CAPTURE(seed);
    CHECK(m.completed);
    CHECK(m.commits_in_window == 0);
    CHECK(m.rounds_to_resume >= 0);
    CHECK(m.rounds_to_resume <= 3);
  }
  ScenarioConfig c;
  c.consensus.heights = 40;
  c.network.partition.start = 5.0;
  c.network.partition.end = 105.0;
  c.network.partition.fraction = 0.2;
  const auto m = run_consensus(c);
  CHECK(m.completed);
  CHECK(m.commits_in_window > 0);
}

TEST_CASE("spoofer reputation rises while honest and falls after the switch") {
  ScenarioConfig c;
  c.consensus.heights = 50;
  c.adversary.byzantine_ratio = 0.3;
  c.adversary.behaviors = {Behavior::spoofing};
  c.adversary.switch_height = 20;
  const auto m = run_consensus(c);
  REQUIRE(!m.byzantine.empty());
  auto raw_at = [&](NodeId n, std::uint64_t slot) {
    for (const auto& r : m.reputation) {
      if (r.node == n && r.slot == slot) return r.raw;
    }
    return -1.0;
  };
  bool seen = false;
  for (NodeId b : m.byzantine) {
    const double start = raw_at(b, 1);
    const double peak = raw_at(b, 20);
    const double later = raw_at(b, 45);
    if (peak > start) {
      seen = true;
      CHECK(later < peak);
    }
  }
  CHECK(seen);
}

TEST_CASE("colluders elect their designated member") {
  ScenarioConfig c;
  c.consensus.heights = 12;
  c.adversary.byzantine_ratio = 0.3;
  c.adversary.behaviors = {Behavior::collusion};
  const auto m = run_consensus(c);
  REQUIRE(!m.committees.empty());
  REQUIRE(!m.byzantine.empty());
  const auto& first = m.committees.front();
  CHECK(std::find(first.begin(), first.end(), m.byzantine.front()) != first.end());
}

TEST_CASE("spoofing ordering across schemes on one seed") {
  std::map<ConsensusScheme, double> rounds;
  for (auto s : {ConsensusScheme::proposal, ConsensusScheme::naive}) {
    ScenarioConfig c;
    c.consensus.scheme = s;
    c.consensus.heights = 100;
    c.adversary.byzantine_ratio = 0.3;
    rounds[s] = run_consensus(c).mean_rounds;
  }
  CHECK(rounds[ConsensusScheme::proposal] <= rounds[ConsensusScheme::naive]);
}

TEST_CASE("offload trends and nesting") {
  const auto c = small_offload();
  const auto m = run_offload(c);
  REQUIRE(m.points.size() == 6);
  auto at = [&](std::size_t chi, std::size_t d) { return m.points[chi * 2 + d]; };
  for (std::size_t d = 0; d < 2; ++d) {
    for (std::size_t chi = 1; chi < 3; ++chi) {
      CHECK(at(chi, d).mean_vehicles > at(chi - 1, d).mean_vehicles);
      CHECK(at(chi, d).mean_delay < at(chi - 1, d).mean_delay);
      CHECK(at(chi, d).mean_saved_energy > at(chi - 1, d).mean_saved_energy);
    }
  }
  for (std::size_t chi = 0; chi < 3; ++chi) {
    CHECK(at(chi, 1).mean_delay > at(chi, 0).mean_delay);
    CHECK(at(chi, 1).mean_saved_energy > at(chi, 0).mean_saved_energy);
    CHECK(at(chi, 0).mean_delay < at(chi, 0).mean_delay_no_vfc);
  }
  // common random numbers: the tasks do not depend on the density
  CHECK(at(0, 0).tasks == at(2, 0).tasks);
}

TEST_CASE("seed isolation between subsystems") {
  auto c = small_offload();
  const auto a = offload_summary_json(run_offload(c));
  c.adversary.byzantine_ratio = 0.3;
  c.consensus.block_txs = 7;
  c.learning.slots = 10;
  CHECK(offload_summary_json(run_offload(c)) == a);

  ScenarioConfig k;
  k.consensus.heights = 10;
  const auto base = summary_json(run_consensus(k));
  k.offload.repetitions = 3;
  k.learning.slots = 10;
  CHECK(summary_json(run_consensus(k)) == base);
  CHECK(derive_seed(1, "transport") != derive_seed(1, "mobility"));
}

TEST_CASE("exports") {
  SUBCASE("empty runs give headers-only files") {
    ConsensusMetrics empty;
    std::ostringstream h;
    write_heights_csv(h, empty);
    CHECK(h.str() == "height,round,rounds,commit_time,latency,txs,reports,block_bytes,proposer,proposer_byzantine\n");
    std::ostringstream o;
    write_offload_csv(o, OffloadMetrics{});
    const std::string text = o.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    SweepOptions opt;
    opt.param = SweepParam::pb;
    std::ostringstream s;
    write_csv(s, run_sweep(ScenarioConfig{}, opt));
    CHECK(s.str() == "pb,scheme,seeds,mean_rounds,stderr_rounds,mean_latency_s,completed\n");
  }
  SUBCASE("rounds-versus-pb sweep has one row per (pb, scheme)") {
    ScenarioConfig c;
    c.consensus.heights = 15;
    SweepOptions opt;
    opt.param = parse_sweep_param("pb");
    opt.values = {0.0, 0.2};
    opt.schemes = {ConsensusScheme::proposal, ConsensusScheme::art, ConsensusScheme::naive};
    opt.seeds = 2;
    const auto t = run_sweep(c, opt);
    REQUIRE(t.rows.size() == 6);
    CHECK(t.columns[0] == "pb");
    CHECK(t.columns[3] == "mean_rounds");
    CHECK(t.columns[4] == "stderr_rounds");
    for (const auto& r : t.rows) CHECK(r.size() == t.columns.size());
    CHECK(t.rows[0][1] == "proposal");
    CHECK(t.rows[5][1] == "naive");
    CHECK(t.rows[0][3].get<double>() == 1.0);  // no Byzantine members: every height at round 0
  }
  SUBCASE("unknown sweep parameter") { CHECK_THROWS_AS(parse_sweep_param("gamma"), ConfigError); }
}

TEST_CASE("sweep helpers") {
  CHECK(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0));
  CHECK(loglog_slope({2, 20}, {5, 50}) == doctest::Approx(1.0));
  CHECK_THROWS(loglog_slope({1}, {1}));

  std::vector<std::size_t> out(50);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = i * i; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
  CHECK_THROWS_AS(parallel_for(5, 2, [](std::size_t i) {
                    if (i == 3) throw InvariantViolation("boom");
                  }),
                  InvariantViolation);

  const auto c = with_committee(ScenarioConfig{}, 40);
  CHECK(c.consensus.level1 == 28);
  CHECK(c.network.full_nodes == 80);
  CHECK_NOTHROW(c.check());
}

TEST_CASE("block size raises throughput and latency") {
  ScenarioConfig c;
  c.consensus.heights = 10;
  SweepOptions opt;
  opt.param = SweepParam::block_size;
  opt.values = {1000, 4000};
  const auto t = run_sweep(c, opt);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][3].get<double>() > t.rows[0][3].get<double>());
  CHECK(t.rows[1][4].get<double>() > t.rows[0][4].get<double>());
}
