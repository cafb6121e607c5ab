import hashlib
import math

import pytest

import rescuesim as rs


def test_equilibrium_matches_grid_oracle():
    p = rs.GameParams()
    p.delay = 0.4
    p.vehicle_energy = 0.3
    e = rs.equilibrium(p)
    assert 0.0 <= e["x"] <= p.x_max
    assert 0.0 <= e["y"] <= p.y_max
    o = rs.grid_oracle(p, 400, 400)
    assert o["leader_gap"] <= o["resolution_bound"] + 1e-12
    assert o["follower_cell_error"] <= 1.0
    # the follower's reply to the equilibrium price is the equilibrium AoCR
    assert rs.best_response_aocr(e["y"], p) == pytest.approx(e["x"], rel=1e-9, abs=1e-12)


def test_best_response_beats_neighbours():
    p = rs.GameParams()
    p.delay = 0.5
    y = 5.0
    x = rs.best_response_aocr(y, p)
    u = rs.vehicle_payoff(x, y, p)
    for dx in (-1e-3, 1e-3):
        xx = min(max(x + dx, 0.0), p.x_max)
        assert rs.vehicle_payoff(xx, y, p) <= u + 1e-12


def test_reputation_one_sbc_step():
    r = rs.reputation_stream([["sbc"]])
    assert r[0] == 3.0
    assert r[1] == pytest.approx(4.0 + 3.0 * math.exp(-0.5), abs=1e-12)
    assert rs.sigmoid(0.0) == pytest.approx(0.5)
    with pytest.raises(rs.ConfigError):
        rs.reputation_stream([["nonsense"]])


def test_sha256_matches_hashlib():
    for data in (b"", b"abc", bytes(range(200))):
        assert rs.sha256(data) == hashlib.sha256(data).hexdigest()


def test_effective_config_and_errors():
    eff = rs.effective_config({"consensus": {"heights": 7}})
    assert eff["consensus"]["heights"] == 7
    assert "offload" in eff and "network" in eff
    with pytest.raises(rs.ConfigError):
        rs.effective_config({"consensus": {"comittee": 3}})
    with pytest.raises(rs.ConfigError):
        rs.effective_config({"adversary": {"byzantine_ratio": 2.0}})


def test_consensus_run_is_deterministic():
    cfg = {"consensus": {"heights": 10}, "seeds": {"base": 3}}
    a = rs.run_consensus(cfg)
    b = rs.run_consensus(cfg)
    assert a == b
    assert len(a["heights"]) == 10
    assert a["conflicting_commits"] == 0
    assert a["completed"]


def test_offload_rows():
    out = rs.run_offload({"offload": {"repetitions": 2}})
    assert out["rows"]
    for row in out["rows"]:
        assert 0.0 < float(row["mean_delay_s"]) < float(row["mean_delay_no_vfc_s"])
        assert int(row["offloaded"]) + int(row["local"]) == int(row["tasks"])


def test_sweep_rows():
    rows = rs.run_sweep("pb", [0.0, 0.2], {"consensus": {"heights": 5}}, schemes=["proposal", "naive"], seeds=1)
    assert len(rows) == 4
    assert {r["scheme"] for r in rows} == {"proposal", "naive"}
    with pytest.raises(rs.ConfigError):
        rs.run_sweep("gamma", [1.0])


def test_learning_short_run():
    out = rs.run_learning({"learning": {"slots": 60, "scheme": "greedy"}})
    assert out["scheme"] == "greedy"
    assert len(out["x"]) == 60
