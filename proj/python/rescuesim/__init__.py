"""Python bindings for the rescuesim C++ core.

Scenario configs are plain dicts with the same layout as the CLI's JSON
config files; missing keys take their defaults.
"""

import csv
import io
import json

from ._core import (
    ConfigError,
    GameParams,
    InvariantViolation,
    best_response_aocr,
    equilibrium,
    flying_power,
    grid_oracle,
    reputation_stream,
    sha256,
    sigmoid,
    uav_payoff,
    vehicle_payoff,
)
from . import _core

__all__ = [
    "ConfigError",
    "GameParams",
    "InvariantViolation",
    "best_response_aocr",
    "effective_config",
    "equilibrium",
    "flying_power",
    "grid_oracle",
    "reputation_stream",
    "run_consensus",
    "run_learning",
    "run_offload",
    "run_sweep",
    "sha256",
    "sigmoid",
    "uav_payoff",
    "vehicle_payoff",
]


def _dump(config):
    return json.dumps(config or {})


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def effective_config(config=None):
    """Validated config with every default filled in."""
    return json.loads(_core._effective_config(_dump(config)))


def run_consensus(config=None):
    """Run one consensus scenario. Returns the summary dict plus
    'heights' (list of per-height dicts) and 'report_list'."""
    out = json.loads(_core._run_consensus(_dump(config)))
    out["heights"] = _rows(out.pop("heights_csv"))
    return out


def run_offload(config=None):
    """Run the offloading scenario. Returns the summary plus 'rows' from the CSV table."""
    out = json.loads(_core._run_offload(_dump(config)))
    out["rows"] = _rows(out.pop("csv"))
    return out


def run_sweep(param, values, config=None, schemes=(), seeds=3):
    """Sweep one parameter (pb, block_size, z, chi, data, psi).
    Returns a list of dicts, one per table row."""
    table = json.loads(
        _core._run_sweep(_dump(config), param, [float(v) for v in values], list(schemes), int(seeds))
    )
    return [dict(zip(table["columns"], row)) for row in table["rows"]]


def run_learning(config=None):
    """Run the repeated pricing game with the learners named in config['learning']."""
    return json.loads(_core._run_learning(_dump(config)))
