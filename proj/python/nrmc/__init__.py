"""Redistricting samplers: reversible single-node-flip and flow-guided variants.

The heavy lifting lives in the compiled module; this package re-exports its
surface and adds a small convenience for running experiments from dicts.
"""

import json as _json

from ._nrmc import (
    ConfigError,
    Graph,
    Plan,
    ScoreSpec,
    ValiditySpec,
    is_valid,
    load_plan_csv,
    run_experiment,
    total_score,
)

__all__ = [
    "ConfigError",
    "Graph",
    "Plan",
    "ScoreSpec",
    "ValiditySpec",
    "is_valid",
    "load_plan_csv",
    "run",
    "run_experiment",
    "total_score",
]


def run(config, resume=False):
    """Run an experiment from a dict (or JSON string) and return the diagnostics."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return run_experiment(config, resume)
