"""Simulation and planning for remote queues under randomized shortest-queue routing.

Scenarios are plain dicts in the JSON scenario format (see docs/scenario_schema.md),
or paths to JSON files.
"""

import json
import os

from . import _remoteq
from ._remoteq import ConfigError, PlanningError, SimulationFault, n_from_rho, oscillation_index

__all__ = [
    "ConfigError",
    "PlanningError",
    "SimulationFault",
    "coupled",
    "load",
    "n_from_rho",
    "oscillation_index",
    "plan",
    "run",
    "scaling",
    "simulate",
    "solve_transportation",
    "sweep",
    "table",
    "validate",
]


def _text(scenario):
    if isinstance(scenario, (str, os.PathLike)):
        with open(scenario, encoding="utf-8") as f:
            return f.read()
    return json.dumps(scenario)


def load(path):
    """Read a scenario file and return it with every default filled in."""
    return json.loads(_remoteq.normalize(_text(path)))


def validate(scenario):
    """List of 'field: problem' strings; empty when the scenario is valid."""
    return _remoteq.validate(_text(scenario))


def run(scenario, replication=0, record_customers=False):
    """One replication; returns its statistics."""
    return _remoteq.run(_text(scenario), replication, record_customers)


def simulate(scenario, reps=500, parallel=1):
    """Replications 0..reps-1; returns one dict per metric with mean and 95% half-width."""
    return _remoteq.simulate(_text(scenario), reps, parallel)


def sweep(scenario, variable, grid, reps=500, parallel=1):
    """MTCC over a grid of chi, tau_bar, delay, rho or n."""
    return _remoteq.sweep(_text(scenario), variable, list(grid), reps, parallel)


def scaling(n_grid, rule="corollary1", constant=0.4, reps=40, seed=1, parallel=1):
    return _remoteq.scaling(list(n_grid), rule, constant, reps, seed, parallel)


def plan(scenario, exact_width=False):
    """Capacities, routing plan, chi** and tau_bar; includes the derived scenario."""
    return json.loads(_remoteq.plan(_text(scenario), exact_width))


def coupled(scenario, pool="ssp", reps=10):
    return _remoteq.coupled(_text(scenario), pool, reps)


def table(table_id, reps=500, seed=1, parallel=1):
    """CSV text of table t1, t2 or t3."""
    return _remoteq.table(table_id, reps, seed, parallel)


def solve_transportation(supply, demand, cost):
    """Balanced transportation problem; cost is row-major. Returns (flow, objective)."""
    return _remoteq.solve_transportation(list(supply), list(demand), list(cost))
