"""Stochastically coordinated dispatching (SCD) for heterogeneous clusters.

Water-filling ideal workload, optimal dispatch probabilities, ten baseline
policies and a round-based multi-dispatcher simulator.
"""

from .balance import compute_iba, compute_ideal_workload, ideal_assignment
from .core import ClusterSpec, RandomStreams, offered_load
from .policies import POLICY_NAMES
from .scd_opt import QpInstance, solve_loglinear, solve_quadratic
from .sim import BACKENDS, SimulationConfig, run_simulation, summarize

__version__ = "0.1.0"

__all__ = [
    "BACKENDS",
    "ClusterSpec",
    "POLICY_NAMES",
    "QpInstance",
    "RandomStreams",
    "SimulationConfig",
    "compute_iba",
    "compute_ideal_workload",
    "ideal_assignment",
    "offered_load",
    "run_simulation",
    "solve_loglinear",
    "solve_quadratic",
    "summarize",
]
