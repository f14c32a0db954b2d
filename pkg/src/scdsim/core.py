"""Domain types, random streams and samplers shared by the rest of the package."""

from __future__ import annotations

import zlib
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ClusterSpec",
    "Job",
    "ServerQueue",
    "RoundTraffic",
    "RandomStreams",
    "PRNG_DESCRIPTION",
    "as_probability_vector",
    "draw_poisson",
    "draw_geometric_capacity",
    "offered_load",
]

PRNG_DESCRIPTION = (
    "numpy PCG64; stream = SeedSequence(master_seed, spawn_key=K) with "
    "K=(0,) arrivals, (1,) capacities, (2,) server rates, "
    "(3, crc32(policy), d) policy sampling of dispatcher d, (4,) timing warm-up"
)

PROB_SUM_TOL = 1e-9
PROB_NEG_TOL = 1e-12


@dataclass(frozen=True)
class ClusterSpec:
    """Servers with processing rates and dispatchers with arrival rates (jobs/round)."""

    server_rates: tuple[float, ...]
    dispatcher_rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "server_rates", tuple(float(x) for x in self.server_rates))
        object.__setattr__(self, "dispatcher_rates", tuple(float(x) for x in self.dispatcher_rates))
        if len(self.server_rates) < 1:
            raise ValueError("cluster needs at least one server")
        if len(self.dispatcher_rates) < 1:
            raise ValueError("cluster needs at least one dispatcher")
        if any(not mu > 0 for mu in self.server_rates):
            raise ValueError("server rates must be positive")
        if any(not lam >= 0 for lam in self.dispatcher_rates):
            raise ValueError("dispatcher rates must be non-negative")

    @property
    def n(self) -> int:
        return len(self.server_rates)

    @property
    def m(self) -> int:
        return len(self.dispatcher_rates)

    @property
    def total_rate(self) -> float:
        return float(sum(self.server_rates))

    def require_admissible(self) -> None:
        if not sum(self.dispatcher_rates) < self.total_rate:
            raise ValueError(f"inadmissible cluster: offered load {offered_load(self):.6g} >= 1")

    @classmethod
    def with_load(cls, server_rates: Sequence[float], m: int, rho: float) -> "ClusterSpec":
        """Equal-rate dispatchers sized so that the offered load is ``rho``."""
        total = float(sum(server_rates))
        return cls(tuple(server_rates), (rho * total / m,) * m)


def offered_load(spec: ClusterSpec) -> float:
    return sum(spec.dispatcher_rates) / spec.total_rate


@dataclass(frozen=True)
class Job:
    arrival_round: int
    seq: int = 0


@dataclass
class ServerQueue:
    """FIFO queue of jobs at one server."""

    rate: float
    jobs: deque = field(default_factory=deque)

    def __len__(self) -> int:
        return len(self.jobs)

    def push(self, job: Job) -> None:
        self.jobs.append(job)

    def serve(self, capacity: int) -> list[Job]:
        k = min(capacity, len(self.jobs))
        return [self.jobs.popleft() for _ in range(k)]


@dataclass(frozen=True)
class RoundTraffic:
    arrivals_per_dispatcher: tuple[int, ...]
    capacities_per_server: tuple[int, ...]


def as_probability_vector(probs) -> np.ndarray:
    """Validate a dispatch distribution and clamp tiny negatives to zero."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be a non-empty 1-d sequence")
    if (p < -PROB_NEG_TOL).any():
        raise ValueError(f"negative probability {p.min():.3g}")
    if abs(p.sum() - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probabilities sum to {p.sum():.15g}")
    return np.maximum(p, 0.0)


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


class RandomStreams:
    """Independent generators derived from one master seed.

    Arrival and capacity draws never depend on the policy, so two runs with
    the same seed see the same traffic whatever the dispatching rule.
    """

    def __init__(self, master_seed: int):
        if not 0 <= int(master_seed) < 2**64:
            raise ValueError("master seed must fit in 64 unsigned bits")
        self.master_seed = int(master_seed)
        self.arrivals = _stream(self.master_seed, 0)
        self.capacities = _stream(self.master_seed, 1)

    def rates(self) -> np.random.Generator:
        return _stream(self.master_seed, 2)

    def policy(self, name: str, dispatcher: int) -> np.random.Generator:
        return _stream(self.master_seed, 3, zlib.crc32(name.encode()), dispatcher)

    def scratch(self) -> np.random.Generator:
        return _stream(self.master_seed, 4)

    def draw_rates(self, n: int, lo: float, hi: float) -> np.ndarray:
        return self.rates().uniform(lo, hi, size=n)

    def traffic_chunk(self, spec: ClusterSpec, rounds: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``rounds`` rows of arrivals (rounds x m) and capacities (rounds x n).

        Draws are consumed row by row, so round t gets the same values no
        matter how the run is chunked.
        """
        lam = np.asarray(spec.dispatcher_rates)
        p = 1.0 / (1.0 + np.asarray(spec.server_rates))
        arrivals = self.arrivals.poisson(lam, size=(rounds, spec.m)).astype(np.int64)
        caps = (self.capacities.geometric(p, size=(rounds, spec.n)) - 1).astype(np.int64)
        return arrivals, caps


def draw_poisson(stream: np.random.Generator, lam: float) -> int:
    if lam < 0:
        raise ValueError("Poisson rate must be non-negative")
    if lam == 0:
        return 0
    return int(stream.poisson(lam))


def draw_geometric_capacity(stream: np.random.Generator, mu: float) -> int:
    """Geometric on {0, 1, 2, ...} with success probability 1/(1+mu), so the mean is mu."""
    if not mu > 0:
        raise ValueError("service rate must be positive")
    return int(stream.geometric(1.0 / (1.0 + mu))) - 1
