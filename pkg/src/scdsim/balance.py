"""Ideal workload (IWL) and ideally balanced assignment (IBA) by water-filling.

The load of server ``s`` is ``(q_s + work_s) / mu_s``. The IWL is the largest
minimum load reachable by splitting ``a`` units of work continuously; the IBA
raises every server below that level up to it and leaves the rest alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "LoadSnapshot",
    "IdealAssignment",
    "load_order",
    "compute_ideal_workload",
    "compute_iba",
    "ideal_assignment",
    "bisect_ideal_workload",
]


@dataclass(frozen=True)
class LoadSnapshot:
    queue_lengths: np.ndarray
    rates: np.ndarray
    total_arrivals: float

    def __post_init__(self):
        q = np.asarray(self.queue_lengths, dtype=float)
        mu = np.asarray(self.rates, dtype=float)
        if q.shape != mu.shape or q.ndim != 1:
            raise ValueError("queue_lengths and rates must be 1-d of equal length")
        if self.total_arrivals < 0:
            raise ValueError("total arrivals must be non-negative")
        object.__setattr__(self, "queue_lengths", q)
        object.__setattr__(self, "rates", mu)
        object.__setattr__(self, "total_arrivals", float(self.total_arrivals))

    @property
    def n(self) -> int:
        return self.queue_lengths.size


@dataclass(frozen=True)
class IdealAssignment:
    iwl: float
    per_server_work: np.ndarray


def load_order(queue_lengths: Sequence[float], rates: Sequence[float]) -> np.ndarray:
    """Server indices by non-decreasing q/mu, ties by index."""
    load = np.asarray(queue_lengths, dtype=float) / np.asarray(rates, dtype=float)
    return np.argsort(load, kind="stable")


def compute_ideal_workload(
    snapshot: LoadSnapshot,
    order: Optional[Sequence[int]] = None,
    stats: Optional[dict] = None,
) -> float:
    """Water level reached when ``a`` units of work fill the least loaded servers.

    Linear in n once ``order`` (see :func:`load_order`) is given. ``stats``, if
    passed, receives the number of loop iterations under ``"steps"``.
    """
    q, mu = snapshot.queue_lengths, snapshot.rates
    n = snapshot.n
    if n == 0:
        raise ValueError("no servers")
    if order is None:
        order = load_order(q, mu)
    q = q.tolist()
    mu = mu.tolist()
    order = [int(i) for i in order]

    filled = snapshot.total_arrivals
    r = order[0]
    iwl = q[r] / mu[r]
    mu_tot = 0.0
    k = 0
    steps = 0
    while filled > 0:
        steps += 1
        mu_tot += mu[r]
        k += 1
        if k == n:
            iwl = iwl + filled / mu_tot
            break
        r = order[k]
        level = q[r] / mu[r]
        delta = level - iwl
        if delta * mu_tot >= filled:
            iwl = iwl + filled / mu_tot
            break
        filled -= delta * mu_tot
        iwl = level
    if stats is not None:
        stats["steps"] = stats.get("steps", 0) + steps
    return iwl


def compute_iba(snapshot: LoadSnapshot, iwl: float) -> IdealAssignment:
    q, mu = snapshot.queue_lengths, snapshot.rates
    work = np.maximum(mu * iwl - q, 0.0)
    return IdealAssignment(iwl=float(iwl), per_server_work=work)


def ideal_assignment(queue_lengths, rates, total_arrivals) -> IdealAssignment:
    snap = LoadSnapshot(queue_lengths, rates, total_arrivals)
    return compute_iba(snap, compute_ideal_workload(snap))


def bisect_ideal_workload(snapshot: LoadSnapshot, tol: float = 1e-13) -> float:
    """Reference IWL by bisection on the fill level; used as a test oracle."""
    q, mu, a = snapshot.queue_lengths, snapshot.rates, snapshot.total_arrivals
    load = q / mu
    lo = float(load.min())
    if a == 0:
        return lo
    hi = float(load.max()) + a / float(mu.sum()) + 1.0

    def needed(level):
        return float(np.sum(mu * np.maximum(0.0, level - load)))

    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if needed(mid) <= a:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
