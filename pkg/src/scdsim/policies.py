"""Dispatching policies behind one interface.

Every policy maps a :class:`PolicyContext` (round-start queue snapshot plus
the dispatcher's own arrivals, random stream and private state) to a list of
target servers, one per arriving job. Argmin ties go to the lowest index.

Random draws come only from ``ctx.stream.random()`` and are consumed in a
fixed order, which the compiled kernel reproduces exactly.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .balance import LoadSnapshot, compute_ideal_workload, load_order
from .scd_opt import (
    QpInstance,
    priority_order,
    single_arrival_probabilities,
    solve_loglinear,
    solve_quadratic,
)

__all__ = [
    "POLICY_NAMES",
    "PolicyContext",
    "PolicyDecision",
    "get_policy",
    "new_local_state",
    "scd_probabilities",
    "scd_dispatch",
    "scd_quadratic_dispatch",
    "twf_dispatch",
    "jsq_dispatch",
    "sed_dispatch",
    "jsq_d_dispatch",
    "h_jsq_d_dispatch",
    "jiq_dispatch",
    "h_jiq_dispatch",
    "lsq_dispatch",
    "h_lsq_dispatch",
    "wr_dispatch",
]

POLICY_NAMES = (
    "scd", "scd-quadratic", "jsq", "sed", "jsq2", "hjsq2",
    "jiq", "hjiq", "lsq", "hlsq", "wr", "twf",
)


@dataclass
class PolicyContext:
    dispatcher_index: int
    dispatcher_count: int
    queue_snapshot: list
    rates: list
    arrivals: int
    stream: Any
    local_state: Any = None
    rate_cum: Optional[list] = None

    def __post_init__(self):
        self.queue_snapshot = [int(x) for x in self.queue_snapshot]
        self.rates = [float(x) for x in self.rates]
        if self.rate_cum is None:
            self.rate_cum = list(itertools.accumulate(self.rates))

    @property
    def n(self) -> int:
        return len(self.rates)


@dataclass
class PolicyDecision:
    per_job_targets: list = field(default_factory=list)

    def counts(self, n: int) -> np.ndarray:
        return np.bincount(np.asarray(self.per_job_targets, dtype=np.int64), minlength=n)


# -- sampling helpers ------------------------------------------------------

def _uniform_index(stream, k: int) -> int:
    i = int(stream.random() * k)
    return k - 1 if i >= k else i


def _weighted_index(stream, cum: list) -> int:
    """Index i with probability (cum[i] - cum[i-1]) / cum[-1]."""
    u = stream.random() * cum[-1]
    i = bisect.bisect_right(cum, u)
    return len(cum) - 1 if i >= len(cum) else i


def _sample_distinct(stream, d: int, draw: Callable[[], int]) -> list:
    # rejection sampling == sequential sampling without replacement
    chosen: list = []
    while len(chosen) < d:
        s = draw()
        if s not in chosen:
            chosen.append(s)
    return chosen


def _argmin_count(local: list) -> int:
    best, best_v = 0, local[0]
    for s in range(1, len(local)):
        if local[s] < best_v:
            best, best_v = s, local[s]
    return best


def _argmin_delay(local: list, rates: list) -> int:
    best, best_v = 0, (local[0] + 1) / rates[0]
    for s in range(1, len(local)):
        v = (local[s] + 1) / rates[s]
        if v < best_v:
            best, best_v = s, v
    return best


# -- SCD family --------------------------------------------------------------

def scd_probabilities(q, rates, a_est: float, method: str = "loglinear") -> np.ndarray:
    """Dispatch distribution for estimated total arrivals ``a_est``."""
    snap = LoadSnapshot(q, rates, a_est)
    iwl = compute_ideal_workload(snap, load_order(snap.queue_lengths, snap.rates))
    inst = QpInstance(snap.queue_lengths, snap.rates, a_est, iwl)
    if a_est - 1.0 < 1e-9:
        return single_arrival_probabilities(inst)
    order = priority_order(snap.queue_lengths, snap.rates)
    if method == "quadratic":
        return solve_quadratic(inst, order).probs
    return solve_loglinear(inst, order).probs


def _draw_from(ctx: PolicyContext, probs) -> PolicyDecision:
    cum = list(itertools.accumulate(float(x) for x in probs))
    return PolicyDecision([_weighted_index(ctx.stream, cum) for _ in range(ctx.arrivals)])


def scd_dispatch(ctx: PolicyContext, method: str = "loglinear") -> PolicyDecision:
    a_est = ctx.dispatcher_count * ctx.arrivals
    if ctx.arrivals == 0:
        return PolicyDecision([])
    return _draw_from(ctx, scd_probabilities(ctx.queue_snapshot, ctx.rates, a_est, method))


def scd_quadratic_dispatch(ctx: PolicyContext) -> PolicyDecision:
    return scd_dispatch(ctx, method="quadratic")


def twf_dispatch(ctx: PolicyContext) -> PolicyDecision:
    """SCD computed as if every server had unit rate (homogeneous water-filling)."""
    if ctx.arrivals == 0:
        return PolicyDecision([])
    a_est = ctx.dispatcher_count * ctx.arrivals
    probs = scd_probabilities(ctx.queue_snapshot, [1.0] * ctx.n, a_est)
    return _draw_from(ctx, probs)


# -- greedy baselines ----------------------------------------------------------

def jsq_dispatch(ctx: PolicyContext) -> PolicyDecision:
    local = list(ctx.queue_snapshot)
    out = []
    for _ in range(ctx.arrivals):
        s = _argmin_count(local)
        local[s] += 1
        out.append(s)
    return PolicyDecision(out)


def sed_dispatch(ctx: PolicyContext) -> PolicyDecision:
    local = list(ctx.queue_snapshot)
    out = []
    for _ in range(ctx.arrivals):
        s = _argmin_delay(local, ctx.rates)
        local[s] += 1
        out.append(s)
    return PolicyDecision(out)


def _power_of_d(ctx: PolicyContext, d_samples: int, heterogeneous: bool) -> PolicyDecision:
    n = ctx.n
    if not 1 <= d_samples <= n:
        d_samples = min(max(d_samples, 1), n)
    local = list(ctx.queue_snapshot)
    rates = ctx.rates
    if heterogeneous:
        draw = lambda: _weighted_index(ctx.stream, ctx.rate_cum)  # noqa: E731
    else:
        draw = lambda: _uniform_index(ctx.stream, n)  # noqa: E731
    out = []
    for _ in range(ctx.arrivals):
        best = -1
        best_v = math.inf
        for s in _sample_distinct(ctx.stream, d_samples, draw):
            v = (local[s] + 1) / rates[s] if heterogeneous else float(local[s])
            if v < best_v or (v == best_v and s < best):
                best, best_v = s, v
        local[best] += 1
        out.append(best)
    return PolicyDecision(out)


def jsq_d_dispatch(ctx: PolicyContext, d_samples: int = 2) -> PolicyDecision:
    return _power_of_d(ctx, d_samples, heterogeneous=False)


def h_jsq_d_dispatch(ctx: PolicyContext, d_samples: int = 2) -> PolicyDecision:
    return _power_of_d(ctx, d_samples, heterogeneous=True)


def _idle_queue(ctx: PolicyContext, heterogeneous: bool) -> PolicyDecision:
    local = list(ctx.queue_snapshot)
    rates = ctx.rates
    n = ctx.n
    out = []
    for _ in range(ctx.arrivals):
        idle = [s for s in range(n) if local[s] == 0]
        if idle and heterogeneous:
            total = 0.0
            for s in idle:
                total += rates[s]
            u = ctx.stream.random() * total
            acc = 0.0
            pick = idle[-1]
            for s in idle:
                acc += rates[s]
                if acc > u:
                    pick = s
                    break
        elif idle:
            pick = idle[_uniform_index(ctx.stream, len(idle))]
        elif heterogeneous:
            pick = _weighted_index(ctx.stream, ctx.rate_cum)
        else:
            pick = _uniform_index(ctx.stream, n)
        local[pick] += 1
        out.append(pick)
    return PolicyDecision(out)


def jiq_dispatch(ctx: PolicyContext) -> PolicyDecision:
    return _idle_queue(ctx, heterogeneous=False)


def h_jiq_dispatch(ctx: PolicyContext) -> PolicyDecision:
    return _idle_queue(ctx, heterogeneous=True)


def new_local_state(n: int) -> list:
    """Dispatcher-local queue-length view used by the LSQ family; starts empty."""
    return [0] * n


def _local_shortest(ctx: PolicyContext, heterogeneous: bool, refresh: int) -> PolicyDecision:
    local = ctx.local_state
    if local is None:
        raise ValueError("LSQ policies need a local_state array")
    for _ in range(refresh):
        if heterogeneous:
            i = _weighted_index(ctx.stream, ctx.rate_cum)
        else:
            i = _uniform_index(ctx.stream, ctx.n)
        local[i] = ctx.queue_snapshot[i]
    out = []
    for _ in range(ctx.arrivals):
        s = _argmin_delay(local, ctx.rates) if heterogeneous else _argmin_count(local)
        local[s] += 1
        out.append(s)
    return PolicyDecision(out)


def lsq_dispatch(ctx: PolicyContext, refresh: int = 1) -> PolicyDecision:
    """Shortest queue by a persistent local view; ``refresh`` entries are
    re-read from the true snapshot (sampled with replacement) per decision."""
    return _local_shortest(ctx, False, refresh)


def h_lsq_dispatch(ctx: PolicyContext, refresh: int = 1) -> PolicyDecision:
    return _local_shortest(ctx, True, refresh)


def wr_dispatch(ctx: PolicyContext) -> PolicyDecision:
    return PolicyDecision([_weighted_index(ctx.stream, ctx.rate_cum) for _ in range(ctx.arrivals)])


_REGISTRY: dict = {
    "scd": scd_dispatch,
    "scd-quadratic": scd_quadratic_dispatch,
    "jsq": jsq_dispatch,
    "sed": sed_dispatch,
    "jsq2": jsq_d_dispatch,
    "hjsq2": h_jsq_d_dispatch,
    "jiq": jiq_dispatch,
    "hjiq": h_jiq_dispatch,
    "lsq": lsq_dispatch,
    "hlsq": h_lsq_dispatch,
    "wr": wr_dispatch,
    "twf": twf_dispatch,
}

STATEFUL = frozenset({"lsq", "hlsq"})


def get_policy(name: str) -> Callable[[PolicyContext], PolicyDecision]:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}") from None
