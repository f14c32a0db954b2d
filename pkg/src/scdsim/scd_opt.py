"""Optimal dispatch probabilities for stochastically coordinated dispatching.

Each job is sent to server ``s`` with probability ``p_s``. With ``a`` jobs in
the round the expected rate-weighted squared deviation from the ideal
workload reduces, up to constants, to the simplex-constrained convex QP

    f(P) = (a-1) * sum p_s^2 / mu_s + sum (2(q_s - mu_s*iwl) + 1) / mu_s * p_s.

On its support the optimum has the closed form

    p_s = (-(2(q_s - mu_s*iwl) + 1) - mu_s * lam0) / (2(a-1)),

and the support is always a prefix of the servers sorted by (2q_s+1)/mu_s,
so only n candidate supports need to be examined.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .balance import LoadSnapshot, compute_ideal_workload, load_order

__all__ = [
    "QpInstance",
    "QpSolution",
    "KktReport",
    "priority_order",
    "single_arrival_probabilities",
    "solve_quadratic",
    "solve_loglinear",
    "solve",
    "brute_force_probabilities",
    "objective_value",
    "multiplier_objective",
    "verify_kkt",
]

SINGLE_ARRIVAL_EPS = 1e-9
FEAS_SLACK = 1e-12
RENORM_TOL = 1e-12
RENORM_MAX = 1e-9
BRUTE_FORCE_MAX_N = 20


@dataclass(frozen=True)
class QpInstance:
    queue_lengths: np.ndarray
    rates: np.ndarray
    total_arrivals: float
    iwl: float

    def __post_init__(self):
        object.__setattr__(self, "queue_lengths", np.asarray(self.queue_lengths, dtype=float))
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        object.__setattr__(self, "total_arrivals", float(self.total_arrivals))
        object.__setattr__(self, "iwl", float(self.iwl))
        if self.total_arrivals < 1:
            raise ValueError("total arrivals must be >= 1")

    @classmethod
    def build(cls, queue_lengths, rates, total_arrivals) -> "QpInstance":
        """Instance with the ideal workload computed from the state."""
        snap = LoadSnapshot(queue_lengths, rates, total_arrivals)
        iwl = compute_ideal_workload(snap, load_order(snap.queue_lengths, snap.rates))
        return cls(snap.queue_lengths, snap.rates, total_arrivals, iwl)

    @property
    def n(self) -> int:
        return self.queue_lengths.size

    def linear_coeffs(self) -> np.ndarray:
        q, mu = self.queue_lengths, self.rates
        return 2.0 * (q - mu * self.iwl) + 1.0


@dataclass
class QpSolution:
    probs: np.ndarray
    lambda0: float
    probable_set_size: int
    objective: float
    order: Optional[np.ndarray] = field(default=None, repr=False)


def priority_order(queue_lengths, rates) -> np.ndarray:
    """Server indices by non-decreasing (2q+1)/mu, ties by index."""
    key = (2.0 * np.asarray(queue_lengths, dtype=float) + 1.0) / np.asarray(rates, dtype=float)
    return np.argsort(key, kind="stable")


def _normalize(p: list[float]) -> list[float]:
    total = 0.0
    for x in p:
        total += x
    err = abs(total - 1.0)
    if err > RENORM_MAX:
        raise RuntimeError(f"probabilities sum to {total!r} after clamping")
    if err > RENORM_TOL:
        p = [x / total for x in p]
    return p


def single_arrival_probabilities(instance: QpInstance) -> np.ndarray:
    """All mass on the first server minimizing (2q+1)/mu (valid for a == 1)."""
    if abs(instance.total_arrivals - 1.0) >= SINGLE_ARRIVAL_EPS:
        raise ValueError("single-arrival solution requires total_arrivals == 1")
    q = instance.queue_lengths.tolist()
    mu = instance.rates.tolist()
    best, best_key = 0, math.inf
    for s in range(len(q)):
        key = (2.0 * q[s] + 1.0) / mu[s]
        if key < best_key:
            best, best_key = s, key
    p = np.zeros(len(q))
    p[best] = 1.0
    return p


def _single_solution(instance: QpInstance) -> QpSolution:
    p = single_arrival_probabilities(instance)
    return QpSolution(p, math.nan, 1, objective_value(instance, p))


def _prepare(instance: QpInstance, order):
    if order is None:
        order = priority_order(instance.queue_lengths, instance.rates)
    order = [int(i) for i in order]
    if sorted(order) != list(range(instance.n)):
        raise ValueError("order must be a permutation of the servers")
    return order


def solve_quadratic(instance: QpInstance, order: Optional[Sequence[int]] = None) -> QpSolution:
    """O(n^2) prefix search: every candidate prefix is evaluated from scratch."""
    if instance.total_arrivals - 1.0 < SINGLE_ARRIVAL_EPS:
        return _single_solution(instance)
    order = _prepare(instance, order)
    q = instance.queue_lengths.tolist()
    mu = instance.rates.tolist()
    a, iwl = instance.total_arrivals, instance.iwl
    am1 = a - 1.0
    n = len(q)
    c = [2.0 * (q[s] - mu[s] * iwl) + 1.0 for s in range(n)]

    best_val, best_p, best_lam, best_j = math.inf, None, math.nan, 0
    for j in range(1, n + 1):
        num = -2.0 * am1
        den = 0.0
        for s in order[:j]:
            num += -c[s]
            den += mu[s]
        lam0 = num / den
        slack = FEAS_SLACK * max(1.0, abs(lam0))
        p = [0.0] * n
        feasible = True
        for s in order[:j]:
            top = -c[s] - mu[s] * lam0
            if top < -slack * mu[s]:
                feasible = False
                break
            p[s] = top / (2.0 * am1)
        if not feasible:
            continue
        val = 0.0
        for s in order[:j]:
            val += am1 / mu[s] * p[s] * p[s] + c[s] / mu[s] * p[s]
        if val < best_val:
            best_val, best_p, best_lam, best_j = val, p, lam0, j
    if best_p is None:
        raise RuntimeError("no feasible prefix")
    probs = np.array(_normalize([max(0.0, x) for x in best_p]))
    return QpSolution(probs, best_lam, best_j, best_val, np.array(order))


def solve_loglinear(
    instance: QpInstance,
    order: Optional[Sequence[int]] = None,
    stats: Optional[dict] = None,
) -> QpSolution:
    """Linear-time prefix search given the (2q+1)/mu order.

    The multiplier and the two objective sums are accumulated incrementally,
    feasibility of a prefix is decided by its last server alone, and the
    probability vector is materialized once for the winning prefix.
    """
    if instance.total_arrivals - 1.0 < SINGLE_ARRIVAL_EPS:
        return _single_solution(instance)
    order = _prepare(instance, order)
    q = instance.queue_lengths.tolist()
    mu = instance.rates.tolist()
    a, iwl = instance.total_arrivals, instance.iwl
    am1 = a - 1.0
    n = len(q)

    num = -2.0 * am1
    den = 0.0
    v1 = 0.0
    v2 = 0.0
    best_val, best_lam, best_j = math.inf, math.nan, 0
    steps = 0
    for k, r in enumerate(order):
        steps += 1
        cr = 2.0 * (q[r] - mu[r] * iwl) + 1.0
        num += -cr
        den += mu[r]
        lam0 = num / den
        # v1, v2 must include r even when this prefix is rejected
        v1 += mu[r] / (4.0 * am1)
        v2 += cr * cr / (4.0 * mu[r] * am1)
        key = (2.0 * q[r] + 1.0) / mu[r]
        if 2.0 * iwl - key < lam0 - FEAS_SLACK * max(1.0, abs(lam0)):
            continue
        val = v1 * lam0 * lam0 - v2
        if val < best_val:
            best_val, best_lam, best_j = val, lam0, k + 1
    if stats is not None:
        stats["steps"] = stats.get("steps", 0) + steps
    if best_j == 0:
        raise RuntimeError("no feasible prefix")

    p = [0.0] * n
    for s in order[:best_j]:
        cs = 2.0 * (q[s] - mu[s] * iwl) + 1.0
        p[s] = max(0.0, (-cs - mu[s] * best_lam) / (2.0 * am1))
    probs = np.array(_normalize(p))
    return QpSolution(probs, best_lam, best_j, best_val, np.array(order))


def solve(instance: QpInstance, method: str = "loglinear") -> QpSolution:
    if method == "loglinear":
        return solve_loglinear(instance)
    if method == "quadratic":
        return solve_quadratic(instance)
    if method == "brute":
        return brute_force_probabilities(instance)
    raise ValueError(f"unknown method {method!r}")


def brute_force_probabilities(instance: QpInstance, return_all: bool = False):
    """Exhaustive search over all 2^n - 1 candidate supports (test oracle).

    With ``return_all`` also returns ``(subset, objective)`` for every subset
    whose closed-form probabilities are all non-negative.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refused for n={n} > {BRUTE_FORCE_MAX_N}")
    if instance.total_arrivals - 1.0 < SINGLE_ARRIVAL_EPS:
        raise ValueError("brute force needs total_arrivals > 1")
    mu = instance.rates
    c = instance.linear_coeffs()
    am1 = instance.total_arrivals - 1.0

    best = None
    feasible = []
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            idx = list(subset)
            lam0 = (-2.0 * am1 - c[idx].sum()) / mu[idx].sum()
            p_sub = (-c[idx] - mu[idx] * lam0) / (2.0 * am1)
            if (p_sub < -FEAS_SLACK).any():
                continue
            p = np.zeros(n)
            p[idx] = np.maximum(p_sub, 0.0)
            val = objective_value(instance, p)
            feasible.append((subset, val))
            if best is None or val < best[0]:
                best = (val, p, lam0, size)
    val, p, lam0, size = best
    sol = QpSolution(p / p.sum(), float(lam0), size, float(val))
    if return_all:
        return sol, feasible
    return sol


def objective_value(instance: QpInstance, probs) -> float:
    p = np.asarray(probs, dtype=float)
    mu = instance.rates
    am1 = instance.total_arrivals - 1.0
    return float(am1 * np.sum(p * p / mu) + np.sum(instance.linear_coeffs() / mu * p))


def multiplier_objective(instance: QpInstance, solution: QpSolution) -> float:
    """Objective from the multiplier: lam0^2 * v1 - v2 over the support."""
    sup = solution.probs > 0
    mu = instance.rates[sup]
    c = instance.linear_coeffs()[sup]
    am1 = instance.total_arrivals - 1.0
    v1 = float(np.sum(mu / (4.0 * am1)))
    v2 = float(np.sum(c * c / (4.0 * mu * am1)))
    return solution.lambda0 ** 2 * v1 - v2


@dataclass
class KktReport:
    ok: bool
    lambda0: float
    stationarity: float
    dual: float
    primal_sum: float
    primal_min: float
    complementarity: float

    def __bool__(self) -> bool:
        return self.ok


def verify_kkt(instance: QpInstance, solution, tol: float = 1e-8) -> KktReport:
    """Check the KKT conditions of ``solution`` (a QpSolution or a raw vector).

    The equality multiplier is recovered from the support, so any candidate
    vector can be checked. Multipliers of the non-negativity constraints are
    zero on the support and equal the Lagrangian gradient off it.
    """
    probs = solution.probs if isinstance(solution, QpSolution) else solution
    p = np.asarray(probs, dtype=float)
    mu = instance.rates
    am1 = instance.total_arrivals - 1.0
    if am1 <= 0:
        raise ValueError("KKT check needs total_arrivals > 1")
    grad = 2.0 * am1 * p / mu + instance.linear_coeffs() / mu
    sup = p > 0
    if not sup.any():
        return KktReport(False, math.nan, math.inf, math.inf, float(p.sum()), float(p.min()), math.inf)
    lam0 = float(-np.mean(grad[sup]))
    scale = max(1.0, abs(lam0))
    stationarity = float(np.max(np.abs(grad[sup] + lam0)))
    off = grad[~sup] + lam0
    dual = float(off.min()) if off.size else 0.0
    primal_sum = float(p.sum())
    primal_min = float(p.min())
    # complementary slackness: p_s * Lambda_s with Lambda_s = grad_s + lam0
    comp = float(np.max(np.abs(p * (grad + lam0))))
    ok = (
        stationarity <= tol * scale
        and dual >= -tol * scale
        and abs(primal_sum - 1.0) <= tol
        and primal_min >= -tol
        and comp <= tol * scale
    )
    return KktReport(ok, lam0, stationarity, dual, primal_sum, primal_min, comp)
