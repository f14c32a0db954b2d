"""Round-based simulation of a multi-dispatcher cluster.

Each round has three phases. Dispatchers receive Poisson arrivals, every
dispatcher with jobs decides targets from the same round-start snapshot, the
jobs are enqueued, and then each server completes up to its geometric
capacity draw from the head of its FIFO queue. A job served in the round it
arrived has response time 1.

Two interchangeable engines run the loop: the compiled one in
``scdsim._kernels`` and :class:`PyEngine` below. The compiled engine is used
when importable unless ``SCDSIM_BACKEND=python`` is set.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import PRNG_DESCRIPTION, ClusterSpec, Job, RandomStreams, RoundTraffic, ServerQueue
from .policies import POLICY_NAMES, STATEFUL, PolicyContext, get_policy, new_local_state

try:
    from . import _kernels
except ImportError:  # pragma: no cover - exercised only without a compiler
    _kernels = None

__all__ = [
    "BACKENDS",
    "default_backend",
    "SimulationConfig",
    "SimulationReport",
    "Summary",
    "PyEngine",
    "SimState",
    "run_round",
    "run_simulation",
    "summarize",
    "nearest_rank",
]

BACKENDS = ("compiled", "python") if _kernels is not None else ("python",)
CHUNK_ROUNDS = 2048


def default_backend() -> str:
    env = os.environ.get("SCDSIM_BACKEND", "").strip().lower()
    if env:
        if env not in ("compiled", "python"):
            raise ValueError(f"SCDSIM_BACKEND must be 'compiled' or 'python', got {env!r}")
        if env == "compiled" and _kernels is None:
            raise ImportError("compiled kernels are not built")
        return env
    return BACKENDS[0]


@dataclass(frozen=True)
class SimulationConfig:
    cluster: ClusterSpec
    policy: str
    rounds: int
    seed: int
    warmup_rounds: int = 0
    d_samples: int = 2
    lsq_refresh: int = 1
    record_timing: bool = False
    record_trace: bool = False

    def __post_init__(self):
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}; choose from {', '.join(POLICY_NAMES)}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 <= self.warmup_rounds < self.rounds:
            raise ValueError("warmup_rounds must be in [0, rounds)")
        if self.d_samples < 1:
            raise ValueError("d_samples must be >= 1")
        if self.lsq_refresh < 1:
            raise ValueError("lsq_refresh must be >= 1")


@dataclass
class SimulationReport:
    """Outcome of one run.

    Response times are kept as a histogram: ``response_hist[k]`` jobs spent
    ``k`` rounds in the system. ``per_round_total_queue[t]`` is the total
    queue length at the end of round ``t``.
    """

    response_hist: np.ndarray
    per_round_total_queue: np.ndarray
    decision_times_ns: np.ndarray
    final_queue_lengths: np.ndarray
    arrived_jobs: int
    departed_jobs: int
    dropped: int = 0
    trace: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    @property
    def completed_jobs(self) -> int:
        return int(self.response_hist.sum())

    @property
    def response_times(self) -> np.ndarray:
        return np.repeat(np.arange(self.response_hist.size), self.response_hist)


@dataclass
class SimState:
    """Mutable state of the pure-Python engine."""

    cluster: ClusterSpec
    policy: str
    streams: list
    queues: list
    local_states: list
    warmup: int = 0
    d_samples: int = 2
    lsq_refresh: int = 1
    debug: bool = False
    scratch: object = None
    hist: dict = field(default_factory=dict)
    decision_ns: list = field(default_factory=list)
    arrived: int = 0
    departed: int = 0
    next_seq: int = 0
    last_seq: Optional[list] = None


@dataclass(frozen=True)
class RoundMetrics:
    arrived: int
    completed: int
    total_queue: int


def _call_policy(state: SimState, ctx: PolicyContext):
    fn = get_policy(state.policy)
    if state.policy in ("jsq2", "hjsq2"):
        return fn(ctx, state.d_samples)
    if state.policy in STATEFUL:
        return fn(ctx, state.lsq_refresh)
    return fn(ctx)


def run_round(state: SimState, round_index: int, traffic: RoundTraffic, record_timing: bool = False) -> RoundMetrics:
    cl = state.cluster
    n, m = cl.n, cl.m
    if len(traffic.arrivals_per_dispatcher) != m or len(traffic.capacities_per_server) != n:
        raise ValueError("traffic does not match the cluster")
    snapshot = [len(sq) for sq in state.queues]
    rates = list(cl.server_rates)

    decisions = []
    arrived = 0
    for d, a_d in enumerate(traffic.arrivals_per_dispatcher):
        a_d = int(a_d)
        if a_d <= 0:
            continue
        arrived += a_d
        if record_timing:
            warm_state = list(state.local_states[d]) if state.local_states[d] is not None else None
            _call_policy(state, PolicyContext(d, m, snapshot, rates, a_d, state.scratch, warm_state))
            ctx = PolicyContext(d, m, snapshot, rates, a_d, state.streams[d], state.local_states[d])
            t0 = time.perf_counter_ns()
            dec = _call_policy(state, ctx)
            state.decision_ns.append(time.perf_counter_ns() - t0)
        else:
            ctx = PolicyContext(d, m, snapshot, rates, a_d, state.streams[d], state.local_states[d])
            dec = _call_policy(state, ctx)
        if len(dec.per_job_targets) != a_d or any(not 0 <= s < n for s in dec.per_job_targets):
            raise RuntimeError(f"policy {state.policy} returned an invalid decision")
        decisions.append(dec)
    if state.debug:
        est = [m * int(a) for a in traffic.arrivals_per_dispatcher]
        assert sum(est) / m == sum(int(a) for a in traffic.arrivals_per_dispatcher)

    for dec in decisions:
        for s in dec.per_job_targets:
            state.queues[s].push(Job(round_index, state.next_seq))
            state.next_seq += 1
    state.arrived += arrived

    completed = 0
    for s, sq in enumerate(state.queues):
        for job in sq.serve(int(traffic.capacities_per_server[s])):
            state.departed += 1
            if state.debug:
                if job.seq <= state.last_seq[s]:
                    raise AssertionError(f"FIFO violated at server {s}")
                state.last_seq[s] = job.seq
            if job.arrival_round >= state.warmup:
                resp = round_index - job.arrival_round + 1
                state.hist[resp] = state.hist.get(resp, 0) + 1
                completed += 1
    return RoundMetrics(arrived, completed, sum(len(sq) for sq in state.queues))


class PyEngine:
    """Pure-Python engine with the same chunk interface as the compiled one."""

    def __init__(self, rates, m, policy, streams, warmup=0, d_samples=2, lsq_refresh=1,
                 record_timing=False, scratch=None, record_trace=False, debug=False):
        n = len(rates)
        cluster = ClusterSpec(tuple(rates), (0.0,) * m)
        self.state = SimState(
            cluster=cluster,
            policy=policy,
            streams=list(streams),
            queues=[ServerQueue(float(mu)) for mu in rates],
            local_states=[new_local_state(n) if policy in STATEFUL else None for _ in range(m)],
            warmup=warmup,
            d_samples=d_samples,
            lsq_refresh=lsq_refresh,
            debug=debug,
            scratch=scratch,
            last_seq=[-1] * n,
        )
        self.record_timing = record_timing
        self.record_trace = record_trace
        self.totals: list = []
        self.trace: list = []

    def run_chunk(self, arrivals, caps, t0):
        for i in range(arrivals.shape[0]):
            traffic = RoundTraffic(tuple(arrivals[i].tolist()), tuple(caps[i].tolist()))
            metrics = run_round(self.state, t0 + i, traffic, self.record_timing)
            self.totals.append(metrics.total_queue)
            if self.record_trace:
                self.trace.append([len(sq) for sq in self.state.queues])

    def result(self) -> dict:
        st = self.state
        size = max(st.hist) + 1 if st.hist else 1
        hist = np.zeros(size, dtype=np.int64)
        for k, v in st.hist.items():
            hist[k] = v
        out = {
            "hist": hist,
            "totals": np.array(self.totals, dtype=np.int64),
            "decision_ns": np.array(st.decision_ns, dtype=np.int64),
            "final_queue": np.array([len(sq) for sq in st.queues], dtype=np.int64),
            "arrived": st.arrived,
            "departed": st.departed,
        }
        if self.record_trace:
            out["trace"] = np.array(self.trace, dtype=np.int64).reshape(-1, len(st.queues))
        return out


def run_simulation(config: SimulationConfig, backend: Optional[str] = None, debug: bool = False) -> SimulationReport:
    """Run ``config.rounds`` rounds; deterministic given the config."""
    backend = backend or default_backend()
    cl = config.cluster
    streams = RandomStreams(config.seed)
    policy_streams = [streams.policy(config.policy, d) for d in range(cl.m)]
    kwargs = dict(
        warmup=config.warmup_rounds,
        d_samples=config.d_samples,
        lsq_refresh=config.lsq_refresh,
        record_timing=config.record_timing,
        scratch=streams.scratch() if config.record_timing else None,
        record_trace=config.record_trace,
    )
    if backend == "compiled":
        if _kernels is None:
            raise ImportError("compiled kernels are not built")
        engine = _kernels.Engine(list(cl.server_rates), cl.m, config.policy, policy_streams, **kwargs)
    elif backend == "python":
        engine = PyEngine(list(cl.server_rates), cl.m, config.policy, policy_streams, debug=debug, **kwargs)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    t = 0
    while t < config.rounds:
        k = min(CHUNK_ROUNDS, config.rounds - t)
        arrivals, caps = streams.traffic_chunk(cl, k)
        engine.run_chunk(np.ascontiguousarray(arrivals), np.ascontiguousarray(caps), t)
        t += k

    res = engine.result()
    return SimulationReport(
        response_hist=res["hist"],
        per_round_total_queue=res["totals"],
        decision_times_ns=res["decision_ns"],
        final_queue_lengths=res["final_queue"],
        arrived_jobs=int(res["arrived"]),
        departed_jobs=int(res["departed"]),
        trace=res.get("trace"),
        metadata={"backend": backend, "prng": PRNG_DESCRIPTION, "seed": config.seed,
                  "policy": config.policy, "rounds": config.rounds},
    )


def nearest_rank(hist: np.ndarray, p: float) -> int:
    """Smallest value v with at least ceil(p * N) samples <= v."""
    total = int(hist.sum())
    if total == 0:
        raise ValueError("empty sample")
    rank = max(1, math.ceil(p * total - 1e-9))
    return int(np.searchsorted(np.cumsum(hist), rank))


@dataclass
class Summary:
    completed_jobs: int
    mean_response: Optional[float]
    p95: Optional[int]
    p99: Optional[int]
    p999: Optional[int]
    p9999: Optional[int]
    ccdf: Optional[np.ndarray]
    time_avg_total_queue: float

    @property
    def has_responses(self) -> bool:
        return self.completed_jobs > 0


def summarize(report: SimulationReport) -> Summary:
    """Mean, nearest-rank percentiles and CCDF of response times.

    ``ccdf[tau]`` is P(response > tau) for tau = 0, 1, ..., max. Response
    statistics are ``None`` when no job completed.
    """
    hist = report.response_hist
    total = int(hist.sum())
    totals = report.per_round_total_queue
    avg_q = float(totals.mean()) if totals.size else 0.0
    if total == 0:
        return Summary(0, None, None, None, None, None, None, avg_q)
    values = np.arange(hist.size)
    mean = float((values * hist).sum() / total)
    ccdf = (total - np.cumsum(hist)) / total
    return Summary(
        completed_jobs=total,
        mean_response=mean,
        p95=nearest_rank(hist, 0.95),
        p99=nearest_rank(hist, 0.99),
        p999=nearest_rank(hist, 0.999),
        p9999=nearest_rank(hist, 1 - 1e-4),
        ccdf=ccdf,
        time_avg_total_queue=avg_q,
    )
