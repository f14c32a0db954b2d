"""Experiment driver: load sweeps, delay tails, decision timing, single runs.

Configuration comes from an optional YAML file (``--config``) with
command-line flags taking precedence. Every run writes
``config_effective.yaml`` with all defaults and drawn server rates resolved;
feeding it back through ``--config`` reproduces the same outputs.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .core import PRNG_DESCRIPTION, ClusterSpec, RandomStreams, offered_load
from .policies import POLICY_NAMES
from .sim import SimulationConfig, default_backend, run_simulation, summarize

__all__ = ["ConfigError", "ExperimentSpec", "ResultRow", "run_sweep", "run_timing", "run_single", "main"]

MODES = ("sweep", "tail", "timing", "single")
RESULT_FIELDS = (
    "experiment_id", "policy", "seed", "n", "m", "rho", "mean_response",
    "p95", "p99", "p999", "p9999", "time_avg_total_queue", "completed_jobs",
)
TIMING_NOTES = (
    "per dispatcher-round wall clock (CLOCK_MONOTONIC / perf_counter_ns) of the "
    "snapshot-to-targets computation; each measured decision is preceded by one "
    "unmeasured run of the same decision on a scratch stream to warm caches"
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    mode: str = "sweep"
    policies: list = field(default_factory=lambda: ["scd"])
    rho: list = field(default_factory=lambda: [0.9])
    seeds: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    rounds: int = 10_000
    servers: list = field(default_factory=lambda: [100])
    dispatchers: int = 10
    mu_dist: str = "uniform:1,10"
    out: str = "out"
    warmup: int = 0
    d_samples: int = 2
    lsq_refresh: int = 1
    workers: int = 1
    trace: bool = False
    experiment_id: Optional[str] = None
    dispatcher_rates: Optional[list] = None
    rates_by_seed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.policies = _as_list(self.policies, str)
        self.rho = _as_list(self.rho, float)
        self.seeds = _as_list(self.seeds, int)
        self.servers = _as_list(self.servers, int)
        if not self.policies:
            raise ConfigError("at least one policy is required")
        for p in self.policies:
            if p not in POLICY_NAMES:
                raise ConfigError(f"unknown policy {p!r}; choose from {', '.join(POLICY_NAMES)}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.rho:
            raise ConfigError("at least one rho value is required")
        for r in self.rho:
            if not 0 < r < 1:
                raise ConfigError(f"rho must lie in (0, 1), got {r}")
        if self.rounds < 1 or self.dispatchers < 1 or any(n < 1 for n in self.servers):
            raise ConfigError("rounds, dispatchers and servers must be positive")
        if not 0 <= self.warmup < self.rounds:
            raise ConfigError("warmup must be in [0, rounds)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.rates_by_seed = {int(k): [float(x) for x in v] for k, v in (self.rates_by_seed or {}).items()}
        if self.dispatcher_rates is not None:
            self.dispatcher_rates = [float(x) for x in self.dispatcher_rates]
            if len(self.dispatcher_rates) != self.dispatchers:
                raise ConfigError("dispatcher_rates must have one entry per dispatcher")
        kind, lo_hi = parse_mu_dist(self.mu_dist)
        if kind == "fixed":
            self.servers = [len(lo_hi)]
        if self.mode == "single" and (len(self.policies), len(self.rho), len(self.seeds)) != (1, 1, 1):
            raise ConfigError("single mode takes exactly one policy, rho and seed")
        if self.experiment_id is None:
            self.experiment_id = self.mode

    def server_rates(self, seed: int, n: int) -> list:
        if seed in self.rates_by_seed and len(self.rates_by_seed[seed]) == n:
            return self.rates_by_seed[seed]
        kind, params = parse_mu_dist(self.mu_dist)
        if kind == "fixed":
            return list(params)
        lo, hi = params
        return RandomStreams(seed).draw_rates(n, lo, hi).tolist()

    def cluster(self, seed: int, n: int, rho: float) -> ClusterSpec:
        rates = self.server_rates(seed, n)
        if self.dispatcher_rates is not None:
            return ClusterSpec(tuple(rates), tuple(self.dispatcher_rates))
        return ClusterSpec.with_load(rates, self.dispatchers, rho)

    def sim_config(self, seed, n, rho, policy, **extra) -> SimulationConfig:
        return SimulationConfig(
            cluster=self.cluster(seed, n, rho),
            policy=policy,
            rounds=self.rounds,
            seed=seed,
            warmup_rounds=self.warmup,
            d_samples=self.d_samples,
            lsq_refresh=self.lsq_refresh,
            **extra,
        )


def _as_list(value, cast):
    if value is None:
        return []
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    elif not isinstance(value, (list, tuple)):
        value = [value]
    try:
        return [cast(v.strip()) if isinstance(v, str) else cast(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_mu_dist(text: str):
    """``uniform:LO,HI`` or ``fixed:MU1,MU2,...``."""
    kind, _, rest = str(text).partition(":")
    try:
        values = [float(x) for x in rest.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad mu-dist {text!r}") from None
    if kind == "uniform" and len(values) == 2 and 0 < values[0] <= values[1]:
        return kind, tuple(values)
    if kind == "fixed" and values and all(v > 0 for v in values):
        return kind, tuple(values)
    raise ConfigError(f"bad mu-dist {text!r}; use uniform:LO,HI or fixed:MU1,MU2,...")


@dataclass
class ResultRow:
    experiment_id: str
    policy: str
    seed: int
    n: int
    m: int
    rho: float
    mean_response: Optional[float]
    p95: Optional[int]
    p99: Optional[int]
    p999: Optional[int]
    p9999: Optional[int]
    time_avg_total_queue: float
    completed_jobs: int


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _run_cell(args):
    spec, seed, n, rho, policy, keep_hist = args
    cfg = spec.sim_config(seed, n, rho, policy)
    report = run_simulation(cfg)
    s = summarize(report)
    row = ResultRow(
        spec.experiment_id, policy, seed, n, cfg.cluster.m, offered_load(cfg.cluster),
        s.mean_response, s.p95, s.p99, s.p999, s.p9999, s.time_avg_total_queue, s.completed_jobs,
    )
    return row, (report.response_hist if keep_hist else None)


def _map(spec: ExperimentSpec, fn, items):
    if spec.workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _write_effective(spec: ExperimentSpec, out: Path, extra: Optional[dict] = None) -> None:
    data = asdict(spec)
    kind, _ = parse_mu_dist(spec.mu_dist)
    if kind == "uniform":
        data["rates_by_seed"] = {
            int(seed): [float(x) for x in spec.server_rates(seed, n)]
            for seed in spec.seeds for n in spec.servers[:1]
        }
    data["prng"] = PRNG_DESCRIPTION
    data["backend"] = default_backend()
    if extra:
        data.update(extra)
    with open(out / "config_effective.yaml", "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=True)


def run_sweep(spec: ExperimentSpec) -> list:
    """One ResultRow per (rho, policy, seed); in tail mode also pooled CCDF files."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    n = spec.servers[0]
    keep = spec.mode == "tail"
    cells = [(spec, seed, n, rho, policy, keep)
             for rho in spec.rho for policy in spec.policies for seed in spec.seeds]
    results = _map(spec, _run_cell, cells)
    rows = [r for r, _ in results]
    _write_csv(out / "sweep.csv", RESULT_FIELDS, [list(asdict(r).values()) for r in rows])
    if keep:
        for rho in spec.rho:
            for policy in spec.policies:
                hists = [h for (c, (_, h)) in zip(cells, results) if c[3] == rho and c[4] == policy]
                size = max(h.size for h in hists)
                pooled = sum(np.pad(h, (0, size - h.size)) for h in hists)
                total = int(pooled.sum())
                if total == 0:
                    ccdf = np.ones(1)
                else:
                    ccdf = (total - np.cumsum(pooled)) / total
                _write_csv(out / f"ccdf_{policy}_{rho:g}.csv", ("tau", "ccdf"),
                           [(tau, float(c)) for tau, c in enumerate(ccdf)])
    _write_effective(spec, out)
    return rows


def timing_cdf(durations_ns) -> tuple[np.ndarray, np.ndarray]:
    d = np.sort(np.asarray(durations_ns, dtype=float)) / 1000.0
    cdf = np.arange(1, d.size + 1) / d.size
    return d, cdf


def run_timing(spec: ExperimentSpec) -> dict:
    """Decision-time CDF per (policy, n); always serial.

    Returns ``{(policy, n): durations_us}`` (sorted).
    """
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = spec.seeds[0]
    rho = spec.rho[0]
    results = {}
    summary = []
    for n in spec.servers:
        for policy in spec.policies:
            cfg = spec.sim_config(seed, n, rho, policy, record_timing=True)
            report = run_simulation(cfg)
            d, cdf = timing_cdf(report.decision_times_ns)
            results[(policy, n)] = d
            _write_csv(out / f"timing_{policy}_{n}.csv", ("duration_us", "cdf"), zip(d.tolist(), cdf.tolist()))
            med = float(np.median(d)) if d.size else None
            summary.append((policy, n, int(d.size), med))
    _write_csv(out / "timing_summary.csv", ("policy", "n", "decisions", "median_us"), summary)
    _write_effective(spec, out, {"timing_method": TIMING_NOTES})
    return results


def run_single(spec: ExperimentSpec):
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    seed, rho, policy, n = spec.seeds[0], spec.rho[0], spec.policies[0], spec.servers[0]
    cfg = spec.sim_config(seed, n, rho, policy, record_trace=spec.trace)
    report = run_simulation(cfg)
    s = summarize(report)
    row = ResultRow(spec.experiment_id, policy, seed, n, cfg.cluster.m, offered_load(cfg.cluster),
                    s.mean_response, s.p95, s.p99, s.p999, s.p9999, s.time_avg_total_queue, s.completed_jobs)
    _write_csv(out / "single.csv", RESULT_FIELDS, [list(asdict(row).values())])
    if spec.trace:
        header = ["round"] + [f"q{s}" for s in range(n)]
        _write_csv(out / "trace.csv", header, ([t] + r.tolist() for t, r in enumerate(report.trace)))
    _write_effective(spec, out)
    return row, report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scdsim", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="YAML experiment file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--policy", help="comma-separated policy names (%s)" % ", ".join(POLICY_NAMES))
    p.add_argument("--rho", help="comma-separated offered loads in (0,1)")
    p.add_argument("--seed", help="comma-separated master seeds")
    p.add_argument("--rounds", type=int)
    p.add_argument("--servers", help="server count; comma-separated list in timing mode")
    p.add_argument("--dispatchers", type=int)
    p.add_argument("--mu-dist", help="uniform:LO,HI or fixed:MU1,MU2,...")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--trace", action="store_true", default=None, help="single mode: dump per-round queues")
    return p


def load_spec(argv=None) -> ExperimentSpec:
    args = build_parser().parse_args(argv)
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        for key in ("prng", "backend", "timing_method"):
            data.pop(key, None)
    overrides = {
        "mode": args.mode, "policies": args.policy, "rho": args.rho, "seeds": args.seed,
        "rounds": args.rounds, "servers": args.servers, "dispatchers": args.dispatchers,
        "mu_dist": args.mu_dist, "out": args.out, "workers": args.workers,
        "warmup": args.warmup, "trace": args.trace,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentSpec(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def main(argv=None) -> int:
    try:
        spec = load_spec(argv)
    except ConfigError as exc:
        print(f"scdsim: configuration error: {exc}", file=sys.stderr)
        return 1
    runners = {"sweep": run_sweep, "tail": run_sweep, "timing": run_timing, "single": run_single}
    try:
        runners[spec.mode](spec)
    except (ValueError, ConfigError) as exc:
        print(f"scdsim: configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"scdsim: runtime error: {exc}", file=sys.stderr)
        return 2
    print(f"scdsim: wrote results to {os.path.abspath(spec.out)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
