"""Experiment harness: seeded studies with CSV/JSON reporting.

Every study draws uniform random instances, pushes each one through the
sum-only observation pipeline, solves on the reconstructed shadow matrix,
and scores the resulting pairing against the true instance with the
normalized indicator

    P = (score - (N/2) * C_min) / ((N/2) * C_max - (N/2) * C_min).

Per-trial seeds come from a splittable scheme: the trial stream is
SeedSequence(master_seed, spawn_key=(setting_index, trial_index)), whose
first two 64-bit words seed instance generation and solving respectively
(per-start runs of the start study use spawn_key=(setting_index,
trial_index, start)). Identical specs therefore reproduce identical records
regardless of worker scheduling; wall-clock timings are the one
non-deterministic column and are zeroed in reports unless explicitly
requested.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import Instance, ValidationError, total_compatibility
from .observation import reconstruct_tilde
from .oracle import ObservationOracle
from .solvers import SolverConfig, solve_p2opt, solve_pnn, solve_pnn_p2opt, solve_random

THREADS_ENV = "PAIRING_TSP_THREADS"
KNOWN_ALGORITHMS = ("random", "pnn", "pnn+p2opt")
CSV_HEADER = "n,algo,trial,seed,p,noc,exchanges,observations,millis"


def performance_indicator(score: float, n: int, c_min: float, c_max: float) -> float:
    """Normalized pairing quality in [0, 1] relative to the declared bounds.

    Scores outside the feasible band signal a bounds violation upstream and
    raise rather than clamp.
    """
    if not c_max > c_min:
        raise ValidationError(f"need c_max > c_min, got [{c_min}, {c_max}]")
    lo = (n / 2) * c_min
    hi = (n / 2) * c_max
    if score < lo or score > hi:
        raise ValidationError(
            f"score {score} is outside the feasible band [{lo}, {hi}]"
        )
    return (float(score) - lo) / (hi - lo)


def generate_instance(n: int, c_min: float, c_max: float, seed: int) -> Instance:
    """Uniform random symmetric instance, deterministic per seed."""
    if n % 2 != 0 or n < 4:
        raise ValidationError(f"element count must be even and >= 4, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    c = np.zeros((n, n), dtype=np.float64)
    iu, ju = np.triu_indices(n, k=1)
    values = rng.uniform(c_min, c_max, len(iu))
    c[iu, ju] = values
    c[ju, iu] = values
    return Instance(n=n, c=c, c_min=c_min, c_max=c_max)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: sizes, trial count, bounds, limits, algorithms, seed."""

    n_values: tuple[int, ...]
    trials: int
    value_range: tuple[float, float] = (0.0, 10000.0)
    exchange_limit: int | tuple[int, ...] | None = 600
    algorithms: tuple[str, ...] = KNOWN_ALGORITHMS
    master_seed: int = 0
    start_node: int | str | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if isinstance(self.algorithms, str):
            raise ValidationError("algorithms must be a sequence of names")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if isinstance(self.exchange_limit, str):
            raise ValidationError("exchange_limit must be an integer or a list of integers")
        if isinstance(self.exchange_limit, Iterable):
            object.__setattr__(
                self, "exchange_limit", tuple(int(v) for v in self.exchange_limit)
            )
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        for n in self.n_values:
            if n % 2 != 0 or n < 4:
                raise ValidationError(f"element count must be even and >= 4, got {n}")
        for algo in self.algorithms:
            if algo not in KNOWN_ALGORITHMS:
                raise ValidationError(
                    f"unknown algorithm '{algo}', expected one of {KNOWN_ALGORITHMS}"
                )
        lo, hi = self.value_range
        if not hi > lo:
            raise ValidationError(f"value range must satisfy max > min, got {self.value_range}")

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentSpec":
        if not isinstance(data, dict):
            raise ValidationError("experiment spec JSON must be an object")
        known = {
            "n_values",
            "trials",
            "value_range",
            "exchange_limit",
            "algorithms",
            "master_seed",
            "start_node",
        }
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown experiment spec fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "value_range" in kwargs:
            kwargs["value_range"] = tuple(kwargs["value_range"])
        if isinstance(kwargs.get("exchange_limit"), list):
            kwargs["exchange_limit"] = tuple(kwargs["exchange_limit"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ValidationError(f"bad experiment spec: {exc}") from exc

    def to_json_dict(self) -> dict:
        limit = self.exchange_limit
        return {
            "n_values": list(self.n_values),
            "trials": self.trials,
            "value_range": list(self.value_range),
            "exchange_limit": list(limit) if isinstance(limit, tuple) else limit,
            "algorithms": list(self.algorithms),
            "master_seed": self.master_seed,
            "start_node": self.start_node,
        }


@dataclass(frozen=True)
class TrialRecord:
    """One solve: everything needed to reproduce and aggregate it."""

    n: int
    algo: str
    trial: int
    seed: int
    p: float
    noc: int
    exchanges: int
    observations: int
    millis: float
    sort_key: tuple = field(default=(), compare=False)

    def csv_row(self, timings: bool) -> str:
        millis = repr(round(self.millis, 3)) if timings else "0"
        return (
            f"{self.n},{self.algo},{self.trial},{self.seed},{self.p!r},"
            f"{self.noc},{self.exchanges},{self.observations},{millis}"
        )

    def to_json_dict(self, timings: bool) -> dict:
        return {
            "n": self.n,
            "algo": self.algo,
            "trial": self.trial,
            "seed": self.seed,
            "p": self.p,
            "noc": self.noc,
            "exchanges": self.exchanges,
            "observations": self.observations,
            "millis": round(self.millis, 3) if timings else 0,
        }


@dataclass(frozen=True)
class AggregateRow:
    n: int
    algo: str
    trials: int
    mean_p: float
    std_p: float
    mean_noc: float
    std_noc: float
    mean_observations: float
    mean_millis: float

    def to_json_dict(self, timings: bool) -> dict:
        out = {
            "n": self.n,
            "algo": self.algo,
            "trials": self.trials,
            "mean_p": self.mean_p,
            "std_p": self.std_p,
            "mean_noc": self.mean_noc,
            "std_noc": self.std_noc,
            "mean_observations": self.mean_observations,
            "mean_millis": round(self.mean_millis, 3) if timings else 0,
        }
        return out


@dataclass(frozen=True)
class ExperimentReport:
    """Raw per-trial records plus aggregates; serializes to CSV and JSON."""

    study: str
    spec: ExperimentSpec
    records: tuple[TrialRecord, ...]
    aggregates: tuple[AggregateRow, ...]
    extras: dict = field(default_factory=dict)

    def to_csv_text(self, *, timings: bool = False) -> str:
        lines = [CSV_HEADER]
        lines.extend(record.csv_row(timings) for record in self.records)
        return "\n".join(lines) + "\n"

    def to_json_dict(self, *, timings: bool = False) -> dict:
        return {
            "study": self.study,
            "spec": self.spec.to_json_dict(),
            "aggregates": [a.to_json_dict(timings) for a in self.aggregates],
            "extras": self.extras,
            "records": [r.to_json_dict(timings) for r in self.records],
        }

    def to_json_text(self, *, timings: bool = False) -> str:
        return json.dumps(self.to_json_dict(timings=timings), sort_keys=True, indent=2) + "\n"


def _aggregate(records: Iterable[TrialRecord]) -> tuple[AggregateRow, ...]:
    groups: dict[tuple[int, str], list[TrialRecord]] = {}
    order: list[tuple[int, str]] = []
    for record in records:
        key = (record.n, record.algo)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(record)
    rows = []
    for key in order:
        group = groups[key]
        ps = np.array([r.p for r in group])
        nocs = np.array([r.noc for r in group], dtype=np.float64)
        rows.append(
            AggregateRow(
                n=key[0],
                algo=key[1],
                trials=len(group),
                mean_p=float(ps.mean()),
                std_p=float(ps.std()),
                mean_noc=float(nocs.mean()),
                std_noc=float(nocs.std()),
                mean_observations=float(np.mean([r.observations for r in group])),
                mean_millis=float(np.mean([r.millis for r in group])),
            )
        )
    return tuple(rows)


def trial_seeds(master_seed: int, setting_index: int, trial: int) -> tuple[int, int]:
    """(instance_seed, solver_seed) for one trial of one setting."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(setting_index, trial))
    state = ss.generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def start_run_seed(master_seed: int, setting_index: int, trial: int, start: int) -> int:
    """Solver seed for one start node of the start-sensitivity study."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(setting_index, trial, start))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return min(os.cpu_count() or 1, 8)


def _single_limit(spec: ExperimentSpec) -> Optional[int]:
    if isinstance(spec.exchange_limit, tuple):
        raise ValidationError("this study needs a single exchange limit, not a sweep list")
    return spec.exchange_limit


def _resolve_start(spec: ExperimentSpec, n: int, solver_seed: int) -> Optional[int]:
    if spec.start_node in (None, 1):
        return 1
    if spec.start_node == "random":
        rng = np.random.Generator(np.random.PCG64(solver_seed ^ 0x5EED))
        return int(rng.integers(1, n + 1))
    start = int(spec.start_node)
    if not 1 <= start <= n:
        raise ValidationError(f"start node {start} is outside 1..{n}")
    return start


def _observed_matrix(instance: Instance) -> tuple[np.ndarray, int]:
    oracle = ObservationOracle(instance)
    tilde, spent = reconstruct_tilde(oracle)
    return tilde.t, spent


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, (time.perf_counter() - t0) * 1000.0


def _perf_trial(spec: ExperimentSpec, setting_index: int, trial: int) -> list[TrialRecord]:
    n = spec.n_values[setting_index]
    c_min, c_max = spec.value_range
    inst_seed, solver_seed = trial_seeds(spec.master_seed, setting_index, trial)
    instance = generate_instance(n, c_min, c_max, inst_seed)
    needs_observation = any(a != "random" for a in spec.algorithms)
    shadow, observations = _observed_matrix(instance) if needs_observation else (None, 0)
    limit = _single_limit(spec)
    start = _resolve_start(spec, n, solver_seed)
    records = []
    for sub, algo in enumerate(spec.algorithms):
        config = SolverConfig(seed=solver_seed, start_node=start, exchange_limit=limit)
        if algo == "random":
            result, millis = _timed(solve_random, n, solver_seed)
            observed = 0
        elif algo == "pnn":
            result, millis = _timed(solve_pnn, shadow, config)
            observed = observations
        else:
            result, millis = _timed(solve_pnn_p2opt, shadow, config)
            observed = observations
        score = total_compatibility(instance, result.pairing)
        records.append(
            TrialRecord(
                n=n,
                algo=algo,
                trial=trial,
                seed=inst_seed,
                p=performance_indicator(score, n, c_min, c_max),
                noc=result.noc,
                exchanges=result.exchanges_used,
                observations=observed,
                millis=millis,
                sort_key=(setting_index, trial, sub),
            )
        )
    return records


def _sweep_trial(spec: ExperimentSpec, setting_index: int, trial: int) -> list[TrialRecord]:
    n = spec.n_values[setting_index]
    c_min, c_max = spec.value_range
    limits = spec.exchange_limit
    assert isinstance(limits, tuple)
    inst_seed, solver_seed = trial_seeds(spec.master_seed, setting_index, trial)
    instance = generate_instance(n, c_min, c_max, inst_seed)
    shadow, observations = _observed_matrix(instance)
    start = _resolve_start(spec, n, solver_seed)
    constructed = solve_pnn(shadow, SolverConfig(seed=solver_seed, start_node=start))
    records = []
    for sub, limit in enumerate(limits):
        result, millis = _timed(
            solve_p2opt,
            shadow,
            constructed.pairing,
            SolverConfig(seed=solver_seed, exchange_limit=limit),
        )
        score = total_compatibility(instance, result.pairing)
        records.append(
            TrialRecord(
                n=n,
                algo=f"pnn+p2opt@l={limit}",
                trial=trial,
                seed=inst_seed,
                p=performance_indicator(score, n, c_min, c_max),
                noc=result.noc,
                exchanges=result.exchanges_used,
                observations=observations,
                millis=millis,
                sort_key=(setting_index, trial, sub),
            )
        )
    return records


def _noc_trial(
    spec: ExperimentSpec, setting_index: int, trial: int
) -> tuple[list[TrialRecord], list[int]]:
    n = spec.n_values[setting_index]
    c_min, c_max = spec.value_range
    inst_seed, solver_seed = trial_seeds(spec.master_seed, setting_index, trial)
    instance = generate_instance(n, c_min, c_max, inst_seed)
    shadow, observations = _observed_matrix(instance)
    limit = _single_limit(spec)
    start = _resolve_start(spec, n, solver_seed)
    config = SolverConfig(seed=solver_seed, start_node=start, exchange_limit=limit)
    result, millis = _timed(solve_pnn_p2opt, shadow, config)
    score = total_compatibility(instance, result.pairing)
    record = TrialRecord(
        n=n,
        algo="pnn+p2opt",
        trial=trial,
        seed=inst_seed,
        p=performance_indicator(score, n, c_min, c_max),
        noc=result.noc,
        exchanges=result.exchanges_used,
        observations=observations,
        millis=millis,
        sort_key=(setting_index, trial, 0),
    )
    return [record], list(result.trace or ())


def _start_trial(spec: ExperimentSpec, setting_index: int, trial: int) -> list[TrialRecord]:
    n = spec.n_values[setting_index]
    c_min, c_max = spec.value_range
    inst_seed, _ = trial_seeds(spec.master_seed, setting_index, trial)
    instance = generate_instance(n, c_min, c_max, inst_seed)
    shadow, observations = _observed_matrix(instance)
    limit = _single_limit(spec)
    records = []
    for start in range(1, n + 1):
        run_seed = start_run_seed(spec.master_seed, setting_index, trial, start)
        config = SolverConfig(seed=run_seed, start_node=start, exchange_limit=limit)
        constructed, c_millis = _timed(solve_pnn, shadow, config)
        refined, r_millis = _timed(solve_p2opt, shadow, constructed.pairing, config)
        for sub, (algo, result, millis) in enumerate(
            (
                ("pnn", constructed, c_millis),
                ("pnn+p2opt", refined, c_millis + r_millis),
            )
        ):
            score = total_compatibility(instance, result.pairing)
            records.append(
                TrialRecord(
                    n=n,
                    algo=f"{algo}@start={start}",
                    trial=trial,
                    seed=inst_seed,
                    p=performance_indicator(score, n, c_min, c_max),
                    noc=result.noc,
                    exchanges=result.exchanges_used,
                    observations=observations,
                    millis=millis,
                    sort_key=(setting_index, trial, 2 * start + sub),
                )
            )
    return records


_TRIAL_RUNNERS = {
    "perf": _perf_trial,
    "sweep": _sweep_trial,
    "noc": _noc_trial,
    "start": _start_trial,
}


def _run_task(args):
    study, spec_dict, setting_index, trial = args
    spec = ExperimentSpec.from_json_dict(spec_dict)
    return setting_index, trial, _TRIAL_RUNNERS[study](spec, setting_index, trial)


def _run_study(study: str, spec: ExperimentSpec) -> dict[tuple[int, int], object]:
    """Run every (setting, trial) task, in a process pool when it pays off."""
    tasks = [
        (study, spec.to_json_dict(), si, trial)
        for si in range(len(spec.n_values))
        for trial in range(spec.trials)
    ]
    workers = min(worker_count(), len(tasks))
    results: dict[tuple[int, int], object] = {}
    if workers <= 1 or len(tasks) <= 2:
        for task in tasks:
            si, trial, payload = _run_task(task)
            results[(si, trial)] = payload
        return results
    context = __import__("multiprocessing").get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=context) as pool:
        for si, trial, payload in pool.map(_run_task, tasks, chunksize=4):
            results[(si, trial)] = payload
    return results


def _collect_records(results: dict, unwrap=lambda payload: payload) -> tuple[TrialRecord, ...]:
    records: list[TrialRecord] = []
    for key in sorted(results):
        records.extend(unwrap(results[key]))
    records.sort(key=lambda r: r.sort_key)
    return tuple(records)


def run_performance_study(spec: ExperimentSpec) -> ExperimentReport:
    """Mean/std of the indicator per algorithm and element count."""
    results = _run_study("perf", spec)
    records = _collect_records(results)
    return ExperimentReport(
        study="perf", spec=spec, records=records, aggregates=_aggregate(records)
    )


def run_exchange_limit_sweep(spec: ExperimentSpec) -> ExperimentReport:
    """Indicator as a function of the exchange limit, shared trials per limit."""
    if not isinstance(spec.exchange_limit, tuple) or not spec.exchange_limit:
        raise ValidationError("the sweep needs exchange_limit to be a list of limits")
    results = _run_study("sweep", spec)
    records = _collect_records(results)
    series: dict[str, dict[str, list]] = {}
    for n in spec.n_values:
        means = []
        for limit in spec.exchange_limit:
            ps = [r.p for r in records if r.n == n and r.algo == f"pnn+p2opt@l={limit}"]
            means.append(float(np.mean(ps)))
        series[str(n)] = {"limits": list(spec.exchange_limit), "mean_p": means}
    return ExperimentReport(
        study="sweep",
        spec=spec,
        records=records,
        aggregates=_aggregate(records),
        extras={"sweep": series},
    )


def run_noc_study(spec: ExperimentSpec) -> ExperimentReport:
    """Check counts versus size, plus the mean per-scan trace.

    The trace entry at index k is the number of checks the k-th scan segment
    performed, averaged over all trials with converged trials contributing
    zero once they have stopped.
    """
    results = _run_study("noc", spec)
    records = _collect_records(results, unwrap=lambda payload: payload[0])
    traces: dict[str, list[float]] = {}
    for si, n in enumerate(spec.n_values):
        per_trial = [results[(si, trial)][1] for trial in range(spec.trials)]
        longest = max(len(t) for t in per_trial)
        padded = np.zeros((len(per_trial), longest))
        for row, t in enumerate(per_trial):
            padded[row, : len(t)] = t
        traces[str(n)] = [float(v) for v in padded.mean(axis=0)]
    return ExperimentReport(
        study="noc",
        spec=spec,
        records=records,
        aggregates=_aggregate(records),
        extras={"mean_trace_per_loop": traces},
    )


def run_initial_node_study(spec: ExperimentSpec) -> ExperimentReport:
    """Spread of the indicator across every possible start node.

    For each instance the construction (and its refinement) runs once per
    start node; the reported figure per size and algorithm is the mean over
    instances of the per-instance standard deviation of P.
    """
    results = _run_study("start", spec)
    records = _collect_records(results)
    summary: dict[str, dict[str, float]] = {}
    for si, n in enumerate(spec.n_values):
        for algo in ("pnn", "pnn+p2opt"):
            stds = []
            for trial in range(spec.trials):
                ps = [
                    r.p
                    for r in results[(si, trial)]
                    if r.algo.startswith(f"{algo}@start=")
                ]
                stds.append(float(np.std(ps)))
            summary.setdefault(str(n), {})[algo] = float(np.mean(stds))
    return ExperimentReport(
        study="start",
        spec=spec,
        records=records,
        aggregates=_aggregate(records),
        extras={"mean_std_p_over_starts": summary},
    )
