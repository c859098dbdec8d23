"""Monte Carlo experiment runner: seeded trials, sweeps and CSV emission.

Trial ``t`` always draws from ``SeededRng(seed).child(t)``, so results are a
pure function of the ExperimentSpec and never of the worker count.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import aggregate_trials, fit_loglog_slope
from .core import BanditInstance, SeededRng, make_instance
from .env import TRACE_HEADER, ConfigError
from .instances import FAMILIES, HardFamilySpec, permuted, uniform_gap_instance
from .policies import POLICY_TAGS, PolicyConfig, UnsupportedMemoryError, select_policy
from .simulate import TrialSummary, simulate_env, simulate_trial, summarize_env

COLUMNS = (
    "trial", "policy", "n", "m", "T", "alpha", "seed", "regret", "realized_regret",
    "L1", "R1", "L2", "R2", "best_retained", "truncated",
)


class SpecError(ConfigError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _as_tuple(v) -> tuple[int, ...]:
    if v is None:
        return ()
    if isinstance(v, (list, tuple)):
        return tuple(int(x) for x in v)
    return (int(v),)


@dataclass
class ExperimentSpec:
    m: tuple[int, ...] | int
    T: tuple[int, ...] | int
    n: int | None = None
    policy: str = "auto"
    alpha: float = 1.0
    delta: float | None = None
    means: tuple[float, ...] | None = None
    family: str | None = None
    k: int | None = None
    best_pos: int = 1
    eps: float | None = None
    gap_range: tuple[float, float] | None = None
    best_mean: float = 0.9
    instance_seed: int | None = None
    perm_seed: int | None = None
    trials: int = 1
    seed: int = 0
    out: str | None = None
    jobs: int = 1
    trace: bool = False
    backend: str | None = None

    def __post_init__(self):
        self.m = _as_tuple(self.m)
        self.T = _as_tuple(self.T)
        if self.means is not None:
            self.means = tuple(float(x) for x in self.means)

    def validate(self) -> None:
        sources = sum(x is not None for x in (self.means, self.family, self.gap_range))
        if sources != 1:
            raise SpecError("instance", "give exactly one of means, family or gap range")
        if self.means is not None:
            if self.n is not None and self.n != len(self.means):
                raise SpecError("n", f"n={self.n} disagrees with {len(self.means)} means")
            self.n = len(self.means)
        if self.n is None or self.n < 1:
            raise SpecError("n", "number of arms must be a positive integer")
        if not self.m:
            raise SpecError("m", "memory size is required")
        if not self.T:
            raise SpecError("T", "horizon is required")
        for name, grid in (("T", self.T), ("m", self.m)):
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise SpecError(name, "grid entries must be strictly increasing")
        if min(self.T) < 1:
            raise SpecError("T", "horizon must be >= 1")
        if min(self.m) < 2:
            raise SpecError("m", "memory size must be >= 2")
        if self.trials < 1:
            raise SpecError("trials", "need at least one trial")
        if self.jobs < 1:
            raise SpecError("jobs", "need at least one worker")
        if self.alpha < 1:
            raise SpecError("alpha", "alpha must be >= 1")
        if self.delta is not None and not 0 < self.delta < 1:
            raise SpecError("delta", "delta must lie in (0, 1)")
        if self.policy != "auto" and self.policy not in POLICY_TAGS:
            raise SpecError("policy", f"expected auto or one of {POLICY_TAGS}")
        if self.family is not None:
            if self.family not in FAMILIES:
                raise SpecError("family", f"expected one of {FAMILIES}")
            if self.k is None:
                raise SpecError("k", "hard families need the head length k")
        if self.gap_range is not None:
            lo, hi = self.gap_range
            if not 0 <= lo <= hi <= self.best_mean <= 1:
                raise SpecError("gap_range", "need 0 <= low <= high <= best_mean <= 1")

    def instance(self, T: int) -> BanditInstance:
        if self.means is not None:
            inst = make_instance(self.means)
        elif self.family is not None:
            inst = HardFamilySpec(self.n, self.k, self.alpha, T, self.family, self.best_pos, self.eps).build()
        else:
            seed = self.seed if self.instance_seed is None else self.instance_seed
            lo, hi = self.gap_range
            inst = uniform_gap_instance(self.n, lo, hi, self.best_mean, SeededRng(seed).child(0).generator)
        if self.perm_seed is not None:
            inst = permuted(inst, SeededRng(self.perm_seed).generator)
        return inst

    def policy_for(self, n: int, m: int) -> str:
        if self.policy != "auto":
            return self.policy
        try:
            return select_policy(n, m)
        except UnsupportedMemoryError as exc:
            raise SpecError("m", str(exc)) from None


@dataclass
class ResultTable:
    rows: list[dict]
    fits: list[dict] = field(default_factory=list)
    trace_csv: str | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row.get(c, "")) for c in COLUMNS])
        return buf.getvalue()

    def aggregates(self) -> list[dict]:
        return [r for r in self.rows if r["trial"] == "mean"]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _one_trial(args) -> TrialSummary:
    means, m, T, tag, alpha, delta, seed, trial, backend = args
    inst = make_instance(means)
    cfg = PolicyConfig(alpha=alpha, delta=delta)
    return simulate_trial(inst, m, T, tag, cfg, SeededRng(seed).child(trial), backend=backend)


def _run_trials(jobs: int, tasks: list) -> list[TrialSummary]:
    if jobs == 1 or len(tasks) == 1:
        return [_one_trial(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one_trial, tasks, chunksize=chunk))


def _point_rows(spec: ExperimentSpec, m: int, T: int) -> tuple[list[dict], str | None]:
    inst = spec.instance(T)
    n = inst.n
    tag = spec.policy_for(n, m)
    base = {"policy": tag, "n": n, "m": m, "T": T, "alpha": float(spec.alpha), "seed": spec.seed}
    trace_text = None
    if spec.trace:
        cfg = PolicyConfig(alpha=spec.alpha, delta=spec.delta)
        buf = io.StringIO()
        results = []
        for t in range(spec.trials):
            env = simulate_env(inst, m, T, tag, cfg, SeededRng(spec.seed).child(t), log_events=True)
            env.write_trace_csv(buf, trial=t)
            results.append(summarize_env(env))
        trace_text = buf.getvalue()
    else:
        tasks = [
            (inst.means, m, T, tag, spec.alpha, spec.delta, spec.seed, t, spec.backend)
            for t in range(spec.trials)
        ]
        results = _run_trials(spec.jobs, tasks)

    rows = []
    for t, r in enumerate(results):
        rows.append({
            "trial": t, **base,
            "regret": r.regret, "realized_regret": r.realized_regret,
            "L1": r.L1, "R1": r.R1, "L2": r.L2, "R2": r.R2,
            "best_retained": r.best_retained, "truncated": r.truncated,
        })
    rows.extend(_aggregate_rows(base, rows))
    return rows, trace_text


_NUMERIC = ("regret", "realized_regret", "L1", "R1", "L2", "R2", "best_retained")


def _aggregate_rows(base: dict, rows: list[dict]) -> list[dict]:
    mean_row = {"trial": "mean", **base}
    ci_row = {"trial": "ci95", **base}
    for col in _NUMERIC:
        vals = [float(r[col]) for r in rows]
        if len(vals) >= 2:
            mean_row[col], ci_row[col] = aggregate_trials(vals)
        else:
            mean_row[col], ci_row[col] = float(vals[0]), ""
    mean_row["truncated"] = sum(bool(r["truncated"]) for r in rows)
    ci_row["truncated"] = ""
    return [mean_row, ci_row]


def run(spec: ExperimentSpec) -> ResultTable:
    """Run every trial of a single (m, T) point."""
    spec.validate()
    if len(spec.m) != 1 or len(spec.T) != 1:
        raise SpecError("T" if len(spec.T) != 1 else "m", "run takes a single value; use sweep for grids")
    rows, trace_text = _point_rows(spec, spec.m[0], spec.T[0])
    table = ResultTable(rows, trace_csv=trace_text)
    _emit(spec, table)
    return table


def sweep(spec: ExperimentSpec) -> ResultTable:
    """Run every grid point and fit log-log slopes of mean regret."""
    spec.validate()
    if len(spec.m) * len(spec.T) < 2:
        raise SpecError("T", "a sweep needs at least 2 grid points")
    rows, traces, means = [], [], {}
    for m in spec.m:
        for T in spec.T:
            point, trace_text = _point_rows(spec, m, T)
            rows.extend(point)
            if trace_text:
                traces.append(trace_text)
            agg = next(r for r in point if r["trial"] == "mean")
            means[(m, T)] = agg
    fits = []
    for variable, fixed_grid, grid in (("T", spec.m, spec.T), ("m", spec.T, spec.m)):
        if len(grid) < 2:
            continue
        for fixed in fixed_grid:
            key = (lambda x: (fixed, x)) if variable == "T" else (lambda x: (x, fixed))
            for metric in ("regret", "R1"):
                pts = [(x, means[key(x)][metric]) for x in grid]
                rec = {"variable": variable, "fixed": fixed, "metric": metric,
                       "points": [[x, y] for x, y in pts]}
                if all(y > 0 for _, y in pts):
                    fit = fit_loglog_slope(pts)
                    rec.update(slope=fit.slope, intercept=fit.intercept, residual_se=fit.residual_se)
                    rec["ratio_first_to_last"] = pts[0][1] / pts[-1][1]
                fits.append(rec)
    table = ResultTable(rows, fits, "".join(traces) if traces else None)
    _emit(spec, table)
    return table


def _emit(spec: ExperimentSpec, table: ResultTable) -> None:
    if spec.out is None:
        return
    out = Path(spec.out)
    try:
        out.write_text(table.to_csv())
        if table.fits:
            out.with_name(out.name + ".fit.json").write_text(json.dumps(table.fits, indent=2) + "\n")
        if table.trace_csv is not None:
            header = ",".join(("trial",) + TRACE_HEADER) + "\n"
            out.with_name(out.name + ".trace.csv").write_text(header + table.trace_csv)
    except OSError as exc:
        raise OSError(f"cannot write output {out}: {exc}") from exc
