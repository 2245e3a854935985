"""Experiment drivers: convergence curves, success-rate and parameter sweeps.

Every trial draws its instance from ``InstanceSpec(..., seed=trial_seed)``
with ``trial_seed = seed_base XOR trial``.  The matrix, signal and noise use
separate Philox substreams of that seed (see :mod:`sparse12.problems`), so
trials share no RNG state and may run in any order or on any number of
workers without changing a single output byte (timings aside).

A plan file is a JSON object mirroring :class:`ExperimentPlan`::

    {"m": 256, "n": 1024, "matrix_kind": "gaussian", "s": 51, "sigma": 0.001,
     "trials": 100, "seed_base": 0,
     "sweep": "none" | "gamma" | "trunc_s" | "sparsity", "grid": [...],
     "success_threshold": 0.01,
     "solvers": [{"name": "itat", "lam": 0.001, "v": 0.5, "trunc_s": "truth"},
                 {"name": "ita", "v": "lipschitz"},
                 {"name": "itac", "lam0": "auto", "gamma": 0.98}]}
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DivergenceError, DomainError
from .problems import InstanceSpec, make_instance
from .solvers import SOLVERS, SolverConfig, solve

SWEEPS = ("none", "gamma", "trunc_s", "sparsity")
RAW_COLUMNS = ("sweep_value", "solver", "trial", "re", "iterations", "seconds")
AGG_COLUMNS = ("sweep_value", "solver", "mean_re", "median_re", "success_rate", "mean_iters")


@dataclass(frozen=True)
class SolverSpec:
    """Solver entry of a plan.

    ``v="lipschitz"`` means ``1 / ||A||_2^2``; ``trunc_s="truth"`` uses the
    true sparsity of each instance; ``lam0="auto"`` uses ``||A^T b||_inf``.
    """

    name: str
    lam: float = 1e-3
    v: Union[float, str] = 0.5
    trunc_s: Union[int, str, None] = "truth"
    lam0: Union[float, str, None] = "auto"
    gamma: float = 0.98
    max_iter: int = 500
    rel_tol: float = 1e-6
    label: Optional[str] = None

    def __post_init__(self):
        if self.name not in SOLVERS:
            raise DomainError(f"unknown solver {self.name!r}")
        if isinstance(self.v, str) and self.v != "lipschitz":
            raise DomainError(f"v must be a number or 'lipschitz', got {self.v!r}")

    @property
    def tag(self) -> str:
        return self.label or self.name

    def config(self, A, b, s_true) -> SolverConfig:
        v = 1.0 / np.linalg.norm(A, 2) ** 2 if self.v == "lipschitz" else float(self.v)
        trunc = s_true if self.trunc_s == "truth" else self.trunc_s
        lam0 = float(np.max(np.abs(A.T @ b))) if self.lam0 == "auto" else self.lam0
        return SolverConfig(
            lam=self.lam, v=v, max_iter=self.max_iter, rel_tol=self.rel_tol,
            trunc_s=trunc if self.name == "itat" else None,
            lam0=lam0 if self.name == "itac" else None, gamma=self.gamma,
        )


def default_solvers():
    """The comparison set used for the convergence and success experiments.

    ITAT and ITAC use ``v = 0.5``; ITA and ISTA have no truncation or
    continuation to keep iterates sparse and diverge at that step on
    ``256 x 1024`` Gaussian matrices, so they use ``1 / ||A||^2``.
    """
    return [
        SolverSpec("ista", v="lipschitz"),
        SolverSpec("ita", v="lipschitz"),
        SolverSpec("itat"),
        SolverSpec("itac"),
    ]


@dataclass
class ExperimentPlan:
    m: int = 256
    n: int = 1024
    matrix_kind: str = "gaussian"
    s: int = 51
    sigma: float = 1e-3
    solvers: list = field(default_factory=default_solvers)
    trials: int = 100
    seed_base: int = 0
    sweep: str = "none"
    grid: tuple = ()
    success_threshold: float = 0.01
    keep_rows: bool = True
    workers: Optional[int] = None

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trial count must be >= 1")
        if self.sweep not in SWEEPS:
            raise DomainError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if self.sweep != "none" and not len(self.grid):
            raise DomainError(f"sweep {self.sweep!r} needs a nonempty grid")
        self.grid = tuple(self.grid)
        self.solvers = [sp if isinstance(sp, SolverSpec) else SolverSpec(**sp) for sp in self.solvers]
        if not self.solvers:
            raise DomainError("plan has no solvers")
        tags = [sp.tag for sp in self.solvers]
        if len(set(tags)) != len(tags):
            raise DomainError(f"solver labels must be unique, got {tags}")

    def trial_seed(self, trial: int) -> int:
        return self.seed_base ^ trial

    def instance_spec(self, trial, s=None) -> InstanceSpec:
        seed = self.trial_seed(trial)
        return InstanceSpec(m=self.m, n=self.n, matrix_kind=self.matrix_kind,
                            s=self.s if s is None else int(s), sigma=self.sigma,
                            matrix_seed=seed, signal_seed=seed, noise_seed=seed)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentPlan":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise DomainError(f"unknown plan field(s): {sorted(unknown)}")
        return cls(**doc)


def load_plan(path) -> ExperimentPlan:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise DomainError(f"{path}: plan must be a JSON object")
    try:
        return ExperimentPlan.from_dict(doc)
    except TypeError as exc:
        raise DomainError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class TrialRow:
    sweep_value: object
    solver: str
    trial: int
    re: float
    iterations: int
    seconds: float
    status: str = "ok"


@dataclass(frozen=True)
class AggregateRow:
    sweep_value: object
    solver: str
    mean_re: float
    median_re: float
    success_rate: float
    mean_iters: float
    mean_seconds: float
    trials: int


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    aggregates: list
    rows: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)

    def aggregate(self, solver, sweep_value=None) -> AggregateRow:
        for agg in self.aggregates:
            if agg.solver == solver and agg.sweep_value == sweep_value:
                return agg
        raise KeyError((solver, sweep_value))

    def write_raw_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RAW_COLUMNS)
            for r in self.rows:
                w.writerow([_fmt(r.sweep_value), r.solver, r.trial, _fmt(r.re), r.iterations,
                            f"{r.seconds:.6f}"])

    def write_aggregate_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(AGG_COLUMNS)
            for a in self.aggregates:
                w.writerow([_fmt(a.sweep_value), a.solver, _fmt(a.mean_re), _fmt(a.median_re),
                            _fmt(a.success_rate), _fmt(a.mean_iters)])

    def write_curves_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("iteration", "solver", "mean_re"))
            for tag, curve in self.curves.items():
                for k, val in enumerate(curve):
                    w.writerow([k, tag, _fmt(val)])

    def plot_svg(self, path) -> None:
        """Line plot of the curves (convergence) or aggregates (sweeps)."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        if self.curves:
            for tag, curve in self.curves.items():
                ax.semilogy(np.arange(len(curve)), curve, label=tag)
            ax.set_xlabel("iteration")
            ax.set_ylabel("mean relative error")
        else:
            ylabel = "success rate" if self.plan.sweep == "sparsity" else "mean relative error"
            for tag in dict.fromkeys(a.solver for a in self.aggregates):
                pts = [a for a in self.aggregates if a.solver == tag]
                ys = [a.success_rate if self.plan.sweep == "sparsity" else a.mean_re for a in pts]
                ax.plot([a.sweep_value for a in pts], ys, marker="o", label=tag)
            ax.set_xlabel(self.plan.sweep)
            ax.set_ylabel(ylabel)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def worker_count(requested=None) -> int:
    """Worker threads: ``requested``, capped by ``SPARSE12_THREADS`` and the CPU count."""
    cap = os.environ.get("SPARSE12_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _run_one(spec: SolverSpec, instance, cfg, truth_norm):
    t0 = time.perf_counter()
    try:
        tr = solve(spec.name, instance, cfg)
    except DivergenceError as exc:
        return math.inf, exc.iteration, time.perf_counter() - t0, "diverged", None
    secs = time.perf_counter() - t0
    re = float(np.linalg.norm(tr.x - instance.truth.values) / truth_norm)
    return re, tr.iterations_used, secs, "ok", tr.rel_error


def _trial(plan: ExperimentPlan, trial: int, want_curves: bool):
    """Rows (and RE curves) for one trial across every sweep value."""
    rows, curves = [], {}
    values = plan.grid if plan.sweep != "none" else (None,)
    inst = None
    for val in values:
        if inst is None or plan.sweep == "sparsity":
            s = val if plan.sweep == "sparsity" else None
            inst = make_instance(plan.instance_spec(trial, s))
            A, b = inst.A, inst.b
            truth_norm = np.linalg.norm(inst.truth.values)
            lip = None
        for spec in plan.solvers:
            if plan.sweep == "gamma" and spec.name == "itac":
                spec = replace(spec, gamma=float(val))
            elif plan.sweep == "trunc_s" and spec.name == "itat":
                spec = replace(spec, trunc_s=int(val))
            if spec.v == "lipschitz":
                if lip is None:
                    lip = 1.0 / np.linalg.norm(A, 2) ** 2
                spec = replace(spec, v=lip)
            cfg = spec.config(A, b, inst.truth.sparsity)
            if truth_norm == 0:
                raise DomainError("sparsity 0 gives a zero truth; relative error is undefined")
            re, iters, secs, status, rel = _run_one(spec, inst, cfg, truth_norm)
            rows.append(TrialRow(val, spec.tag, trial, re, iters, secs, status))
            if want_curves and rel is not None:
                curves[spec.tag] = rel
    return rows, curves


def _aggregate(plan, rows):
    out = []
    values = plan.grid if plan.sweep != "none" else (None,)
    tags = list(dict.fromkeys(r.solver for r in rows))
    for val in values:
        for tag in tags:
            sel = [r for r in rows if r.sweep_value == val and r.solver == tag]
            if not sel:
                continue
            re = np.array([r.re for r in sel])
            out.append(AggregateRow(
                sweep_value=val,
                solver=tag,
                mean_re=float(np.mean(re)),
                median_re=float(np.median(re)),
                success_rate=float(np.mean(re < plan.success_threshold)),
                mean_iters=float(np.mean([r.iterations for r in sel])),
                mean_seconds=float(np.mean([r.seconds for r in sel])),
                trials=len(sel),
            ))
    return out


def _execute(plan: ExperimentPlan, want_curves=False) -> ExperimentResult:
    workers = worker_count(plan.workers)
    trials = range(plan.trials)
    if workers == 1:
        results = [_trial(plan, t, want_curves) for t in trials]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _trial(plan, t, want_curves), trials))
    rows = [r for trial_rows, _ in results for r in trial_rows]
    rows.sort(key=lambda r: (r.trial,))
    result = ExperimentResult(plan, _aggregate(plan, rows), rows if plan.keep_rows else [])
    if want_curves:
        length = max(sp.max_iter for sp in plan.solvers) + 1
        for spec in plan.solvers:
            acc = np.zeros(length)
            for _, curves in results:
                c = curves.get(spec.tag)
                if c is None:
                    # diverged: counts as an infinite error from then on
                    acc += math.inf
                    continue
                padded = np.empty(length)
                padded[: c.size] = c[:length]
                padded[c.size:] = c[-1]
                acc += padded
            result.curves[spec.tag] = acc / plan.trials
    return result


def run_convergence(plan: ExperimentPlan) -> ExperimentResult:
    """Mean relative error per iteration for each solver.

    Runs that stop early carry their final error forward.
    """
    if plan.sweep != "none":
        raise DomainError("run_convergence needs sweep='none'")
    return _execute(plan, want_curves=True)


def run_success_sweep(plan: ExperimentPlan) -> ExperimentResult:
    """Success rate (RE below the threshold) for every sparsity in the grid."""
    if plan.sweep != "sparsity":
        raise DomainError("run_success_sweep needs sweep='sparsity'")
    for s in plan.grid:
        if not 1 <= int(s) <= plan.n:
            raise DomainError(f"sparsity {s} outside [1, {plan.n}]")
    return _execute(plan)


def run_param_sweep(plan: ExperimentPlan) -> ExperimentResult:
    """Average error over a grid of ITAC ``gamma`` or ITAT truncation levels.

    Only solvers of the swept kind are run; if the plan lists none, a
    default ITAC (``gamma``) or ITAT (``trunc_s``) entry is used.
    """
    if plan.sweep not in ("gamma", "trunc_s"):
        raise DomainError("run_param_sweep needs sweep='gamma' or 'trunc_s'")
    if plan.sweep == "gamma":
        for g in plan.grid:
            if not 0 < g < 1:
                raise DomainError(f"gamma {g} outside (0, 1)")
    kind = "itac" if plan.sweep == "gamma" else "itat"
    solvers = [sp for sp in plan.solvers if sp.name == kind] or [SolverSpec(kind)]
    return _execute(replace(plan, solvers=solvers))


def run_plan(plan: ExperimentPlan) -> ExperimentResult:
    if plan.sweep == "none":
        return run_convergence(plan)
    if plan.sweep == "sparsity":
        return run_success_sweep(plan)
    return run_param_sweep(plan)
