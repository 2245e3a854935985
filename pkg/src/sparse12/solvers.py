"""Iterative thresholding solvers for l1-2 regularised least squares.

All four schemes share the gradient step ``y = x - v A^T (A x - b)`` and
differ only in the operator applied to ``y``:

* ``ita``  -- l1-2 thresholding at level ``v * lam``
* ``itat`` -- l1-2 thresholding, then keep the ``s`` largest entries
* ``itac`` -- l1-2 thresholding at ``v * lam_k`` with ``lam_k`` shrinking
  geometrically until it drops below the target ``lam``
* ``ista`` -- soft thresholding (the l1 / Lasso baseline)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ProblemInstance, SolverTrace, _as_matrix, _as_vector
from .errors import DivergenceError, DomainError, ShapeError
from .thresholding import l12_threshold, soft_threshold, truncate_top_s

SOLVERS = ("ista", "ita", "itat", "itac")


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 1e-3
    v: float = 0.5
    max_iter: int = 500
    rel_tol: float = 1e-6
    trunc_s: Optional[int] = None
    lam0: Optional[float] = None
    gamma: float = 0.98
    x0: Optional[np.ndarray] = None
    trace_level: str = "metrics_only"

    def __post_init__(self):
        if not self.lam >= 0:
            raise DomainError(f"lambda must be nonnegative, got {self.lam}")
        if not self.v > 0:
            raise DomainError(f"stepsize v must be positive, got {self.v}")
        if self.max_iter < 0:
            raise DomainError("max_iter must be >= 0")
        if not self.rel_tol >= 0:
            raise DomainError("rel_tol must be >= 0")
        if self.trace_level not in ("metrics_only", "full_iterates"):
            raise DomainError(f"unknown trace level {self.trace_level!r}")


def gradient_step(A, b, x, v) -> np.ndarray:
    """One gradient step ``x - v A^T (A x - b)`` on ``1/2 ||Ax - b||^2``."""
    a = _as_matrix(A)
    b = _as_vector(b, "b")
    x = _as_vector(x)
    if a.shape != (b.shape[0], x.shape[0]):
        raise ShapeError(f"A{a.shape}, b{b.shape}, x{x.shape} do not agree")
    return x - v * (a.T @ (a @ x - b))


class _Recorder:
    """Accumulates per-iterate metrics; penalty form depends on the solver."""

    def __init__(self, name, A, b, truth, keep_iterates, l1_only):
        self.name = name
        self.A = A
        self.b = b
        self.truth = truth
        self.truth_norm = np.linalg.norm(truth) if truth is not None else 0.0
        self.l1_only = l1_only
        self.objective, self.residual, self.rel_error, self.lam = [], [], [], []
        self.iterates = [] if keep_iterates else None

    def record(self, x, r, lam):
        rn = float(np.linalg.norm(r))
        pen = np.abs(x).sum()
        if not self.l1_only:
            pen -= np.linalg.norm(x)
        self.objective.append(0.5 * rn * rn + lam * float(pen))
        self.residual.append(rn)
        if self.truth_norm > 0:
            self.rel_error.append(float(np.linalg.norm(x - self.truth) / self.truth_norm))
        else:
            self.rel_error.append(np.nan)
        self.lam.append(lam)
        if self.iterates is not None:
            self.iterates.append(x.copy())

    def finish(self, x, k, how, flags=()):
        return SolverTrace(
            solver=self.name,
            x=x,
            objective=np.asarray(self.objective),
            residual=np.asarray(self.residual),
            rel_error=np.asarray(self.rel_error),
            lam=np.asarray(self.lam),
            iterations_used=k,
            terminated_by=how,
            iterates=self.iterates,
            flags=tuple(flags),
        )


def _setup(instance, cfg):
    A = instance.A if isinstance(instance, ProblemInstance) else _as_matrix(instance[0])
    b = instance.b if isinstance(instance, ProblemInstance) else _as_vector(instance[1], "b")
    truth = instance.truth.values if isinstance(instance, ProblemInstance) else None
    n = A.shape[1]
    if cfg.x0 is None:
        x = np.zeros(n)
    else:
        x = np.array(cfg.x0, dtype=np.float64)
        if x.shape != (n,):
            raise ShapeError(f"initial point has shape {x.shape}, expected ({n},)")
    return A, b, truth, x


def _finite(x, r):
    # Norms overflow long before entries do; treat that as divergence too.
    return np.isfinite(np.linalg.norm(x)) and np.isfinite(np.linalg.norm(r))


def _converged(x_new, x_old, tol):
    # Relative-change test; undefined when the previous iterate is zero
    # unless the step itself is exactly zero.
    d = np.linalg.norm(x_new - x_old)
    p = np.linalg.norm(x_old)
    if not (np.isfinite(d) and np.isfinite(p)):
        return False
    if p == 0:
        return d == 0
    return d <= tol * p


def _fixed_lambda_solve(name, instance, cfg, operator, l1_only=False):
    A, b, truth, x = _setup(instance, cfg)
    rec = _Recorder(name, A, b, truth, cfg.trace_level == "full_iterates", l1_only)
    thr = cfg.v * cfg.lam
    r = A @ x - b
    rec.record(x, r, cfg.lam)
    for k in range(1, cfg.max_iter + 1):
        y = x - cfg.v * (A.T @ r)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(name, k)
        x_new = operator(y, thr)
        r = A @ x_new - b
        if not _finite(x_new, r):
            raise DivergenceError(name, k)
        rec.record(x_new, r, cfg.lam)
        done = _converged(x_new, x, cfg.rel_tol)
        x = x_new
        if done:
            return rec.finish(x, k, "tolerance")
    return rec.finish(x, cfg.max_iter, "max_iter")


def ita_solve(instance, cfg: SolverConfig) -> SolverTrace:
    """Plain iterative l1-2 thresholding."""
    return _fixed_lambda_solve("ita", instance, cfg, l12_threshold)


def itat_solve(instance, cfg: SolverConfig) -> SolverTrace:
    """Iterative l1-2 thresholding with top-``s`` truncation.

    Every iterate after the initial point has at most ``cfg.trunc_s``
    nonzeros.
    """
    s = cfg.trunc_s
    if s is None or s < 1:
        raise DomainError(f"ITAT needs a truncation level trunc_s >= 1, got {s}")

    def op(y, thr):
        return truncate_top_s(l12_threshold(y, thr), min(s, y.size))

    return _fixed_lambda_solve("itat", instance, cfg, op)


def ista_solve(instance, cfg: SolverConfig) -> SolverTrace:
    """Iterative soft thresholding; the recorded objective is the Lasso one."""
    return _fixed_lambda_solve("ista", instance, cfg, soft_threshold, l1_only=True)


def itac_solve(instance, cfg: SolverConfig) -> SolverTrace:
    """Iterative l1-2 thresholding with continuation on lambda.

    Starting from ``lam_0 = cfg.lam0``, each step thresholds at
    ``v * lam_k`` and sets ``lam_{k+1} = gamma * lam_k``; the run stops at
    the first ``k`` with ``lam_k < cfg.lam`` and returns ``x^k``.
    ``cfg.max_iter`` is a safety cap only.
    """
    if cfg.lam0 is None or not cfg.lam0 > 0:
        raise DomainError(f"ITAC needs lam0 > 0, got {cfg.lam0}")
    if not 0 < cfg.gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {cfg.gamma}")
    A, b, truth, x = _setup(instance, cfg)
    rec = _Recorder("itac", A, b, truth, cfg.trace_level == "full_iterates", False)
    lam_k = float(cfg.lam0)
    r = A @ x - b
    rec.record(x, r, lam_k)
    if lam_k < cfg.lam:
        return rec.finish(x, 0, "continuation_stop", flags=("lam0_below_lam",))
    k = 0
    while lam_k >= cfg.lam:
        if k == cfg.max_iter:
            return rec.finish(x, k, "max_iter", flags=("max_iter_cap",))
        y = x - cfg.v * (A.T @ r)
        k += 1
        if not np.all(np.isfinite(y)):
            raise DivergenceError("itac", k)
        x = l12_threshold(y, cfg.v * lam_k)
        lam_k = cfg.gamma * lam_k
        r = A @ x - b
        if not _finite(x, r):
            raise DivergenceError("itac", k)
        rec.record(x, r, lam_k)
    return rec.finish(x, k, "continuation_stop")


_DISPATCH = {"ita": ita_solve, "itat": itat_solve, "itac": itac_solve, "ista": ista_solve}


def solve(name, instance, cfg: SolverConfig) -> SolverTrace:
    """Run the solver called ``name`` (one of :data:`SOLVERS`)."""
    try:
        fn = _DISPATCH[name.lower()]
    except KeyError:
        raise DomainError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}") from None
    return fn(instance, cfg)
