"""Domain types, the l1-2 objective and recovery metrics.

The objective throughout the package is

    F(x) = 1/2 ||Ax - b||_2^2 + lam * (||x||_1 - ||x||_2)

with the 1/2 factor on the data term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, ShapeError

MATRIX_KINDS = ("gaussian", "pdct", "explicit")
TERMINATIONS = ("tolerance", "max_iter", "continuation_stop")


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """Dense ``m x n`` sensing matrix with provenance.

    ``entries`` is stored as a read-only C-ordered float64 array of shape
    ``(m, n)``.  Seeded kinds (``gaussian``, ``pdct``) carry the seed that
    regenerates them bit-exactly.
    """

    entries: np.ndarray
    kind: str = "explicit"
    seed: Optional[int] = None

    def __post_init__(self):
        a = np.ascontiguousarray(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ShapeError(f"sensing matrix must be 2-D and non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("sensing matrix has non-finite entries")
        if self.kind not in MATRIX_KINDS:
            raise DomainError(f"unknown matrix kind {self.kind!r}")
        if self.kind != "explicit" and self.seed is None:
            raise DomainError(f"{self.kind} matrix requires a seed")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, SensingMatrix):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.seed == other.seed
            and np.array_equal(self.entries, other.entries)
        )


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """Ground-truth vector with its (derived) support.

    The support is always recomputed from ``values`` so it can never drift
    out of sync with them.
    """

    values: np.ndarray
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ShapeError(f"signal must be 1-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("signal has non-finite entries")
        object.__setattr__(self, "values", _frozen(v))
        supp = np.flatnonzero(v)
        supp.flags.writeable = False
        object.__setattr__(self, "support", supp)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def sparsity(self) -> int:
        return int(self.support.size)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, SparseSignal):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One recovery task: ``b = A @ truth + sigma * eps``."""

    matrix: SensingMatrix
    truth: SparseSignal
    sigma: float
    b: np.ndarray
    noise_seed: int = 0
    signal_seed: Optional[int] = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if b.shape != (self.matrix.m,):
            raise ShapeError(f"observation has shape {b.shape}, expected ({self.matrix.m},)")
        if self.truth.n != self.matrix.n:
            raise ShapeError(f"truth has length {self.truth.n}, matrix has {self.matrix.n} columns")
        if not self.sigma >= 0:
            raise DomainError(f"sigma must be nonnegative, got {self.sigma}")
        object.__setattr__(self, "b", _frozen(b))

    @property
    def A(self) -> np.ndarray:
        return self.matrix.entries

    @property
    def noise(self) -> np.ndarray:
        """The realised noise vector ``b - A @ truth``."""
        return self.b - self.A @ self.truth.values

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.matrix == other.matrix
            and self.truth == other.truth
            and self.sigma == other.sigma
            and self.noise_seed == other.noise_seed
            and self.signal_seed == other.signal_seed
            and np.array_equal(self.b, other.b)
        )


@dataclass
class SolverTrace:
    """Per-iteration record of one solver run.

    Metric arrays have length ``iterations_used + 1``; entry ``k`` describes
    iterate ``x^k`` (index 0 is the initial point).  ``lam`` is constant for
    the fixed-parameter solvers; for continuation it is the schedule
    ``lambda_k``, so ``x^{k+1}`` was formed with threshold ``v * lam[k]``.
    """

    solver: str
    x: np.ndarray
    objective: np.ndarray
    residual: np.ndarray
    rel_error: np.ndarray
    lam: np.ndarray
    iterations_used: int
    terminated_by: str
    iterates: Optional[list] = None
    flags: tuple = ()

    @property
    def final_rel_error(self) -> float:
        return float(self.rel_error[-1])


def _as_matrix(A) -> np.ndarray:
    a = A.entries if isinstance(A, SensingMatrix) else np.asarray(A, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"matrix must be 2-D, got shape {a.shape}")
    return a


def _as_vector(x, name="x") -> np.ndarray:
    v = x.values if isinstance(x, SparseSignal) else np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {v.shape}")
    return v


def l12_penalty(x) -> float:
    """``||x||_1 - ||x||_2`` (always nonnegative)."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.abs(x).sum() - np.linalg.norm(x))


def objective_l12(A, b, x, lam) -> float:
    """Evaluate ``1/2 ||Ax - b||^2 + lam (||x||_1 - ||x||_2)``."""
    a = _as_matrix(A)
    b = _as_vector(b, "b")
    x = _as_vector(x)
    if a.shape != (b.shape[0], x.shape[0]):
        raise ShapeError(f"A{a.shape}, b{b.shape}, x{x.shape} do not agree")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(x))):
        raise DomainError("non-finite input to objective")
    r = a @ x - b
    return 0.5 * float(r @ r) + lam * l12_penalty(x)


def relative_error(x, truth) -> float:
    """``||x - truth|| / ||truth||``."""
    t = _as_vector(truth, "truth")
    x = _as_vector(x)
    if x.shape != t.shape:
        raise ShapeError(f"x{x.shape} and truth{t.shape} differ")
    nt = np.linalg.norm(t)
    if nt == 0:
        raise DomainError("relative error undefined for a zero truth vector")
    return float(np.linalg.norm(x - t) / nt)


def in_level_set(A, b, x, truth, lam) -> bool:
    """True iff the objective at ``x`` does not exceed the objective at ``truth``."""
    return objective_l12(A, b, x, lam) <= objective_l12(A, b, truth, lam)
