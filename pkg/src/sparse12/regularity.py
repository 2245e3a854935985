"""Regularity constants of a sensing matrix and theorem parameter calculators.

Exact constants (restricted isometry, restricted orthogonality, sparse
eigenvalues) are computed by enumerating every support and taking
symmetric eigen/singular values of the corresponding Gram blocks.  That is
exponential in ``n``; a guard (default one million supports) refuses jobs
that are too large instead of running for hours.

The l1-2 restricted eigenvalue ``phi(s, t)`` is not computed exactly.  We
provide certified lower bounds (from the sufficient conditions evaluated
in :func:`rec_certify`) and a sampled *upper* estimate
(:func:`rec_estimate`); the true value lies in between.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import _as_matrix
from .errors import CapacityError, DomainError, TheoremNotApplicable
from .thresholding import top_t_indices

DEFAULT_GUARD = 10**6
GOLDEN = (math.sqrt(5.0) + 1.0) / 2.0
CHUNK = 4096
UNIT_NORM_TOL = 1e-10


def _gram(A) -> np.ndarray:
    a = _as_matrix(A)
    return a.T @ a


def _check_guard(count, what, guard):
    if count > guard:
        raise CapacityError(
            f"{what} needs {count:,} support enumerations (guard {guard:,}); "
            "use a smaller matrix or the sampled estimators")


def _combination_chunks(n, k):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.intp).reshape(len(block), k)


def _extreme_eigs(G, s, guard, what):
    """Min and max eigenvalue of ``G[J, J]`` over all ``|J| = s``."""
    n = G.shape[0]
    if not 1 <= s <= n:
        raise DomainError(f"sparsity level {s} outside [1, {n}]")
    _check_guard(math.comb(n, s), what, guard)
    lo, hi = np.inf, -np.inf
    for c in _combination_chunks(n, s):
        w = np.linalg.eigvalsh(G[c[:, :, None], c[:, None, :]])
        lo = min(lo, float(w[:, 0].min()))
        hi = max(hi, float(w[:, -1].max()))
    return lo, hi


def ric_delta(A, s, guard=DEFAULT_GUARD) -> float:
    """Exact restricted isometry constant ``delta_s``.

    Interlacing makes the extremes over ``|J| <= s`` equal to those over
    ``|J| = s``, so only supports of size exactly ``s`` are visited.
    """
    if s == 0:
        return 0.0
    lo, hi = _extreme_eigs(_gram(A), s, guard, f"delta_{s}")
    return max(hi - 1.0, 1.0 - lo)


def sec_extremes(A, s, guard=DEFAULT_GUARD):
    """``(sigma_min(s), sigma_max(s))``: extreme singular values over ``s``-sparse vectors."""
    lo, hi = _extreme_eigs(_gram(A), s, guard, f"sigma(s={s})")
    return math.sqrt(max(lo, 0.0)), math.sqrt(max(hi, 0.0))


def roc_theta(A, s, t, guard=DEFAULT_GUARD) -> float:
    """Exact restricted orthogonality constant ``theta_{s,t}``.

    Largest singular value of ``A_J^T A_T`` over disjoint ``|J| = s``,
    ``|T| = t``.
    """
    G = _gram(A)
    n = G.shape[0]
    if s < 0 or t < 0 or s + t > n:
        raise DomainError(f"theta_{{{s},{t}}} needs s + t <= n = {n}")
    if s == 0 or t == 0:
        return 0.0
    _check_guard(math.comb(n, s) * math.comb(n - s, t), f"theta_{{{s},{t}}}", guard)
    rest_combos = np.array(list(itertools.combinations(range(n - s), t)), dtype=np.intp)
    best = 0.0
    everything = np.arange(n)
    for J in itertools.combinations(range(n), s):
        J = np.array(J, dtype=np.intp)
        rest = np.delete(everything, J)
        blocks = G[J][:, rest][:, rest_combos]          # (s, K, t)
        blocks = np.transpose(blocks, (1, 0, 2))        # (K, s, t)
        if s == 1 or t == 1:
            vals = np.sqrt(np.einsum("kij,kij->k", blocks, blocks))
        else:
            vals = np.linalg.norm(blocks, ord=2, axis=(1, 2))
        best = max(best, float(vals.max()))
    return best


def mic_mu(A) -> float:
    """Mutual incoherence ``max_{i != j} |A_i^T A_j|`` (columns not renormalised).

    Each inner product is summed over rows in order (``add.reduce`` along
    axis 0 accumulates row by row), so the value does not depend on the
    BLAS build and equals a plain sequential sum of ``A[r, i] * A[r, j]``.
    """
    a = _as_matrix(A)
    n = a.shape[1]
    if n < 2:
        raise DomainError("mutual incoherence needs at least two columns")
    best = 0.0
    for i in range(n - 1):
        prods = a[:, i : i + 1] * a[:, i + 1 :]
        best = max(best, float(np.abs(np.add.reduce(prods, axis=0)).max()))
    return best


# --------------------------------------------------------------------------
# l1-2 restricted eigenvalue: certification and sampling

CONDITIONS = ("i", "ii", "iii", "iv", "v")


@dataclass
class RegularityReport:
    """Constants used by the five sufficient conditions plus their verdicts.

    ``status[c]`` is one of ``holds``, ``fails``, ``not_applicable`` (the
    condition degenerates, e.g. ``t = 1``) or ``not_evaluated`` (a needed
    constant exceeded the enumeration guard).  ``phi_lower_bounds[c]`` is
    the derived lower bound on ``phi(s, t)`` when the condition holds and
    the bound is positive, else ``None``.
    """

    s: int
    t: int
    delta: dict = field(default_factory=dict)
    theta: dict = field(default_factory=dict)
    mu: Optional[float] = None
    sigma_min: dict = field(default_factory=dict)
    sigma_max: dict = field(default_factory=dict)
    unit_columns: bool = False
    status: dict = field(default_factory=dict)
    phi_lower_bounds: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)

    @property
    def certified(self) -> dict:
        return {c: self.status.get(c) == "holds" for c in CONDITIONS}

    @property
    def best_lower_bound(self) -> Optional[float]:
        vals = [v for v in self.phi_lower_bounds.values() if v is not None]
        return max(vals) if vals else None

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "t": self.t,
            "delta": {str(k): v for k, v in sorted(self.delta.items())},
            "theta": {f"{a},{b}": v for (a, b), v in sorted(self.theta.items())},
            "mu": self.mu,
            "sigma_min": {str(k): v for k, v in sorted(self.sigma_min.items())},
            "sigma_max": {str(k): v for k, v in sorted(self.sigma_max.items())},
            "unit_columns": self.unit_columns,
            "conditions": {
                c: {"status": self.status.get(c), "phi_lower_bound": self.phi_lower_bounds.get(c)}
                for c in CONDITIONS
            },
            "skipped": dict(self.skipped),
        }


def rec_certify(A, s, t, guard=DEFAULT_GUARD) -> RegularityReport:
    """Evaluate the five sufficient conditions for ``phi(s, t) > 0``.

    (i)   (sqrt t - 1) sigma_min(s+t) > (sqrt s + 1) sigma_max(t)
    (ii)  (sqrt s + 1) theta_{t,s+t} < (sqrt t - 1)(1 - delta_{s+t})
    (iii) (sqrt t - 1) sigma_min(s+t) > 2 theta_{s+t,1} sqrt t (sqrt s + 1)
    (iv)  (sqrt t - 1) sigma_min(s+t) > 2 mu sqrt(t(s+t)) (sqrt s + 1)
    (v)   unit columns and
          mu < (sqrt t - 1) / ((s+t)(sqrt t - 1) + 2 sqrt(t(s+t)) (sqrt s + 1))

    Verdicts follow the inequalities literally.  The lower bounds for
    (iii) and (iv) use ``sigma_min(s+t)**2`` inside the square root, since
    ``||A x_J||^2 >= sigma_min^2 ||x_J||^2`` is what actually holds; when
    that bracket is not positive the bound is ``None`` even if the verdict
    is ``holds``.
    """
    a = _as_matrix(A)
    n = a.shape[1]
    if s < 1 or t < 1:
        raise DomainError("rec_certify needs s >= 1 and t >= 1")
    rep = RegularityReport(s=s, t=t)
    G = a.T @ a
    norms = np.sqrt(np.diag(G))
    rep.unit_columns = bool(np.all(np.abs(norms - 1.0) <= UNIT_NORM_TOL))
    st = s + t
    rs, rt = math.sqrt(s), math.sqrt(t)
    coef = rt - 1.0

    def attempt(name, fn):
        try:
            return fn()
        except CapacityError as exc:
            rep.skipped[name] = str(exc)
        except DomainError as exc:
            rep.skipped[name] = f"undefined: {exc}"
        return None

    eig_st = attempt(f"sigma({st})", lambda: _extreme_eigs(G, st, guard, f"sigma(s={st})"))
    if eig_st is not None:
        lo, hi = eig_st
        rep.sigma_min[st] = math.sqrt(max(lo, 0.0))
        rep.sigma_max[st] = math.sqrt(max(hi, 0.0))
        rep.delta[st] = max(hi - 1.0, 1.0 - lo)
    eig_t = attempt(f"sigma({t})", lambda: _extreme_eigs(G, t, guard, f"sigma(s={t})"))
    if eig_t is not None:
        rep.sigma_min[t] = math.sqrt(max(eig_t[0], 0.0))
        rep.sigma_max[t] = math.sqrt(max(eig_t[1], 0.0))
        rep.delta[t] = max(eig_t[1] - 1.0, 1.0 - eig_t[0])
    th_ii = attempt(f"theta({t},{st})", lambda: roc_theta(a, t, st, guard))
    if th_ii is not None:
        rep.theta[(t, st)] = th_ii
    th_iii = attempt(f"theta({st},1)", lambda: roc_theta(a, st, 1, guard))
    if th_iii is not None:
        rep.theta[(st, 1)] = th_iii
    if n >= 2:
        rep.mu = mic_mu(a)

    smin = rep.sigma_min.get(st)
    smax_t = rep.sigma_max.get(t)
    dst = rep.delta.get(st)
    ratio = (rs + 1.0) / coef if coef > 0 else math.inf

    def settle(cond, needed, holds, bound):
        if coef <= 0:
            rep.status[cond] = "not_applicable"
        elif any(v is None for v in needed):
            rep.status[cond] = "not_evaluated"
        elif holds():
            rep.status[cond] = "holds"
            b = bound()
            rep.phi_lower_bounds[cond] = b if b is not None and b > 0 else None
            return
        else:
            rep.status[cond] = "fails"
        rep.phi_lower_bounds[cond] = None

    settle("i", [smin, smax_t],
           lambda: coef * smin > (rs + 1.0) * smax_t,
           lambda: smin - ratio * smax_t)
    settle("ii", [th_ii, dst],
           lambda: (rs + 1.0) * th_ii < coef * (1.0 - dst),
           lambda: math.sqrt(max(1.0 - dst, 0.0)) * (1.0 - th_ii * ratio / (1.0 - dst)))

    def root(x):
        return math.sqrt(x) if x > 0 else None

    settle("iii", [smin, th_iii],
           lambda: coef * smin > 2.0 * th_iii * rt * (rs + 1.0),
           lambda: root(smin**2 - 2.0 * th_iii * rt * ratio))
    mu = rep.mu
    spread = math.sqrt(t * st)
    settle("iv", [smin, mu],
           lambda: coef * smin > 2.0 * mu * spread * (rs + 1.0),
           lambda: root(smin**2 - 2.0 * mu * spread * ratio))
    if coef > 0 and mu is not None and not rep.unit_columns:
        rep.status["v"] = "fails"
        rep.phi_lower_bounds["v"] = None
    else:
        settle("v", [mu],
               lambda: mu < coef / (st * coef + 2.0 * spread * (rs + 1.0)),
               lambda: root(1.0 - st * mu - 2.0 * mu * spread * ratio))
    return rep


def _cone_scale_limit(p, q, a, w):
    """Largest c with ``c a - p <= sqrt(q^2 + c^2 w^2)``; ``inf`` if unbounded.

    ``p, q`` are the l1/l2 norms of the on-support part, ``a, w`` those of
    the off-support direction (``a >= w``).
    """
    d = a * a - w * w
    if d <= 1e-14 * a * a:
        return math.inf
    disc = a * a * q * q + w * w * p * p - w * w * q * q
    return (a * p + math.sqrt(max(disc, 0.0))) / d


def _rec_samples(A, s, t, rng):
    """Endless stream of ratios ``||Ax|| / ||x_J||`` over random cone points."""
    n = A.shape[1]
    s_eff = max(1, min(s, n))
    while True:
        k = int(rng.integers(1, s_eff + 1))
        I = np.sort(rng.choice(n, size=k, replace=False))
        x = np.zeros(n)
        x[I] = rng.standard_normal(k)
        rest = np.setdiff1d(np.arange(n), I)
        if rest.size:
            j = int(rng.integers(1, rest.size + 1))
            pos = rng.choice(rest, size=j, replace=False)
            u = np.zeros(n)
            u[pos] = rng.standard_normal(j)
            p, q = np.abs(x[I]).sum(), np.linalg.norm(x[I])
            a, w = np.abs(u).sum(), np.linalg.norm(u)
            cmax = _cone_scale_limit(p, q, a, w)
            if math.isinf(cmax):
                c = (q / w) * 10.0 ** rng.uniform(-3, 3)
            else:
                # favour the cone boundary, where the ratio tends to be smallest
                c = cmax * rng.uniform() ** 0.25
            x = x + c * u
        J = np.union1d(I, top_t_indices(x, I, min(t, rest.size)))
        yield float(np.linalg.norm(A @ x) / np.linalg.norm(x[J]))


def rec_estimate(A, s, t, samples, seed=0) -> float:
    """Sampled *upper* estimate of ``phi(s, t)``: a running minimum.

    Never use this to certify anything; it only brackets the true value from
    above.  With a fixed ``seed`` the estimate is nonincreasing in
    ``samples`` because longer runs extend the same stream.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    a = _as_matrix(A)
    rng = np.random.default_rng(seed)
    stream = _rec_samples(a, s, t, rng)
    return min(itertools.islice(stream, int(samples)))


def consistency_bounds(s, lam, phi):
    """Right-hand sides of the oracle inequality and the recovery bound.

    Returns ``(oracle_rhs, recovery_rhs)``.  ``recovery_rhs`` is ``None``
    for ``s <= 4``, where the ``4 / (sqrt s - 2)`` branch is undefined.
    """
    if not phi > 0:
        raise DomainError(f"phi must be positive, got {phi}")
    if s < 1:
        raise DomainError("s must be >= 1")
    if not lam >= 0:
        raise DomainError("lambda must be nonnegative")
    rs = math.sqrt(s)
    core = lam * lam * (rs + 1.0) ** 2
    oracle = 2.0 * core / phi**2
    if s <= 4:
        return oracle, None
    factor = max((rs + 1.0) / rs, 4.0 / (rs - 2.0)) ** 2
    return oracle, (4.0 + factor) * core / phi**4


@dataclass(frozen=True)
class ItatSchedule:
    v_window: tuple
    rho: Optional[float]
    error_floor: Optional[float]
    step_scale: Optional[float]
    k_star: Optional[Callable[[float], int]]

    def complexity_bound(self) -> Optional[float]:
        """Error guaranteed after ``k_star`` iterations."""
        if self.rho is None:
            return None
        return (math.sqrt(5.0) + 3.0 - 2.0 * self.rho) / (1.0 - self.rho) * self.step_scale


def itat_schedule(delta3s, lam, s, noise_norm=0.0, delta2s=0.0, v=None) -> ItatSchedule:
    """Stepsize window, contraction factor and error floor for ITAT.

    The window is the exact set of ``v`` with
    ``rho = GOLDEN * (|1 - v| + v * delta3s) < 1``:
    ``((3 - sqrt 5) / (2 (1 - delta3s)), (sqrt 5 + 1) / (2 (1 + delta3s)))``.
    """
    if not 0 <= delta3s < GOLDEN - 1.0:
        raise TheoremNotApplicable(
            f"delta_3s = {delta3s} must lie in [0, {GOLDEN - 1.0:.6f}) for ITAT convergence")
    lo = (3.0 - math.sqrt(5.0)) / (2.0 * (1.0 - delta3s))
    hi = GOLDEN / (1.0 + delta3s)
    if v is None:
        return ItatSchedule((lo, hi), None, None, None, None)
    if not lo < v < hi:
        raise TheoremNotApplicable(f"stepsize v={v} outside the window ({lo:.6f}, {hi:.6f})")
    rho = GOLDEN * (abs(1.0 - v) + v * delta3s)
    scale = v * (math.sqrt(1.0 + delta2s) * noise_norm + math.sqrt(2.0 * s) * lam)
    floor = GOLDEN / (1.0 - rho) * scale

    def k_star(e0):
        if scale <= 0:
            raise DomainError("k* is unbounded when the noise and lambda terms vanish")
        ratio = e0 / scale
        if ratio <= 1.0:
            return 0
        return math.ceil(math.log(ratio) / math.log(1.0 / rho))

    return ItatSchedule((lo, hi), rho, floor, scale, k_star)


@dataclass(frozen=True)
class ItacSchedule:
    eta: float
    eta_range: tuple
    lambda0_min: float
    lambda_stop: float
    gamma_range: tuple
    error_bound: float
    noiseless: bool


def itac_schedule(delta_s, delta_s1, s, truth_norm, noise_norm, eta=None, v=1.0) -> ItacSchedule:
    """Parameters under which ITAC has no false support and a noise-level error.

    Requires ``(sqrt s + 1) delta_{s+1} < 1``.  ``eta`` defaults to the
    midpoint of its admissible interval.
    """
    rs1 = math.sqrt(s) + 1.0
    if not rs1 * delta_s1 < 1.0:
        raise TheoremNotApplicable(
            f"(sqrt(s)+1) * delta_(s+1) = {rs1 * delta_s1:.6g} must be < 1")
    if not 0 < v <= 1:
        raise DomainError(f"stepsize v must lie in (0, 1], got {v}")
    if not truth_norm > 0:
        raise DomainError("truth_norm must be positive")
    eta_hi = 1.0 - rs1 * delta_s1
    if eta is None:
        eta = eta_hi / 2.0
    if not 0 < eta < eta_hi:
        raise TheoremNotApplicable(f"eta={eta} outside (0, {eta_hi:.6g})")
    root = math.sqrt(1.0 + delta_s)
    gamma_lo = rs1 * v * delta_s1 / (1.0 - eta) + 1.0 - v
    if delta_s1 > 0:
        bound = (1.0 - eta) * root / (eta * delta_s1) * noise_norm
    else:
        bound = 0.0 if noise_norm == 0 else math.inf
    return ItacSchedule(
        eta=eta,
        eta_range=(0.0, eta_hi),
        lambda0_min=truth_norm / rs1,
        lambda_stop=root / eta * noise_norm,
        gamma_range=(gamma_lo, 1.0),
        error_bound=bound,
        noiseless=noise_norm == 0,
    )
