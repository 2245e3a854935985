"""Pointwise and blockwise operators for l1-2 sparse recovery.

Index sets are 0-based, sorted, duplicate-free ``numpy`` integer arrays.
Whenever magnitudes tie, the lower index wins; every selection routine
here relies on a stable sort of ``-|x|`` to get that behaviour.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError


def _vec(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite input")
    return x


def _check_lambda(lam, strict=False):
    if strict and not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not lam >= 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")


def index_set(indices, n) -> np.ndarray:
    """Normalise ``indices`` into a sorted unique index array within ``[0, n)``."""
    idx = np.unique(np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices,
                               dtype=np.intp))
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise DomainError(f"index out of range for n={n}")
    return idx


def magnitude_order(x) -> np.ndarray:
    """Indices of ``x`` sorted by decreasing ``|x_i|``, ties by lowest index."""
    return np.argsort(-np.abs(x), kind="stable")


def soft_threshold(x, lam) -> np.ndarray:
    """Componentwise ``sign(x_i) * max(|x_i| - lam, 0)``."""
    _check_lambda(lam)
    x = _vec(x)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def enlarge(x, lam) -> np.ndarray:
    """Rescale ``x`` to ``(1 + lam/||x||_2) x``; the norm grows by exactly ``lam``."""
    _check_lambda(lam)
    x = _vec(x)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise DomainError("enlargement is undefined at the zero vector")
    return (1.0 + lam / nx) * x


def l12_threshold(x, lam) -> np.ndarray:
    """Soft threshold followed by enlargement.

    Returns the zero vector when every ``|x_i| <= lam``, where the
    enlargement step would otherwise be undefined.
    """
    z = soft_threshold(x, lam)
    nz = np.linalg.norm(z)
    if nz == 0:
        return z
    return (1.0 + lam / nz) * z


def prox_l12(y, lam) -> np.ndarray:
    """A minimiser of ``lam (||x||_1 - ||x||_2) + 1/2 ||x - y||^2``.

    For ``||y||_inf > lam`` this is :func:`l12_threshold`.  Otherwise the
    minimiser set contains 1-sparse points on the largest-magnitude
    coordinates of ``y``; we return the one on the lowest such index, with
    magnitude ``lam`` (boundary case) or ``||y||_inf`` (interior case).
    """
    _check_lambda(lam, strict=True)
    y = _vec(y)
    out = np.zeros_like(y)
    if not y.size:
        return out
    ymax = np.max(np.abs(y))
    if ymax > lam:
        return l12_threshold(y, lam)
    if ymax == 0:
        return out
    i = int(np.argmax(np.abs(y)))  # first maximal index
    out[i] = np.sign(y[i]) * (lam if ymax == lam else ymax)
    return out


def truncate_top_s(z, s) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries of ``z`` and zero the rest."""
    z = _vec(z)
    s = int(s)
    if s < 0 or s > z.size:
        raise DomainError(f"truncation level s={s} outside [0, {z.size}]")
    if s == z.size:
        return z.copy()
    out = np.zeros_like(z)
    keep = magnitude_order(z)[:s]
    out[keep] = z[keep]
    return out


def top_t_indices(x, exclude, t) -> np.ndarray:
    """Positions of the ``t`` largest ``|x_i|`` outside ``exclude``."""
    x = _vec(x)
    excl = index_set(exclude, x.size)
    t = int(t)
    mask = np.ones(x.size, dtype=bool)
    mask[excl] = False
    avail = np.flatnonzero(mask)
    if t < 0 or t > avail.size:
        raise DomainError(f"cannot select t={t} indices from {avail.size} available")
    picked = avail[magnitude_order(x[avail])[:t]]
    return np.sort(picked)


def partition_blocks(x, base, t) -> list:
    """Split the complement of ``base`` into blocks of ``t`` indices.

    Blocks follow decreasing ``|x_i|`` (block 0 holds the largest), each
    of size ``t`` except possibly the last.  Every block is returned sorted.
    """
    x = _vec(x)
    t = int(t)
    if t < 1:
        raise DomainError(f"block size must be >= 1, got {t}")
    mask = np.ones(x.size, dtype=bool)
    mask[index_set(base, x.size)] = False
    avail = np.flatnonzero(mask)
    ordered = avail[magnitude_order(x[avail])]
    return [np.sort(ordered[k:k + t]) for k in range(0, ordered.size, t)]
