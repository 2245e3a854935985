"""Brute-force sampling oracles, written independently of the package code."""

import itertools

import numpy as np


def unit_rows(rng, count, dim):
    X = rng.standard_normal((count, dim))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def sampled_delta(A, s, samples, rng):
    """max over supports and random unit x of | ||A_J x||^2 - 1 |."""
    n = A.shape[1]
    X = unit_rows(rng, samples, s)
    best = 0.0
    G = A.T @ A
    for J in itertools.combinations(range(n), s):
        GJ = G[np.ix_(J, J)]
        q = np.sum((X @ GJ) * X, axis=1)
        best = max(best, float(np.max(np.abs(q - 1.0))))
    return best


def sampled_theta(A, s, t, samples, rng):
    """max over disjoint supports of |<A_J x, A_T w>| with random unit x, w."""
    n = A.shape[1]
    X = unit_rows(rng, samples, s)
    W = unit_rows(rng, samples, t)
    best = 0.0
    for J in itertools.combinations(range(n), s):
        rest = [i for i in range(n) if i not in J]
        AXJ = X @ A[:, J].T                       # (samples, m)
        if t == 1:
            # w = +-1, so the quotient is |<A_J x, a_T>|
            vals = np.abs(AXJ @ A[:, rest])
            best = max(best, float(vals.max()))
            continue
        for T in itertools.combinations(rest, t):
            vals = np.abs(np.sum(AXJ * (W @ A[:, T].T), axis=1))
            best = max(best, float(vals.max()))
    return best


def pairwise_mu(A):
    """Plain sequential sums of column products."""
    cols = [A[:, j].tolist() for j in range(A.shape[1])]
    best = 0.0
    for i, j in itertools.combinations(range(len(cols)), 2):
        acc = 0.0
        for u, v in zip(cols[i], cols[j]):
            acc += u * v
        best = max(best, abs(acc))
    return best


def near_orthonormal(rng, m, n, eps):
    Q, _ = np.linalg.qr(rng.standard_normal((m, n)))
    return Q + eps * rng.standard_normal((m, n)) / np.sqrt(m)
