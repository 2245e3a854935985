import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparse12.errors import DomainError
from sparse12.thresholding import (
    enlarge,
    l12_threshold,
    partition_blocks,
    prox_l12,
    soft_threshold,
    top_t_indices,
    truncate_top_s,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = arrays(np.float64, st.integers(1, 12), elements=finite)
lams = st.floats(0, 50, allow_nan=False)


def test_soft_threshold_examples(rng):
    assert soft_threshold([3, -0.5, 1], 1).tolist() == [2, 0, 0]
    assert soft_threshold([-2, 2], 0.5).tolist() == [-1.5, 1.5]
    x = rng.standard_normal(9)
    assert np.array_equal(soft_threshold(x, 0), x)
    with pytest.raises(DomainError):
        soft_threshold(x, -1)


def test_enlarge_examples(rng):
    assert np.allclose(enlarge([3, 4], 1), [3.6, 4.8], atol=1e-15)
    assert np.allclose(enlarge([0, 2], 2), [0, 4])
    x = rng.standard_normal(5)
    assert np.array_equal(enlarge(x, 0), x)
    with pytest.raises(DomainError):
        enlarge([0, 0], 1)


def test_l12_threshold_examples():
    f = 1 + 1 / math.sqrt(10)
    assert np.allclose(l12_threshold([4, -2, 0.5], 1), [3 * f, -f, 0], atol=1e-14)
    assert np.allclose(l12_threshold([4, -2, 0.5], 1), [3.94868, -1.31623, 0], atol=1e-5)
    assert np.array_equal(l12_threshold([0.3, -1, 0.9], 1), np.zeros(3))
    assert np.allclose(l12_threshold([1, 0], 0.1), [1, 0], atol=1e-15)


@pytest.mark.parametrize("y, lam, want", [
    ([2, 1], 2, [2, 0]),          # boundary case
    ([2, -2, 1], 3, [2, 0, 0]),   # interior case, tie -> lowest index
    ([0, 0], 1, [0, 0]),
    ([-0.5, 0.5], 1, [-0.5, 0]),
])
def test_prox_small_cases(y, lam, want):
    assert prox_l12(y, lam).tolist() == want


def test_prox_tie_is_a_true_tie():
    def F(x, y, lam):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return lam * (np.abs(x).sum() - np.linalg.norm(x)) + 0.5 * np.sum((x - y) ** 2)
    y = [2, -2, 1]
    assert F([2, 0, 0], y, 3) == F([0, -2, 0], y, 3)


def test_prox_large_signal_matches_threshold(rng):
    y = np.array([4, -2, 0.5])
    assert np.array_equal(prox_l12(y, 1), l12_threshold(y, 1))
    with pytest.raises(DomainError):
        prox_l12(y, 0)


def _grid_min(y, lam, pts=401):
    r = np.max(np.abs(y)) + lam
    g = np.linspace(-r, r, pts)
    if y.size == 1:
        return np.min(0.5 * (g - y[0]) ** 2)  # the penalty vanishes in one dimension
    X, Y = np.meshgrid(g, g, indexing="ij")
    F = (lam * (np.abs(X) + np.abs(Y) - np.hypot(X, Y))
         + 0.5 * ((X - y[0]) ** 2 + (Y - y[1]) ** 2))
    return F.min()


def _prox_obj(x, y, lam):
    return lam * (np.abs(x).sum() - np.linalg.norm(x)) + 0.5 * np.sum((x - y) ** 2)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("lam", [0.3, 1.0, 3.0])
def test_prox_beats_grid(rng, n, lam):
    for k in range(30):
        y = rng.uniform(-2, 2, n) * lam
        if k % 3 == 0:  # force the boundary case
            y[int(rng.integers(n))] = lam * rng.choice([-1, 1])
            y = np.clip(y, -lam, lam)
        x = prox_l12(y, lam)
        assert _prox_obj(x, y, lam) <= _grid_min(y, lam) + 1e-6


@settings(max_examples=300, deadline=None)
@given(vectors, lams)
def test_threshold_properties(x, lam):
    out = l12_threshold(x, lam)
    soft = soft_threshold(x, lam)
    assert np.all(out[np.abs(x) <= lam] == 0)
    assert np.max(np.abs(out - x)) <= lam + 1e-12 * max(1.0, np.max(np.abs(x)))
    assert np.all(np.abs(soft) <= np.abs(out) + 1e-12)
    assert np.all(np.abs(out) <= np.abs(x) + 1e-12 * max(1.0, np.max(np.abs(x))))
    nz = out != 0
    assert np.all(np.sign(out[nz]) == np.sign(x[nz]))


@settings(max_examples=200, deadline=None)
@given(vectors.filter(lambda v: np.linalg.norm(v) > 1e-3), lams)
def test_enlarge_norm_identity(x, lam):
    assert np.linalg.norm(enlarge(x, lam)) == pytest.approx(np.linalg.norm(x) + lam, abs=1e-9, rel=1e-12)


def test_truncate_examples(rng):
    assert truncate_top_s([5, -3, 2, 1], 2).tolist() == [5, -3, 0, 0]
    assert truncate_top_s([1, -1, 1], 1).tolist() == [1, 0, 0]
    z = rng.standard_normal(6)
    assert np.array_equal(truncate_top_s(z, 6), z)
    assert np.array_equal(truncate_top_s(z, 0), np.zeros(6))
    with pytest.raises(DomainError):
        truncate_top_s(z, 7)


def test_truncation_is_best_s_term(rng):
    for _ in range(200):
        n = int(rng.integers(2, 15))
        s = int(rng.integers(1, n + 1))
        z = rng.standard_normal(n)
        err = np.linalg.norm(truncate_top_s(z, s) - z)
        for _ in range(100):
            y = np.zeros(n)
            y[rng.choice(n, s, replace=False)] = rng.standard_normal(s)
            assert err <= np.linalg.norm(y - z) + 1e-12


def test_top_t_examples():
    # index sets here are 0-based
    assert top_t_indices([9, 1, 5, 3], [0], 2).tolist() == [2, 3]
    assert top_t_indices([9, 1, 5, 3], [], 0).tolist() == []
    assert top_t_indices([0, 0, 0], [], 2).tolist() == [0, 1]
    with pytest.raises(DomainError):
        top_t_indices([1, 2], [0], 2)


def test_partition_examples(rng):
    blocks = partition_blocks([9, 1, 5, 3], [], 2)
    assert [b.tolist() for b in blocks] == [[0, 2], [1, 3]]
    assert partition_blocks([1, 2, 3], [0, 1, 2], 2) == []
    sizes = [b.size for b in partition_blocks([4, 3, 2, 1, 0], [0, 1], 2)]
    assert sizes == [2, 1]


def test_partition_covers_complement(rng):
    for _ in range(500):
        n = int(rng.integers(1, 30))
        x = rng.standard_normal(n)
        base = rng.choice(n, int(rng.integers(0, n + 1)), replace=False)
        t = int(rng.integers(1, n + 2))
        blocks = partition_blocks(x, base, t)
        flat = np.concatenate(blocks) if blocks else np.array([], int)
        assert len(set(flat.tolist())) == flat.size
        assert set(flat.tolist()) == set(range(n)) - set(base.tolist())
        if blocks:
            assert np.array_equal(blocks[0], top_t_indices(x, base, min(t, n - base.size)))
            mags = [np.abs(x[b]) for b in blocks]
            for a, b in zip(mags, mags[1:]):
                assert a.min() >= b.max()
