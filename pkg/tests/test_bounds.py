import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conclab import bounds
from conclab.bounds import BoundForm, BoundKind
from conclab.errors import DimensionMismatch, ZeroMatrix
from oracles import grid_min_chernoff, seeded


def test_hw_identity_example():
    tail = bounds.hw_bound(np.eye(3), K=1.0, t=3.0, c=1.0)
    assert tail.raw == pytest.approx(2 * math.exp(-3))
    assert tail.prob == pytest.approx(0.09957413673572789)


def test_hw_zero_t():
    tail = bounds.hw_bound(np.eye(3), K=1.0, t=0.0)
    assert tail.raw == 2.0 and tail.prob == 1.0


def test_hw_zero_matrix():
    with pytest.raises(ZeroMatrix):
        bounds.hw_bound(np.zeros((2, 2)), 1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.71, 5.0), st.floats(0.0, 50.0), st.floats(1e-2, 1e2))
def test_hw_scale_invariance(seed, K, t, alpha):
    a = seeded(seed, (4, 4))
    v1 = bounds.hw_bound(a, K, t, c=0.5).raw
    v2 = bounds.hw_bound(alpha * a, K, alpha * t, c=0.5).raw
    assert v2 == pytest.approx(v1, rel=1e-9)


def test_hw_diagonal_matches_bernstein_form():
    d = np.array([0.5, -2.0, 1.5])
    a = np.diag(d)
    for t in (0.1, 1.0, 4.0, 30.0):
        expected = min(t**2 / np.sum(d**2), t / np.max(np.abs(d)))
        assert bounds.hw_rate(bounds.linalg.hs_norm(a), bounds.linalg.op_norm(a), 1.0, t) \
            == pytest.approx(expected)


def test_concentration_examples():
    assert bounds.concentration_bound(np.eye(3), 1.0, 2.0, c=1.0).raw == pytest.approx(2 * math.exp(-4))
    a1 = bounds.concentration_bound(np.diag([1.0, 1.0]), 1.3, 1.7)
    a2 = bounds.concentration_bound(np.diag([1.0, 0.5]), 1.3, 1.7)
    assert a1 == a2
    assert bounds.concentration_bound(np.eye(2), 1.0, 0.0).raw == 2.0


def test_squared_concentration_examples():
    a4 = np.eye(4)  # stable rank 4
    assert bounds.squared_concentration_bound(a4, 1.0, 1.0, c=1.0).raw == pytest.approx(2 * math.exp(-4))
    assert bounds.squared_concentration_bound(a4, 1.0, 0.0).raw == 2.0
    a20 = np.eye(20)
    assert bounds.squared_concentration_bound(a20, 1.0, 0.5, c=1.0).raw == pytest.approx(2 * math.exp(-5))


def test_small_ball_examples():
    radius, tail = bounds.small_ball_bound(np.eye(20), 1.0, c=1.0)
    assert radius == pytest.approx(math.sqrt(20) / 2)
    assert tail.raw == pytest.approx(2 * math.exp(-20))
    for scale in (1e-3, 1.0, 1e3):
        _, t1 = bounds.small_ball_bound(scale * np.outer([1.0, 2.0], [1.0, 0.0, 3.0]), 1.2, c=0.7)
        assert t1.raw == pytest.approx(2 * math.exp(-0.7 / 1.2**4))
    _, huge_K = bounds.small_ball_bound(np.eye(20), 1e6, c=1.0)
    assert huge_K.raw == pytest.approx(2.0)


def test_improved_small_ball():
    a = np.eye(4)
    radius, _ = bounds.improved_small_ball(a, np.zeros(4), 1.0)
    assert radius == pytest.approx(2.0 / 6)
    radius, _ = bounds.improved_small_ball(a, [3.0, 0, 0, 0], 1.0)
    assert radius == pytest.approx(5.0 / 6)
    radii = [bounds.improved_small_ball(a, [y, 0, 0, 0], 1.0)[0] for y in (0.0, 1.0, 5.0, 50.0)]
    assert radii == sorted(radii)
    with pytest.raises(DimensionMismatch):
        bounds.improved_small_ball(a, [1.0, 2.0], 1.0)


def test_subspace_examples():
    assert bounds.subspace_bound(1.0, 0.0).raw == 2.0
    assert bounds.subspace_bound(1.0, 3.0, c=1.0).raw == pytest.approx(2 * math.exp(-9))
    e1 = bounds.subspace_bound(1.0, 3.0, c=0.4).exponent
    e2 = bounds.subspace_bound(2.0, 3.0, c=0.4).exponent
    assert e1 / e2 == pytest.approx(16.0, rel=1e-14)


def test_product_norm_examples():
    thr, tail = bounds.product_norm_bound(np.eye(4), n=1, K=1.0, s=1.0, t=1.0, C=1.0)
    assert thr == pytest.approx(3.0)
    assert tail.raw == pytest.approx(2 * math.exp(-5))
    N, n, K, C, s, t = 30, 7, 0.9, 2.0, 1.5, 2.0
    thr, _ = bounds.product_norm_bound(np.eye(N), n, K, s, t, C)
    assert thr == pytest.approx(C * K**2 * (s * math.sqrt(N) + t * math.sqrt(n)))
    from conclab.config import build_matrix
    p = build_matrix("projection:12,5:3")
    thr, tail = bounds.product_norm_bound(p, n, K, s, t, C)
    assert thr == pytest.approx(C * K**2 * (s * math.sqrt(5) + t * math.sqrt(n)))
    assert tail.exponent == pytest.approx(s**2 * 5 + t**2 * n)
    with pytest.raises(ValueError):
        bounds.product_norm_bound(np.eye(3), 2, 1.0, s=0.5)


class TestChernoff:
    def test_vertex(self):
        lam, val = bounds.chernoff_optimize(1.0, 1.0, 1.0, 10.0)
        assert lam == pytest.approx(0.25)
        assert val == pytest.approx(math.exp(-1 / 16))

    def test_clamped(self):
        lam, val = bounds.chernoff_optimize(1.0, 1.0, 1.0, 0.1)
        assert lam == pytest.approx(0.1)
        assert val == pytest.approx(math.exp(-0.04))

    def test_against_grid_oracle(self):
        g = np.random.default_rng(11)
        for _ in range(1000):
            t, c3, hs_sq, lam_max = np.exp(g.uniform(-3, 3, size=4))
            lam, val = bounds.chernoff_optimize(t, c3, hs_sq, lam_max)
            assert val <= grid_min_chernoff(t, c3, hs_sq, lam_max, points=401) * (1 + 1e-12)
            assert val <= math.exp(-0.25 * min(t**2 / (4 * c3 * hs_sq), t * lam_max)) * (1 + 1e-12)

    def test_unclamped_limit(self):
        t, c3, hs_sq = 2.0, 0.7, 3.0
        _, val = bounds.chernoff_optimize(t, c3, hs_sq, 1e12)
        assert val == pytest.approx(math.exp(-t**2 / (16 * c3 * hs_sq)), rel=1e-14)
        _, clamped = bounds.chernoff_optimize(t, c3, hs_sq, 0.01)
        assert clamped >= val

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            bounds.chernoff_optimize(0.0, 1.0, 1.0, 1.0)


def _all_bounds(a, K, t):
    return [
        bounds.hw_bound(a, K, t).raw,
        bounds.concentration_bound(a, K, t).raw,
        bounds.squared_concentration_bound(a, K, t).raw,
        bounds.subspace_bound(K, t).raw,
    ]


def test_monotone_in_t_and_K():
    a = seeded(2, (5, 3))
    ts = np.linspace(0.0, 20.0, 81)
    Ks = np.linspace(0.75, 3.0, 10)
    for K in Ks:
        vals = np.array([_all_bounds(a, K, t) for t in ts])
        assert np.all(np.diff(vals, axis=0) <= 1e-15)
    for t in ts:
        vals = np.array([_all_bounds(a, K, t) for K in Ks])
        assert np.all(np.diff(vals, axis=0) >= -1e-15)
    sb = [bounds.small_ball_bound(a, K)[1].raw for K in Ks]
    assert sb == sorted(sb)
    pn = [bounds.product_norm_bound(a, 4, 1.0, s, s)[1].raw for s in np.linspace(1, 4, 13)]
    assert pn == sorted(pn, reverse=True)


def test_bound_form():
    form = BoundForm("hanson_wright", 0.125)
    assert form.kind is BoundKind.HANSON_WRIGHT
    assert "min(t^2" in form.formula
    with pytest.raises(ValueError):
        BoundForm(BoundKind.CONCENTRATION, 0.0)
    assert set(bounds.FORMULAS) == set(BoundKind)


def test_rate_function_matches_bounds():
    a = seeded(3, (6, 6))
    K, c = 1.1, 0.3
    hs, op = bounds.linalg.hs_norm(a), bounds.linalg.op_norm(a)
    hw = bounds.rate_function(BoundForm("hanson_wright", c), K=K, hs=hs, op=op)
    conc = bounds.rate_function(BoundForm("concentration", c), K=K, hs=hs, op=op)
    for t in (0.5, 3.0, 40.0):
        assert 2 * math.exp(-c * hw(t)) == pytest.approx(bounds.hw_bound(a, K, t, c).raw)
        assert 2 * math.exp(-c * conc(t)) == pytest.approx(bounds.concentration_bound(a, K, t, c).raw)
    with pytest.raises(ValueError):
        bounds.rate_function(BoundForm("product_norm", 2.0), K=1.0)
