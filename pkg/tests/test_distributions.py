import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conclab.distributions import (DEFAULT_P_GRID, DistSpec, Family, SeedStream, centered_square,
                                   psi1_estimate, psi2_estimate, sample)
from conclab.errors import EmptyInput
from oracles import centered_chi2_abs_moment, gaussian_abs_moment

N = 1_000_000

# max over DEFAULT_P_GRID of p^-1 (E|g^2-1|^p)^{1/p}, by quadrature (attained at p=1)
CHI2_CENTERED_PSI1 = 0.9678828980765758


def test_parse_round_trip():
    for text in ["rademacher", "gaussian", "uniform", "twopoint:a=3.0,p=0.1"]:
        assert str(DistSpec.parse(text)) == text
    assert DistSpec.parse("TwoPoint:p=0.25,a=-1").other_atom == pytest.approx(1 / 3)


@pytest.mark.parametrize("text", ["cauchy", "gaussian:a=1", "twopoint:a=1", "twopoint:a=1,p=1.5"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        DistSpec.parse(text)


def test_twopoint_unit_variance_flag():
    assert DistSpec.parse("twopoint:a=3,p=0.1").unit_variance
    assert DistSpec.parse("twopoint:a=1,p=0.5").unit_variance
    assert not DistSpec.parse("twopoint:a=2,p=0.5").unit_variance


def test_rademacher_support():
    x = sample(DistSpec(Family.RADEMACHER), 4, SeedStream(1))
    assert set(np.unique(x)) <= {-1.0, 1.0}


def test_gaussian_mean():
    x = sample(DistSpec(Family.GAUSSIAN), N, SeedStream(2))
    assert abs(x.mean()) <= 5 / math.sqrt(N)


def test_uniform_variance():
    x = sample(DistSpec(Family.UNIFORM), N, SeedStream(3))
    assert x.var() == pytest.approx(1.0, rel=0.01)
    assert np.all(np.abs(x) <= math.sqrt(3))


def test_family_moments(family):
    x = sample(family, N, SeedStream(4))
    # CLT widths: 5 sd of the mean, and of the second moment (fourth moment known)
    assert abs(x.mean()) <= 5 * math.sqrt(family.variance / N)
    fourth = family.abs_moment(4)
    assert abs(np.mean(x * x) - family.variance) <= 5 * math.sqrt((fourth - family.variance**2) / N)


def test_stream_reproducible_and_distinct():
    spec = DistSpec(Family.GAUSSIAN)
    a = sample(spec, 1000, SeedStream(9, 3))
    np.testing.assert_array_equal(a, sample(spec, 1000, SeedStream(9, 3)))
    assert not np.array_equal(a, sample(spec, 1000, SeedStream(9, 4)))
    assert not np.array_equal(a, sample(spec, 1000, SeedStream(10, 3)))


def test_seed_range():
    with pytest.raises(ValueError):
        SeedStream(-1)
    SeedStream(2**64 - 1, 2**63)


class TestPsiEstimates:
    def test_zero_samples(self):
        assert psi2_estimate(np.zeros(10)) == 0.0
        assert psi1_estimate(np.zeros(10)) == 0.0

    def test_rademacher_exact(self):
        assert psi2_estimate(np.array([1.0, -1.0, 1.0])) == pytest.approx(1.0)
        assert psi1_estimate(np.array([1.0, -1.0])) == pytest.approx(1.0)

    def test_gaussian_psi2(self):
        oracle = max(p**-0.5 * gaussian_abs_moment(p) ** (1 / p) for p in DEFAULT_P_GRID)
        assert oracle == pytest.approx(math.sqrt(2 / math.pi), rel=1e-12)
        x = sample(DistSpec(Family.GAUSSIAN), N, SeedStream(5))
        assert psi2_estimate(x) == pytest.approx(oracle, rel=0.01)

    def test_centered_chi2_psi1(self):
        oracle = max(p**-1 * centered_chi2_abs_moment(p) ** (1 / p) for p in DEFAULT_P_GRID)
        assert oracle == pytest.approx(CHI2_CENTERED_PSI1, rel=1e-9)
        g = sample(DistSpec(Family.GAUSSIAN), N, SeedStream(6))
        assert psi1_estimate(g * g - 1) == pytest.approx(CHI2_CENTERED_PSI1, rel=0.02)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            psi2_estimate(np.array([]))

    def test_grid_must_contain_one_and_two(self):
        with pytest.raises(ValueError):
            psi2_estimate(np.ones(3), p_grid=(1.0, 3.0))
        with pytest.raises(ValueError):
            psi1_estimate(np.ones(3), p_grid=(0.5, 1.0, 2.0))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=50),
           st.floats(1e-3, 1e3))
    def test_scaling(self, xs, alpha):
        x = np.array(xs)
        assert psi2_estimate(alpha * x) == pytest.approx(alpha * psi2_estimate(x), rel=1e-9, abs=1e-300)
        assert psi1_estimate(alpha * x) == pytest.approx(alpha * psi1_estimate(x), rel=1e-9, abs=1e-300)

    def test_high_moment_no_overflow(self):
        assert math.isfinite(psi2_estimate(np.array([1e30, -1e30, 1.0])))


def test_analytic_K_dominates_estimate(family):
    x = sample(family, N, SeedStream(7))
    est = psi2_estimate(x)
    # standard error of the estimate from 20 independent 50k-sample blocks
    blocks = [psi2_estimate(b) for b in x.reshape(20, -1)]
    se = np.std(blocks, ddof=1) / math.sqrt(20)
    assert family.K_analytic >= est - 3 * se


@pytest.mark.parametrize("text, expected", [
    ("rademacher", 1.0),
    ("gaussian", math.sqrt(2 / math.pi)),
    ("uniform", math.sqrt(3) / 2),
])
def test_analytic_K_closed_forms(text, expected):
    assert DistSpec.parse(text).K_analytic == pytest.approx(expected, rel=1e-12)


def test_unit_variance_K_at_least_inverse_sqrt2(family):
    # the p = 2 term alone gives 2^{-1/2} (E X^2)^{1/2}
    assert family.K_analytic >= 2**-0.5 * math.sqrt(family.variance) * (1 - 1e-12)


def test_psi1_of_centered_square_bounded_by_psi2(family):
    x = sample(family, N, SeedStream(8))
    assert psi1_estimate(x * x - family.variance) <= 4 * psi2_estimate(x) ** 2 * 1.1


class TestCenteredSquare:
    def test_rademacher_constant_zero(self):
        draw = centered_square(DistSpec(Family.RADEMACHER), SeedStream(1))
        np.testing.assert_array_equal(draw(100), 0.0)

    def test_gaussian_mean(self):
        y = centered_square(DistSpec(Family.GAUSSIAN), SeedStream(2))(N)
        assert abs(y.mean()) <= 5 * math.sqrt(2) / math.sqrt(N)

    def test_uniform_support(self):
        y = centered_square(DistSpec(Family.UNIFORM), SeedStream(3))(10_000)
        assert y.min() >= -1.0 and y.max() <= 2.0 + 1e-12

    def test_requires_unit_variance(self):
        with pytest.raises(ValueError):
            centered_square(DistSpec.parse("twopoint:a=2,p=0.5"), SeedStream(1))
