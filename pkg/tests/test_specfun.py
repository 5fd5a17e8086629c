import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

from irfloquet.specfun import (
    SeriesCutoffs,
    bessel_cutoff,
    bessel_j,
    bessel_j_row,
    fc_cutoff,
    fc_weight,
)

# Reference values computed once with mpmath at 40 digits.
BESSEL_REFERENCE = [
    (0, 0.3, 0.9776262465382961),
    (3, 0.05, 2.6037597910554327e-06),
    (7, 2.405, 0.0006009773569414638),
    (1, 15.0, 0.20510403861352275),
    (25, 80.0, 0.09106379155568028),
    (60, 300.0, -0.04084340882273173),
    (12, 5.5, 0.00021551234698092834),
    (2, 1e-08, 1.25e-17),
    (40, 12.0, 6.744882148469006e-18),
    (5, 1000.0, 0.0050254069452331865),
]

FC_REFERENCE = [
    (0, 0.2, 0.9607894391523232),
    (1, 0.2, 0.03843157756609293),
    (4, 0.2, 1.0248420684291453e-07),
    (2, 1.0, 0.18393972058572117),
    (8, 1.5, 0.0017170266550044868),
    (0, 1.5, 0.10539922456186433),
    (30, 2.0, 7.960892093825626e-17),
]


@pytest.mark.parametrize("m,x,expected", BESSEL_REFERENCE)
def test_bessel_j_frozen_reference(m, x, expected):
    value = bessel_j(m, x)
    assert value == pytest.approx(expected, rel=1e-12, abs=1e-280)


def test_bessel_j_matches_scipy_on_random_grid():
    rng = np.random.default_rng(20240817)
    worst = 0.0
    for _ in range(300):
        m = int(rng.integers(0, 200))
        x = float(rng.uniform(-300.0, 300.0))
        mine = bessel_j(m, x)
        ref = float(scipy.special.jv(m, x))
        worst = max(worst, abs(mine - ref))
        assert mine == pytest.approx(ref, rel=1e-11, abs=1e-13)
    assert worst < 1e-11


def test_bessel_row_matches_scipy_columnwise():
    for x in (0.01, 0.499, 0.501, 2.405, 30.0, 123.4):
        row = bessel_j_row(x, 40)
        ref = scipy.special.jv(np.arange(41), x)
        np.testing.assert_allclose(row, ref, rtol=1e-11, atol=1e-15)


def test_bessel_row_x_zero_is_exact():
    row = bessel_j_row(0.0, 8)
    assert row[0] == 1.0
    assert np.all(row[1:] == 0.0)


@given(st.floats(min_value=0.0, max_value=700.0))
@settings(max_examples=80, deadline=None)
def test_bessel_sum_rule(x):
    row = bessel_j_row(x, max(bessel_cutoff(x, 1e-14), 4))
    total = row[0] ** 2 + 2.0 * float(np.sum(row[1:] ** 2))
    assert total == pytest.approx(1.0, abs=1e-10)


@given(
    st.integers(min_value=-60, max_value=60),
    st.floats(min_value=-80.0, max_value=80.0),
)
@settings(max_examples=120, deadline=None)
def test_bessel_parity_relations(m, x):
    direct = bessel_j(m, x)
    assert bessel_j(-m, x) == pytest.approx((-1.0) ** m * direct, rel=1e-12, abs=1e-300)
    assert bessel_j(m, -x) == pytest.approx((-1.0) ** m * direct, rel=1e-12, abs=1e-300)
    assert abs(direct) <= 1.0 + 1e-12


def test_bessel_rejects_huge_argument():
    with pytest.raises(ValueError):
        bessel_j_row(1e6, 4)


@pytest.mark.parametrize("n,lam,expected", FC_REFERENCE)
def test_fc_weight_frozen_reference(n, lam, expected):
    assert fc_weight(n, lam) == pytest.approx(expected, rel=1e-13)


def test_fc_weight_zero_coupling_is_exact():
    assert fc_weight(0, 0.0) == 1.0
    assert fc_weight(3, 0.0) == 0.0


def test_fc_weight_underflows_to_exact_zero():
    assert fc_weight(0, 30.0) == 0.0


def test_fc_weight_rejects_negative_index():
    with pytest.raises(ValueError):
        fc_weight(-1, 0.3)


@given(
    st.integers(min_value=0, max_value=40),
    st.floats(min_value=0.0, max_value=3.0),
)
@settings(max_examples=100, deadline=None)
def test_fc_weight_is_a_probability(n, lam):
    w = fc_weight(n, lam)
    assert 0.0 <= w <= 1.0


@given(st.floats(min_value=0.0, max_value=3.0))
@settings(max_examples=50, deadline=None)
def test_fc_cutoff_captures_the_mass(lam):
    cut = fc_cutoff(lam, 1e-10)
    total = math.fsum(fc_weight(n, lam) for n in range(cut + 1))
    assert total >= 1.0 - 1e-10


def test_bessel_cutoff_tail_verified_against_scipy():
    for x, eps in [(0.3, 1e-12), (4.2, 1e-12), (25.0, 1e-10), (120.0, 1e-12)]:
        cut = bessel_cutoff(x, eps)
        orders = np.arange(0, cut + 200)
        sq = scipy.special.jv(orders, x) ** 2
        tail = 1.0 - (sq[0] + 2.0 * sq[1 : cut + 1].sum())
        assert tail < eps
        # the cutoff should not be wildly conservative
        assert cut <= max(int(2.5 * x) + 40, 60)


def test_cutoffs_reject_bad_tolerances():
    with pytest.raises(ValueError):
        bessel_cutoff(1.0, 0.0)
    with pytest.raises(ValueError):
        fc_cutoff(0.5, -1e-3)


def test_cutoffs_terminate_below_float_resolution():
    """Tolerances tighter than the rounding floor of 1 - cumsum must
    still return promptly instead of escalating the scan order."""
    assert bessel_cutoff(0.04, 1e-14) < 30
    assert bessel_cutoff(3.0, 1e-16) < 60
    assert fc_cutoff(0.5, 1e-16) < 60


def test_series_cutoffs_validation():
    c = SeriesCutoffs(n_cut=3, m_cut=7)
    assert (c.n_cut, c.m_cut) == (3, 7)
    with pytest.raises(ValueError):
        SeriesCutoffs(n_cut=-1, m_cut=0)
