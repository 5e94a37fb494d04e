"""Dispersion relation: closed forms against high-precision reference values.

Reference constants were computed independently with 50-digit arithmetic
(mpmath) and frozen here; tolerances are absolute unless noted.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eulerriesz.config import Tolerances
from eulerriesz.dispersion import (
    DispersionParams,
    beta_exponent,
    degenerate_point,
    p_eval,
    p_prime,
    p_second,
    psecond_slope_check,
    psecond_target,
    q_ratio,
    table_verdicts,
)

SIGMA_HALF = DispersionParams(0.5)
SIGMA_ONE = DispersionParams(1.0)
SIGMA_32 = DispersionParams(1.5)


def test_point_values_sigma_one():
    # p(4) = sqrt(16 + 4), p(1) = sqrt(2)
    assert p_eval(SIGMA_ONE, 4.0) == pytest.approx(4.4721359549995793928, abs=1e-14)
    assert p_eval(SIGMA_ONE, 1.0) == pytest.approx(np.sqrt(2.0), abs=1e-15)
    assert p_eval(SIGMA_ONE, 0.0) == 0.0


def test_point_values_any_sigma_at_one():
    for s in (0.25, 0.5, 1.0, 1.5, 1.9):
        assert p_eval(DispersionParams(s), 1.0) == pytest.approx(np.sqrt(2.0), abs=1e-15)


def test_derivatives_at_one_sigma_one():
    assert p_prime(SIGMA_ONE, 1.0) == pytest.approx(1.0606601717798212866, abs=1e-15)
    assert p_second(SIGMA_ONE, 1.0) == pytest.approx(-0.08838834764831844055, abs=1e-15)


def test_degenerate_point_values():
    assert degenerate_point(DispersionParams(4.0 / 3.0)) == pytest.approx(1.0, abs=Tolerances.root)
    assert degenerate_point(SIGMA_32) == pytest.approx(
        0.62996052494743658238, abs=Tolerances.root
    )


@pytest.mark.parametrize("sigma", [1.2, 1.5, 1.8])
def test_curvature_vanishes_at_degenerate_point(sigma):
    params = DispersionParams(sigma)
    r0 = degenerate_point(params)
    assert abs(p_second(params, r0)) < Tolerances.psecond_zero


def test_degenerate_point_rejects_small_sigma():
    with pytest.raises(ValueError, match="no degenerate point"):
        degenerate_point(SIGMA_HALF)
    with pytest.raises(ValueError, match="no degenerate point"):
        degenerate_point(SIGMA_ONE)


def test_beta_exponent_values():
    assert beta_exponent(SIGMA_ONE, 8.0).beta == pytest.approx(1.125, abs=1e-15)
    assert beta_exponent(SIGMA_32, 12.0).beta == pytest.approx(
        1.1111111111111111111, abs=1e-15
    )


def test_beta_exponent_rejects_nonintegrable():
    with pytest.raises(ValueError, match="not integrable"):
        beta_exponent(SIGMA_ONE, 6.0)
    with pytest.raises(ValueError, match="not integrable"):
        beta_exponent(SIGMA_32, 8.0)


def test_sigma_domain_validation():
    for bad in (0.0, 2.0, -1.0, 2.5):
        with pytest.raises(ValueError):
            DispersionParams(bad)


def test_argument_domain_validation():
    with pytest.raises(ValueError):
        p_eval(SIGMA_ONE, -1.0)
    with pytest.raises(ValueError):
        p_prime(SIGMA_ONE, 0.0)
    with pytest.raises(ValueError):
        p_second(SIGMA_ONE, 0.0)


@pytest.mark.parametrize("sigma", [0.3, 0.5, 1.0, 1.3, 1.7])
def test_derivative_consistency_finite_difference(sigma):
    params = DispersionParams(sigma)
    r = np.logspace(-1, 2, 40)
    h = 1e-6 * r
    fd1 = (p_eval(params, r + h) - p_eval(params, r - h)) / (2 * h)
    assert np.max(np.abs(fd1 - p_prime(params, r)) / np.abs(fd1)) < 1e-8
    # larger step for the second difference: cancellation scales like eps/h^2
    h = 1e-4 * r
    fd2 = (p_eval(params, r + h) - 2 * p_eval(params, r) + p_eval(params, r - h)) / h**2
    assert np.max(np.abs(fd2 - p_second(params, r)) / np.abs(fd2)) < 1e-3


def test_q_ratio_decreasing_and_above_one():
    r = np.logspace(-3, 3, 200)
    for s in (0.5, 1.0, 1.5):
        q = q_ratio(DispersionParams(s), r)
        assert np.all(q > 1.0)
        assert np.all(np.diff(q) < 0.0)


def test_q_ratio_slope_at_one():
    # dQ/dr at r = 1 is -sigma / (2 sqrt(2))
    for s in (0.5, 1.0, 1.5):
        params = DispersionParams(s)
        h = 1e-7
        fd = (q_ratio(params, 1.0 + h) - q_ratio(params, 1.0 - h)) / (2 * h)
        assert fd == pytest.approx(-s / (2.0 * np.sqrt(2.0)), rel=1e-7)


def test_curvature_sign_structure():
    r = np.logspace(-4, 4, 400)
    # sigma <= 1: strictly concave everywhere
    assert np.all(p_second(SIGMA_HALF, r) < 0.0)
    assert np.all(p_second(SIGMA_ONE, r) < 0.0)
    # sigma > 1: exactly one sign change, at the degenerate radius
    vals = p_second(SIGMA_32, r)
    flips = np.sum(np.diff(np.sign(vals)) != 0)
    assert flips == 1
    r0 = degenerate_point(SIGMA_32)
    assert np.all(vals[r < 0.9 * r0] < 0.0)
    assert np.all(vals[r > 1.1 * r0] > 0.0)


def test_slope_fit_examples():
    fit = psecond_slope_check(SIGMA_HALF, "high", (1e2, 1e4))
    assert fit.target == -1.5
    assert fit.error < Tolerances.slope
    fit = psecond_slope_check(SIGMA_ONE, "high", (1e2, 1e4))
    assert fit.target == -3.0
    assert fit.error < Tolerances.slope
    fit = psecond_slope_check(SIGMA_32, "low", (1e-4, 1e-2))
    assert fit.target == -1.75
    assert fit.error < Tolerances.slope


def test_slope_fit_rejects_window_containing_degenerate_point():
    with pytest.raises(ValueError, match="degenerate point inside window"):
        psecond_slope_check(SIGMA_32, "low", (0.05, 5.0))


def test_normalized_slope_recovers_steep_exponent():
    fit = psecond_slope_check(
        DispersionParams(1.2), "high", (1e2, 1e4), normalize_degeneracy=True
    )
    assert fit.target == pytest.approx(-3.4)
    assert fit.error < Tolerances.slope


def test_raw_far_field_slope_above_degeneracy_is_generic():
    # far above r0 the raw curvature relaxes to the -(1+sigma) law
    params = DispersionParams(1.2)
    r = np.logspace(2, 4, 100)
    y = np.log10(np.abs(p_second(params, r)))
    slope = np.polyfit(np.log10(r), y, 1)[0]
    assert slope == pytest.approx(-2.2, abs=Tolerances.slope)


def test_table_verdicts_all_pass():
    rows = table_verdicts()
    assert len(rows) == 5
    for row in rows:
        assert row["pass"], f"regime check failed: {row}"


def test_psecond_target_validates_regime():
    with pytest.raises(ValueError, match="regime"):
        psecond_target(SIGMA_ONE, "mid")


sigmas = st.floats(min_value=0.05, max_value=1.95)
radii = st.floats(min_value=1e-3, max_value=1e3)


@settings(deadline=None, max_examples=60)
@given(sigma=sigmas, a=radii, b=radii)
def test_p_strictly_increasing(sigma, a, b):
    params = DispersionParams(sigma)
    lo, hi = sorted((a, b))
    if hi - lo < 1e-9 * hi:
        return
    assert p_eval(params, hi) > p_eval(params, lo)


@settings(deadline=None, max_examples=60)
@given(sigma=sigmas, a=radii, b=radii)
def test_p_strictly_subadditive(sigma, a, b):
    params = DispersionParams(sigma)
    assert p_eval(params, a + b) < p_eval(params, a) + p_eval(params, b)


@settings(deadline=None, max_examples=60)
@given(sigma=sigmas, r=radii)
def test_p_prime_positive(sigma, r):
    assert p_prime(DispersionParams(sigma), r) > 0.0
