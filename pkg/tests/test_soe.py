from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsde.errors import InvalidWindow, NonPositiveTime, ToleranceNotMet
from fracsde.soe import SoeApproximation, build_soe, eval_soe, validate_soe


def test_eval_at_simple_points():
    soe = build_soe(0.5, 1e-9, 1e-3, 1.0)
    assert abs(eval_soe(soe, 1.0) - 1.0) <= 1e-9
    assert abs(eval_soe(soe, 0.25) - 2.0) <= 1e-9
    assert abs(eval_soe(soe, soe.delta) - soe.delta**-0.5) <= soe.epsilon


def test_single_term():
    soe = SoeApproximation(0.5, [2.0], [3.0], epsilon=1.0, delta=0.1, T=1.0)
    assert eval_soe(soe, 1.0) == pytest.approx(2.0 * math.exp(-3.0), rel=1e-15)
    np.testing.assert_allclose(
        eval_soe(soe, np.array([0.5, 1.0])), 2.0 * np.exp(-3.0 * np.array([0.5, 1.0]))
    )
    with pytest.raises(NonPositiveTime):
        eval_soe(soe, 0.0)
    with pytest.raises(NonPositiveTime):
        eval_soe(soe, np.array([1.0, -1.0]))


def test_validate_endpoints_only():
    soe = SoeApproximation(0.5, [1.0], [0.0], epsilon=1.0, delta=0.25, T=1.0)
    # t^(-1/2) - 1 is 1 at t = 1/4 and 0 at t = 1
    assert validate_soe(soe, samples=2) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValueError):
        validate_soe(soe, samples=1)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.8, 0.9])
def test_built_soe_meets_tolerance(alpha):
    soe = build_soe(alpha, 1e-9, 1e-4, 1.0)
    assert validate_soe(soe) <= 1e-9
    assert np.all(soe.weights > 0)
    assert np.all(soe.exponents >= 0)
    assert soe.n_exp == len(soe.terms)


def test_perturbed_weight_breaks_bound():
    soe = build_soe(0.8, 1e-9, 1e-4, 1.0)
    weights = np.array(soe.weights)
    # the term contributing most inside the window
    weights[np.argmax(weights * np.exp(-soe.exponents * soe.delta))] *= 2.0
    broken = SoeApproximation(
        soe.alpha, weights, soe.exponents, soe.epsilon, soe.delta, soe.T
    )
    assert validate_soe(broken) > soe.epsilon


def test_high_precision_cross_check():
    # evaluate the sum of exponentials and the power in 40-digit arithmetic
    soe = build_soe(0.7, 1e-10, 1e-3, 1.0)
    mpmath.mp.dps = 40
    worst = 0.0
    for t in np.geomspace(1e-3, 1.0, 37):
        exact = mpmath.mpf(float(t)) ** (-mpmath.mpf(0.7))
        approx = mpmath.fsum(
            mpmath.mpf(float(w)) * mpmath.exp(-mpmath.mpf(float(s)) * mpmath.mpf(float(t)))
            for w, s in soe.terms
        )
        worst = max(worst, float(abs(exact - approx)))

    assert worst <= 1e-10
    assert abs(worst - validate_soe(soe, samples=37)) <= 1e-13


def test_term_count_grows_slowly():
    small = build_soe(0.5, 1e-6, 1e-3, 1.0).n_exp
    large = build_soe(0.5, 1e-12, 1e-3, 1.0).n_exp
    assert small < large <= 3 * small


def test_window_covers_arbitrary_horizon():
    soe = build_soe(0.4, 1e-8, 0.01, 10.0)
    assert validate_soe(soe) <= 1e-8


@pytest.mark.parametrize(
    ("args", "exc"),
    [
        ((0.0, 1e-9, 1e-3, 1.0), ValueError),
        ((1.0, 1e-9, 1e-3, 1.0), ValueError),
        ((0.5, 0.0, 1e-3, 1.0), ValueError),
        ((0.5, 1e-9, 0.0, 1.0), InvalidWindow),
        ((0.5, 1e-9, 1.0, 1.0), InvalidWindow),
        ((0.5, 1e-9, 2.0, 1.0), InvalidWindow),
    ],
)
def test_build_rejects(args, exc):
    with pytest.raises(exc):
        build_soe(*args)


def test_unreachable_tolerance():
    with pytest.raises(ToleranceNotMet):
        build_soe(0.5, 1e-16, 1e-3, 1.0)


@settings(max_examples=15, deadline=None)
@given(
    st.floats(min_value=0.05, max_value=0.95),
    st.sampled_from([1e-6, 1e-8, 1e-10]),
    st.sampled_from([1e-4, 1e-3, 1.0 / 2048]),
)
def test_tolerance_property(alpha, epsilon, delta):
    soe = build_soe(alpha, epsilon, delta, 1.0)
    assert validate_soe(soe) <= epsilon
