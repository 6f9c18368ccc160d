"""Adaptive Simpson integration against closed forms."""

import math

import pytest

from accumtest.quadrature import adaptive_simpson, integrate_with_splits


def test_polynomial_is_exact():
    got = adaptive_simpson(lambda t: 3.0 * t * t, 0.0, 1.0)
    assert got == pytest.approx(1.0, abs=1e-12)


def test_transcendental_integrand():
    got = adaptive_simpson(math.exp, 0.0, 2.0)
    assert got == pytest.approx(math.e**2 - 1.0, abs=1e-9)


def test_split_points_handle_jumps():
    step = lambda t: 2.0 if t > 0.5 else 0.0
    got = integrate_with_splits(step, 0.0, 1.0, splits=(0.5,))
    assert got == pytest.approx(1.0, abs=1e-9)


def test_log_singularity_via_splits():
    # integral of -log(1 - t) over [0, 1] equals 1
    f = lambda t: -math.log1p(-t) if t < 1.0 else 0.0
    got = integrate_with_splits(f, 0.0, 1.0 - 1e-15, splits=(0.5, 0.9, 0.99, 0.999))
    assert got == pytest.approx(1.0, abs=1e-6)


def test_reversed_interval_is_zero_width():
    assert adaptive_simpson(math.sin, 1.0, 1.0) == 0.0
