"""
Coordinate map and trapezoid tests

Functions:
    run_transform_test: Run the transform tests
"""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from core.errors import DomainError, MeshError
from core.model import TruncatedDomain
from core.transform import (BOTTOM, DIRICHLET, INTERIOR, RIGHT, TOP, CoordinateMap,
                            build_trapezoid)


def test_image_of_rectangle_corners(cmap):
    assert cmap.to_transformed(1.0, 0.0) == (0.0, 0.0)
    y, z = cmap.to_transformed(100.0, 3.0)
    assert abs(y - 2.46) < 0.01 and abs(z - 3.71) < 0.01
    y, z = cmap.to_transformed(1.0, 3.0)
    assert abs(y + 2.14) < 0.01 and abs(z - 3.71) < 0.01


def test_inverse_examples(cmap):
    assert cmap.from_transformed(0.0, 0.0) == (1.0, 0.0)
    S, v = cmap.from_transformed(2.4631, 3.7123)
    assert S == pytest.approx(100.0, rel=1e-2)
    assert v == pytest.approx(3.0, rel=1e-3)


def test_round_trip_relative_error(cmap, rng):
    S = rng.uniform(1.0, 100.0, 10_000)
    v = rng.uniform(0.0, 3.0, 10_000)
    S2, v2 = cmap.from_transformed(*cmap.to_transformed(S, v))
    assert np.max(np.abs(S2 - S) / S) <= 1e-12
    assert np.max(np.abs(v2 - v)) <= 1e-12 * 3.0

    y = rng.uniform(-2.0, 4.0, 10_000)
    z = rng.uniform(0.0, 3.7, 10_000)
    y2, z2 = cmap.to_transformed(*cmap.from_transformed(y, z))
    assert np.max(np.abs(y2 - y)) <= 1e-12 * 4.0
    assert np.max(np.abs(z2 - z)) <= 1e-12 * 3.7


def test_invalid_points_are_rejected(cmap):
    with pytest.raises(DomainError):
        cmap.to_transformed(0.0, 1.0)
    with pytest.raises(DomainError):
        cmap.to_transformed(1.0, -0.1)
    with pytest.raises(DomainError):
        cmap.from_transformed(0.0, -1.0)
    with pytest.raises(DomainError):
        cmap.delta_from_gradient((1.0, 0.0), -5.0)


def test_delta_of_log_price(cmap):
    # w = y has gradient (1, 0) and V = ln S - shear v, so Delta = 1/S
    assert cmap.delta_from_gradient((1.0, 0.0), 40.0) == pytest.approx(1 / 40)
    assert cmap.delta_from_gradient((0.0, 5.0), 40.0) == 0


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.5, 200))
def test_delta_is_linear_in_gradient(a, b, S):
    cmap = CoordinateMap(0.5, 0.7)
    total = cmap.delta_from_gradient((a + b, 1.0), S)
    split = cmap.delta_from_gradient((a, 0.0), S) + cmap.delta_from_gradient((b, 1.0), S)
    assert total == pytest.approx(split, rel=1e-12, abs=1e-12)


def test_vega_direction(cmap):
    np.testing.assert_allclose(cmap.vega_direction(), [-0.7143, 1.2372], atol=1e-4)
    np.testing.assert_allclose(CoordinateMap(0.0, 0.7).vega_direction(), [0.0, 1 / 0.7])


def test_trapezoid_corners(trapezoid):
    np.testing.assert_allclose(
        trapezoid.corners, [[0, 0], [4.61, 0], [2.46, 3.71], [-2.14, 3.71]], atol=0.01)
    assert trapezoid.area == pytest.approx(trapezoid.width * trapezoid.height)


def test_uncorrelated_domain_is_rectangle(domain):
    trap = build_trapezoid(domain, CoordinateMap(0.0, 0.7))
    assert trap.slope == 0
    np.testing.assert_allclose(trap.corners[2], [math.log(100), 3 / 0.7])


def test_classification_precedence(trapezoid):
    corners = trapezoid.corners
    tags = trapezoid.classify(corners)
    assert tags.tolist() == [DIRICHLET, BOTTOM, RIGHT, DIRICHLET]
    mid_top = corners[2:].mean(axis=0)
    mid_right = corners[1:3].mean(axis=0)
    centre = corners.mean(axis=0)
    assert trapezoid.classify([mid_top, mid_right, centre]).tolist() == [TOP, RIGHT, INTERIOR]


def test_contains(trapezoid):
    assert trapezoid.contains(trapezoid.corners).all()
    assert not trapezoid.contains([[5.0, 1.0], [0.0, -0.1], [0.0, 4.0]]).any()


def test_degenerate_domain(cmap):
    with pytest.raises(MeshError):
        build_trapezoid(TruncatedDomain(5.0, 5.0, 3.0), cmap)


def run_transform_test():
    """Run the coordinate transform tests"""
    from test import run_module
    return run_module(__file__)
