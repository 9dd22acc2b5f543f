import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ahmscatter.charts import polar_arrays
from ahmscatter.hyperbolic import (distance_xy, exact_distance, exact_F, exact_geodesic, exact_sojourn,
                                   initial_covector, semicircle_endpoints)


@pytest.mark.parametrize("z, zp, r", [
    ((1, 0), (1, 0), 0.0),
    ((1, 0), (2, 0), math.log(2)),
    ((0.1, 0), (0.1, 1), math.acosh(51)),
    ((1, 0, 0), (1, 3, 4), math.acosh(1 + 25 / 2)),
])
def test_exact_distance(z, zp, r):
    assert exact_distance(z, zp) == pytest.approx(r, abs=1e-14, rel=1e-14)


def test_distance_is_accurate_near_diagonal():
    # for tiny separations r ~ |dz|/x; arccosh would lose about half the digits
    r = exact_distance((1.0, 0.0), (1.0, 1e-9))
    assert r == pytest.approx(1e-9, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0.05, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_triangle_and_symmetry(xs, ys):
    a, b, c = ((xs[i], ys[i]) for i in range(3))
    assert exact_distance(a, b) == pytest.approx(exact_distance(b, a), abs=1e-12)
    assert exact_distance(a, c) <= exact_distance(a, b) + exact_distance(b, c) + 1e-9


def test_F_special_values():
    assert exact_F(0.0, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    s = 1 / math.sqrt(2)
    assert exact_F(s, s, 0.0) == pytest.approx(math.log(0.5), abs=1e-14)


def test_F_matches_distance_on_random_pairs(rng):
    x, xp = rng.uniform(0.05, 3, 100), rng.uniform(0.05, 3, 100)
    y, yp = rng.uniform(-2, 2, (100, 2)), rng.uniform(-2, 2, (100, 2))
    R, rl, rr, Y = polar_arrays(x, y, xp, yp)
    F = distance_xy(x, y, xp, yp) + np.log(rl) + np.log(rr)
    np.testing.assert_allclose(exact_F(rl, rr, Y), F, atol=1e-12)


def test_F_symmetries(rng):
    rl, rr = rng.uniform(0, 1, 20), rng.uniform(0, 1, 20)
    Y = rng.normal(size=(20, 3))
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    np.testing.assert_allclose(exact_F(rl, rr, Y), exact_F(rr, rl, Y), atol=1e-14)
    np.testing.assert_allclose(exact_F(rl, rr, Y), exact_F(rl, rr, Y @ Q.T), atol=1e-13)
    np.testing.assert_allclose(exact_F(rl, rr, Y), exact_F(rl, rr, np.linalg.norm(Y, axis=1)), atol=1e-14)


def test_sojourn_values():
    assert exact_sojourn([0.0], [1.0]) == pytest.approx(0.0)
    assert exact_sojourn([-1.0], [1.0]) == pytest.approx(2 * math.log(2))
    lam = 3.7
    assert exact_sojourn([0.3, lam * 0.5], [0.3, 0.0]) - exact_sojourn([0.3, 0.5], [0.3, 0.0]) \
        == pytest.approx(2 * math.log(lam))
    with pytest.raises(ValueError):
        exact_sojourn([1.0], [1.0])


def test_geodesic_vertical():
    t = np.linspace(0, 2, 5)
    pts = exact_geodesic((3.0, 0.5), (1.0, 0.5), t)
    np.testing.assert_allclose(pts[:, 0], np.exp(t))
    pts = exact_geodesic((0.2, 0.5), (1.0, 0.5), t)
    np.testing.assert_allclose(pts[:, 0], np.exp(-t))


@pytest.mark.parametrize("z, zp", [((1.0, 0.7), (0.3, -1.2)), ((0.5, 1.0, 2.0), (2.0, 0.0, -1.0))])
def test_geodesic_reaches_target(z, zp):
    r = exact_distance(z, zp)
    np.testing.assert_allclose(exact_geodesic(z, zp, r), z, atol=1e-12)
    # every point along the way sits at the right distance from both ends
    for t in np.linspace(0.1, r - 0.1, 4):
        p = exact_geodesic(z, zp, t)
        assert exact_distance(p, zp) == pytest.approx(t, abs=1e-10)
        assert exact_distance(p, z) == pytest.approx(r - t, abs=1e-10)


def test_geodesic_apex_symmetry():
    # semicircle of radius 1 over [-1, 1]; points symmetric about the apex
    a, b = (math.sqrt(1 - 0.36), -0.6), (math.sqrt(1 - 0.36), 0.6)
    mid = exact_geodesic(b, a, 0.5 * exact_distance(a, b))
    np.testing.assert_allclose(mid, (1.0, 0.0), atol=1e-12)


def test_initial_covector_is_unit_and_points_at_target():
    z, zp = np.array([1.0, 2.0]), np.array([0.5, 0.0])
    xi, eta = initial_covector(z, zp)
    assert zp[0] ** 2 * (xi ** 2 + eta @ eta) == pytest.approx(1.0)
    # velocity x'^2 (xi, eta) is the derivative of exact_geodesic at t=0
    h = 1e-6
    v = (exact_geodesic(z, zp, h) - exact_geodesic(z, zp, -h)) / (2 * h)
    np.testing.assert_allclose(v, zp[0] ** 2 * np.r_[xi, eta], atol=1e-8)


def test_semicircle_endpoints():
    ym, yp = semicircle_endpoints(1.0, [0.0], 0.0, [1.0])
    np.testing.assert_allclose([ym[0], yp[0]], [-1.0, 1.0])
    ym, yp = semicircle_endpoints(0.5, [2.0], 0.0, [2.0])
    np.testing.assert_allclose([ym[0], yp[0]], [1.5, 2.5])
    with pytest.raises(ValueError):
        semicircle_endpoints(1.0, [0.0], 1.0, [0.0])
