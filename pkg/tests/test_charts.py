import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ahmscatter import charts as ch
from ahmscatter.charts import ChartConfig, ChartDomainError, ChartPoint, PolarBlowupPoint
from ahmscatter.layout import layout, standard_form
from ahmscatter.verify import _sample_in_domain


def interior(x, y, xp, yp, tau=1.0, xi=0.3, eta=None, xip=-0.2, etap=None, t=0.4):
    n = len(y)
    eta = np.full(n, 0.5) if eta is None else np.asarray(eta, float)
    etap = np.full(n, -0.1) if etap is None else np.asarray(etap, float)
    return ch._join_interior(t, x, np.asarray(y, float), xp, np.asarray(yp, float), tau, xi, eta, xip, etap)


def test_blowdown_345():
    p = ch.blowdown_polar(0.3, [1.0], 0.4, [1.0])
    assert (p.R, p.rho_L, p.rho_R) == pytest.approx((0.5, 0.6, 0.8))
    assert p.Y[0] == 0.0


def test_blowdown_boundary_pair():
    p = ch.blowdown_polar(0.0, [2.0], 0.0, [0.0])
    assert (p.R, p.rho_L, p.rho_R, p.Y[0]) == pytest.approx((2.0, 0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        ch.blowdown_polar(0.0, [1.0], 0.0, [1.0])


def test_polar_round_trip(rng):
    for _ in range(100):
        x, xp = rng.uniform(0.01, 3, 2)
        y, yp = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
        p = ch.blowdown_polar(x, y, xp, yp)
        assert p.sphere_defect() < 1e-12
        back = ch.blowup_polar(p)
        np.testing.assert_allclose(back[0], x, atol=1e-12)
        np.testing.assert_allclose(back[1], y, atol=1e-12)
        np.testing.assert_allclose(back[2], xp, atol=1e-12)
        np.testing.assert_allclose(back[3], yp, atol=1e-12)


def test_blowup_special_points():
    x, y, xp, yp = ch.blowup_polar(PolarBlowupPoint(0.0, 0.6, 0.8, np.array([0.0]), np.array([3.0])))
    assert (x, xp, y[0], yp[0]) == (0.0, 0.0, 3.0, 3.0)
    x, y, xp, yp = ch.blowup_polar(PolarBlowupPoint(1.0, 1.0, 0.0, np.array([0.0])))
    assert (x, xp) == (1.0, 0.0) and y[0] == yp[0]
    with pytest.raises(ValueError):
        ch.blowup_polar(PolarBlowupPoint(1.0, 1.0, 1.0, np.array([0.0])))


def test_region2_substitution():
    a = interior(0.2, [1.0], 0.4, [0.0])
    c = ch.lift_region2(a, 1)
    lay = layout("region2L", 1)
    assert c[lay["X"]] == pytest.approx(0.5)
    assert c[lay["Y1"]] == pytest.approx(2.5)
    # lam = x' xi = 3 and tau = 1 at X = 0.5 give lam~ = 1
    a = interior(0.2, [1.0], 0.4, [0.0], xi=7.5)
    assert ch.lift_region2(a, 1)[lay["lamt"]] == pytest.approx(1.0)


def test_region4_substitution():
    a = interior(0.1, [1.0], 0.2, [0.5], xi=0.7, xip=-0.3, eta=[0.4], etap=[0.9])
    c = ch.lift_region4(a, 1)
    lay = layout("region4", 1)
    assert (c[lay["u"]], c[lay["w"]], c[lay["wp"]]) == pytest.approx((0.5, 0.2, 0.4))
    # with n = 1 there is no Z block and nu = xi w + xi' w' + eta_1
    assert layout("region4", 1).names.count("Z2") == 0
    assert c[lay["nu"]] == pytest.approx(0.7 * 0.2 - 0.3 * 0.4 + 0.4)
    with pytest.raises(ChartDomainError):
        ch.lift_region4(interior(0.1, [0.0], 0.2, [0.5]), 1)


CHARTS = [("region1", "L"), ("region1", "R"), ("region2L", None), ("region2R", None),
          ("region3", None), ("region4", None)]


def _jacobian(chart, a, n, side):
    h = 1e-30
    cols = [np.imag(ch.lift(chart, a.astype(complex) + 1j * h * e, n, side)) / h for e in np.eye(len(a))]
    return np.array(cols).T


@pytest.mark.parametrize("chart, side", CHARTS)
@pytest.mark.parametrize("n", [1, 2])
def test_lifts_preserve_symplectic_form(chart, side, n, rng):
    cfg = ChartConfig()
    d = 2 * n + 3
    W = standard_form(d)
    for _ in range(3):
        x, y, xp, yp = _sample_in_domain(rng, chart, side or "L", n, cfg)
        a = ch._join_interior(rng.normal(), x, y, xp, yp, 1.0 + rng.uniform(), rng.normal(),
                              rng.normal(size=n), rng.normal(), rng.normal(size=n))
        J = _jacobian(chart, a, n, side)
        u, v = rng.normal(size=(2, 2 * d))
        assert abs((J @ u) @ W @ (J @ v) - u @ W @ v) < 1e-12 * max(1.0, np.abs(J).max() ** 2)
        np.testing.assert_allclose(J.T @ W @ J, W, atol=1e-9 * max(1.0, np.abs(J).max() ** 2))


@pytest.mark.parametrize("chart, side", CHARTS)
def test_lift_round_trip(chart, side, rng):
    for n in (1, 2):
        for _ in range(3):
            x, y, xp, yp = _sample_in_domain(rng, chart, side or "L", n, ChartConfig())
            a = ch._join_interior(0.3, x, y, xp, yp, 1.0, rng.normal(), rng.normal(size=n), rng.normal(),
                                  rng.normal(size=n))
            back = ch.unlift(chart, ch.lift(chart, a, n, side), n, side)
            np.testing.assert_allclose(back, a, rtol=1e-12, atol=1e-12)


def test_transfer_identity_and_round_trips(rng):
    n = 1
    for chart, side in CHARTS:
        x, y, xp, yp = _sample_in_domain(rng, chart, side or "L", n, ChartConfig())
        a = ch._join_interior(0.0, x, y, xp, yp, 1.0, 0.2, np.array([0.3]), -0.4, np.array([0.1]))
        P = ChartPoint(chart, ch.lift(chart, a, n, side), n, side)
        same = ch.chart_transfer(P, chart, side)
        np.testing.assert_allclose(same.coords, P.coords, rtol=1e-13, atol=1e-13)
        there = ch.chart_transfer(P, "interior", check_domain=False)
        back = ch.chart_transfer(there, chart, side, check_domain=False)
        np.testing.assert_allclose(back.coords, P.coords, rtol=1e-12, atol=1e-12)


def test_transfer_region2_to_region4():
    # u and x' both inside (0.1, 0.5) with w, w' below 0.5
    cfg = ChartConfig(u_sw=0.5, r_sw=0.3)
    a = interior(0.04, [0.42], 0.15, [0.1])
    assert ch.domain_violation("region2L", a, 1, cfg=cfg) is None
    assert ch.domain_violation("region4", a, 1, cfg=cfg) is None
    P = ChartPoint("region2L", ch.lift_region2(a, 1), 1)
    Q = ch.chart_transfer(P, "region4", cfg=cfg)
    np.testing.assert_allclose(Q.coords, ch.lift_region4(a, 1), atol=1e-14)
    assert Q["u"] == pytest.approx(0.32)


def test_transfer_outside_overlap_fails():
    a = interior(0.5, [0.0], 0.5, [1.0])
    P = ChartPoint("interior", a, 1)
    with pytest.raises(ChartDomainError):
        ch.chart_transfer(P, "region3")


def test_region1_domain_bounds():
    cfg = ChartConfig()
    assert ch.domain_violation("region1", interior(0.05, [0.0], 1.0, [0.0]), 1, "L", cfg) is None
    assert "x_sw" in ch.domain_violation("region1", interior(0.5, [0.0], 1.0, [0.0]), 1, "L", cfg)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.09), st.floats(0.01, 0.09), st.floats(-1, 1), st.floats(0.25, 1.0))
def test_corner_points_lie_in_some_chart(x, xp, y, gap):
    # near the corner with sigma != 0, at least one chart's domain contains the point
    a = interior(x, [y + gap], xp, [y])
    ok = [ch.domain_violation(c, a, 1, s) is None for c, s in CHARTS]
    assert any(ok)
