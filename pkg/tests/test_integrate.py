import math

import numpy as np
import pytest

from ahmscatter.hamiltonian import hp_rhs
from ahmscatter.integrate import Event, IntegratorConfig, hermite, integrate, integrate_batch
from ahmscatter.metric import MetricModel
from ahmscatter.rescaled import field_region1_single


def oscillator(y):
    return np.array([y[1], -y[0]])


def test_vertical_geodesic_closed_form():
    m = MetricModel.hyperbolic(1)
    seg = integrate(lambda a: hp_rhs(m, a), [1.0, 0.0, -1.0, 0.0], t_max=1.0)
    assert seg.status == "cap"
    assert seg.t_end == pytest.approx(1.0, abs=1e-14)
    assert seg.y_end[0] == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_region1_flow_reaches_face():
    m = MetricModel.hyperbolic(1)
    c0 = np.array([0.0, 0.05, 0.0, 1.0, 0.0, 0.3])
    seg = integrate(lambda c: -field_region1_single(m, c), c0, events=[Event("face", lambda c: c[1], -1)])
    assert seg.status == "event" and seg.event.name == "face"
    assert abs(seg.y_end[1]) <= 1e-12
    assert 0 < seg.t_end < 1.0
    np.testing.assert_array_equal(seg.ys[:, 3], 1.0)


def test_zero_field_hits_cap():
    y0 = np.array([1.0, 2.0, 3.0])
    seg = integrate(lambda y: np.zeros_like(y), y0)
    assert seg.status == "cap" and seg.t_end == pytest.approx(200.0)
    np.testing.assert_array_equal(seg.y_end, y0)


@pytest.mark.parametrize("rtol", [1e-6, 1e-8, 1e-10, 1e-12])
def test_oscillator_error_tracks_tolerance(rtol):
    cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-2, event_tol=rtol * 1e-2)
    seg = integrate(oscillator, [1.0, 0.0], config=cfg, t_max=10.0)
    err = np.max(np.abs(seg.y_end - [math.cos(10.0), -math.sin(10.0)]))
    assert err < 100 * rtol


def test_tighter_tolerance_reduces_error():
    errs = []
    for rtol in (1e-5, 1e-7, 1e-9):
        seg = integrate(oscillator, [1.0, 0.0], config=IntegratorConfig(rtol=rtol, atol=rtol), t_max=20.0)
        errs.append(np.max(np.abs(seg.y_end - [math.cos(20.0), -math.sin(20.0)])))
    assert errs[0] > 10 * errs[1] > 100 * errs[2]


def test_event_location_is_sharp():
    seg = integrate(oscillator, [1.0, 0.0], events=[Event("zero", lambda y: y[0], -1)])
    assert seg.t_end == pytest.approx(math.pi / 2, abs=1e-10)
    assert abs(seg.y_end[0]) <= 1e-12


def test_event_direction_filter():
    # y0 starts falling; a rising-only event first fires at 3 pi / 2
    seg = integrate(oscillator, [1.0, 0.0], events=[Event("up", lambda y: y[0], +1)])
    assert seg.t_end == pytest.approx(1.5 * math.pi, abs=1e-9)


def test_first_of_several_events_wins():
    evs = [Event("late", lambda y: y[0] + 0.5, -1), Event("early", lambda y: y[0] - 0.5, -1)]
    seg = integrate(oscillator, [1.0, 0.0], events=evs)
    assert seg.event.name == "early"
    assert seg.t_end == pytest.approx(math.acos(0.5), abs=1e-10)


def test_non_finite_field_reports_failure():
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = integrate(lambda y: y / (y[0] - 1.0), [1.0, 1.0])
    assert seg.status == "step_failure"


def test_blow_up_reports_step_failure():
    # y' = y^2 from 1 explodes at t = 1
    seg = integrate(lambda y: y * y, [1.0], t_max=2.0)
    assert seg.status == "step_failure"
    assert seg.t_end == pytest.approx(1.0, abs=1e-3)


def test_hermite_exact_for_cubics():
    p = np.polynomial.Polynomial([0.3, -1.0, 0.5, 2.0])
    dp = p.deriv()
    t0, t1 = 0.2, 1.7
    for t in np.linspace(t0, t1, 7):
        v = hermite(t0, np.array([p(t0)]), np.array([dp(t0)]), t1, np.array([p(t1)]), np.array([dp(t1)]), t)
        assert v[0] == pytest.approx(p(t), abs=1e-13)


def test_batch_matches_single(rng):
    m = MetricModel.perturbed(1, 0.1)
    Y0 = np.column_stack([rng.uniform(0.3, 2, 6), rng.uniform(-1, 1, 6), rng.normal(size=6), rng.normal(size=6)])
    res = integrate_batch(lambda a: hp_rhs(m, a), Y0, 1.5)
    assert res.ok.all()
    for row, y0 in zip(res.y, Y0):
        seg = integrate(lambda a: hp_rhs(m, a), y0, t_max=1.5)
        np.testing.assert_allclose(row, seg.y_end, rtol=1e-8, atol=1e-9)


@pytest.mark.parametrize("kw", [dict(rtol=0.0), dict(atol=-1.0), dict(t_max=0.0), dict(atol=1e-16)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_config_scaled():
    c = IntegratorConfig().scaled(0.01)
    assert c.rtol == pytest.approx(1e-12) and c.atol == pytest.approx(1e-14)
    assert c.event_tol <= 100 * c.atol
