import math

import numpy as np
import pytest

from ahmscatter.charts import ChartConfig
from ahmscatter.hyperbolic import semicircle_endpoints
from ahmscatter.integrate import IntegratorConfig
from ahmscatter.metric import DomainError, MetricModel
from ahmscatter.scattering import normalize_covector
from ahmscatter.tracing import TracingError, trace_geodesic, trace_to_face


def test_vertical_geodesic(hyp1):
    f = trace_geodesic(hyp1, 1.0, 0.0, -1.0, 0.0)
    assert f.ok and f.termination.face == "L"
    assert f.endpoint[0] == pytest.approx(0.0, abs=1e-14)
    assert f.s_limit == pytest.approx(0.0, abs=1e-9)
    assert [s.chart for s in f.samples][-1] == "region1"
    assert len(f.switches) == 1 and f.switches[0].mismatch < 1e-8


def test_apex_semicircle_both_ways(hyp1):
    fwd = trace_geodesic(hyp1, 1.0, 0.0, 0.0, 1.0)
    bwd = trace_geodesic(hyp1, 1.0, 0.0, 0.0, 1.0, "backward")
    assert fwd.endpoint[0] == pytest.approx(1.0, abs=1e-9)
    assert bwd.endpoint[0] == pytest.approx(-1.0, abs=1e-9)
    # s-limit of the radius-1 semicircle from the apex: t + log x -> log 2
    assert fwd.s_limit == pytest.approx(math.log(2), abs=1e-9)


def test_epsilon_zero_matches_hyperbolic(hyp1):
    zero = MetricModel.perturbed(1, 0.0)
    xi, eta = 0.6 / 0.7, 0.8 / 0.7
    a = trace_geodesic(hyp1, 0.7, 0.2, xi, eta)
    b = trace_geodesic(zero, 0.7, 0.2, xi, eta)
    assert abs(a.s_limit - b.s_limit) < 1e-10
    np.testing.assert_allclose(a.endpoint, b.endpoint, atol=1e-10)


@pytest.mark.parametrize("sigma", [0.5, 2.0])
def test_sigma_sheet_gives_same_limit(hyp1, sigma):
    a = trace_geodesic(hyp1, 0.5, 0.0, 0.8 / 0.5, 0.6 / 0.5)
    b = trace_geodesic(hyp1, 0.5, 0.0, 0.8 / 0.5, 0.6 / 0.5, sigma=sigma)
    assert b.s_limit == pytest.approx(a.s_limit, abs=1e-8)
    assert b.drift["sigma_drift"] == 0.0


def test_sigma_zero_rejected(hyp1):
    with pytest.raises(ValueError, match="sigma must be nonzero"):
        trace_geodesic(hyp1, 1.0, 0.0, -1.0, 0.0, sigma=0.0)


def test_non_unit_start_rejected(hyp1):
    with pytest.raises(ValueError):
        trace_geodesic(hyp1, 1.0, 0.0, -2.0, 0.0)
    with pytest.raises(DomainError):
        trace_geodesic(hyp1, -1.0, 0.0, -1.0, 0.0)


def test_cap_and_box(hyp1):
    cap = trace_geodesic(hyp1, 1.0, 0.0, -1.0, 0.0, config=IntegratorConfig(t_max=0.001))
    assert cap.termination.kind == "CapReached" and "trapped" in cap.termination.message
    with pytest.raises(TracingError):
        cap.s_limit
    box = trace_geodesic(hyp1, 1.0, 0.0, 1.0, 0.0)
    assert box.termination.kind == "BoxExit" and box.termination.bound == "x_max"


def test_start_inside_region1(hyp1):
    f = trace_geodesic(hyp1, 0.05, 0.3, -1 / 0.05, 0.0)
    assert f.samples[0].chart == "region1"
    assert f.s_limit == pytest.approx(math.log(0.05), abs=1e-9)


def test_drift_record_is_small(pert1):
    xi, eta = normalize_covector(pert1, 0.4, 0.1, 0.3, 1.0, warn=False)
    f = trace_geodesic(pert1, 0.4, 0.1, xi, eta)
    assert f.drift["max_abs_p"] < 1e-8 and f.drift["max_abs_q"] < 1e-8
    assert f.drift["sigma_drift"] == 0.0
    assert all(s.mismatch < 1e-8 for s in f.switches)


def test_defining_scale_shifts_limit(pert1):
    xi, eta = normalize_covector(pert1, 0.6, 0.2, -0.4, 0.9, warn=False)
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-14)
    a = trace_geodesic(pert1, 0.6, 0.2, xi, eta, config=cfg)
    b = trace_geodesic(pert1, 0.6, 0.2, xi, eta, config=cfg, defining_scale=2.0)
    assert b.s_limit - a.s_limit == pytest.approx(math.log(2), abs=1e-10)
    np.testing.assert_allclose(a.endpoint, b.endpoint, atol=1e-10)


@pytest.mark.parametrize("route", ["region3", "region2", "region4"])
def test_apex_product_trace(hyp1, route):
    pt = trace_to_face(hyp1, 1.0, 0.0, 0.0, 1.0, route=route)
    assert pt.y_L[0] == pytest.approx(-1.0, abs=1e-9)
    assert pt.y_R[0] == pytest.approx(1.0, abs=1e-9)
    assert pt.S_soj == pytest.approx(2 * math.log(2), abs=1e-8)


def test_product_trace_matches_semicircle(hyp2):
    x0, y0 = 0.4, np.array([0.2, -0.3])
    xi, eta = normalize_covector(hyp2, x0, y0, 0.5, np.array([0.7, -0.2]), warn=False)
    pt = trace_to_face(hyp2, x0, y0, xi, eta)
    ym, yp = semicircle_endpoints(x0, y0, xi, eta)
    np.testing.assert_allclose(pt.y_L, ym, atol=1e-9)
    np.testing.assert_allclose(pt.y_R, yp, atol=1e-9)


@pytest.mark.parametrize("model", [MetricModel.hyperbolic(1), MetricModel.perturbed(1, 0.1)])
def test_order_independence(model):
    xi, eta = normalize_covector(model, 0.3, 0.1, 0.2, 1.0, warn=False)
    a = trace_to_face(model, 0.3, 0.1, xi, eta, route="region4", order="RL")
    b = trace_to_face(model, 0.3, 0.1, xi, eta, route="region4", order="LR")
    np.testing.assert_allclose(a.y_L, b.y_L, atol=1e-9)
    np.testing.assert_allclose(a.y_R, b.y_R, atol=1e-9)
    assert a.S_soj == pytest.approx(b.S_soj, abs=1e-9)


def test_perturbation_off_support(hyp1):
    # a bump far away from the geodesic changes nothing
    far = MetricModel.perturbed(1, 0.3, bump_center=(15.0,), bump_radius=0.3, delta=0.3)
    a = trace_to_face(hyp1, 0.5, 0.0, 0.0, 2.0)
    b = trace_to_face(far, 0.5, 0.0, 0.0, 2.0)
    np.testing.assert_allclose([a.y_L[0], a.y_R[0], a.S_soj], [b.y_L[0], b.y_R[0], b.S_soj], atol=1e-9)


def test_bad_order(hyp1):
    with pytest.raises(ValueError):
        trace_to_face(hyp1, 1.0, 0.0, 0.0, 1.0, order="XY")


def test_custom_switch_threshold(hyp1):
    a = trace_geodesic(hyp1, 1.0, 0.0, 0.0, 1.0, charts=ChartConfig(x_sw=0.05))
    b = trace_geodesic(hyp1, 1.0, 0.0, 0.0, 1.0, charts=ChartConfig(x_sw=0.2))
    assert a.s_limit == pytest.approx(b.s_limit, abs=1e-9)
    assert a.switches[0].param > b.switches[0].param
