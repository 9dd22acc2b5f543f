"""Geodesic and joint-flow tracing with chart switching.

A lone geodesic is integrated with the interior field ``H_p`` until it drops
below ``x_sw``; it then continues in the one-factor region-1 chart, where the
rescaled field ``-H_q`` carries it to ``x = 0`` in finite parameter time.  The
value of ``s = t + log x`` at that face is the sojourn limit, read off
directly rather than extrapolated.

In the boundary chart the geodesic is viewed through the wave symbol
``Q = (tau^2 - |zeta|^2)/2`` with ``tau = 1`` and ``zeta_Q = -zeta_p`` (so that
``H_Q`` and ``H_p`` trace the same curve at the same speed).

Product traces start from the initial set ``t = 0, z = z', zeta = -zeta',
tau = |zeta|`` and drive the left factor to ``L`` and the right factor to
``R``.  Three routes use different charts and must agree:

``region3``
    each factor separately through region 1; ``s = s_L + s_R``.
``region2``
    the first factor through the projective chart at ``L cap ff`` (or its
    mirror), the second through region 1.
``region4``
    the first factor through the interior until it is below ``x_sw``, then
    both rescaled flows in the corner chart, in the requested order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import charts as ch
from .charts import ChartConfig, ChartDomainError
from .hamiltonian import ProductPhasePoint, energy_p, hp_rhs, hq_rhs, symbol_Q
from .integrate import Event, IntegratorConfig, integrate
from .layout import layout
from .metric import DomainError, MetricModel, vec
from .rescaled import (field_region1_single, field_region2, field_region4, q_region1_single,
                       q_region2, q_region4)


# -- results ---------------------------------------------------------------------

@dataclass
class Sample:
    param: float
    chart: str
    side: str | None
    coords: np.ndarray


@dataclass
class FaceHit:
    face: str
    param: float
    chart: str
    state: np.ndarray
    kind: str = "FaceHit"


@dataclass
class ChartSwitch:
    param: float
    from_chart: str
    to_chart: str
    mismatch: float
    kind: str = "ChartSwitch"


@dataclass
class CapReached:
    param: float
    message: str = "parameter cap reached; possibly trapped"
    kind: str = "CapReached"


@dataclass
class StepFailure:
    param: float
    message: str
    kind: str = "StepFailure"


@dataclass
class BoxExit:
    param: float
    bound: str
    kind: str = "BoxExit"


@dataclass
class FlowResult:
    samples: list[Sample]
    termination: object
    switches: list[ChartSwitch] = field(default_factory=list)
    drift: dict = field(default_factory=dict)
    n: int = 1

    @property
    def ok(self) -> bool:
        return isinstance(self.termination, FaceHit)

    @property
    def params(self) -> np.ndarray:
        return np.array([s.param for s in self.samples])

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def _require_face(self):
        if not self.ok:
            t = self.termination
            raise TracingError(f"trajectory ended with {t.kind}: {getattr(t, 'message', '')}".rstrip(": "),
                               self)

    @property
    def face_state(self) -> np.ndarray:
        self._require_face()
        return self.termination.state

    @property
    def s_limit(self) -> float:
        self._require_face()
        return float(self.termination.state[0])

    @property
    def endpoint(self) -> np.ndarray:
        """Boundary point ``y`` reached by a one-factor trace."""
        self._require_face()
        return self.termination.state[2:2 + self.n].copy()


class TracingError(RuntimeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


# -- one geodesic -------------------------------------------------------------------

def _box_events(model, y_slice, x_index=None):
    evs = []
    if x_index is not None:
        evs.append(Event("x_max", lambda a: a[x_index] / model.x_scale - model.x_max, 1, "box"))
    for j in range(model.n):
        k = y_slice.start + j
        evs.append(Event(f"y{j + 1}_max", lambda a, k=k: abs(a[k]) - model.y_max, 1, "box"))
    return evs


def _to_region1(t, a, n, sigma=1.0):
    """One-factor interior geodesic state ``[x, y, xi_p, eta_p]`` -> region-1 coords."""
    x, y, xi, eta = a[0], a[1:1 + n], a[1 + n], a[2 + n:]
    return np.concatenate([[t + math.log(x), x], y, [sigma, -xi - sigma / x], -eta])


def _from_region1(c, n):
    s, x, y, sigma, xit, eta = c[0], c[1], c[2:2 + n], c[2 + n], c[3 + n], c[4 + n:]
    return s - math.log(x), np.concatenate([[x], y, [-(xit + sigma / x)], -eta])


def trace_geodesic(model: MetricModel, x, y, xi, eta, direction: str = "forward", *,
                   config: IntegratorConfig = IntegratorConfig(), charts: ChartConfig = ChartConfig(),
                   side: str = "L", defining_scale: float = 1.0, sigma: float = 1.0,
                   max_switches: int = 50) -> FlowResult:
    """Follow the unit-speed geodesic through ``(x, y)`` with covector ``(xi, eta)``.

    ``direction='backward'`` traces the same geodesic in reverse.  The sample
    parameter accumulates the flow parameter of each segment (geodesic time in
    the interior, rescaled time in region 1).  ``defining_scale=c`` redoes the
    whole computation in the collar coordinate ``c x``.  ``sigma > 0`` runs
    the flow on the energy sheet ``|zeta| = tau = sigma``: the same curve at
    speed ``sigma``, with the same sojourn limit.
    """
    n = model.n
    y, eta = vec(y, n), vec(eta, n)
    if not x > 0:
        raise DomainError("trace_geodesic starts at an interior point (x > 0)")
    p = float(energy_p(model, np.concatenate([[x], y, [xi], eta])))
    if abs(p) > 1e-10:
        raise ValueError(f"start covector is not unit: p = {p:.3e}")
    if sigma == 0:
        raise ValueError("sigma must be nonzero")
    if not sigma > 0:
        raise ValueError("sigma must be positive; the tau < 0 sheet is the time reversal")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if defining_scale != 1.0:
        model = model.rescaled(defining_scale)
        x, xi = defining_scale * x, xi / defining_scale
    sgn = sigma if direction == "forward" else -sigma
    state = np.concatenate([[x], y, [sgn * xi], sgn * eta])

    cfg = config
    samples: list[Sample] = []
    switches: list[ChartSwitch] = []
    drift = {"max_abs_p": 0.0, "max_abs_q": 0.0, "sigma_drift": 0.0}
    param, t_abs = 0.0, 0.0
    chart = "interior" if x >= charts.x_sw else "region1"
    r1_side = side
    if chart == "region1":
        state = _to_region1(0.0, state, n, sigma)

    def interior_rhs(a):
        return hp_rhs(model, a)

    def region1_rhs(c):
        return -field_region1_single(model, c)

    for _ in range(max_switches + 1):
        if chart == "interior":
            events = [Event("region1", lambda a: a[0] - charts.x_sw, -1, "switch")]
            events += _box_events(model, slice(1, 1 + n), 0)
            seg = integrate(interior_rhs, state, config=cfg, events=events, t0=param)
            p_vals = energy_p(model, seg.ys) - 0.5 * (sigma * sigma - 1.0)
            drift["max_abs_p"] = max(drift["max_abs_p"], float(np.max(np.abs(p_vals))))
            t_abs += sigma * (seg.t_end - param)
        else:
            events = [Event("face", lambda c: c[1], -1, "face"),
                      Event("interior", lambda c: c[1] - 2 * charts.x_sw, 1, "switch")]
            events += _box_events(model, slice(2, 2 + n))
            seg = integrate(region1_rhs, state, config=cfg, events=events, t0=param)
            q_vals = q_region1_single(model, seg.ys)
            drift["max_abs_q"] = max(drift["max_abs_q"], float(np.max(np.abs(q_vals))))
            drift["sigma_drift"] = max(drift["sigma_drift"],
                                       float(np.max(np.abs(seg.ys[:, 2 + n] - seg.ys[0, 2 + n]))))
        start = 1 if samples else 0
        for t_, a_ in zip(seg.ts[start:], seg.ys[start:]):
            samples.append(Sample(float(t_), chart, r1_side if chart == "region1" else None, a_))
        param = seg.t_end
        end = seg.y_end

        if seg.status == "cap":
            return FlowResult(samples, CapReached(param), switches, drift, n)
        if seg.status == "step_failure":
            return FlowResult(samples, StepFailure(param, seg.message), switches, drift, n)
        ev = seg.event
        if ev.kind == "box":
            return FlowResult(samples, BoxExit(param, ev.name), switches, drift, n)
        if ev.kind == "face":
            return FlowResult(samples, FaceHit(side, param, "region1", end.copy()), switches, drift, n)
        # chart switch
        if chart == "interior":
            new = _to_region1(t_abs, end, n, sigma)
            back = _from_region1(new, n)[1]
            switches.append(ChartSwitch(param, "interior", "region1", float(np.max(np.abs(back - end)))))
            chart, state = "region1", new
        else:
            t_abs, new = _from_region1(end, n)
            again = _to_region1(t_abs, new, n, sigma)
            switches.append(ChartSwitch(param, "region1", "interior", float(np.max(np.abs(again - end)))))
            chart, state = "interior", new
        # the switch sample opens the next segment
        samples.append(Sample(param, chart, r1_side if chart == "region1" else None, state.copy()))
    return FlowResult(samples, StepFailure(param, "too many chart switches"), switches, drift, n)


# -- joint flow from the initial set -------------------------------------------------------

@dataclass
class ProductTrace:
    route: str
    order: str
    y_L: np.ndarray
    y_R: np.ndarray
    S_soj: float
    corner_chart: str
    corner_state: np.ndarray
    flows: list[FlowResult]
    drift: dict

    @property
    def switches(self):
        return [s for f in self.flows for s in f.switches]


def _sigma_data(model, x, y, xi, eta):
    n = model.n
    y, eta = vec(y, n), vec(eta, n)
    p = float(energy_p(model, np.concatenate([[x], y, [xi], eta])))
    if abs(p) > 1e-10:
        raise ValueError(f"initial covector must be unit (|zeta| = 1), got p = {p:.3e}")
    return y, eta


def _check_order(order):
    if order not in ("LR", "RL"):
        raise ValueError("order must be 'LR' or 'RL'")


def trace_to_face(model: MetricModel, x, y, xi, eta, *, route: str = "region3", order: str = "RL",
                  config: IntegratorConfig = IntegratorConfig(), charts: ChartConfig = ChartConfig(),
                  defining_scale: float = 1.0) -> ProductTrace:
    """Drive the initial-set point over ``(x, y)`` with covector ``(xi, eta)`` to the corner.

    ``order`` names which flow runs first (``'RL'``: ``H_{q_R}`` first).
    Raises :class:`TracingError` if either factor fails to reach its face.
    """
    _check_order(order)
    y, eta = _sigma_data(model, x, y, xi, eta)
    if route == "region3":
        return _route_region3(model, x, y, xi, eta, order, config, charts, defining_scale)
    if defining_scale != 1.0:
        model = model.rescaled(defining_scale)
        x, xi = defining_scale * x, xi / defining_scale
    if route == "region2":
        return _route_region2(model, x, y, xi, eta, order, config, charts)
    if route == "region4":
        return _route_region4(model, x, y, xi, eta, order, config, charts)
    raise ValueError(f"unknown route {route!r}")


def _merge_drift(flows):
    out: dict = {}
    for f in flows:
        for k, v in f.drift.items():
            out[k] = max(out.get(k, 0.0), v)
    return out


def _route_region3(model, x, y, xi, eta, order, cfg, charts, scale):
    n = model.n
    # H_{Q_L} moves the left factor along -g* zeta; the right one moves along +g* zeta
    runs = {"L": lambda: trace_geodesic(model, x, y, -xi, -eta, config=cfg, charts=charts, side="L",
                                        defining_scale=scale),
            "R": lambda: trace_geodesic(model, x, y, xi, eta, config=cfg, charts=charts, side="R",
                                        defining_scale=scale)}
    res = {side: runs[side]() for side in order}
    for f in res.values():
        f._require_face()
    L, R = res["L"].face_state, res["R"].face_state
    # assemble the corner point in region-3 coordinates
    corner = np.concatenate([[L[0] + R[0], L[1]], L[2:2 + n], [R[1]], R[2:2 + n],
                             [L[2 + n], L[3 + n]], L[4 + n:], [R[3 + n]], R[4 + n:]])
    return ProductTrace("region3", order, res["L"].endpoint, res["R"].endpoint, float(L[0] + R[0]),
                        "region3", corner, [res[s] for s in order], _merge_drift(res.values()))


def _route_region2(model, x, y, xi, eta, order, cfg, charts):
    n = model.n
    first, second = order[0], order[1]
    chart = "region2L" if first == "L" else "region2R"
    a0 = ProductPhasePoint.sigma_point(x, y, xi, eta, model).as_array()
    c0 = ch.lift(chart, a0, n)
    lay = layout(chart, n)
    d = lay.d
    sig0 = c0[d]

    def rhs(c):
        return -field_region2(model, first, c)

    seg = integrate(rhs, c0, config=cfg, events=[Event("face", lambda c: c[1], -1, "face")])
    q_vals = q_region2(model, first, seg.ys)
    drift = {"max_abs_q": float(np.max(np.abs(q_vals))),
             "sigma_drift": float(np.max(np.abs(seg.ys[:, d] - sig0)))}
    samples = [Sample(float(t), chart, first, c) for t, c in zip(seg.ts, seg.ys)]
    if seg.status != "event" or seg.event.kind != "face":
        term = CapReached(seg.t_end) if seg.status == "cap" else \
            StepFailure(seg.t_end, seg.message or f"left the box ({seg.event.name})")
        raise TracingError(f"region2 flow failed: {term.kind}", FlowResult(samples, term, [], drift, n))
    end = seg.y_end
    xp = end[2 + n]
    # the frozen factor still sits at the start point, so s2 + log x' is the one-factor limit
    s_first = float(end[0] + math.log(xp))
    y_first = end[3 + n:d] + xp * end[2:2 + n]
    f1 = FlowResult(samples, FaceHit(first, seg.t_end, chart, end.copy()), [], drift, n)
    # second factor: H_{Q_R} follows +g* zeta, H_{Q_L} follows -g* zeta
    sgn = 1.0 if second == "R" else -1.0
    f2 = trace_geodesic(model, x, y, sgn * xi, sgn * eta, config=cfg, charts=charts, side=second)
    s_second = f2.s_limit
    y_second = f2.endpoint
    yl, yr = (y_first, y_second) if first == "L" else (y_second, y_first)
    return ProductTrace("region2", order, yl, yr, s_first + s_second, chart, end.copy(), [f1, f2],
                        _merge_drift([f1, f2]))


def _route_region4(model, x, y, xi, eta, order, cfg, charts):
    n = model.n
    if eta[0] == 0.0:
        raise ChartDomainError("region4 route needs eta_1 != 0 so that y_1 != y_1' at the corner")
    a0 = ProductPhasePoint.sigma_point(x, y, xi, eta, model).as_array()
    # the right factor moves along +g* zeta; if it ends at larger y_1, relabel the factors
    swapped = eta[0] > 0
    if swapped:
        a0 = ch.swap_factors(a0, n)
    to_chart = {"L": "R", "R": "L"} if swapped else {"L": "L", "R": "R"}
    first, second = to_chart[order[0]], to_chart[order[1]]
    d = 2 * n + 3
    off = 1 if first == "L" else 2 + n
    x_stop = min(charts.x_sw, 0.5 * x)

    def rhs_q(a):
        return hq_rhs(model, first, a)

    events = [Event("region4", lambda a: a[off] - x_stop, -1, "switch")]
    events += _box_events(model, slice(off + 1, off + 1 + n), off)
    seg = integrate(rhs_q, a0, config=cfg, events=events)
    Q_vals = symbol_Q(model, first, seg.ys)
    drift = {"max_abs_Q": float(np.max(np.abs(Q_vals))),
             "tau_drift": float(np.max(np.abs(seg.ys[:, d] - a0[d])))}
    samples = [Sample(float(t), "interior", None, a) for t, a in zip(seg.ts, seg.ys)]
    if seg.status != "event" or seg.event.kind != "switch":
        term = CapReached(seg.t_end) if seg.status == "cap" else \
            StepFailure(seg.t_end, seg.message or f"left the box ({seg.event.name})")
        raise TracingError(f"interior stage failed: {term.kind}", FlowResult(samples, term, [], drift, n))
    a1 = seg.y_end
    c = ch.lift_region4(a1, n)
    mismatch = float(np.max(np.abs(ch.unlift_region4(c, n) - a1)))
    switches = [ChartSwitch(seg.t_end, "interior", "region4", mismatch)]
    samples.append(Sample(seg.t_end, "region4", None, c.copy()))
    param = seg.t_end
    lay = layout("region4", n)
    drift.update(max_abs_q=0.0, sigma_drift=0.0)
    sig0 = c[d]
    for side in (first, second):
        idx = lay["w" if side == "L" else "wp"]

        def rhs(cc, side=side):
            return -field_region4(model, side, cc)

        events = [Event("face", lambda cc, idx=idx: cc[idx], -1, "face")]
        events += _box_events(model, slice(lay["yp1"], lay["yp1"] + n))
        seg = integrate(rhs, c, config=cfg, events=events, t0=param)
        for t_, cc in zip(seg.ts[1:], seg.ys[1:]):
            samples.append(Sample(float(t_), "region4", side, cc))
        for s2 in ("L", "R"):
            drift["max_abs_q"] = max(drift["max_abs_q"],
                                     float(np.max(np.abs(q_region4(model, s2, seg.ys)))))
        drift["sigma_drift"] = max(drift["sigma_drift"], float(np.max(np.abs(seg.ys[:, d] - sig0))))
        param = seg.t_end
        if seg.status != "event" or seg.event.kind != "face" or np.any(seg.ys[:, 2] <= 0):
            why = seg.message or (seg.event.name if seg.event else seg.status)
            raise TracingError(f"region4 flow of q_{side} failed: {why}",
                               FlowResult(samples, StepFailure(param, why), switches, drift, n))
        c = seg.y_end
    u = c[2]
    yp = c[lay["yp1"]:lay["yp1"] + n]
    ybar = yp + u * np.concatenate([[1.0], c[3:2 + n]])
    S = float(c[0] + 2 * math.log(u))
    yl, yr = (yp, ybar) if swapped else (ybar, yp)
    flow = FlowResult(samples, FaceHit("corner", param, "region4", c.copy()), switches, drift, n)
    return ProductTrace("region4", order, yl, yr, S, "region4", c.copy(), [flow], drift)
