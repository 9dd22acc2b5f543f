"""Adaptive Dormand-Prince 5(4) integration with event location.

Two drivers share the tableau:

* :func:`integrate` follows one trajectory, keeps every accepted step, and
  stops at the first terminal event.  Events are bracketed on the cubic
  Hermite interpolant, then polished with exact partial Runge-Kutta steps
  from the start of the bracketing step until ``|g| <= event_tol``.
* :func:`integrate_batch` advances many independent rows to a common end
  time with per-row step control (used by the shooting solver).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4

SAFETY, MIN_FACTOR, MAX_FACTOR = 0.9, 0.2, 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = math.inf
    t_max: float = 200.0
    event_tol: float = 1e-12
    max_steps: int = 200_000

    def __post_init__(self):
        for name in ("rtol", "atol", "max_step", "t_max", "event_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.event_tol > 100 * self.atol:
            raise ValueError("event_tol must not exceed 100 * atol")

    def scaled(self, factor: float) -> "IntegratorConfig":
        """Same config with both tolerances multiplied by ``factor``."""
        return IntegratorConfig(self.rtol * factor, self.atol * factor, self.max_step,
                                self.t_max, min(self.event_tol, 100 * self.atol * factor),
                                self.max_steps)


@dataclass
class Event:
    """Stop predicate: the run ends where ``fn(y)`` crosses zero.

    ``direction=-1`` only fires on a ``+ -> -`` crossing, ``+1`` on ``- -> +``,
    ``0`` on either.
    """
    name: str
    fn: Callable[[np.ndarray], float]
    direction: int = 0
    kind: str = "face"


@dataclass
class Segment:
    ts: np.ndarray
    ys: np.ndarray
    status: str                  # "event" | "cap" | "step_failure"
    event: Event | None = None
    message: str = ""
    nfev: int = 0

    @property
    def t_end(self):
        return float(self.ts[-1])

    @property
    def y_end(self):
        return self.ys[-1]


def _stages(rhs, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        acc = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(rhs(acc))
    return k


def _step(rhs, y, f0, h):
    k = _stages(rhs, y, f0, h)
    y_new = y + h * sum(b * kj for b, kj in zip(_B, k) if b != 0.0)
    err = h * sum(e * kj for e, kj in zip(_E, k))
    return y_new, k[6], err


def _err_norm(err, y, y_new, cfg):
    scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, y0, f0, cfg):
    scale = cfg.atol + cfg.rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = rhs(y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, cfg.max_step)


def hermite(t0, y0, f0, t1, y1, f1, t):
    """Cubic Hermite interpolant of one step at parameter ``t``."""
    h = t1 - t0
    th = (t - t0) / h
    h00 = (1 + 2 * th) * (1 - th) ** 2
    h10 = th * (1 - th) ** 2
    h01 = th * th * (3 - 2 * th)
    h11 = th * th * (th - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _crossed(g0, g1, direction):
    if direction <= 0 and g0 > 0 >= g1:
        return True
    if direction >= 0 and g0 < 0 <= g1:
        return True
    return False


def _locate(rhs, ev, t0, y0, f0, t1, y1, f1, g0, g1, cfg):
    """Event parameter and state inside the accepted step ``[t0, t1]``."""
    # bracket on the dense output
    a, b, ga = t0, t1, g0
    for _ in range(60):
        m = 0.5 * (a + b)
        gm = ev.fn(hermite(t0, y0, f0, t1, y1, f1, m))
        if (gm > 0) == (ga > 0) and gm != 0:
            a, ga = m, gm
        else:
            b = m
        if b - a <= 1e-3 * (t1 - t0):
            break
    guess = 0.5 * (a + b)

    # polish with exact partial steps; Illinois on the bracket [t0, t1]
    def exact(t):
        if t == t0:
            return y0
        return _step(rhs, y0, f0, t - t0)[0]

    lo, glo, hi, ghi = t0, g0, t1, g1
    t = guess
    y = exact(t)
    g = ev.fn(y)
    side = 0
    for _ in range(80):
        if abs(g) <= cfg.event_tol:
            break
        if (g > 0) == (glo > 0):
            lo, glo = t, g
            if side == -1:
                ghi *= 0.5
            side = -1
        else:
            hi, ghi = t, g
            if side == 1:
                glo *= 0.5
            side = 1
        if hi - lo <= 4e-16 * max(1.0, abs(hi)):
            break
        t = hi - ghi * (hi - lo) / (ghi - glo)
        if not lo < t < hi:
            t = 0.5 * (lo + hi)
        y = exact(t)
        g = ev.fn(y)
    return t, y


def integrate(rhs: Callable[[np.ndarray], np.ndarray], y0, *, config: IntegratorConfig = IntegratorConfig(),
              events: Sequence[Event] = (), t0: float = 0.0, t_max: float | None = None) -> Segment:
    """Integrate the autonomous system ``y' = rhs(y)`` forward from ``t0``.

    Stops at the first event crossing, at ``t_max`` (``"cap"``), or when the
    step size underflows (``"step_failure"``).
    """
    cfg = config
    t_end = cfg.t_max if t_max is None else t_max
    y = np.array(y0, dtype=float)
    t = float(t0)
    f = rhs(y)
    nfev = 1
    ts, ys = [t], [y.copy()]
    gs = [ev.fn(y) for ev in events]

    if not np.all(np.isfinite(f)):
        return Segment(np.array(ts), np.array(ys), "step_failure", message="non-finite field", nfev=nfev)
    h = _initial_step(rhs, y, f, cfg)
    nfev += 1

    for _ in range(cfg.max_steps):
        if t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            return Segment(np.array(ts), np.array(ys), "cap", nfev=nfev)
        h = min(h, cfg.max_step, t_end - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            return Segment(np.array(ts), np.array(ys), "step_failure",
                           message=f"step size underflow at t={t:.6g}", nfev=nfev)
        y_new, f_new, err = _step(rhs, y, f, h)
        nfev += 6
        en = _err_norm(err, y, y_new, cfg) if np.all(np.isfinite(y_new)) else math.inf
        if en > 1.0:
            h *= max(MIN_FACTOR, SAFETY * en ** -0.2) if math.isfinite(en) else MIN_FACTOR
            continue
        t_new = t + h
        gs_new = [ev.fn(y_new) for ev in events]
        for ev, g0, g1 in zip(events, gs, gs_new):
            if _crossed(g0, g1, ev.direction):
                te, ye = _locate(rhs, ev, t, y, f, t_new, y_new, f_new, g0, g1, cfg)
                if te > t:
                    ts.append(te)
                    ys.append(ye)
                else:
                    ys[-1] = ye
                return Segment(np.array(ts), np.array(ys), "event", ev, nfev=nfev)
        t, y, f, gs = t_new, y_new, f_new, gs_new
        ts.append(t)
        ys.append(y.copy())
        factor = MAX_FACTOR if en == 0 else min(MAX_FACTOR, SAFETY * en ** -0.2)
        h *= factor
    return Segment(np.array(ts), np.array(ys), "step_failure", message="max_steps exceeded", nfev=nfev)


# -- batch driver -----------------------------------------------------------------

@dataclass
class BatchResult:
    y: np.ndarray
    ok: np.ndarray
    steps: np.ndarray = field(default=None)


def integrate_batch(rhs, Y0, t_end: float, config: IntegratorConfig = IntegratorConfig()) -> BatchResult:
    """Advance every row of ``Y0`` from 0 to ``t_end`` with its own step size.

    ``rhs`` must act row-wise on arrays of shape ``(m, d)``.  Rows whose step
    underflows or whose state turns non-finite are flagged in ``ok``.
    """
    cfg = config
    Y = np.array(Y0, dtype=float)
    m = len(Y)
    t = np.zeros(m)
    F = rhs(Y)
    scale = cfg.atol + cfg.rtol * np.abs(Y)
    d1 = np.sqrt(np.mean((F / scale) ** 2, axis=1))
    h = (0.01 / np.maximum(d1, 1e-300)) ** 0.2
    h = np.clip(h, 1e-8 * t_end, min(cfg.max_step, t_end))
    steps = np.zeros(m, dtype=int)
    ok = np.ones(m, dtype=bool)
    active = np.arange(m)
    for _ in range(cfg.max_steps):
        if active.size == 0:
            break
        ya, fa = Y[active], F[active]
        ha = np.minimum(np.minimum(h[active], cfg.max_step), t_end - t[active])
        k = [fa]
        for i in range(1, 7):
            acc = ya + ha[:, None] * sum(a * kj for a, kj in zip(_A[i], k))
            k.append(rhs(acc))
        y_new = ya + ha[:, None] * sum(b * kj for b, kj in zip(_B, k) if b != 0.0)
        err = ha[:, None] * sum(e * kj for e, kj in zip(_E, k))
        sc = cfg.atol + cfg.rtol * np.maximum(np.abs(ya), np.abs(y_new))
        with np.errstate(invalid="ignore", over="ignore"):
            en = np.sqrt(np.mean((err / sc) ** 2, axis=1))
        en = np.where(np.isfinite(en), en, np.inf)
        acc_mask = en <= 1.0
        idx = active[acc_mask]
        Y[idx] = y_new[acc_mask]
        F[idx] = k[6][acc_mask]
        t[idx] += ha[acc_mask]
        steps[idx] += 1
        with np.errstate(divide="ignore", over="ignore"):
            fac = np.where(en == 0, MAX_FACTOR, SAFETY * np.power(np.maximum(en, 1e-300), -0.2))
        fac = np.where(np.isfinite(en), np.clip(fac, MIN_FACTOR, MAX_FACTOR), MIN_FACTOR)
        h[active] = ha * fac
        done = t[active] >= t_end * (1 - 1e-15)
        fail = (h[active] < 1e-14 * t_end) & ~done
        ok[active[fail]] = False
        active = active[~(done | fail)]
    ok[active] = False
    return BatchResult(Y, ok, steps)
