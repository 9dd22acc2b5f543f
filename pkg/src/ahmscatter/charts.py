"""Coordinates on the 0-blown-up double space and their symplectic lifts.

All lifts act on flat interior product states
``[t, x, y, x', y', tau, xi, eta, xi', eta']`` (see :mod:`ahmscatter.layout`)
and are written with plain arithmetic and ``log`` so they accept complex
input; the tests use complex-step differentiation on them.

Rescaled charts and their time shift:

==========  ===================================  ===========================
chart       positions                            ``s``
==========  ===================================  ===========================
region1 L   ``x, y, x', y'``                     ``t + log x``
region1 R   ``x, y, x', y'``                     ``t + log x'``
region2L    ``X=x/x', Y=(y-y')/x', x', y'``      ``t + log X``
region2R    ``X'=x'/x, Y'=(y'-y)/x, x, y``       ``t + log X'``
region3     ``x, y, x', y'``                     ``t + log x + log x'``
region4     ``w=x/u, u=y1-y1', Z, w'=x'/u, y'``  ``t + log w + log w'``
==========  ===================================  ===========================

``log_offset`` adds a constant to ``s``; it realises a constant rescaling of
the boundary defining function (``x -> c x`` gives ``log c``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import CHARTS, layout


class ChartDomainError(ValueError):
    """A point lies outside a chart's domain; the message names the bound."""


@dataclass(frozen=True)
class ChartConfig:
    x_sw: float = 0.1
    u_sw: float = 0.2
    r_sw: float = 0.3
    w_sw: float = 0.5

    def __post_init__(self):
        for name in ("x_sw", "u_sw", "r_sw", "w_sw"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ChartPoint:
    chart: str
    coords: np.ndarray
    n: int
    side: str | None = None

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")
        object.__setattr__(self, "coords", np.asarray(self.coords))

    @property
    def layout(self):
        return layout(self.chart, self.n, self.side)

    def __getitem__(self, name):
        return self.coords[..., self.layout[name]]

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in zip(self.layout.names, self.coords)}


# -- polar blow-up -------------------------------------------------------------

@dataclass(frozen=True)
class PolarBlowupPoint:
    R: float
    rho_L: float
    rho_R: float
    Y: np.ndarray
    y_prime: np.ndarray = field(default=None)

    def sphere_defect(self) -> float:
        return float(abs(self.rho_L**2 + self.rho_R**2 + np.sum(np.square(self.Y)) - 1.0))


def blowdown_polar(x, y, xp, yp) -> PolarBlowupPoint:
    """Polar coordinates ``R, rho_L = x/R, rho_R = x'/R, Y = (y-y')/R`` of a pair."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    yp = np.atleast_1d(np.asarray(yp, dtype=float))
    d = y - yp
    R = float(np.sqrt(x * x + xp * xp + d @ d))
    if R == 0.0:
        raise ValueError("degenerate input: the pair lies on the boundary diagonal (R = 0)")
    return PolarBlowupPoint(R, x / R, xp / R, d / R, yp)


def blowup_polar(p: PolarBlowupPoint, y_prime=None):
    """Inverse of :func:`blowdown_polar`: returns ``(x, y, x', y')``.

    ``R = 0`` is allowed and lands on the boundary diagonal fibre.
    """
    defect = p.sphere_defect()
    if defect > 1e-10:
        raise ValueError(f"sphere constraint violated by {defect:.3e}")
    Y = np.atleast_1d(np.asarray(p.Y, dtype=float))
    yp = y_prime if y_prime is not None else p.y_prime
    yp = np.zeros_like(Y) if yp is None else np.atleast_1d(np.asarray(yp, dtype=float))
    return p.R * p.rho_L, yp + p.R * Y, p.R * p.rho_R, yp


def polar_arrays(x, y, xp, yp):
    """Vectorised ``(R, rho_L, rho_R, Y)`` for pairs with shapes ``(m,)``/``(m, n)``."""
    d = np.asarray(y) - np.asarray(yp)
    R = np.sqrt(np.asarray(x) ** 2 + np.asarray(xp) ** 2 + np.sum(d * d, axis=-1))
    return R, x / R, xp / R, d / R[..., None]


# -- helpers ------------------------------------------------------------------

def _split_interior(a, n):
    d = 2 * n + 3
    t, x, y, xp, yp = a[..., 0], a[..., 1], a[..., 2:2 + n], a[..., 2 + n], a[..., 3 + n:d]
    tau, xi, eta, xip, etap = a[..., d], a[..., d + 1], a[..., d + 2:d + 2 + n], \
        a[..., d + 2 + n], a[..., d + 3 + n:]
    return t, x, y, xp, yp, tau, xi, eta, xip, etap


def _join_interior(t, x, y, xp, yp, tau, xi, eta, xip, etap):
    s1 = lambda v: np.asarray(v)[..., None]
    return np.concatenate([s1(t), s1(x), y, s1(xp), yp, s1(tau), s1(xi), eta, s1(xip), etap], axis=-1)


def swap_factors(a, n):
    """Exchange the left and right factors of an interior product state."""
    t, x, y, xp, yp, tau, xi, eta, xip, etap = _split_interior(np.asarray(a), n)
    return _join_interior(t, xp, yp, x, y, tau, xip, etap, xi, eta)


def _dot(a, b):
    return np.sum(a * b, axis=-1)


# -- lifts --------------------------------------------------------------------

def lift_region1(a, n, side="L", log_offset=0.0):
    t, x, y, xp, yp, tau, xi, eta, xip, etap = _split_interior(np.asarray(a), n)
    if side == "L":
        s, xi = t + np.log(x) + log_offset, xi - tau / x
    else:
        s, xip = t + np.log(xp) + log_offset, xip - tau / xp
    return _join_interior(s, x, y, xp, yp, tau, xi, eta, xip, etap)


def unlift_region1(c, n, side="L", log_offset=0.0):
    s, x, y, xp, yp, sigma, xi, eta, xip, etap = _split_interior(np.asarray(c), n)
    if side == "L":
        t, xi = s - np.log(x) - log_offset, xi + sigma / x
    else:
        t, xip = s - np.log(xp) - log_offset, xip + sigma / xp
    return _join_interior(t, x, y, xp, yp, sigma, xi, eta, xip, etap)


def lift_region3(a, n, log_offset=0.0):
    t, x, y, xp, yp, tau, xi, eta, xip, etap = _split_interior(np.asarray(a), n)
    s = t + np.log(x) + np.log(xp) + log_offset
    return _join_interior(s, x, y, xp, yp, tau, xi - tau / x, eta, xip - tau / xp, etap)


def unlift_region3(c, n, log_offset=0.0):
    s, x, y, xp, yp, sigma, xit, eta, xipt, etap = _split_interior(np.asarray(c), n)
    t = s - np.log(x) - np.log(xp) - log_offset
    return _join_interior(t, x, y, xp, yp, sigma, xit + sigma / x, eta, xipt + sigma / xp, etap)


def lift_region2(a, n, side="L", log_offset=0.0):
    a = np.asarray(a)
    if side == "R":
        a = swap_factors(a, n)
    t, x, y, xp, yp, tau, xi, eta, xip, etap = _split_interior(a, n)
    X = x / xp
    Y = (y - yp) / xp[..., None]
    lam = xp * xi
    mu = xp[..., None] * eta
    lamp = xip + xi * X + _dot(eta, Y)
    mup = eta + etap
    s = t + np.log(X) + log_offset
    lamt = lam - tau / X
    return _join_interior(s, X, Y, xp, yp, tau, lamt, mu, lamp, mup)


def unlift_region2(c, n, side="L", log_offset=0.0):
    s, X, Y, xp, yp, sigma, lamt, mu, lamp, mup = _split_interior(np.asarray(c), n)
    x = X * xp
    y = yp + xp[..., None] * Y
    lam = lamt + sigma / X
    xi = lam / xp
    eta = mu / xp[..., None]
    xip = lamp - xi * X - _dot(eta, Y)
    etap = mup - eta
    t = s - np.log(X) - log_offset
    a = _join_interior(t, x, y, xp, yp, sigma, xi, eta, xip, etap)
    return swap_factors(a, n) if side == "R" else a


def _split_region4(c, n):
    d = 2 * n + 3
    s, w, u = c[..., 0], c[..., 1], c[..., 2]
    Z = c[..., 3:3 + n - 1]
    wp, yp = c[..., 2 + n], c[..., 3 + n:d]
    sigma, lamt, nu = c[..., d], c[..., d + 1], c[..., d + 2]
    mu = c[..., d + 3:d + 3 + n - 1]
    lamtp, mup = c[..., d + 2 + n], c[..., d + 3 + n:]
    return s, w, u, Z, wp, yp, sigma, lamt, nu, mu, lamtp, mup


def _join_region4(s, w, u, Z, wp, yp, sigma, lamt, nu, mu, lamtp, mup):
    s1 = lambda v: np.asarray(v)[..., None]
    return np.concatenate([s1(s), s1(w), s1(u), Z, s1(wp), yp,
                           s1(sigma), s1(lamt), s1(nu), mu, s1(lamtp), mup], axis=-1)


def lift_region4(a, n, log_offset=0.0):
    """Projective coordinates at the triple corner; needs ``y1 - y1' > 0``."""
    t, x, y, xp, yp, tau, xi, eta, xip, etap = _split_interior(np.asarray(a), n)
    u = y[..., 0] - yp[..., 0]
    if np.isrealobj(u) and np.any(u <= 0):
        raise ChartDomainError("region4 needs u = y1 - y1' > 0")
    w, wp = x / u, xp / u
    Z = (y[..., 1:] - yp[..., 1:]) / u[..., None]
    lam, lamp = xi * u, xip * u
    nu = xi * w + xip * wp + eta[..., 0] + _dot(eta[..., 1:], Z)
    mu = eta[..., 1:] * u[..., None]
    mup = eta + etap
    s = t + np.log(w) + np.log(wp) + log_offset
    return _join_region4(s, w, u, Z, wp, yp, tau, lam - tau / w, nu, mu, lamp - tau / wp, mup)


def unlift_region4(c, n, log_offset=0.0):
    s, w, u, Z, wp, yp, sigma, lamt, nu, mu, lamtp, mup = _split_region4(np.asarray(c), n)
    x, xp = w * u, wp * u
    y = yp + u[..., None] * np.concatenate([np.ones_like(u)[..., None], Z], axis=-1)
    lam, lamp = lamt + sigma / w, lamtp + sigma / wp
    xi, xip = lam / u, lamp / u
    eta_rest = mu / u[..., None]
    eta1 = nu - xi * w - xip * wp - _dot(eta_rest, Z)
    eta = np.concatenate([eta1[..., None], eta_rest], axis=-1)
    etap = mup - eta
    t = s - np.log(w) - np.log(wp) - log_offset
    return _join_interior(t, x, y, xp, yp, sigma, xi, eta, xip, etap)


def lift(chart, a, n, side=None, log_offset=0.0):
    """Interior product state -> chart state."""
    if chart == "interior":
        return np.array(a, copy=True)
    if chart == "region1":
        return lift_region1(a, n, side or "L", log_offset)
    if chart in ("region2L", "region2R"):
        return lift_region2(a, n, chart[-1], log_offset)
    if chart == "region3":
        return lift_region3(a, n, log_offset)
    if chart == "region4":
        return lift_region4(a, n, log_offset)
    raise ValueError(f"unknown chart {chart!r}")


def unlift(chart, c, n, side=None, log_offset=0.0):
    """Chart state -> interior product state (interior points only)."""
    if chart == "interior":
        return np.array(c, copy=True)
    if chart == "region1":
        return unlift_region1(c, n, side or "L", log_offset)
    if chart in ("region2L", "region2R"):
        return unlift_region2(c, n, chart[-1], log_offset)
    if chart == "region3":
        return unlift_region3(c, n, log_offset)
    if chart == "region4":
        return unlift_region4(c, n, log_offset)
    raise ValueError(f"unknown chart {chart!r}")


# -- domains ------------------------------------------------------------------

def domain_violation(chart, a, n, side=None, cfg: ChartConfig = ChartConfig()):
    """Return ``None`` if the interior state lies in ``chart``'s domain, else the
    violated bound as a string."""
    t, x, y, xp, yp, *_ = _split_interior(np.asarray(a, dtype=float), n)
    x, xp = float(x), float(xp)
    if not (x > 0 and xp > 0):
        return "interior requires x > 0 and x' > 0"
    rff = float(np.sqrt(x * x + xp * xp + np.sum((y - yp) ** 2)))
    if chart == "interior":
        return None
    if chart == "region1":
        near, far = (x, xp) if (side or "L") == "L" else (xp, x)
        if not near < cfg.x_sw:
            return f"region1: defining function {near:.4g} >= x_sw={cfg.x_sw}"
        if not min(far, rff) > cfg.x_sw:
            return f"region1: min(other x, rho_ff)={min(far, rff):.4g} <= x_sw={cfg.x_sw}"
        return None
    if chart in ("region2L", "region2R"):
        near, far = (x, xp) if chart == "region2L" else (xp, x)
        X = near / far
        if not X < 1:
            return f"{chart}: X={X:.4g} >= 1"
        if not far < cfg.u_sw:
            return f"{chart}: ff defining function {far:.4g} >= u_sw={cfg.u_sw}"
        if not far / rff > cfg.r_sw:
            return f"{chart}: x'/rho_ff={far / rff:.4g} <= r_sw={cfg.r_sw}"
        return None
    if chart == "region3":
        if not (x < cfg.x_sw and xp < cfg.x_sw):
            return f"region3: max(x, x')={max(x, xp):.4g} >= x_sw={cfg.x_sw}"
        if not rff > cfg.u_sw:
            return f"region3: rho_ff={rff:.4g} <= u_sw={cfg.u_sw}"
        return None
    if chart == "region4":
        u = float(y[0] - yp[0])
        if not u > 0:
            return f"region4: u={u:.4g} <= 0"
        if not u < cfg.u_sw:
            return f"region4: u={u:.4g} >= u_sw={cfg.u_sw}"
        if not (x / u < cfg.w_sw and xp / u < cfg.w_sw):
            return f"region4: max(w, w')={max(x, xp) / u:.4g} >= w_sw={cfg.w_sw}"
        return None
    raise ValueError(f"unknown chart {chart!r}")


def chart_transfer(point: ChartPoint, to: str, to_side: str | None = None, *,
                   cfg: ChartConfig = ChartConfig(), check_domain: bool = True) -> ChartPoint:
    """Move ``point`` into chart ``to`` by composing through interior coordinates."""
    n = point.n
    a = unlift(point.chart, point.coords, n, point.side)
    if check_domain:
        for chart, side in ((point.chart, point.side), (to, to_side)):
            bad = domain_violation(chart, a, n, side, cfg)
            if bad:
                raise ChartDomainError(f"point outside the overlap: {bad}")
    if to == "region1" and to_side is None:
        to_side = "L"
    return ChartPoint(to, lift(to, a, n, to_side), n, to_side if to == "region1" else None)


def face_function(chart, c, n, side=None):
    """Defining function of the face the ``side`` flow is driven to."""
    lay = layout(chart, n, side)
    name = {
        ("region1", "L"): "x", ("region1", "R"): "xp",
        ("region3", "L"): "x", ("region3", "R"): "xp",
        ("region2L", "L"): "X", ("region2R", "R"): "Xp",
        ("region4", "L"): "w", ("region4", "R"): "wp",
    }[(chart, side)]
    return np.asarray(c)[..., lay[name]]
