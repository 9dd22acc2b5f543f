"""Closed forms for the half-space model of hyperbolic space.

Points are ``z = (x, y1, ..., yn)`` with ``x > 0``.  With

    d = ((x - x')^2 + |y - y'|^2) / (2 x x')      (so cosh r = 1 + d)

the distance is ``r = log1p(d + sqrt(d (d + 2)))``, which stays accurate as
``r -> 0`` where ``arccosh`` of a number near 1 loses half its digits.
"""
from __future__ import annotations

import numpy as np

from .metric import DomainError


def _split(z):
    z = np.asarray(z, dtype=float)
    return z[..., 0], z[..., 1:]


def _check(x, xp):
    if np.any(np.asarray(x) <= 0) or np.any(np.asarray(xp) <= 0):
        raise DomainError("hyperbolic distance needs interior points (x > 0)")


def cosh_minus_one(x, y, xp, yp):
    """``cosh r - 1`` computed without cancellation."""
    d = np.asarray(y) - np.asarray(yp)
    return ((x - xp) ** 2 + np.sum(d * d, axis=-1)) / (2.0 * x * xp)


def distance_xy(x, y, xp, yp):
    """Vectorised distance; ``y`` and ``yp`` have shape ``(..., n)``."""
    _check(x, xp)
    d = cosh_minus_one(x, y, xp, yp)
    return np.log1p(d + np.sqrt(d * (d + 2.0)))


def exact_distance(z, zp):
    x, y = _split(z)
    xp, yp = _split(zp)
    return distance_xy(x, y, xp, yp)


def exact_F(rho_L, rho_R, Y):
    """Regular part ``r + log rho_L + log rho_R`` in polar coordinates.

    Only ``|Y|`` enters.  ``Y`` is read as a norm when it has the shape of
    ``rho_L`` and as a vector (last axis) when it has one more axis.
    """
    Y = np.asarray(Y, dtype=float)
    y2 = np.sum(Y * Y, axis=-1) if Y.ndim > np.ndim(rho_L) else Y * Y
    prod = ((rho_R + rho_L) ** 2 + y2) * ((rho_R - rho_L) ** 2 + y2)
    return np.log(0.5 * (1.0 + np.sqrt(prod)))


def exact_sojourn(y, yp):
    """Corner value ``2 log |y - y'|`` of ``r + log(x x')``."""
    d = np.atleast_1d(np.asarray(y, dtype=float) - np.asarray(yp, dtype=float))
    dist = float(np.sqrt(d @ d))
    if dist == 0.0:
        raise ValueError("sojourn time is singular at y = y'")
    return 2.0 * np.log(dist)


def initial_covector(z, zp):
    """Unit covector at ``z'`` launching the geodesic towards ``z``: ``-d_{z'} r``.

    Returned as ``(xi', eta')``.  Follows from ``d_{x'} cosh r = 1/x - cosh(r)/x'``
    and ``d_{y'} cosh r = -(y - y')/(x x')``.
    """
    x, y = _split(z)
    xp, yp = _split(zp)
    _check(x, xp)
    d = cosh_minus_one(x, y, xp, yp)
    sinh_r = np.sqrt(d * (d + 2.0))
    if np.any(sinh_r == 0):
        raise ValueError("z = z' has no launch direction")
    cosh_r = 1.0 + d
    dx = 1.0 / x - cosh_r / xp
    dy = -(y - yp) / (x * xp)[..., None]
    return -dx / sinh_r, -dy / sinh_r[..., None]


def exact_geodesic(z, zp, t):
    """Point at arclength ``t`` on the unit-speed geodesic from ``z'`` to ``z``.

    Half-space geodesics are vertical lines and semicircles centred on
    ``{x = 0}``; ``t = exact_distance(z, zp)`` returns ``z``.
    """
    x, y = _split(z)
    xp, yp = _split(zp)
    x, xp = float(x), float(xp)
    _check(x, xp)
    t = np.asarray(t, dtype=float)
    d = y - yp
    u1 = float(np.sqrt(d @ d))
    if u1 <= 1e-15 * max(x, xp):
        sign = 1.0 if x >= xp else -1.0
        xs = xp * np.exp(sign * t)
        return np.concatenate([xs[..., None], np.broadcast_to(yp, t.shape + yp.shape)], axis=-1)
    e = d / u1
    # semicircle (u - c)^2 + x^2 = a^2 in the plane spanned by dx and e
    c = (u1 * u1 + x * x - xp * xp) / (2.0 * u1)
    a = np.hypot(c, xp)
    s0 = np.arctanh(-c / a)
    s = s0 + t
    xs = a / np.cosh(s)
    us = c + a * np.tanh(s)
    ys = yp + us[..., None] * e
    return np.concatenate([xs[..., None], ys], axis=-1)


def semicircle_endpoints(x0, y0, xi0, eta0):
    """Boundary endpoints of the geodesic through ``(x0, y0)`` with covector ``(xi0, eta0)``.

    Returns ``(y_minus, y_plus)``: the endpoint reached going against and along
    ``g* zeta``.  The geodesic lies in the plane of ``e = eta0 / |eta0|``.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    eta0 = np.atleast_1d(np.asarray(eta0, dtype=float))
    k = float(np.sqrt(eta0 @ eta0))
    if k == 0.0:
        raise ValueError("vertical geodesics have a single boundary endpoint")
    e = eta0 / k
    # velocity (x0^2 xi0, x0^2 k) in the (x, u) plane; the centre sits where
    # the normal to the velocity meets the boundary
    a = x0 * np.hypot(xi0, k) / k
    c = x0 * xi0 / k
    return y0 + (c - a) * e, y0 + (c + a) * e
