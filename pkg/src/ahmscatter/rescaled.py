"""Rescaled wave symbols ``q = -(1/rho) beta_1^* Q`` and their Hamilton fields.

After the singular time shift ``s = t + log(rho)`` the symbols of the left and
right wave operators become smooth up to the faces once divided by the face
defining function.  With ``sigma`` the dual variable of ``s``:

* region 1 / 3: ``q_L = sigma xi~ + x (xi~^2 + h(x, y, eta)) / 2``
* region 2:     ``q_L = sigma lam~ + X (lam~^2 + h(x'X, x'Y + y', mu)) / 2``
* region 4:     ``q_L = sigma lam~ + w (lam~^2 + h(uw, y, eta~)) / 2`` with
  ``eta~ = (u nu - lam~ w - lam~' w' - 2 sigma - mu.Z, mu)``

(and the mirrored right-hand versions).  Every field below is the exact
symplectic gradient of its symbol in the chart's canonical coordinates; none
has a ``d/dsigma`` component, so ``sigma`` is constant along all of them.

The flows reach a face only in *negative* parameter direction: at a face the
normal component equals ``sigma``.
"""
from __future__ import annotations

import numpy as np

from .charts import face_function
from .metric import MetricModel, h_parts


class SigmaError(ValueError):
    pass


def _check_sigma(sigma):
    if np.any(np.asarray(sigma) == 0):
        raise SigmaError("sigma must be nonzero")


# -- region 1 (one factor) ----------------------------------------------------

def _r1_grad(model, x, y, sigma, xit, eta):
    hp = h_parts(model, x, y, eta)
    q = sigma * xit + 0.5 * x * (xit * xit + hp.h)
    dq_dx = 0.5 * (xit * xit + hp.h) + 0.5 * x * hp.dx
    dq_dy = 0.5 * x[..., None] * hp.dy
    dq_dsigma = xit
    dq_dxit = sigma + x * xit
    dq_deta = 0.5 * x[..., None] * hp.deta
    return q, dq_dx, dq_dy, dq_dsigma, dq_dxit, dq_deta


def _single_parts(c, n):
    return c[..., 1], c[..., 2:2 + n], c[..., n + 2], c[..., n + 3], c[..., n + 4:]


def q_region1_single(model: MetricModel, c):
    """``q`` for one factor in the layout ``[s, x, y, sigma, xi~, eta]``."""
    c = np.asarray(c)
    return _r1_grad(model, *_single_parts(c, model.n))[0]


def field_region1_single(model: MetricModel, c):
    n = model.n
    c = np.asarray(c)
    parts = _single_parts(c, n)
    _check_sigma(parts[2])
    _, dx, dy, dsig, dxit, deta = _r1_grad(model, *parts)
    out = np.zeros_like(c)
    out[..., 0] = dsig                     # ds
    out[..., 1] = dxit                     # dx
    out[..., 2:2 + n] = deta               # dy
    out[..., n + 3] = -dx                  # dxi~
    out[..., n + 4:] = -dy                 # deta
    return out


# -- product layouts sharing the interior index structure -------------------------
# positions [s, a, b(n), a', b'(n)], momenta [sigma, pa, pb(n), pa', pb'(n)]

def _product_slots(n, side):
    d = 2 * n + 3
    off = 1 if side == "L" else 2 + n
    return d, off


def _gather(c, n, side):
    d, off = _product_slots(n, side)
    return (c[..., off], c[..., off + 1:off + 1 + n], c[..., d],
            c[..., d + off], c[..., d + off + 1:d + off + 1 + n])


def _r1_product(model, side, c):
    n = model.n
    c = np.asarray(c)
    d, off = _product_slots(n, side)
    q, dx, dy, dsig, dxit, deta = _r1_grad(model, *_gather(c, n, side))
    out = np.zeros_like(c)
    out[..., 0] = dsig
    out[..., off] = dxit
    out[..., off + 1:off + 1 + n] = deta
    out[..., d + off] = -dx
    out[..., d + off + 1:d + off + 1 + n] = -dy
    return q, out


def q_region1(model: MetricModel, side: str, c):
    """``q_side`` in the product region-1 chart of the same side."""
    return _r1_product(model, side, c)[0]


def field_region1(model: MetricModel, side: str, c):
    return _r1_product(model, side, c)[1]


def q_region3(model: MetricModel, side: str, c):
    """Near ``L cap R``: ``q_L`` on the unprimed, ``q_R`` on the primed block."""
    return _r1_product(model, side, c)[0]


def field_region3(model: MetricModel, side: str, c):
    return _r1_product(model, side, c)[1]


# -- region 2 -----------------------------------------------------------------

def _r2(model, c):
    """Region 2 near ``L cap ff``; the mirrored chart reuses the same slots."""
    n = model.n
    c = np.asarray(c)
    d = 2 * n + 3
    X, Y, xp, yp = c[..., 1], c[..., 2:2 + n], c[..., 2 + n], c[..., 3 + n:d]
    sigma, lamt, mu = c[..., d], c[..., d + 1], c[..., d + 2:d + 2 + n]
    A = xp * X
    hp = h_parts(model, A, xp[..., None] * Y + yp, mu)
    q = lamt * sigma + 0.5 * X * (lamt * lamt + hp.h)
    out = np.zeros_like(c)
    out[..., 0] = lamt                                      # ds
    out[..., 1] = sigma + X * lamt                          # dX
    out[..., 2:2 + n] = 0.5 * X[..., None] * hp.deta        # dY
    # dx' = dy' = 0: tangent to the front face {x' = 0}
    out[..., d + 1] = -(0.5 * (lamt * lamt + hp.h) + 0.5 * X * xp * hp.dx)
    out[..., d + 2:d + 2 + n] = -0.5 * (X * xp)[..., None] * hp.dy
    out[..., d + 2 + n] = -0.5 * X * (X * hp.dx + np.sum(Y * hp.dy, axis=-1))
    out[..., d + 3 + n:] = -0.5 * X[..., None] * hp.dy
    return q, out


def _check_r2_side(side):
    if side not in ("L", "R"):
        raise ValueError("side must be 'L' or 'R'")


def q_region2(model: MetricModel, side: str, c):
    """``q_L`` in the region2L chart (``side='L'``) or ``q_R`` in region2R."""
    _check_r2_side(side)
    return _r2(model, c)[0]


def field_region2(model: MetricModel, side: str, c):
    _check_r2_side(side)
    return _r2(model, c)[1]


# -- region 4 -----------------------------------------------------------------

def _r4_vars(c, n):
    d = 2 * n + 3
    return dict(
        s=c[..., 0], w=c[..., 1], u=c[..., 2], Z=c[..., 3:2 + n], wp=c[..., 2 + n],
        yp=c[..., 3 + n:d], sigma=c[..., d], lamt=c[..., d + 1], nu=c[..., d + 2],
        mu=c[..., d + 3:d + 2 + n], lamtp=c[..., d + 2 + n], mup=c[..., d + 3 + n:])


def eta_tilde(c, n):
    """``u * eta`` of the left factor expressed in region-4 variables."""
    v = _r4_vars(np.asarray(c), n)
    first = (v["u"] * v["nu"] - v["lamt"] * v["w"] - v["lamtp"] * v["wp"] - 2 * v["sigma"]
             - np.sum(v["mu"] * v["Z"], axis=-1))
    return np.concatenate([first[..., None], v["mu"]], axis=-1)


def _r4_left_y(v):
    ones = np.ones_like(v["u"])[..., None]
    return v["yp"] + v["u"][..., None] * np.concatenate([ones, v["Z"]], axis=-1)


def _assemble_r4(c, n, g):
    """Hamilton field from the partials ``g`` keyed by coordinate name."""
    d = 2 * n + 3
    out = np.zeros_like(c)
    # positions move with dq/d(momentum)
    out[..., 0] = g["sigma"]
    out[..., 1] = g["lamt"]
    out[..., 2] = g["nu"]
    out[..., 3:2 + n] = g["mu"]
    out[..., 2 + n] = g["lamtp"]
    out[..., 3 + n:d] = g["mup"]
    # momenta move with -dq/d(position); no ds dependence, so dsigma = 0
    out[..., d + 1] = -g["w"]
    out[..., d + 2] = -g["u"]
    out[..., d + 3:d + 2 + n] = -g["Z"]
    out[..., d + 2 + n] = -g["wp"]
    out[..., d + 3 + n:] = -g["yp"]
    return out


def _r4_left(model, c):
    n = model.n
    c = np.asarray(c)
    v = _r4_vars(c, n)
    w, u, Z, wp, sigma, lamt, nu, mu, lamtp = (v[k] for k in
                                               ("w", "u", "Z", "wp", "sigma", "lamt", "nu", "mu", "lamtp"))
    E = eta_tilde(c, n)
    hp = h_parts(model, u * w, _r4_left_y(v), E)
    he1 = hp.deta[..., 0]
    hw = 0.5 * w
    q = sigma * lamt + hw * (lamt * lamt + hp.h)
    ones = np.ones_like(u)[..., None]
    g = {
        "sigma": lamt - w * he1,
        "lamt": sigma + w * lamt - hw * w * he1,
        "nu": hw * he1 * u,
        "mu": hw[..., None] * (hp.deta[..., 1:] - he1[..., None] * Z),
        "lamtp": -hw * he1 * wp,
        "mup": np.zeros_like(v["mup"]),
        "w": 0.5 * (lamt * lamt + hp.h) + hw * (hp.dx * u - he1 * lamt),
        "u": hw * (hp.dx * w + np.sum(hp.dy * np.concatenate([ones, Z], axis=-1), axis=-1) + he1 * nu),
        "Z": hw[..., None] * (hp.dy[..., 1:] * u[..., None] - he1[..., None] * mu),
        "wp": -hw * he1 * lamtp,
        "yp": hw[..., None] * hp.dy,
    }
    return q, _assemble_r4(c, n, g)


def _r4_right(model, c):
    n = model.n
    c = np.asarray(c)
    v = _r4_vars(c, n)
    w, u, Z, wp, yp, sigma, lamt, nu, mu, lamtp, mup = (
        v[k] for k in ("w", "u", "Z", "wp", "yp", "sigma", "lamt", "nu", "mu", "lamtp", "mup"))
    E = u[..., None] * mup - eta_tilde(c, n)
    hp = h_parts(model, u * wp, yp, E)
    he1 = hp.deta[..., 0]
    hw = 0.5 * wp
    q = sigma * lamtp + hw * (lamtp * lamtp + hp.h)
    g = {
        "sigma": lamtp + wp * he1,
        "lamtp": sigma + wp * lamtp + hw * wp * he1,
        "lamt": hw * he1 * w,
        "nu": -hw * he1 * u,
        "mu": hw[..., None] * (he1[..., None] * Z - hp.deta[..., 1:]),
        "mup": hw[..., None] * u[..., None] * hp.deta,
        "wp": 0.5 * (lamtp * lamtp + hp.h) + hw * (hp.dx * u + he1 * lamtp),
        "w": hw * he1 * lamt,
        "u": hw * (hp.dx * wp + np.sum(hp.deta * mup, axis=-1) - he1 * nu),
        "Z": hw[..., None] * he1[..., None] * mu,
        "yp": hw[..., None] * hp.dy,
    }
    return q, _assemble_r4(c, n, g)


def q_region4(model: MetricModel, side: str, c):
    return (_r4_left if side == "L" else _r4_right)(model, c)[0]


def field_region4(model: MetricModel, side: str, c):
    return (_r4_left if side == "L" else _r4_right)(model, c)[1]


# -- dispatch -------------------------------------------------------------------

def _sigma_of(c):
    c = np.asarray(c)
    return c[..., c.shape[-1] // 2]


def rescaled_symbol(model: MetricModel, chart: str, side: str, c):
    _check_sigma(_sigma_of(c))
    if chart == "region1":
        return q_region1(model, side, c)
    if chart == "region3":
        return q_region3(model, side, c)
    if chart in ("region2L", "region2R"):
        return q_region2(model, chart[-1], c)
    if chart == "region4":
        return q_region4(model, side, c)
    raise ValueError(f"no rescaled symbol in chart {chart!r}")


def rescaled_field(model: MetricModel, chart: str, side: str, c):
    _check_sigma(_sigma_of(c))
    if chart == "region1":
        return field_region1(model, side, c)
    if chart == "region3":
        return field_region3(model, side, c)
    if chart in ("region2L", "region2R"):
        if chart[-1] != side:
            raise ValueError(f"{chart} carries only the {chart[-1]} rescaled field")
        return field_region2(model, side, c)
    if chart == "region4":
        return field_region4(model, side, c)
    raise ValueError(f"no rescaled field in chart {chart!r}")


def face_normal_component(model: MetricModel, chart: str, side: str, c):
    """Component of ``H_q`` along the defining function of its own face."""
    f = np.asarray(rescaled_field(model, chart, side, c))
    return face_function(chart, f, model.n, side)
