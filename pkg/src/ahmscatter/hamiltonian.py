"""Interior Hamiltonians on T*(R_t x X x X) and their Hamilton fields.

Conventions (fixed once, everywhere):

* geodesic energy ``p = (|zeta|^2_{g*} - 1) / 2``;
* wave symbols ``Q_L = (tau^2 - |zeta|^2_{g*(z)}) / 2`` and
  ``Q_R = (tau^2 - |zeta'|^2_{g*(z')}) / 2``;
* Hamilton fields ``dq/dt = dH/dp``, ``dp/dt = -dH/dq`` for the form
  ``dtau^dt + dzeta^dz + dzeta'^dz'``.

With these signs the spatial projection of ``H_p`` moves along ``g* zeta``
while that of ``H_{Q_L}`` moves along ``-g* zeta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import hamilton, layout
from .metric import DomainError, MetricModel, h_parts


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: np.ndarray
    xi: float
    eta: np.ndarray

    def __post_init__(self):
        if not self.x > 0:
            raise DomainError("interior phase points need x > 0")
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        object.__setattr__(self, "eta", np.atleast_1d(np.asarray(self.eta, dtype=float)))

    @property
    def n(self):
        return len(self.y)

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.x], self.y, [self.xi], self.eta])

    @classmethod
    def from_array(cls, a) -> "PhasePoint":
        a = np.asarray(a, dtype=float)
        n = len(a) // 2 - 1
        return cls(a[0], a[1:n + 1], a[n + 1], a[n + 2:])


@dataclass(frozen=True)
class ProductPhasePoint:
    t: float
    tau: float
    left: PhasePoint
    right: PhasePoint

    @property
    def n(self):
        return self.left.n

    def as_array(self) -> np.ndarray:
        L, R = self.left, self.right
        return np.concatenate([[self.t, L.x], L.y, [R.x], R.y, [self.tau, L.xi], L.eta, [R.xi], R.eta])

    @classmethod
    def from_array(cls, a) -> "ProductPhasePoint":
        a = np.asarray(a, dtype=float)
        n = (len(a) // 2 - 3) // 2
        d = 2 * n + 3
        q, p = a[:d], a[d:]
        left = PhasePoint(q[1], q[2:2 + n], p[1], p[2:2 + n])
        right = PhasePoint(q[2 + n], q[3 + n:], p[2 + n], p[3 + n:])
        return cls(q[0], p[0], left, right)

    @classmethod
    def sigma_point(cls, x, y, xi, eta, model: MetricModel | None = None) -> "ProductPhasePoint":
        """Point of the initial set: ``t=0, z=z', zeta=-zeta', tau=|zeta|``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        model = model or MetricModel.hyperbolic(len(y))
        tau = float(np.sqrt(_dual(model, x, y, xi, eta)))
        return cls(0.0, tau, PhasePoint(x, y, xi, eta), PhasePoint(x, y, -xi, -eta))


def _dual(model, x, y, xi, eta):
    return x * x * (xi * xi + h_parts(model, x, y, eta).h)


def _factor(state, n, side):
    """Slices ``(x, y, xi, eta)`` of one factor of an interior product state."""
    d = 2 * n + 3
    off = 1 if side == "L" else 2 + n
    x = state[..., off]
    y = state[..., off + 1: off + 1 + n]
    xi = state[..., d + off]
    eta = state[..., d + off + 1: d + off + 1 + n]
    return off, x, y, xi, eta


def energy_p(model: MetricModel, point) -> float:
    """Geodesic energy ``(|zeta|^2 - 1)/2`` of a :class:`PhasePoint` or flat array."""
    a = point.as_array() if isinstance(point, PhasePoint) else np.asarray(point, dtype=float)
    n = model.n
    x, y, xi, eta = a[..., 0], a[..., 1:n + 1], a[..., n + 1], a[..., n + 2:]
    if np.any(x <= 0):
        raise DomainError("energy_p needs x > 0")
    return 0.5 * (_dual(model, x, y, xi, eta) - 1.0)


def symbol_Q(model: MetricModel, side: str, point) -> float:
    """``Q_L`` or ``Q_R`` at a product point (flat interior array accepted)."""
    a = point.as_array() if isinstance(point, ProductPhasePoint) else np.asarray(point, dtype=float)
    n = model.n
    _, x, y, xi, eta = _factor(a, n, side)
    if np.any(x <= 0):
        raise DomainError("symbol_Q needs an interior factor")
    tau = a[..., 2 * n + 3]
    return 0.5 * (tau * tau - _dual(model, x, y, xi, eta))


def hq_rhs(model: MetricModel, side: str, state):
    """Hamilton field of ``Q_side`` on flat interior product states (batched)."""
    n = model.n
    d = 2 * n + 3
    state = np.asarray(state)
    off, x, y, xi, eta = _factor(state, n, side)
    hp = h_parts(model, x, y, eta)
    x2 = x * x
    out = np.zeros_like(state)
    out[..., 0] = state[..., d]                          # dt = tau
    out[..., off] = -x2 * xi
    out[..., off + 1: off + 1 + n] = -0.5 * x2[..., None] * hp.deta
    out[..., d + off] = x * (xi * xi + hp.h) + 0.5 * x2 * hp.dx
    out[..., d + off + 1: d + off + 1 + n] = 0.5 * x2[..., None] * hp.dy
    return out


def field_HQ(model: MetricModel, side: str, point) -> np.ndarray:
    """``H_{Q_side}`` as a flat tangent vector in the interior product layout."""
    a = point.as_array() if isinstance(point, ProductPhasePoint) else np.asarray(point, dtype=float)
    _, x, *_ = _factor(a, model.n, side)
    if np.any(x <= 0):
        raise DomainError("field_HQ needs an interior factor")
    return hq_rhs(model, side, a)


def factor_q_rhs(model: MetricModel, state, tau=1.0):
    """One factor of ``H_Q`` on single-factor states ``[x, y, xi, eta]``.

    ``t`` advances at rate ``tau``; it is carried as the integration parameter.
    """
    n = model.n
    state = np.asarray(state)
    x, y, xi, eta = state[..., 0], state[..., 1:n + 1], state[..., n + 1], state[..., n + 2:]
    hp = h_parts(model, x, y, eta)
    x2 = x * x
    out = np.empty_like(state)
    out[..., 0] = -x2 * xi
    out[..., 1:n + 1] = -0.5 * x2[..., None] * hp.deta
    out[..., n + 1] = x * (xi * xi + hp.h) + 0.5 * x2 * hp.dx
    out[..., n + 2:] = 0.5 * x2[..., None] * hp.dy
    return out


def hp_rhs(model: MetricModel, state):
    """Geodesic field ``H_p`` on single-factor states ``[x, y, xi, eta]`` (batched)."""
    return -factor_q_rhs(model, state)


def field_Hp(model: MetricModel, point) -> np.ndarray:
    a = point.as_array() if isinstance(point, PhasePoint) else np.asarray(point, dtype=float)
    if np.any(a[..., 0] <= 0):
        raise DomainError("field_Hp needs x > 0")
    return hp_rhs(model, a)


def interior_layout(n: int):
    return layout("interior", n)


__all__ = [
    "PhasePoint", "ProductPhasePoint", "energy_p", "symbol_Q", "field_HQ", "field_Hp",
    "hq_rhs", "hp_rhs", "factor_q_rhs", "hamilton",
]
