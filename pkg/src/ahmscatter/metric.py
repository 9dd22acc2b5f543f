"""Asymptotically hyperbolic metrics in boundary normal form.

Every model is written in half-space collar coordinates ``(x, y)`` with
``x > 0`` and ``y`` in R^n as

    g = (dx^2 + h(x, y, dy)) / x^2

and all evaluations go through the *dual* form ``h(x, y, eta)``, a positive
quadratic form in the boundary covariable ``eta``.  Two families are built in:

``exact-hyperbolic``
    ``h = |eta|^2``, the half-space model of hyperbolic space.
``perturbed``
    ``h = |eta|^2 (1 + eps * exp(-x^2/delta^2) * exp(-|y - c|^2 / rho_b^2))``,
    a smooth bump concentrated near the boundary collar around ``c``.

Changing the boundary defining function ``x -> c x`` keeps the form but
replaces ``h`` by ``h(x / c, y, eta) / c^2``; ``x_scale`` records that ``c``
(``1`` for the reference coordinate).

The array functions broadcast over leading axes: ``x`` has shape ``(...)``,
``y`` and ``eta`` have shape ``(..., n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

KINDS = ("exact-hyperbolic", "perturbed")


class DomainError(ValueError):
    """Raised when a point lies outside the closed collar ``x >= 0``."""


@dataclass(frozen=True)
class MetricModel:
    dimension: int = 1
    kind: str = "exact-hyperbolic"
    epsilon: float = 0.0
    delta: float = 1.0
    bump_center: tuple[float, ...] | None = None
    bump_radius: float = 1.0
    x_max: float = 10.0
    y_max: float = 20.0
    x_scale: float = 1.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind not in KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {KINDS}")
        if self.delta <= 0 or self.bump_radius <= 0 or self.x_scale <= 0:
            raise ValueError("delta, bump_radius and x_scale must be positive")
        center = self.bump_center
        if center is None:
            center = (0.0,) * self.dimension
        center = tuple(float(c) for c in np.atleast_1d(center))
        if len(center) != self.dimension:
            raise ValueError(
                f"bump_center has {len(center)} components, dimension is {self.dimension}")
        object.__setattr__(self, "bump_center", center)

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact-hyperbolic"

    @classmethod
    def hyperbolic(cls, dimension: int = 1, **kw) -> "MetricModel":
        return cls(dimension=dimension, kind="exact-hyperbolic", **kw)

    @classmethod
    def perturbed(cls, dimension: int = 1, epsilon: float = 0.05, **kw) -> "MetricModel":
        return cls(dimension=dimension, kind="perturbed", epsilon=epsilon, **kw)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "kind": self.kind,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "bump_center": list(self.bump_center),
            "bump_radius": self.bump_radius,
            "x_max": self.x_max,
            "y_max": self.y_max,
            "x_scale": self.x_scale,
        }

    def rescaled(self, c: float) -> "MetricModel":
        """The same metric written in the collar coordinate ``c * x``."""
        return replace(self, x_scale=self.x_scale * c)


class HDerivatives(NamedTuple):
    h: np.ndarray
    dx: np.ndarray      # d h / d x
    dy: np.ndarray      # d h / d y, shape (..., n)
    deta: np.ndarray    # d h / d eta, shape (..., n)


def h_parts(model: MetricModel, x, y, eta) -> HDerivatives:
    """Value and first derivatives of ``h`` without domain checks.

    The rescaled vector fields are smooth across the faces, so integrator
    stages are allowed to evaluate slightly past ``x = 0``; this entry point
    serves them.  Public callers should use :func:`h_eval` and
    :func:`h_derivatives`.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    eta = np.asarray(eta)
    c = model.x_scale
    if c != 1.0:
        p = _h_reference(model, x / c, y, eta)
        c2 = c * c
        return HDerivatives(p.h / c2, p.dx / (c2 * c), p.dy / c2, p.deta / c2)
    return _h_reference(model, x, y, eta)


def _h_reference(model, x, y, eta):
    e2 = np.sum(eta * eta, axis=-1)
    if model.is_exact or model.epsilon == 0.0:
        zero = np.zeros_like(e2)
        return HDerivatives(e2, zero, np.zeros_like(y * eta), 2.0 * eta)
    c = np.asarray(model.bump_center)
    d = y - c
    bump = np.exp(-(x * x) / model.delta**2 - np.sum(d * d, axis=-1) / model.bump_radius**2)
    eb = model.epsilon * bump
    f = 1.0 + eb
    h = e2 * f
    dx = e2 * eb * (-2.0 * x / model.delta**2)
    dy = (e2 * eb)[..., None] * (-2.0 * d / model.bump_radius**2)
    deta = 2.0 * eta * f[..., None]
    return HDerivatives(h, dx, dy, deta)


def _check_x(x):
    if np.any(np.asarray(x) < 0):
        raise DomainError("x must be >= 0 (outside the closed collar)")


def h_eval(model: MetricModel, x, y, eta):
    """Dual boundary form ``h(x, y, eta)``."""
    _check_x(x)
    return h_parts(model, x, y, eta).h


def h_derivatives(model: MetricModel, x, y, eta) -> HDerivatives:
    """Analytic ``h``, ``dh/dx``, ``dh/dy`` and ``dh/deta``."""
    _check_x(x)
    return h_parts(model, x, y, eta)


def dual_norm_sq(model: MetricModel, x, y, xi, eta):
    """``|zeta|^2_{g*} = x^2 (xi^2 + h(x, y, eta))``; vanishes at ``x = 0``."""
    _check_x(x)
    x = np.asarray(x)
    return x * x * (np.asarray(xi) ** 2 + h_parts(model, x, y, eta).h)


# -- validation ---------------------------------------------------------------

@dataclass
class MetricReport:
    passed: bool
    checks: dict[str, bool]
    worst: dict[str, dict] = field(default_factory=dict)
    n_points: int = 0

    def summary(self) -> str:
        lines = [f"metric validation: {'PASS' if self.passed else 'FAIL'} ({self.n_points} points)"]
        for name, ok in self.checks.items():
            w = self.worst.get(name, {})
            where = f" worst at x={w.get('x')}, y={w.get('y')} value={w.get('value')}" if w else ""
            lines.append(f"  {name}: {'ok' if ok else 'FAILED'}{where}")
        return "\n".join(lines)


def default_grid(model: MetricModel, nx: int = 11, ny: int = 9):
    """Tensor grid over the working box ``[0, x_max] x [-y_max, y_max]^n``."""
    xs = np.linspace(0.0, model.x_max, nx)
    axes = [np.linspace(-model.y_max, model.y_max, ny)] * model.n
    # always include the bump center, where perturbations peak
    ys = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.n)
    ys = np.vstack([ys, np.asarray(model.bump_center)[None, :]])
    X = np.repeat(xs, len(ys))
    Y = np.tile(ys, (len(xs), 1))
    return X, Y


def validate_metric(model: MetricModel, sample_grid=None, *, max_relative_perturbation=0.5,
                    seed: int = 0) -> MetricReport:
    """Check positivity, degree-2 homogeneity and the small-perturbation regime.

    ``sample_grid`` is a pair ``(x, y)`` with shapes ``(m,)`` and ``(m, n)``.
    Failures are reported with the offending point; this never raises.
    """
    if sample_grid is None:
        sample_grid = default_grid(model)
    X, Y = (np.asarray(a, dtype=float) for a in sample_grid)
    Y = Y.reshape(len(X), model.n)
    n = model.n
    checks: dict[str, bool] = {}
    worst: dict[str, dict] = {}

    def record(name, values, bad_mask):
        i = int(np.argmax(values))
        checks[name] = not bool(np.any(bad_mask))
        worst[name] = {"x": float(X[i]), "y": Y[i].tolist(), "value": float(values[i])}

    # matrix of the quadratic form by polarization
    eye = np.eye(n)
    H = np.empty((len(X), n, n))
    for i in range(n):
        H[:, i, i] = h_parts(model, X, Y, np.broadcast_to(eye[i], Y.shape)).h
    for i in range(n):
        for j in range(i + 1, n):
            e = np.broadcast_to(eye[i] + eye[j], Y.shape)
            hij = 0.5 * (h_parts(model, X, Y, e).h - H[:, i, i] - H[:, j, j])
            H[:, i, j] = H[:, j, i] = hij
    lam_min = np.linalg.eigvalsh(H)[:, 0]
    record("positive_definite", -lam_min, ~(lam_min > 0))

    rng = np.random.default_rng(seed)
    eta = rng.normal(size=Y.shape)
    parts = h_parts(model, X, Y, eta)
    euler = np.abs(np.sum(eta * parts.deta, axis=-1) - 2 * parts.h) / np.maximum(parts.h, 1e-300)
    record("euler_identity", euler, ~(euler <= 1e-12))

    e2 = np.sum(eta * eta, axis=-1)
    rel = np.abs(model.x_scale**2 * parts.h - e2) / e2
    record("small_perturbation", rel, ~(rel <= max_relative_perturbation))

    return MetricReport(all(checks.values()), checks, worst, len(X))


def as_points(x, y, n: int):
    """Coerce ``(x, y)`` to arrays of shape ``(...)`` and ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == x.ndim:
        y = y[..., None]
    if y.shape[-1] != n:
        raise ValueError(f"expected boundary dimension {n}, got {y.shape[-1]}")
    return x, y


def vec(v: Sequence[float] | float, n: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.shape != (n,):
        raise ValueError(f"expected {n} components, got shape {a.shape}")
    return a
