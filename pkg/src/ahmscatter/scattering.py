"""Sojourn times, scattering data, distance by shooting, and the regular part F.

Distance is computed by solving ``exp_{z'}(v) = z`` for the initial covector.
The time-one flow of ``H_p`` from ``(z', zeta)`` covers the length
``|zeta|_{g*}``, so ``r = |zeta|`` at the solution.  Unknowns are the
frame components ``v = (x' xi, x' eta)`` and the residual is measured in the
locally isometric coordinates ``(log x, y / x)`` around the target, which keeps
Newton well scaled from the collar up to the top of the working box.

Everything numeric is batched: many pairs share one vectorised integration.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .charts import ChartConfig, polar_arrays
from .hamiltonian import energy_p, hp_rhs
from .hyperbolic import cosh_minus_one, exact_F, initial_covector
from .integrate import Event, IntegratorConfig, integrate, integrate_batch
from .metric import DomainError, MetricModel, h_parts, vec
from .tracing import FlowResult, ProductTrace, trace_geodesic, trace_to_face


# -- one-sided sojourn --------------------------------------------------------------

@dataclass
class Sojourn:
    y: np.ndarray
    s_limit: float
    flow: FlowResult


def normalize_covector(model: MetricModel, x, y, xi, eta, warn: bool = True):
    """Scale ``(xi, eta)`` to unit length at ``(x, y)``."""
    n = model.n
    y, eta = vec(y, n), vec(eta, n)
    norm2 = x * x * (xi * xi + float(h_parts(model, x, y, eta).h))
    if norm2 == 0:
        raise ValueError("zero covector has no direction")
    k = 1.0 / math.sqrt(norm2)
    if warn and abs(k - 1.0) > 1e-10:
        warnings.warn(f"covector had length {math.sqrt(norm2):.6g}; normalized to 1", stacklevel=2)
    return xi * k, eta * k


def sojourn_forward(model: MetricModel, x, y, xi, eta, face: str = "L", *,
                    config: IntegratorConfig = IntegratorConfig(), charts: ChartConfig = ChartConfig(),
                    defining_scale: float = 1.0) -> Sojourn:
    """Boundary point and limit of ``t + log x`` along the geodesic launched from ``(x, y)``.

    The limit is read at the face of the rescaled flow, with ``x`` replaced by
    ``defining_scale * x`` throughout when requested.
    """
    flow = trace_geodesic(model, x, y, xi, eta, config=config, charts=charts, side=face,
                          defining_scale=defining_scale)
    return Sojourn(flow.endpoint, flow.s_limit, flow)


def naive_limit(model: MetricModel, x, y, xi, eta, t: float,
                config: IntegratorConfig = IntegratorConfig()) -> float:
    """``t + log x(t)`` after plain interior integration for time ``t``."""
    n = model.n
    a0 = np.concatenate([[x], vec(y, n), [xi], vec(eta, n)])
    seg = integrate(lambda a: hp_rhs(model, a), a0, config=config, t_max=t,
                    events=[Event("face", lambda a: a[0], -1)])
    if seg.status != "cap":
        raise RuntimeError(f"naive integration stopped early ({seg.status})")
    return seg.t_end + math.log(seg.y_end[0])


# -- scattering datum ------------------------------------------------------------------

@dataclass
class ScatteringDatum:
    z0: np.ndarray
    zeta0: np.ndarray
    y: np.ndarray
    y_prime: np.ndarray
    s: float
    S_soj: float
    route: str
    corner_chart: str
    corner_state: np.ndarray
    drift: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d


def scattering_datum(model: MetricModel, x, y, xi, eta, *, route: str = "region3", order: str = "RL",
                     config: IntegratorConfig = IntegratorConfig(), charts: ChartConfig = ChartConfig(),
                     defining_scale: float = 1.0) -> ScatteringDatum:
    """Endpoints and sojourn values for initial-set data over ``(x, y)``.

    ``S_soj`` is the corner value of ``t + log(x x')``; ``s = S_soj - 2 log R``
    with ``R = |y - y'|`` at the corner.
    """
    n = model.n
    pt: ProductTrace = trace_to_face(model, x, y, xi, eta, route=route, order=order, config=config,
                                     charts=charts, defining_scale=defining_scale)
    dy = pt.y_L - pt.y_R
    R = float(np.sqrt(dy @ dy))
    s = pt.S_soj - 2 * math.log(R) if R > 0 else math.nan
    return ScatteringDatum(np.concatenate([[x], vec(y, n)]), np.concatenate([[xi], vec(eta, n)]),
                           pt.y_L, pt.y_R, s, pt.S_soj, route, pt.corner_chart, pt.corner_state,
                           pt.drift)


# -- shooting ---------------------------------------------------------------------

@dataclass(frozen=True)
class ShootingConfig:
    tol: float = 1e-11              # scaled residual target
    max_iter: int = 50
    jac_step: float = 1e-6
    max_halvings: int = 30
    integrator: IntegratorConfig = IntegratorConfig(rtol=1e-12, atol=1e-14, event_tol=1e-12)


@dataclass
class DistanceResult:
    r: float
    residual: float
    iters: int
    F: float
    converged: bool
    covector: np.ndarray = None     # (xi', eta') at z' launching towards z
    message: str = ""


def _points(z, n):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != n + 1:
        raise ValueError(f"points need {n + 1} coordinates (x, y1..y{n})")
    return z[..., 0], z[..., 1:]


def _endpoints(model, xp, yp, V, integ):
    """Time-one ``H_p`` flow from ``z'`` with frame covector ``V``."""
    n = model.n
    state = np.concatenate([xp[:, None], yp, V / xp[:, None]], axis=1)
    res = integrate_batch(lambda a: hp_rhs(model, a), state, 1.0, integ)
    return res.y[:, 0], res.y[:, 1:1 + n], res.ok


def _residual(x, y, xe, ye, ok):
    with np.errstate(invalid="ignore", divide="ignore"):
        G = np.concatenate([(np.log(xe) - np.log(x))[:, None], (ye - y) / x[:, None]], axis=1)
    G[~ok | ~np.all(np.isfinite(G), axis=1)] = np.inf
    return G


def _length(model, xp, yp, V):
    return np.sqrt(V[:, 0] ** 2 + h_parts(model, xp, yp, V[:, 1:]).h)


def shoot_batch(model: MetricModel, Z, Zp, config: ShootingConfig = ShootingConfig(), V0=None):
    """Solve the two-point problem for every row of ``Z`` (targets) and ``Zp`` (starts).

    Returns a dict of arrays: ``r``, ``residual`` (interior coordinates),
    ``scaled_residual``, ``iters``, ``converged``, ``covector``.
    """
    n = model.n
    x, y = _points(Z, n)
    xp, yp = _points(Zp, n)
    x, xp = np.atleast_1d(x), np.atleast_1d(xp)
    y, yp = np.atleast_2d(y), np.atleast_2d(yp)
    m = len(x)
    if np.any(x <= 0) or np.any(xp <= 0):
        raise DomainError("distance needs interior points (x > 0)")
    if np.any(cosh_minus_one(x, y, xp, yp) == 0):
        raise ValueError("z = z' is excluded: the distance is not defined by shooting there")
    integ = config.integrator
    k = n + 1
    if V0 is None:
        # hyperbolic guess: exact length and direction
        d = cosh_minus_one(x, y, xp, yp)
        r_h = np.log1p(d + np.sqrt(d * (d + 2)))
        cxi, ceta = initial_covector(np.concatenate([x[:, None], y], 1), np.concatenate([xp[:, None], yp], 1))
        V = r_h[:, None] * xp[:, None] * np.concatenate([cxi[:, None], ceta], axis=1)
    else:
        V = np.array(V0, dtype=float)
    xe, ye, ok = _endpoints(model, xp, yp, V, integ)
    G = _residual(x, y, xe, ye, ok)
    gnorm = np.max(np.abs(G), axis=1)
    iters = np.zeros(m, dtype=int)
    converged = np.zeros(m, dtype=bool)
    active = np.arange(m)
    for it in range(config.max_iter):
        if active.size == 0:
            break
        a = active
        ma = len(a)
        # central differences, step shrunk where the endpoint map is very sensitive
        rv = _length(model, xp[a], yp[a], V[a])
        step = config.jac_step * np.minimum(1.0, 1.0 / np.sinh(np.maximum(rv, 1e-300)))
        pert = []
        for j in range(k):
            e = np.zeros((ma, k))
            e[:, j] = step
            pert += [V[a] + e, V[a] - e]
        P = np.concatenate(pert, axis=0)
        xpr, ypr = np.tile(xp[a], 2 * k), np.tile(yp[a], (2 * k, 1))
        xe_p, ye_p, ok_p = _endpoints(model, xpr, ypr, P, integ)
        Gp = _residual(np.tile(x[a], 2 * k), np.tile(y[a], (2 * k, 1)), xe_p, ye_p, ok_p).reshape(2 * k, ma, k)
        J = np.empty((ma, k, k))
        for j in range(k):
            J[:, :, j] = (Gp[2 * j] - Gp[2 * j + 1]) / (2 * step[:, None])
        good = np.all(np.isfinite(J), axis=(1, 2)) & np.all(np.isfinite(G[a]), axis=1)
        delta = np.zeros((ma, k))
        if np.any(good):
            try:
                delta[good] = -np.linalg.solve(J[good], G[a][good][..., None])[..., 0]
            except np.linalg.LinAlgError:
                delta[good] = -np.einsum("mij,mj->mi", np.linalg.pinv(J[good]), G[a][good])
        iters[a] += 1
        # damped update with step halving
        lam = np.ones(ma)
        pending = np.arange(ma)[good]
        newV = V[a].copy()
        newG = G[a].copy()
        for _ in range(config.max_halvings):
            if pending.size == 0:
                break
            trial = V[a][pending] + lam[pending, None] * delta[pending]
            xt, yt, okt = _endpoints(model, xp[a][pending], yp[a][pending], trial, integ)
            Gt = _residual(x[a][pending], y[a][pending], xt, yt, okt)
            gt = np.max(np.abs(Gt), axis=1)
            better = (gt < gnorm[a][pending]) | (gt <= config.tol)
            take = pending[better]
            newV[take] = trial[better]
            newG[take] = Gt[better]
            lam[pending[~better]] *= 0.5
            pending = pending[~better]
        stalled = np.zeros(ma, dtype=bool)
        stalled[pending] = True
        stalled[~good] = True
        V[a] = newV
        G[a] = newG
        gnorm[a] = np.max(np.abs(newG), axis=1)
        conv = gnorm[a] <= config.tol
        converged[a[conv]] = True
        active = a[~conv & ~stalled]
    # residual in plain interior coordinates
    xe, ye, ok = _endpoints(model, xp, yp, V, integ)
    res = np.maximum(np.abs(xe - x), np.max(np.abs(ye - y), axis=1))
    res[~ok] = np.inf
    r = _length(model, xp, yp, V)
    cov = V / xp[:, None]
    cov = cov / r[:, None]
    return {"r": r, "residual": res, "scaled_residual": gnorm, "iters": iters,
            "converged": converged & ok, "covector": cov}


def distance_shooting(model: MetricModel, z, zp, config: ShootingConfig = ShootingConfig()) -> DistanceResult:
    """Geodesic distance between interior points ``z = (x, y)`` and ``z' = (x', y')``."""
    n = model.n
    z = np.atleast_1d(np.asarray(z, dtype=float))
    zp = np.atleast_1d(np.asarray(zp, dtype=float))
    out = shoot_batch(model, z[None, :], zp[None, :], config)
    r = float(out["r"][0])
    F = float(F_from_r(out["r"], z[None, 0], z[None, 1:], zp[None, 0], zp[None, 1:])[0])
    conv = bool(out["converged"][0])
    msg = "" if conv else "shooting did not converge (possible failure of geodesic convexity)"
    return DistanceResult(r, float(out["residual"][0]), int(out["iters"][0]), F, conv,
                          out["covector"][0], msg)


def F_from_r(r, x, y, xp, yp):
    _, rho_L, rho_R, _ = polar_arrays(x, y, xp, yp)
    return r + np.log(rho_L) + np.log(rho_R)


def F_value(model: MetricModel, z, zp, config: ShootingConfig = ShootingConfig()) -> float:
    res = distance_shooting(model, z, zp, config)
    if not res.converged:
        raise RuntimeError(res.message)
    return res.F


# -- scan over the blown-up double space -------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Raw tensor grid ``(a, b, c)`` pushed onto the unit sphere as ``(rho_L, rho_R, |Y|)``.

    Nodes within ``diag_margin`` of the lifted diagonal ``rho_L = rho_R, Y = 0``
    are dropped.  ``Y`` points along the first boundary axis.
    """
    n_a: int = 20
    n_b: int = 20
    n_c: int = 10
    a_min: float = 0.05
    c_min: float = 0.0
    R_values: tuple = (0.5, 0.25, 0.125)
    diag_margin: float = 0.05
    y_prime: tuple | None = None

    def raw_axes(self):
        return (np.linspace(self.a_min, 1.0, self.n_a), np.linspace(self.a_min, 1.0, self.n_b),
                np.linspace(self.c_min, 1.0, self.n_c))

    def nodes(self):
        """``(idx, rho_L, rho_R, Ynorm)`` for every retained raw node."""
        A, B, C = np.meshgrid(*self.raw_axes(), indexing="ij")
        idx = np.stack(np.meshgrid(np.arange(self.n_a), np.arange(self.n_b), np.arange(self.n_c),
                                   indexing="ij"), axis=-1).reshape(-1, 3)
        v = np.stack([A, B, C], axis=-1).reshape(-1, 3)
        norm = np.linalg.norm(v, axis=1)
        keep = norm > 0
        v = v[keep] / norm[keep, None]
        idx = idx[keep]
        near = np.hypot(v[:, 0] - v[:, 1], v[:, 2]) < self.diag_margin
        return idx[~near], v[~near, 0], v[~near, 1], v[~near, 2]


HEADER = ("rho_L", "rho_R", "Ynorm", "R", "r", "F", "residual", "iters")


@dataclass
class ScanResult:
    records: np.ndarray          # structured by HEADER
    converged: np.ndarray
    idx: np.ndarray              # raw grid indices of each record
    summary: dict

    def csv_lines(self):
        yield ",".join(HEADER)
        for row in self.records:
            yield ",".join(f"{v:.17g}" if j != 7 else str(int(v)) for j, v in enumerate(row))


def _pairs(model, rho_L, rho_R, Yn, R, y_prime):
    n = model.n
    yp = np.zeros(n) if y_prime is None else vec(y_prime, n)
    x = R * rho_L
    xp = R * rho_R
    Y = np.zeros((len(x), n))
    Y[:, 0] = Yn
    y = yp + R[:, None] * Y
    return x, y, xp, np.broadcast_to(yp, y.shape).copy()


def F_batch(model, rho_L, rho_R, Yn, R, config: ShootingConfig = ShootingConfig(), y_prime=None,
            threads: int = 1):
    """``F`` at polar nodes via batched shooting; returns ``(F, r, residual, iters, converged)``."""
    rho_L, rho_R, Yn, R = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho_L, rho_R, Yn, R)))
    rho_L, rho_R, Yn, R = (a.ravel() for a in (rho_L, rho_R, Yn, R))
    x, y, xp, yp = _pairs(model, rho_L, rho_R, Yn, R, y_prime)
    Z = np.concatenate([x[:, None], y], axis=1)
    Zp = np.concatenate([xp[:, None], yp], axis=1)
    chunks = np.array_split(np.arange(len(x)), max(1, threads))
    chunks = [c for c in chunks if len(c)]

    def run(c):
        return shoot_batch(model, Z[c], Zp[c], config)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    out = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    # F = r + log rho_L + log rho_R, with the node's own polar data
    F = out["r"] + np.log(rho_L) + np.log(rho_R)
    return F, out["r"], out["residual"], out["iters"], out["converged"]


def richardson(values, ratio: float = 2.0, orders=(1, 2, 3)):
    """Extrapolate ``values[k] ~ f(h0 / ratio^k)`` to ``h = 0``.

    Each elimination removes one power ``h^p`` from the error expansion.
    Returns the final extrapolated value and the full tableau.
    """
    T = [np.asarray(values, dtype=float)]
    for p in orders:
        prev = T[-1]
        if len(prev) < 2:
            break
        f = ratio ** p
        T.append((f * prev[1:] - prev[:-1]) / (f - 1.0))
    return float(T[-1][-1]), T


def face_sequences(model, rho0=0.1, levels=4, R=0.25, config=ShootingConfig(), y_prime=None, Y_dirs=None):
    """Richardson-extrapolated ``F`` towards the corner and towards each face.

    Corner: ``rho_L = rho_R = rho0 / 2^k``, ``|Y|`` on the sphere.
    L face: ``rho_L = rho0 / 2^k`` with ``rho_R / |Y|`` fixed (and mirrored for R).
    """
    k = np.arange(levels)
    rho = rho0 / 2.0 ** k
    seqs = {"corner": (rho, rho, np.sqrt(1 - 2 * rho**2))}
    for ratio in (Y_dirs if Y_dirs is not None else (0.5, 1.0, 2.0)):
        # remaining mass split between rho_R and |Y| in the given ratio
        rest = np.sqrt(1 - rho**2)
        a = rest * ratio / math.hypot(ratio, 1.0)
        b = rest / math.hypot(ratio, 1.0)
        seqs[f"L_face(rho_R/|Y|={ratio:g})"] = (rho, a, b)
        seqs[f"R_face(rho_L/|Y|={ratio:g})"] = (a, rho, b)
    names = list(seqs)
    rl = np.concatenate([seqs[s][0] for s in names])
    rr = np.concatenate([seqs[s][1] for s in names])
    yn = np.concatenate([seqs[s][2] for s in names])
    F, r, res, iters, conv = F_batch(model, rl, rr, yn, np.full(len(rl), R), config, y_prime)
    out = {}
    for i, s in enumerate(names):
        vals = F[i * levels:(i + 1) * levels]
        lim, _ = richardson(vals)
        out[s] = {"values": vals.tolist(), "limit": lim, "converged": bool(np.all(conv[i * levels:(i + 1) * levels]))}
    return out


def second_differences(F, idx, shape):
    """Largest ``|F[i+1] - 2F[i] + F[i-1]|`` along each raw grid axis (NaN where nodes are missing)."""
    G = np.full(shape, np.nan)
    G[tuple(idx.T)] = F
    worst = 0.0
    for ax in range(3):
        d2 = np.diff(G, n=2, axis=ax)
        if np.any(np.isfinite(d2)):
            worst = max(worst, float(np.nanmax(np.abs(d2))))
    return worst


def scan_F(model: MetricModel, grid: GridSpec = GridSpec(), config: ShootingConfig = ShootingConfig(), *,
           threads: int = 1, faces: bool = True) -> ScanResult:
    """Tabulate ``F`` over the grid for every ``R``, then summarise smoothness and face limits."""
    idx, rl, rr, yn = grid.nodes()
    if len(rl) == 0 or len(grid.R_values) == 0:
        raise ValueError("empty grid")
    Rs = np.asarray(grid.R_values, dtype=float)
    m = len(rl)
    RL, RR, YN = (np.tile(a, len(Rs)) for a in (rl, rr, yn))
    RV = np.repeat(Rs, m)
    F, r, res, iters, conv = F_batch(model, RL, RR, YN, RV, config, grid.y_prime, threads)
    records = np.column_stack([RL, RR, YN, RV, r, F, res, iters])
    shape = (grid.n_a, grid.n_b, grid.n_c)
    summary = {
        "model": model.to_dict(),
        "nodes": int(m),
        "R_values": Rs.tolist(),
        "failures": int(np.sum(~conv)),
        "F_min": float(np.min(F[conv])) if np.any(conv) else math.nan,
        "F_max": float(np.max(F[conv])) if np.any(conv) else math.nan,
        "F_finite": bool(np.all(np.isfinite(F))),
        "max_residual": float(np.max(res)),
        "second_difference": {f"{R:g}": second_differences(F[i * m:(i + 1) * m], idx, shape)
                              for i, R in enumerate(Rs)},
    }
    if len(Rs) > 1:
        FF = F.reshape(len(Rs), m)
        summary["max_R_variation"] = float(np.max(np.abs(np.diff(FF, axis=0))))
    if model.is_exact or model.epsilon == 0:
        summary["max_abs_F_minus_exact"] = float(np.max(np.abs(F - exact_F(RL, RR, YN))))
    if faces:
        summary["face_limits"] = face_sequences(model, config=config, y_prime=grid.y_prime)
    return ScanResult(records, conv, np.tile(idx, (len(Rs), 1)), summary)
