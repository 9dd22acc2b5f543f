"""Oracle and property checks shared by ``ahm verify`` and the test suite.

Each ``check_*`` function returns a :class:`CheckResult`; sizes and bounds are
arguments so the CLI can run a quick version and the acceptance tests the
full one.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import charts as ch
from .charts import ChartConfig
from .hamiltonian import _dual, hq_rhs
from .hyperbolic import distance_xy, exact_F, semicircle_endpoints
from .integrate import IntegratorConfig
from .layout import layout
from .metric import MetricModel, validate_metric
from .rescaled import face_normal_component, field_region1_single, rescaled_field
from .scattering import (GridSpec, ShootingConfig, F_batch, normalize_covector, richardson,
                         scan_F, scattering_datum, shoot_batch, sojourn_forward)
from .tracing import trace_to_face


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self, timing: bool = True) -> str:
        tag = "PASS" if self.passed else "FAIL"
        out = f"[{tag}] {self.name}: value={self.value:.3e} bound={self.bound:.1e}"
        return out + (f" ({self.seconds:.1f}s)" if timing else "")


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_pairs(rng, n, m, x_range=(0.05, 10.0), y_max=20.0):
    """``m`` interior pairs, ``x`` log-uniform and ``y`` uniform in the working box."""
    lo, hi = np.log(x_range[0]), np.log(x_range[1])
    x = np.exp(rng.uniform(lo, hi, m))
    xp = np.exp(rng.uniform(lo, hi, m))
    y = rng.uniform(-y_max, y_max, (m, n))
    yp = rng.uniform(-y_max, y_max, (m, n))
    return x, y, xp, yp


def random_launches(rng, model, m, x_range=(0.1, 1.0), y_range=(-1.0, 1.0), min_sin=0.3):
    """Unit initial-set data ``(x0, y0, xi0, eta0)`` with a non-vertical direction."""
    n = model.n
    out = []
    while len(out) < m:
        x0 = rng.uniform(*x_range)
        y0 = rng.uniform(*y_range, n)
        d = rng.normal(size=n + 1)
        d /= np.linalg.norm(d)
        if abs(d[1]) < min_sin:
            continue
        xi, eta = normalize_covector(model, x0, y0, d[0] / x0, d[1:] / x0, warn=False)
        out.append((x0, y0, xi, eta))
    return out


# 1 ------------------------------------------------------------------------------------

@_timed
def check_distance_oracle(dims=(1, 2), n_pairs=200, seed=0, tol=1e-8,
                          shooting: ShootingConfig = ShootingConfig(), y_max=20.0, x_max=10.0):
    """Shooting distance against the closed form on random pairs."""
    rng = np.random.default_rng(seed)
    worst, failures, detail = 0.0, 0, {}
    for n in dims:
        model = MetricModel.hyperbolic(n)
        x, y, xp, yp = random_pairs(rng, n, n_pairs, (0.05, x_max), y_max)
        out = shoot_batch(model, np.c_[x, y], np.c_[xp, yp], shooting)
        err = np.abs(out["r"] - distance_xy(x, y, xp, yp))
        failures += int(np.sum(~out["converged"]))
        worst = max(worst, float(np.max(err)))
        detail[f"H{n + 1}"] = {"max_err": float(np.max(err)), "max_r": float(np.max(out["r"]))}
    return CheckResult("hyperbolic distance oracle", failures == 0 and worst < tol, worst, tol,
                       dict(detail, failures=failures))


# 2 ------------------------------------------------------------------------------------

@_timed
def check_F_closed_form(grid: GridSpec = GridSpec(), tol=1e-6, tol_R=1e-7, dimension=1,
                        shooting: ShootingConfig = ShootingConfig(), threads=1):
    """``F`` from shooting equals the closed form and does not depend on ``R``."""
    res = scan_F(MetricModel.hyperbolic(dimension), grid, shooting, threads=threads, faces=False)
    s = res.summary
    err = s["max_abs_F_minus_exact"]
    var = s.get("max_R_variation", 0.0)
    ok = s["failures"] == 0 and err < tol and var < tol_R
    return CheckResult("F closed form and R-independence", ok, err, tol,
                       {"max_R_variation": var, "bound_R": tol_R, "nodes": s["nodes"],
                        "failures": s["failures"]})


# 3 ------------------------------------------------------------------------------------

@_timed
def check_corner_limit(R_values=(0.5, 0.25, 0.125), bases=(0.0, 0.7), rho0=0.1, levels=4, tol=1e-4,
                       shooting: ShootingConfig = ShootingConfig()):
    """Richardson limit of ``F`` along ``rho_L = rho_R -> 0`` (so ``|Y| -> 1``) is zero."""
    model = MetricModel.hyperbolic(1)
    rho = rho0 / 2.0 ** np.arange(levels)
    yn = np.sqrt(1 - 2 * rho**2)
    limits, worst, conv_all = {}, 0.0, True
    for base in bases:
        Rv = np.repeat(R_values, levels)
        rl = np.tile(rho, len(R_values))
        F, *_, conv = F_batch(model, rl, rl, np.tile(yn, len(R_values)), Rv, shooting, y_prime=[base])
        conv_all &= bool(np.all(conv))
        for i, R in enumerate(R_values):
            lim, _ = richardson(F[i * levels:(i + 1) * levels])
            limits[f"R={R:g},y'={base:g}"] = lim
            worst = max(worst, abs(lim))
    return CheckResult("corner limit of F", conv_all and worst < tol, worst, tol, limits)


# 4 ------------------------------------------------------------------------------------

@_timed
def check_sojourn_formula(n_launches=50, seed=1, tol=1e-6, config=IntegratorConfig(), route="region3"):
    """``S_soj = 2 log|y - y'|`` with ``y, y'`` from the semicircle through the launch point."""
    model = MetricModel.hyperbolic(1)
    rng = np.random.default_rng(seed)
    worst, worst_end = 0.0, 0.0
    for x0, y0, xi, eta in random_launches(rng, model, n_launches, (0.2, 2.0), (-3.0, 3.0), 0.35):
        d = scattering_datum(model, x0, y0, xi, eta, route=route, config=config)
        # the left factor follows -g* zeta and the right one +g* zeta
        yl, yr = semicircle_endpoints(x0, y0, xi, eta)
        exact = 2 * math.log(float(np.linalg.norm(yl - yr)))
        worst = max(worst, abs(d.S_soj - exact))
        worst_end = max(worst_end, float(np.max(np.abs(d.y - yl))), float(np.max(np.abs(d.y_prime - yr))))
    ok = worst < tol and worst_end < tol
    return CheckResult("sojourn formula", ok, worst, tol, {"max_endpoint_err": worst_end})


# 5 ------------------------------------------------------------------------------------

@_timed
def check_sigma_and_transversality(n_launches=20, seed=2, bound=0.5, models=None, config=IntegratorConfig()):
    """``sigma`` never moves and the face-normal component is at least ``bound`` at every face hit."""
    rng = np.random.default_rng(seed)
    models = models or [MetricModel.hyperbolic(1), MetricModel.perturbed(1, 0.05),
                        MetricModel.perturbed(2, 0.05)]
    sigma_drift, min_normal, skipped, hits = 0.0, math.inf, 0, 0
    for model in models:
        n = model.n
        for x0, y0, xi, eta in random_launches(rng, model, n_launches, (0.05, 1.0)):
            for route in ("region3", "region2", "region4"):
                pt = trace_to_face(model, x0, y0, xi, eta, route=route, config=config,
                                   order=rng.choice(["LR", "RL"]))
                sigma_drift = max(sigma_drift, pt.drift.get("sigma_drift", 0.0))
                for flow in pt.flows:
                    # sigma must be bit-for-bit constant along every rescaled sample
                    sig0 = None
                    for smp in flow.samples:
                        if smp.chart == "interior":
                            continue
                        # one-factor region-1 samples keep sigma after [s, x, y]
                        k = n + 2 if len(smp.coords) == 2 * n + 4 else 2 * n + 3
                        sig0 = smp.coords[k] if sig0 is None else sig0
                        sigma_drift = max(sigma_drift, abs(smp.coords[k] - sig0))
                normals = _face_normals(model, pt)
                for val, tilde in normals:
                    if abs(tilde) > 10:
                        skipped += 1
                        continue
                    hits += 1
                    min_normal = min(min_normal, val)
    ok = sigma_drift == 0.0 and min_normal >= bound
    return CheckResult("sigma conservation and transversality", ok, min_normal, bound,
                       {"sigma_drift": sigma_drift, "face_hits": hits, "skipped_large_tilde": skipped})


def _face_normals(model, pt):
    """``(normal component, tilde momentum)`` of the side's own field at each face hit."""
    n = model.n
    out = []
    for flow in pt.flows:
        term = flow.termination
        c = term.state
        if term.chart == "region1":
            # one-factor state [s, x, y, sigma, xi~, eta]
            f = field_region1_single(model, c)
            out.append((float(f[1]), float(c[3 + n])))
        elif term.chart in ("region2L", "region2R"):
            side = term.chart[-1]
            out.append((float(face_normal_component(model, term.chart, side, c)), float(c[2 * n + 4])))
        elif term.chart == "region4":
            lay = layout("region4", n)
            for side, tname in (("L", "lamt"), ("R", "lamtp")):
                out.append((float(face_normal_component(model, "region4", side, c)), float(c[lay[tname]])))
    return out


# 6 ------------------------------------------------------------------------------------

@_timed
def check_commutation(n_starts=50, seed=3, tol=1e-8, models=None, config=IntegratorConfig()):
    """``R``-then-``L`` and ``L``-then-``R`` reach the same corner point in the region-4 chart."""
    rng = np.random.default_rng(seed)
    models = models or [MetricModel.hyperbolic(1), MetricModel.perturbed(1, 0.05),
                        MetricModel.perturbed(2, 0.05)]
    worst = 0.0
    per_model = max(1, n_starts // len(models))
    count = 0
    for i, model in enumerate(models):
        m = per_model if i < len(models) - 1 else n_starts - per_model * (len(models) - 1)
        for x0, y0, xi, eta in random_launches(rng, model, m, (0.05, 1.0)):
            a = trace_to_face(model, x0, y0, xi, eta, route="region4", order="RL", config=config)
            b = trace_to_face(model, x0, y0, xi, eta, route="region4", order="LR", config=config)
            diff = max(float(np.max(np.abs(a.y_L - b.y_L))), float(np.max(np.abs(a.y_R - b.y_R))),
                       abs(a.S_soj - b.S_soj))
            worst = max(worst, diff)
            count += 1
    return CheckResult("flow commutation", worst < tol, worst, tol, {"starts": count})


# 7 ------------------------------------------------------------------------------------

_RHO_NAME = {("region1", "L"): "x", ("region1", "R"): "xp", ("region3", "L"): "x", ("region3", "R"): "xp",
             ("region2L", "L"): "X", ("region2R", "R"): "Xp", ("region4", "L"): "w", ("region4", "R"): "wp"}


def _sample_in_domain(rng, chart, side, n, cfg):
    """Random interior positions inside ``chart``'s validity domain."""
    for _ in range(10000):
        if chart == "region1":
            near = rng.uniform(0.005, cfg.x_sw)
            far = rng.uniform(cfg.x_sw * 1.2, 2.0)
            x, xp = (near, far) if side == "L" else (far, near)
            y, yp = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
        elif chart == "region3":
            x, xp = rng.uniform(0.005, cfg.x_sw, 2)
            y = rng.uniform(-1, 1, n)
            yp = y + rng.normal(size=n) * 0.5
        elif chart in ("region2L", "region2R"):
            far = rng.uniform(0.01, cfg.u_sw)
            near = far * rng.uniform(0.02, 0.98)
            x, xp = (near, far) if chart == "region2L" else (far, near)
            yp = rng.uniform(-1, 1, n)
            y = yp + rng.normal(size=n) * far
        else:
            u = rng.uniform(0.02, cfg.u_sw)
            w, wp = rng.uniform(0.01, cfg.w_sw, 2)
            x, xp = w * u, wp * u
            yp = rng.uniform(-1, 1, n)
            y = yp + u * np.concatenate([[1.0], rng.uniform(-1, 1, n - 1)])
        a = ch._join_interior(0.0, x, y, xp, yp, 1.0, 0.0, np.zeros(n), 0.0, np.zeros(n))
        if ch.domain_violation(chart, a, n, side, cfg) is None:
            return x, y, xp, yp
    raise RuntimeError(f"could not sample the {chart} domain")


def conjugation_error(model, chart, side, a, h=1e-30):
    """Relative mismatch between ``D lift . H_Q`` and ``-rho H_q`` at an interior state."""
    n = model.n
    lay = layout(chart, n, side if chart == "region1" else None)
    ac = np.asarray(a, dtype=complex)
    v = hq_rhs(model, side, np.asarray(a, dtype=float))
    pushed = np.imag(ch.lift(chart, ac + 1j * h * v, n, side)) / h
    c = ch.lift(chart, np.asarray(a, dtype=float), n, side)
    expected = -c[lay[_RHO_NAME[(chart, side)]]] * rescaled_field(model, chart, side, c)
    return float(np.max(np.abs(pushed - expected)) / max(1.0, float(np.max(np.abs(pushed)))))


@_timed
def check_chart_conjugation(n_points=100, seed=4, tol=1e-10, trace_tol=1e-8, n_traces=10, models=None,
                            cfg: ChartConfig = ChartConfig(), config=IntegratorConfig()):
    """Lifted interior fields equal ``-rho`` times the rescaled fields; routes through different charts agree."""
    rng = np.random.default_rng(seed)
    models = models or [MetricModel.hyperbolic(1), MetricModel.perturbed(1, 0.05, bump_center=[0.0]),
                        MetricModel.perturbed(2, 0.05, bump_center=[0.0, 0.0])]
    worst, count = 0.0, 0
    pairs = list(_RHO_NAME)
    for model in models:
        n = model.n
        for chart, side in pairs:
            for _ in range(n_points):
                x, y, xp, yp = _sample_in_domain(rng, chart, side, n, cfg)
                d = rng.normal(size=2 * n + 2)
                xi, eta, xip, etap = d[0], d[1:n + 1], d[n + 1], d[n + 2:]
                # put both factors on the characteristic set with tau = 1
                kl = 1 / math.sqrt(float(_dual(model, x, y, xi, eta)))
                kr = 1 / math.sqrt(float(_dual(model, xp, yp, xip, etap)))
                a = ch._join_interior(rng.uniform(-1, 1), x, y, xp, yp, 1.0, kl * xi, kl * eta,
                                      kr * xip, kr * etap)
                worst = max(worst, conjugation_error(model, chart, side, a))
                count += 1
    # geodesic traces through different charts
    trace_worst = 0.0
    for model in models:
        for x0, y0, xi, eta in random_launches(rng, model, n_traces, (0.05, 1.0)):
            ref = trace_to_face(model, x0, y0, xi, eta, route="region3", config=config)
            for route in ("region2", "region4"):
                other = trace_to_face(model, x0, y0, xi, eta, route=route, config=config)
                trace_worst = max(trace_worst, float(np.max(np.abs(ref.y_L - other.y_L))),
                                  float(np.max(np.abs(ref.y_R - other.y_R))), abs(ref.S_soj - other.S_soj))
    ok = worst < tol and trace_worst < trace_tol
    return CheckResult("chart conjugation", ok, worst, tol,
                       {"points": count, "trace_mismatch": trace_worst, "trace_bound": trace_tol})


# 8 ------------------------------------------------------------------------------------

@_timed
def check_perturbed_suite(epsilon=0.05, grid: GridSpec = GridSpec(), factor=10.0, match_tol=1e-10,
                          F_bound=20.0, shooting: ShootingConfig = ShootingConfig(), threads=1):
    """Perturbed scan: no failures, bounded ``F``, second differences within ``factor`` x hyperbolic."""
    hyp = scan_F(MetricModel.hyperbolic(1), grid, shooting, threads=threads, faces=False)
    pert = scan_F(MetricModel.perturbed(1, epsilon), grid, shooting, threads=threads, faces=False)
    zero = scan_F(MetricModel.perturbed(1, 0.0), grid, shooting, threads=threads, faces=False)
    F_h, F_p, F_0 = (r.records[:, 5] for r in (hyp, pert, zero))
    ratios = {R: pert.summary["second_difference"][R] / hyp.summary["second_difference"][R]
              for R in hyp.summary["second_difference"]}
    worst_ratio = max(ratios.values())
    eps0 = float(np.max(np.abs(F_0 - F_h)))
    bounded = bool(np.all(np.isfinite(F_p))) and float(np.max(np.abs(F_p))) < F_bound
    ok = pert.summary["failures"] == 0 and bounded and worst_ratio <= factor and eps0 <= match_tol
    return CheckResult("perturbed-metric properties", ok, worst_ratio, factor,
                       {"failures": pert.summary["failures"], "max_abs_F": float(np.max(np.abs(F_p))),
                        "eps0_vs_hyperbolic": eps0, "second_difference_ratio": ratios,
                        "max_abs_F_minus_hyperbolic": float(np.max(np.abs(F_p - F_h)))})


# 9 ------------------------------------------------------------------------------------

@_timed
def check_defining_scale(n_launches=20, seed=5, tol=1e-10, scale=2.0, models=None,
                         config=IntegratorConfig(rtol=1e-12, atol=1e-14)):
    """``x -> c x`` shifts every one-sided limit by ``log c`` and ``S_soj`` by ``2 log c``."""
    rng = np.random.default_rng(seed)
    models = models or [MetricModel.hyperbolic(1), MetricModel.perturbed(1, 0.05)]
    worst = 0.0
    shift = math.log(scale)
    for model in models:
        for x0, y0, xi, eta in random_launches(rng, model, n_launches):
            for face in ("L", "R"):
                sgn = -1.0 if face == "L" else 1.0
                a = sojourn_forward(model, x0, y0, sgn * xi, sgn * eta, face, config=config)
                b = sojourn_forward(model, x0, y0, sgn * xi, sgn * eta, face, config=config,
                                    defining_scale=scale)
                worst = max(worst, abs(b.s_limit - a.s_limit - shift))
            A = scattering_datum(model, x0, y0, xi, eta, config=config)
            B = scattering_datum(model, x0, y0, xi, eta, config=config, defining_scale=scale)
            worst = max(worst, abs(B.S_soj - A.S_soj - 2 * shift))
    return CheckResult("defining-function covariance", worst < tol, worst, tol)


# -- CLI entry -----------------------------------------------------------------------

@_timed
def check_metric(model: MetricModel):
    rep = validate_metric(model)
    worst = max((w["value"] for w in rep.worst.values()), default=0.0)
    return CheckResult(f"metric validation ({model.kind}, eps={model.epsilon:g})", rep.passed, worst, 0.5,
                       {"report": rep.summary()})


def quick_suite(model: MetricModel, integrator: IntegratorConfig = IntegratorConfig(),
                shooting: ShootingConfig = ShootingConfig(), tighten: float = 1.0, seed: int = 0,
                threads: int = 1):
    """Reduced-size run of every check; ``tighten`` divides tolerances and bounds alike."""
    cfg = integrator.scaled(1.0 / tighten) if tighten != 1.0 else integrator
    shoot = replace(shooting, integrator=shooting.integrator.scaled(1.0 / tighten)) \
        if tighten != 1.0 else shooting
    small = GridSpec(n_a=6, n_b=6, n_c=4)
    b = 1.0 / tighten
    results = [check_metric(model)]
    if not results[0].passed:
        return results
    results += [
        check_distance_oracle(n_pairs=20, seed=seed, tol=1e-8 * b, shooting=shoot),
        check_F_closed_form(small, tol=1e-6 * b, tol_R=1e-7 * b, shooting=shoot, threads=threads),
        check_corner_limit(R_values=(0.25,), shooting=shoot),
        check_sojourn_formula(n_launches=10, seed=seed + 1, tol=1e-6 * b, config=cfg),
        check_sigma_and_transversality(n_launches=3, seed=seed + 2, config=cfg),
        check_commutation(n_starts=6, seed=seed + 3, tol=1e-8 * b, config=cfg),
        check_chart_conjugation(n_points=10, n_traces=2, seed=seed + 4, trace_tol=1e-8 * b, config=cfg),
        # the shift is compared across two step sequences, so run this one below rtol 1e-10
        check_defining_scale(n_launches=3, seed=seed + 5, tol=max(1e-10 * b, 1e-12),
                             config=cfg.scaled(max(0.01, 1e-12 / cfg.rtol))),
    ]
    if not model.is_exact and model.epsilon != 0.0:
        results.append(check_perturbed_suite(model.epsilon, small, shooting=shoot, threads=threads))
    return results
