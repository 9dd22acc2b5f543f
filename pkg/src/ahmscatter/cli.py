"""Command-line front end (``ahm``).

Subcommands: ``trace``, ``distance``, ``sojourn``, ``scatter``, ``scan-f`` and
``verify``.  Every subcommand accepts ``--config PATH`` (falling back to
``$AHM_CONFIG``), ``--seed N``, ``--out PATH`` and ``--threads N``.  Values
given on the command line override the config file, which overrides the
built-in defaults.

Output is plain text on stdout (or ``--out``): JSON lines for ``trace``, one
JSON object for ``distance``/``sojourn``/``scatter``, comma-separated tables
for ``scan-f`` and ``scatter --sweep``, and PASS/FAIL lines for ``verify``.
Diagnostics go to stderr.

Exit codes: 0 success; 1 error (bad input, failed validation or check);
2 parameter cap reached in ``trace`` or unconverged nodes in ``scan-f``;
3 ``trace`` left the working box.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
import warnings
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .hamiltonian import energy_p
from .hyperbolic import exact_distance
from .layout import layout
from .metric import DomainError, validate_metric
from .rescaled import q_region1_single
from .scattering import distance_shooting, normalize_covector, scan_F, scattering_datum
from .tracing import TracingError, trace_geodesic
from . import verify as vf

EXIT_OK, EXIT_ERROR, EXIT_CAP, EXIT_BOX = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _num(v):
    """JSON-safe float; repr keeps every digit so output is reproducible byte for byte."""
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(u) for u in np.asarray(v).tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, dict):
        return {k: _num(u) for k, u in v.items()}
    return v


def _dump(obj) -> str:
    return json.dumps(_num(obj))


# -- configuration ----------------------------------------------------------------

def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    m = {}
    for key in ("dimension", "kind", "epsilon"):
        v = getattr(args, key, None)
        if v is not None:
            m[key] = v
    if "dimension" in m and len(cfg.metric.bump_center) != m["dimension"] and not any(cfg.metric.bump_center):
        m["bump_center"] = None          # default centre follows the dimension
    metric = replace(cfg.metric, **m) if m else cfg.metric
    if "kind" in m and m["kind"] == "exact-hyperbolic" and "epsilon" not in m:
        metric = replace(metric, epsilon=0.0)
    integ = {}
    for key, attr in (("rtol", "rtol"), ("atol", "atol"), ("t_max", "t_max")):
        v = getattr(args, key, None)
        if v is not None:
            integ[attr] = v
    try:
        integrator = replace(cfg.integrator, **integ) if integ else cfg.integrator
    except ValueError as exc:
        raise ConfigError(f"invalid integrator option: {exc}") from exc
    return replace(cfg, metric=metric, integrator=integrator,
                   seed=cfg.seed if args.seed is None else args.seed,
                   threads=cfg.threads if args.threads is None else args.threads,
                   out=cfg.out if args.out is None else args.out)


@contextlib.contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _point(values, n, what):
    if values is None or len(values) != n + 1:
        raise UsageError(f"{what} needs {n + 1} numbers for dimension {n}")
    return float(values[0]), np.asarray(values[1:], dtype=float)


def _unit(model, x, y, xi, eta):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        xi, eta = normalize_covector(model, x, y, xi, eta)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return xi, eta


# -- subcommands ----------------------------------------------------------------------

def _sample_record(model, sample, sigma):
    n = model.n
    lay = layout(sample.chart, n, sample.side, single=True)
    c = sample.coords
    if sample.chart == "interior":
        drift = abs(float(energy_p(model, c)) - 0.5 * (sigma * sigma - 1.0))
    else:
        drift = abs(float(q_region1_single(model, c)))
    rec = {"param": sample.param, "chart": sample.chart, "side": sample.side}
    rec.update(zip(lay.names, c.tolist()))
    rec["q_drift"] = drift
    return rec


def cmd_trace(args, cfg: RunConfig) -> int:
    model = cfg.metric
    n = model.n
    if args.sigma == 0:
        raise UsageError("sigma must be nonzero")
    if args.sigma < 0:
        raise UsageError("sigma must be positive; the tau < 0 sheet is the time reversal of tau > 0")
    x, y = _point(args.z, n, "--z")
    xi, eta = _point(args.zeta, n, "--zeta")
    xi, eta = _unit(model, x, y, xi, eta)
    flow = trace_geodesic(model, x, y, xi, eta, args.direction, config=cfg.integrator, charts=cfg.charts,
                          side=args.side, sigma=args.sigma)
    term = flow.termination
    with _sink(cfg.out) as out:
        for k, s in enumerate(flow.samples):
            if k % args.every == 0 or k == len(flow.samples) - 1:
                out.write(_dump(_sample_record(model, s, args.sigma)) + "\n")
        end = {"event": term.kind, "param": term.param}
        if term.kind == "FaceHit":
            end.update(face=term.face, s_limit=flow.s_limit, y=flow.endpoint)
        elif term.kind == "BoxExit":
            end["bound"] = term.bound
        else:
            end["message"] = term.message
        end["switches"] = len(flow.switches)
        end.update(flow.drift)
        out.write(_dump(end) + "\n")
    return {"FaceHit": EXIT_OK, "CapReached": EXIT_CAP, "BoxExit": EXIT_BOX}.get(term.kind, EXIT_ERROR)


def cmd_distance(args, cfg: RunConfig) -> int:
    model = cfg.metric
    n = model.n
    x, y = _point(args.z, n, "--z")
    xp, yp = _point(args.zp, n, "--zp")
    if x == xp and np.array_equal(y, yp):
        raise UsageError("z and z' coincide; distance is only computed off the diagonal")
    if x <= 0 or xp <= 0:
        raise UsageError("points must be interior (x > 0)")
    z, zp = np.r_[x, y], np.r_[xp, yp]
    res = distance_shooting(model, z, zp, cfg.shooting)
    rec = {"r": res.r, "F": res.F, "residual": res.residual, "iters": res.iters,
           "converged": res.converged, "covector": res.covector}
    if model.is_exact:
        rec["exact_r"] = float(exact_distance(z, zp))
        rec["abs_error"] = abs(res.r - rec["exact_r"])
    if res.message:
        rec["message"] = res.message
    with _sink(cfg.out) as out:
        out.write(_dump(rec) + "\n")
    return EXIT_OK if res.converged else EXIT_ERROR


def _launch(args, model):
    n = model.n
    x, y = _point(args.z, n, "--z")
    if args.zeta is None:
        xi, eta = 0.0, np.eye(n)[0] / x          # horizontal launch through the apex
    else:
        xi, eta = _point(args.zeta, n, "--zeta")
    return (x, y) + _unit(model, x, y, xi, eta)


def cmd_sojourn(args, cfg: RunConfig) -> int:
    model = cfg.metric
    x, y, xi, eta = _launch(args, model)
    d = scattering_datum(model, x, y, xi, eta, route=args.route, config=cfg.integrator, charts=cfg.charts)
    dy = d.y - d.y_prime
    rec = {"y": d.y, "y_prime": d.y_prime, "R": float(np.sqrt(dy @ dy)), "S_soj": d.S_soj, "s": d.s,
           "route": d.route}
    with _sink(cfg.out) as out:
        out.write(_dump(rec) + "\n")
    return EXIT_OK


SWEEP_HEADER = ("angle", "y", "y_prime", "S_soj", "s")


def cmd_scatter(args, cfg: RunConfig) -> int:
    model = cfg.metric
    if args.sweep:
        n = model.n
        x, y = _point(args.z, n, "--z")
        e = np.eye(n)[0]
        with _sink(cfg.out) as out:
            out.write(",".join(SWEEP_HEADER) + "\n")
            for th in np.linspace(args.angle_min, math.pi - args.angle_min, args.sweep):
                xi, eta = normalize_covector(model, x, y, math.cos(th) / x, math.sin(th) / x * e, warn=False)
                d = scattering_datum(model, x, y, xi, eta, route=args.route, config=cfg.integrator,
                                     charts=cfg.charts)
                row = [th, d.y[0], d.y_prime[0], d.S_soj, d.s]
                out.write(",".join(repr(float(v)) for v in row) + "\n")
        return EXIT_OK
    x, y, xi, eta = _launch(args, model)
    d = scattering_datum(model, x, y, xi, eta, route=args.route, order=args.order, config=cfg.integrator,
                         charts=cfg.charts)
    with _sink(cfg.out) as out:
        out.write(_dump(d.as_dict()) + "\n")
    return EXIT_OK


def cmd_scan_f(args, cfg: RunConfig) -> int:
    grid = cfg.scan
    over = {k: getattr(args, k) for k in ("n_a", "n_b", "n_c") if getattr(args, k) is not None}
    if args.R is not None:
        over["R_values"] = tuple(args.R)
    grid = replace(grid, **over)
    if min(grid.n_a, grid.n_b, grid.n_c) <= 0 or not grid.R_values or len(grid.nodes()[1]) == 0:
        raise UsageError("empty grid")
    res = scan_F(cfg.metric, grid, cfg.shooting, threads=cfg.threads, faces=not args.no_faces)
    with _sink(cfg.out) as out:
        for line in res.csv_lines():
            out.write(line + "\n")
    summary = _dump(res.summary)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(summary + "\n")
    else:
        print(summary, file=sys.stderr)
    return EXIT_OK if res.summary["failures"] == 0 else EXIT_CAP


def cmd_verify(args, cfg: RunConfig) -> int:
    model = cfg.metric
    if args.full:
        results = [vf.check_metric(model)]
        if results[0].passed:
            results += full_suite(cfg.threads)
    else:
        results = vf.quick_suite(model, cfg.integrator, cfg.shooting, tighten=args.tighten, seed=cfg.seed,
                                 threads=cfg.threads)
    ok = all(r.passed for r in results)
    with _sink(cfg.out) as out:
        for r in results:
            out.write(r.line(timing=args.timings) + "\n")
            if not r.passed and "report" in r.detail:
                out.write(r.detail["report"] + "\n")
        out.write(f"{sum(r.passed for r in results)}/{len(results)} checks passed\n")
    return EXIT_OK if ok else EXIT_ERROR


def full_suite(threads: int = 1):
    """Every acceptance check at its full size."""
    return [
        vf.check_distance_oracle(),
        vf.check_F_closed_form(threads=threads),
        vf.check_corner_limit(),
        vf.check_sojourn_formula(),
        vf.check_sigma_and_transversality(),
        vf.check_commutation(),
        vf.check_chart_conjugation(),
        vf.check_perturbed_suite(threads=threads),
        vf.check_defining_scale(),
    ]


# -- parser ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="YAML run configuration (default: $AHM_CONFIG)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--threads", type=int)
    p.add_argument("--dimension", type=int, help="boundary dimension n")
    p.add_argument("--kind", choices=("exact-hyperbolic", "perturbed"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ahm", description="Geodesic scattering on asymptotically hyperbolic spaces")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="trace one geodesic to the boundary (JSON lines)")
    _common(p)
    p.add_argument("--z", type=float, nargs="+", required=True, metavar="X", help="x y1 .. yn")
    p.add_argument("--zeta", type=float, nargs="+", required=True, metavar="V", help="xi eta1 .. etan")
    p.add_argument("--direction", choices=("forward", "backward"), default="forward")
    p.add_argument("--side", choices=("L", "R"), default="L")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--every", type=int, default=1, help="write every k-th sample")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("distance", help="geodesic distance by shooting")
    _common(p)
    p.add_argument("--z", type=float, nargs="+", required=True, metavar="X")
    p.add_argument("--zp", type=float, nargs="+", required=True, metavar="X")
    p.set_defaults(func=cmd_distance)

    for name, fn, helptext in (("sojourn", cmd_sojourn, "sojourn time of one launch"),
                               ("scatter", cmd_scatter, "full scattering datum")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--z", type=float, nargs="+", required=True, metavar="X")
        p.add_argument("--zeta", type=float, nargs="+", metavar="V",
                       help="launch covector (default: horizontal along y1)")
        p.add_argument("--route", choices=("region3", "region2", "region4"), default="region3")
        if name == "scatter":
            p.add_argument("--order", choices=("RL", "LR"), default="RL")
            p.add_argument("--sweep", type=int, default=0, help="tabulate N launch angles instead")
            p.add_argument("--angle-min", dest="angle_min", type=float, default=0.2)
        p.set_defaults(func=fn)

    p = sub.add_parser("scan-f", help="tabulate F over the blown-up double space (CSV)")
    _common(p)
    p.add_argument("--n-a", dest="n_a", type=int)
    p.add_argument("--n-b", dest="n_b", type=int)
    p.add_argument("--n-c", dest="n_c", type=int)
    p.add_argument("--R", type=float, nargs="+")
    p.add_argument("--summary", help="write the JSON summary here instead of stderr")
    p.add_argument("--no-faces", action="store_true", help="skip the face-limit extrapolation")
    p.set_defaults(func=cmd_scan_f)

    p = sub.add_parser("verify", help="run the oracle checks")
    _common(p)
    p.add_argument("--tighten", type=float, default=1.0, help="divide tolerances and bounds by this factor")
    p.add_argument("--full", action="store_true", help="full acceptance sizes (minutes)")
    p.add_argument("--timings", action="store_true", help="append wall time to each line")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.command in ("trace", "distance", "sojourn", "scatter", "scan-f"):
            rep = validate_metric(cfg.metric)
            if not rep.passed:
                print(f"error: metric failed validation\n{rep.summary()}", file=sys.stderr)
                return EXIT_ERROR
        return args.func(args, cfg)
    except (UsageError, ConfigError, DomainError, TracingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
