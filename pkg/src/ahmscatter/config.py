"""Run configuration: one YAML document, validated on load.

Precedence is command-line flag > config file > built-in default.  The file is
taken from ``--config`` or, failing that, from the ``AHM_CONFIG`` environment
variable.  Unknown keys are errors.

Example::

    metric:
      dimension: 1
      kind: perturbed
      epsilon: 0.05
    integrator:
      rtol: 1.0e-10
      t_max: 200
    seed: 7
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

import yaml

from .charts import ChartConfig
from .integrate import IntegratorConfig
from .metric import MetricModel
from .scattering import GridSpec, ShootingConfig


class ConfigError(ValueError):
    pass


SHOOTING_KEYS = ("tol", "max_iter", "jac_step", "max_halvings", "rtol", "atol")


@dataclass
class RunConfig:
    metric: MetricModel = field(default_factory=MetricModel)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    charts: ChartConfig = field(default_factory=ChartConfig)
    shooting: ShootingConfig = field(default_factory=ShootingConfig)
    scan: GridSpec = field(default_factory=GridSpec)
    seed: int = 0
    threads: int = 1
    out: str | None = None

    def to_dict(self) -> dict:
        sh = self.shooting
        return {
            "metric": self.metric.to_dict(),
            "integrator": {f.name: getattr(self.integrator, f.name) for f in fields(IntegratorConfig)},
            "charts": {f.name: getattr(self.charts, f.name) for f in fields(ChartConfig)},
            "shooting": {"tol": sh.tol, "max_iter": sh.max_iter, "jac_step": sh.jac_step,
                         "max_halvings": sh.max_halvings, "rtol": sh.integrator.rtol,
                         "atol": sh.integrator.atol},
            "scan": {f.name: getattr(self.scan, f.name) for f in fields(GridSpec)},
            "seed": self.seed,
            "threads": self.threads,
            "out": self.out,
        }


def _block(name, data, allowed):
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"'{name}' must be a mapping")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(unknown)}")
    return dict(data)


def _build(name, factory, kw):
    try:
        return factory(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}' block: {exc}") from exc


def from_dict(data: dict | None) -> RunConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    top = {"metric", "integrator", "charts", "shooting", "scan", "seed", "threads", "out"}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    m = _block("metric", data.get("metric"), [f.name for f in fields(MetricModel)])
    if "bump_center" in m and m["bump_center"] is not None:
        m["bump_center"] = tuple(m["bump_center"]) if isinstance(m["bump_center"], (list, tuple)) \
            else (m["bump_center"],)
    metric = _build("metric", MetricModel, m)
    integ = _build("integrator", IntegratorConfig,
                   _block("integrator", data.get("integrator"), [f.name for f in fields(IntegratorConfig)]))
    chart = _build("charts", ChartConfig, _block("charts", data.get("charts"), [f.name for f in fields(ChartConfig)]))
    sh = _block("shooting", data.get("shooting"), SHOOTING_KEYS)
    base = ShootingConfig().integrator
    tols = {k: sh.pop(k) for k in ("rtol", "atol") if k in sh}
    sh_integ = _build("shooting", lambda **kw: replace(base, **kw), tols) if tols else base
    shooting = _build("shooting", ShootingConfig, dict(sh, integrator=sh_integ))
    sc = _block("scan", data.get("scan"), [f.name for f in fields(GridSpec)])
    if "R_values" in sc:
        sc["R_values"] = tuple(sc["R_values"])
    if sc.get("y_prime") is not None:
        sc["y_prime"] = tuple(sc["y_prime"])
    scan = _build("scan", GridSpec, sc)
    seed = data.get("seed", 0)
    threads = data.get("threads", 1)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("'seed' must be an integer")
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("'threads' must be a positive integer")
    return RunConfig(metric, integ, chart, shooting, scan, seed, threads, data.get("out"))


def load_config(path: str | None = None, environ=None) -> RunConfig:
    """Read the YAML file at ``path`` (or ``$AHM_CONFIG``); defaults if neither is set."""
    environ = os.environ if environ is None else environ
    path = path or environ.get("AHM_CONFIG")
    if not path:
        return RunConfig()
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc
    return from_dict(data)
