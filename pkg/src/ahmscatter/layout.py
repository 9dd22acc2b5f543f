"""Flat coordinate layouts for every chart.

A state is a flat array ``[positions..., momenta...]`` where the ``i``-th
momentum is canonically conjugate to the ``i``-th position, so the symplectic
form is ``sum_i dp_i ^ dq_i`` and Hamilton's equations read
``dq/dt = dH/dp, dp/dt = -dH/dq`` in every chart.

Chart identifiers (also written verbatim into trajectory records):
``interior``, ``region1``, ``region2L``, ``region2R``, ``region3``, ``region4``.
``region1`` carries a side (``L`` or ``R``).  ``single=True`` layouts describe
one factor only, as used for a lone geodesic.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

CHARTS = ("interior", "region1", "region2L", "region2R", "region3", "region4")
SIDES = ("L", "R")


def _idx(prefix, n, start=1):
    return [f"{prefix}{j}" for j in range(start, n + 1)]


class Layout:
    def __init__(self, chart, n, side, single, positions, momenta):
        self.chart = chart
        self.n = n
        self.side = side
        self.single = single
        self.positions = tuple(positions)
        self.momenta = tuple(momenta)
        self.names = self.positions + self.momenta
        self.d = len(self.positions)
        self.dim = 2 * self.d
        self.index = {name: i for i, name in enumerate(self.names)}

    def __repr__(self):
        kind = "single" if self.single else "product"
        side = f", side={self.side}" if self.side else ""
        return f"Layout({self.chart}, n={self.n}{side}, {kind})"

    def __getitem__(self, name):
        return self.index[name]

    def sl(self, prefix, n=None):
        """Slice of a contiguous vector block such as ``y1..yn``."""
        n = self.n if n is None else n
        first = self.index[f"{prefix}1" if f"{prefix}1" in self.index else f"{prefix}2"]
        return slice(first, first + n)

    def get(self, state, name):
        return np.asarray(state)[..., self.index[name]]


@lru_cache(maxsize=None)
def layout(chart: str, n: int, side: str | None = None, single: bool = False) -> Layout:
    if chart not in CHARTS:
        raise ValueError(f"unknown chart {chart!r}")
    y, yp = _idx("y", n), _idx("yp", n)
    eta, etap = _idx("eta", n), _idx("etap", n)
    if single:
        if chart == "interior":
            return Layout(chart, n, None, True, ["x", *y], ["xi", *eta])
        if chart == "region1":
            return Layout(chart, n, side or "L", True, ["s", "x", *y], ["sigma", "xit", *eta])
        raise ValueError(f"chart {chart} has no single-factor layout")
    if chart == "interior":
        return Layout(chart, n, None, False, ["t", "x", *y, "xp", *yp],
                      ["tau", "xi", *eta, "xip", *etap])
    if chart == "region1":
        if side not in SIDES:
            raise ValueError("region1 needs side 'L' or 'R'")
        mom = ["sigma", "xit", *eta, "xip", *etap] if side == "L" else \
              ["sigma", "xi", *eta, "xipt", *etap]
        return Layout(chart, n, side, False, ["s", "x", *y, "xp", *yp], mom)
    if chart == "region3":
        return Layout(chart, n, None, False, ["s", "x", *y, "xp", *yp],
                      ["sigma", "xit", *eta, "xipt", *etap])
    if chart == "region2L":
        return Layout(chart, n, "L", False, ["s", "X", *_idx("Y", n), "xp", *yp],
                      ["sigma", "lamt", *_idx("mu", n), "lamp", *_idx("mup", n)])
    if chart == "region2R":
        # mirror image of region2L with the factors exchanged
        return Layout(chart, n, "R", False, ["s", "Xp", *_idx("Yp", n), "x", *y],
                      ["sigma", "lamtp", *_idx("mup", n), "lam", *_idx("mu", n)])
    # region4
    return Layout(chart, n, None, False, ["s", "w", "u", *_idx("Z", n, 2), "wp", *yp],
                  ["sigma", "lamt", "nu", *_idx("mu", n, 2), "lamtp", *_idx("mup", n)])


def hamilton(dH_dq, dH_dp):
    """Assemble the Hamilton field ``(dH/dp, -dH/dq)`` as one flat array."""
    return np.concatenate([dH_dp, -dH_dq], axis=-1)


def standard_form(d: int) -> np.ndarray:
    """Matrix of ``sum dp_i ^ dq_i`` in ``[q, p]`` coordinates."""
    J = np.zeros((2 * d, 2 * d))
    J[d:, :d] = np.eye(d)
    J[:d, d:] = -np.eye(d)
    return J
