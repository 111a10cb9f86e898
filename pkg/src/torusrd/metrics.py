"""Density fields on the continuous torus and the norms used for comparison.

The field is eta_k / ell at the knots k/n, extended by linear interpolation
with periodic wrap; the interpolation carries no special meaning beyond
making sup and L1 norms well defined.
"""
from __future__ import annotations

import numpy as np

from .errors import GridMismatch

__all__ = ["DensityField", "field_from_config", "sup_distance", "l1_norm"]


class DensityField:
    """Piecewise-linear periodic function with knot values eta_k / ell at k/n."""

    def __init__(self, knots):
        self.knots = np.asarray(knots, dtype=float)
        self.n = len(self.knots)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pos = (x % 1.0) * self.n
        k = np.floor(pos).astype(np.int64) % self.n
        frac = pos - np.floor(pos)
        nxt = (k + 1) % self.n
        return (1.0 - frac) * self.knots[k] + frac * self.knots[nxt]

    def sup(self) -> float:
        # linear interpolation attains its extrema at the knots
        return float(self.knots.max())


def field_from_config(eta, ell: int) -> DensityField:
    return DensityField(np.asarray(eta, dtype=float) / ell)


def sup_distance(field: DensityField, u) -> float:
    """Sup-norm gap between the field and a grid function u given on the same
    or an m-times finer uniform grid (values u_j at j / len(u)).

    Both are compared as piecewise-linear interpolants at the finer grid's
    knots and midpoints; the O(N^-2) error of not scanning continuously is
    below the quantities compared.
    """
    u = np.asarray(u, dtype=float)
    if len(u) % field.n != 0:
        raise GridMismatch(f"grid of size {len(u)} does not refine {field.n} knots")
    other = DensityField(u)
    pts = np.arange(2 * len(u)) / (2.0 * len(u))
    return float(np.abs(field(pts) - other(pts)).max())


def l1_norm(field: DensityField) -> float:
    """Exact integral of the piecewise-linear field over the torus: by
    periodicity the trapezoid rule collapses to the mean of the knots."""
    return float(field.knots.mean())
