"""Covering estimates for the Phi-Hausdorff measures.

A cover of ``E`` by cells ``E_i`` with weights ``c_i`` gives the upper
estimate ``sum c_i S(E_i)^sigma`` for the weighted measure at scale
``max diam E_i``.  Here the cover is a uniform grid (anisotropic grids are
allowed) and each ``S(E_i)`` is the sup functional evaluated on a shared set
of unit-cube tuples mapped into the cell, vertex tuples included.  The cell
sups are sampled lower bounds, so the cover value is an estimate of the
cover's true value; for the examples tested here the vertex tuples attain
the sup exactly.

Comparability windows for ``density_comparability_check`` (cover value at
``sigma = n/q`` divided by the Riemann sum of the density), per example:

* ``x - y`` on R: ratio in [1/4, 4] (cover value |E|, density 1).
* ``det(A_1 - A_2)`` on 2 x 2 matrices, small box in R^4: ratio in
  [1e-2, 1e2] (cells of side h have S = 2 h^2, so the cover is 4 |E|; the
  density is a constant near 1/4).
* ``(x_1 - y_1)^2`` on R^2 at sigma = 1: the density vanishes and the cover
  value tends to 0 along anisotropic grids, reported as ``both_vanish``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .density import density_infimum
from .functionals import Box
from .geometry import PhiSpec

WINDOWS = {
    "difference": (0.25, 4.0),
    "determinantal-2": (1e-2, 1e2),
}


@dataclass
class CoverEstimate:
    sigma: float
    delta: float
    value: float
    counts: tuple[int, ...]
    n_cells: int
    tuples_per_cell: int
    weights: str = "uniform"
    seed: int = 0
    cell_sups: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma,
            "delta": self.delta,
            "value": self.value,
            "grid_counts": list(self.counts),
            "n_cells": self.n_cells,
            "tuples_per_cell": self.tuples_per_cell,
            "weights": self.weights,
            "seed": self.seed,
            "value_kind": "upper estimate (cell sups sampled)",
        }


def unit_tuples(n: int, k: int, random_count: int, seed: int = 0) -> np.ndarray:
    """Tuples in the unit cube, shape (M, k, n): all vertex k-tuples (when few) plus random ones."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    parts = []
    if n <= 6:
        verts = np.array(list(product((0.0, 1.0), repeat=n)))
        nv = verts.shape[0]
        if nv ** k <= 4096:
            idx = np.array(list(product(range(nv), repeat=k)))
        else:
            idx = rng.integers(0, nv, size=(4096, k))
        parts.append(verts[idx])
    if random_count:
        parts.append(rng.random((random_count, k, n)))
    return np.concatenate(parts, axis=0)


def grid_counts(n: int, grid_level: int | Sequence[int]) -> tuple[int, ...]:
    if isinstance(grid_level, (int, np.integer)):
        if grid_level < 0:
            raise ValueError("grid level must be nonnegative")
        return (2 ** int(grid_level),) * n
    levels = tuple(int(v) for v in grid_level)
    if len(levels) != n or any(v < 0 for v in levels):
        raise ValueError(f"need {n} nonnegative per-axis levels")
    return tuple(2 ** v for v in levels)


def cell_sups(phi: PhiSpec, E: Box, counts: Sequence[int], tuples: np.ndarray, params: Sequence = ()) -> np.ndarray:
    """Sampled sup of |Phi| on every grid cell (row-major cell order)."""
    if phi.params:
        phi = phi.freeze(params)
    ev = phi.compiled()
    n, k = phi.n, phi.k
    counts = np.asarray(counts)
    width = (E.hi - E.lo) / counts
    idx = np.array(list(product(*(range(c) for c in counts))), dtype=float)
    lows = E.lo + idx * width
    M = tuples.shape[0]
    scaled = (tuples * width).reshape(1, M, k, n)
    out = np.empty(idx.shape[0])
    chunk = max(1, 200_000 // M)
    for start in range(0, idx.shape[0], chunk):
        lo = lows[start:start + chunk]
        pts = lo[:, None, None, :] + scaled
        mags = ev.magnitude(pts.reshape(-1, k * n)).reshape(lo.shape[0], M)
        out[start:start + lo.shape[0]] = mags.max(axis=1)
    return out


def cover_upper(
    phi: PhiSpec,
    sigma: float,
    E: Box,
    grid_level: int | Sequence[int],
    tuples_per_cell: int = 256,
    seed: int = 0,
    weights: Sequence[float] | None = None,
    params: Sequence = (),
) -> CoverEstimate:
    """``sum c_i S(cell_i)^sigma`` over a dyadic grid (``2^level`` cells per axis).

    ``grid_level`` may be a per-axis tuple of levels for anisotropic grids.
    ``weights`` (one per cell, row-major) replaces the uniform ``c_i = 1``.
    """
    if not isinstance(E, Box):
        raise ValueError("cover_upper needs a box")
    if E.dim != phi.n:
        raise ValueError("box dimension does not match Phi")
    counts = grid_counts(phi.n, grid_level)
    tuples = unit_tuples(phi.n, phi.k, tuples_per_cell, seed)
    sups = cell_sups(phi, E, counts, tuples, params)
    powered = sups ** sigma
    label = "uniform"
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != powered.shape or np.any(w < 0):
            raise ValueError("need one nonnegative weight per cell")
        powered = powered * w
        label = "custom"
    width = (E.hi - E.lo) / np.asarray(counts)
    delta = float(np.linalg.norm(width))
    return CoverEstimate(float(sigma), delta, math.fsum(powered), counts, sups.size, tuples.shape[0], label, seed, sups)


def cover_profile(phi, sigma, E, levels: Sequence, **kwargs) -> dict:
    """Cover values over several levels and the log2-slope between consecutive ones."""
    values = [cover_upper(phi, sigma, E, lv, **kwargs).value for lv in levels]
    slopes = []
    for a, b in zip(values, values[1:]):
        slopes.append(math.log2(b / a) if a > 0 and b > 0 else float("nan"))
    return {"levels": [lv if isinstance(lv, int) else list(lv) for lv in levels], "values": values, "log2_slopes": slopes}


@dataclass
class ComparabilityReport:
    sigma: float
    cover_value: float
    density_sum: float
    ratio: float
    both_vanish: bool
    window: tuple[float, float] | None
    within_window: bool | None
    grid_level: object
    density_level: int

    def to_json(self):
        return {
            "sigma": self.sigma,
            "cover_value": self.cover_value,
            "density_riemann_sum": self.density_sum,
            "ratio": self.ratio if math.isfinite(self.ratio) else None,
            "both_vanish": self.both_vanish,
            "window": list(self.window) if self.window else None,
            "within_window": self.within_window,
            "grid_level": self.grid_level,
            "density_level": self.density_level,
        }


def density_comparability_check(
    phi: PhiSpec,
    q: int,
    E: Box,
    grid_level: int | Sequence[int],
    density_level: int | None = None,
    starts: int = 16,
    seed: int = 0,
    window: tuple[float, float] | None = None,
    vanish_tol: float = 1e-6,
    cover_vanish: float | None = None,
) -> ComparabilityReport:
    """Cover value at ``sigma = n/q`` against the midpoint Riemann sum of the density over E.

    The density is evaluated at the centers of a coarser grid with
    ``2^density_level`` cells per axis (default: the cover level capped at 2
    for n <= 2, a single cell otherwise).  ``both_vanish`` is set when the
    density sum is below ``vanish_tol`` and the cover value is below
    ``cover_vanish`` (default a quarter of |E|).
    """
    n = phi.n
    sigma = n / q
    cover = cover_upper(phi, sigma, E, grid_level, seed=seed)
    if density_level is None:
        base = grid_level if isinstance(grid_level, (int, np.integer)) else min(grid_level)
        density_level = min(int(base), 2) if n <= 2 else 0
    cells = E.subdivide((2 ** density_level,) * n)
    total = 0.0
    for cell in cells:
        center = (cell.lo + cell.hi) / 2
        rep = density_infimum(phi, q, center, starts=starts, seed=seed)
        total += rep.upper * cell.volume()
    if total > vanish_tol:
        ratio = cover.value / total
    else:
        ratio = math.inf if cover.value > 0 else float("nan")
    if cover_vanish is None:
        cover_vanish = 0.25 * E.volume()
    both = total <= vanish_tol and cover.value <= cover_vanish
    within = None
    if window is not None and math.isfinite(ratio):
        within = window[0] <= ratio <= window[1]
    level = grid_level if isinstance(grid_level, (int, np.integer)) else list(grid_level)
    return ComparabilityReport(sigma, cover.value, total, ratio, both, window, within, level, density_level)


__all__ = [
    "ComparabilityReport",
    "CoverEstimate",
    "WINDOWS",
    "cell_sups",
    "cover_profile",
    "cover_upper",
    "density_comparability_check",
    "grid_counts",
    "unit_tuples",
]
