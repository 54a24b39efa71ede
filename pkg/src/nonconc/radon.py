"""Desk-scale checks of the L^p bound for Radon-like averaging operators.

For a family ``gamma(t, x)`` with ``t in R^n`` and a set ``F in R^N1``,

    T chi_F(x) = |{t in t_window : gamma(t, x) in F and (t, x) in Omega}|

is computed by midpoint counting on a t-grid, and its ``L^p`` norm over the
x-window by the midpoint rule on an x-grid.  With ``p = k + s`` the bound to
check is ``||T chi_F||_p <= C delta^(-1/p) |F|^(k/p)``; the table reports
``rho(F) = ||T chi_F||_p delta^(1/p) / |F|^(k/p)`` and compares its maximum
with the case's cap.  Everything is truncated to the windows recorded in the
case, and caps are empirical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .density import order_q_data
from .diagonal import order_of_vanishing
from .functionals import Box, Lebesgue, SetSpec, Union, int_functional
from .geometry import GammaSpec, build_phi_jacobian, line_family

DOUBLING_TOL = 0.05


class OmegaTilde:
    """Cached-threshold region: ``(t, x)`` is inside iff the density of ``Phi_x`` at ``t`` exceeds ``threshold``.

    Points are snapped to a lattice of spacing ``resolution`` and the density
    is computed once per lattice cell.  Only n = 1 families are evaluated
    exactly (no optimization is needed there: the objective is scale
    invariant); other dimensions use the frame search with a small budget.
    """

    def __init__(self, gamma: GammaSpec, q: int, threshold: float, resolution: float = 0.25, starts: int = 8):
        self.gamma = gamma
        self.q = q
        self.threshold = float(threshold)
        self.resolution = float(resolution)
        self.starts = starts
        self.phi = build_phi_jacobian(gamma)
        self._cache: dict[tuple[int, ...], float] = {}

    def density(self, t: Sequence[float], x: Sequence[float]) -> float:
        from .density import QOrderError, density_infimum

        key = tuple(int(round(v / self.resolution)) for v in list(t) + list(x))
        if key not in self._cache:
            center = [Fraction(c) * Fraction(self.resolution) for c in key]
            n = self.gamma.n
            tc, xc = center[:n], center[n:]
            try:
                if n == 1:
                    data = order_q_data(self.phi, self.q, tc, params=xc)
                    value = data.objective(np.eye(1))
                else:
                    value = density_infimum(self.phi, self.q, tc, params=xc, starts=self.starts, maxiter=200).upper
            except QOrderError:
                value = 0.0
            self._cache[key] = value
        return self._cache[key]

    def mask(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Membership for arrays ``t`` (M, n) and ``x`` (N2,) or (M, N2)."""
        t = np.atleast_2d(t)
        x = np.broadcast_to(np.atleast_2d(x), (t.shape[0], self.gamma.N2))
        pts = np.hstack([t, x])
        keys = np.round(pts / self.resolution).astype(np.int64)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        n = self.gamma.n
        vals = np.array([self.density(u[:n] * self.resolution, u[n:] * self.resolution) for u in uniq])
        return vals[inv.reshape(-1)] > self.threshold

    def to_json(self):
        return {"type": "density_threshold", "q": self.q, "threshold": self.threshold, "resolution": self.resolution}


def build_omega_tilde(gamma: GammaSpec, q: int, c: float, delta: float, resolution: float = 0.25) -> OmegaTilde:
    """Region where the density of ``Phi_x`` at ``t`` exceeds ``c * delta^(n/q)``."""
    return OmegaTilde(gamma, q, c * delta ** (gamma.n / q), resolution)


@dataclass
class RadonCase:
    gamma: GammaSpec
    s: float
    delta: float
    t_window: Box
    x_window: Box
    omega_tilde: OmegaTilde | None = None
    cap: float | None = None
    name: str = ""

    @property
    def k(self) -> int:
        return self.gamma.k

    @property
    def p(self) -> float:
        return self.k + self.s

    def to_json(self):
        return {
            "name": self.name,
            "gamma": self.gamma.to_json(),
            "s": self.s,
            "delta": self.delta,
            "t_window": self.t_window.to_json(),
            "x_window": self.x_window.to_json(),
            "omega_tilde": self.omega_tilde.to_json() if self.omega_tilde else {"type": "full"},
            "cap": self.cap,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RadonCase":
        if data.get("gamma") == "line-family":
            gamma = line_family()
        else:
            gamma = GammaSpec.from_json(data["gamma"])
        case = cls(
            gamma=gamma,
            s=float(Fraction(str(data["s"]))),
            delta=float(Fraction(str(data["delta"]))),
            t_window=SetSpec.from_json(data["t_window"]),
            x_window=SetSpec.from_json(data["x_window"]),
            cap=data.get("cap"),
            name=data.get("name", ""),
        )
        om = data.get("omega_tilde", {"type": "full"})
        if om.get("type") == "density_threshold":
            case.omega_tilde = OmegaTilde(gamma, int(om["q"]), float(om["threshold"]), float(om.get("resolution", 0.25)))
        elif om.get("type") != "full":
            raise ValueError(f"unknown omega_tilde type {om.get('type')!r}")
        return case


def line_family_case(window: float = 4.0, cap: float | None = 2.0) -> RadonCase:
    """Lines ``(t, x1 + t x2)`` over ``t in [0, 1]``, ``x1 in [-W, 1 + W]``, ``x2 in [-W, W]``; s = 1, delta = 1/3."""
    return RadonCase(
        gamma=line_family(),
        s=1.0,
        delta=1.0 / 3.0,
        t_window=Box([0.0], [1.0]),
        x_window=Box([-window, -window], [1.0 + window, window]),
        cap=cap,
        name="line-family",
    )


def _midpoints(box: Box, counts: Sequence[int]) -> tuple[np.ndarray, float]:
    axes = [box.lo[i] + (np.arange(c) + 0.5) * (box.hi[i] - box.lo[i]) / c for i, c in enumerate(counts)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)
    cell = float(np.prod((box.hi - box.lo) / np.asarray(counts)))
    return grid, cell


def apply_operator(case: RadonCase, F: SetSpec, x, quad_n: int = 400) -> np.ndarray | float:
    """``T chi_F`` at one point (returns a float) or at many points ``x`` of shape (N, N2)."""
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim == 1
    xs = np.atleast_2d(x_arr)
    g = case.gamma
    tgrid, tcell = _midpoints(case.t_window, (quad_n,) * g.n)
    ev = g.compiled()
    out = np.empty(xs.shape[0])
    M = tgrid.shape[0]
    chunk = max(1, 400_000 // M)
    for start in range(0, xs.shape[0], chunk):
        xb = xs[start:start + chunk]
        B = xb.shape[0]
        pts = np.hstack([np.repeat(tgrid[None], B, axis=0).reshape(-1, g.n), np.repeat(xb, M, axis=0)])
        images = ev(pts)
        inside = F.contains(images)
        if case.omega_tilde is not None:
            inside &= case.omega_tilde.mask(pts[:, :g.n], pts[:, g.n:])
        out[start:start + B] = inside.reshape(B, M).sum(axis=1) * tcell
    return float(out[0]) if single else out


def lp_norm(case: RadonCase, F: SetSpec, p: float | None = None, x_n: int = 160, quad_n: int = 160) -> float:
    """Midpoint-rule ``L^p`` norm of ``T chi_F`` over the x-window."""
    p = case.p if p is None else p
    grid, cell = _midpoints(case.x_window, (x_n,) * case.gamma.N2)
    vals = apply_operator(case, F, grid, quad_n)
    return float((np.sum(vals ** p) * cell) ** (1.0 / p))


@dataclass
class RatioRow:
    index: int
    measure: float
    norm: float
    rho: float

    def to_json(self):
        return {"index": self.index, "measure": self.measure, "norm": self.norm, "rho": self.rho}


@dataclass
class RadonReport:
    case: str
    p: float
    rows: list[RatioRow]
    max_rho: float
    min_rho: float
    spread: float
    cap: float | None
    passed: bool
    warnings: list[str] = field(default_factory=list)
    x_n: int = 0
    quad_n: int = 0

    def to_json(self):
        return {
            "case": self.case,
            "p": self.p,
            "rows": [r.to_json() for r in self.rows],
            "max_rho": self.max_rho,
            "min_rho": self.min_rho,
            "max_over_min": self.spread,
            "cap": self.cap,
            "cap_kind": "empirical",
            "passed": self.passed,
            "warnings": self.warnings,
            "x_n": self.x_n,
            "quad_n": self.quad_n,
        }


def lp_ratio_check(
    case: RadonCase,
    F_family: Sequence[SetSpec],
    p: float | None = None,
    x_n: int = 160,
    quad_n: int = 160,
    doubling_subset: int = 3,
) -> RadonReport:
    """``rho(F)`` for every F; passes iff the maximum is at most the case cap.

    The first ``doubling_subset`` sets are recomputed at doubled resolution;
    a change above 5% adds a warning.
    """
    p = case.p if p is None else p
    k = case.k
    rows, warns = [], []
    for i, F in enumerate(F_family):
        meas = F.volume()
        norm = lp_norm(case, F, p, x_n, quad_n)
        rho = norm * case.delta ** (1.0 / p) / meas ** (k / p) if meas > 0 else 0.0
        rows.append(RatioRow(i, meas, norm, rho))
        if i < doubling_subset and norm > 0:
            fine = lp_norm(case, F, p, 2 * x_n, 2 * quad_n)
            if abs(fine - norm) > DOUBLING_TOL * norm:
                warns.append(f"set {i}: norm moved {abs(fine - norm) / norm:.1%} under doubled resolution")
    positive = [r.rho for r in rows if r.measure > 0]
    mx = max(positive, default=0.0)
    mn = min(positive, default=0.0)
    spread = mx / mn if mn > 0 else math.inf
    passed = case.cap is None or mx <= case.cap
    return RadonReport(case.name, p, rows, mx, mn, spread, case.cap, passed, warns, x_n, quad_n)


def scaling_exponent(case: RadonCase, F: Box | Union, factors: Sequence[float] = (1.0, 0.5, 0.25), x_n: int = 160, quad_n: int = 160) -> float:
    """Least-squares slope of ``log ||T chi_{lam F}||`` against ``log |lam F|`` (F scaled about the origin)."""
    logs_m, logs_n = [], []
    for lam in factors:
        G = _scale_set(F, lam)
        logs_m.append(math.log(G.volume()))
        logs_n.append(math.log(lp_norm(case, G, None, x_n, quad_n)))
    return float(np.polyfit(logs_m, logs_n, 1)[0])


def _scale_set(F, lam):
    if isinstance(F, Box):
        return Box(F.lo * lam, F.hi * lam)
    if isinstance(F, Union):
        return Union([_scale_set(p, lam) for p in F.parts])
    raise ValueError("only boxes and unions of boxes can be scaled")


def random_rectangle_union(rng: np.random.Generator, max_parts: int = 4, lo: float = 0.05, hi: float = 0.5) -> Union:
    """Union of 1..max_parts axis rectangles inside the unit square, sides in [lo, hi]."""
    parts = []
    for _ in range(int(rng.integers(1, max_parts + 1))):
        w, h = rng.uniform(lo, hi, size=2)
        x0, y0 = rng.uniform(0, 1 - w), rng.uniform(0, 1 - h)
        parts.append(Box([x0, y0], [x0 + w, y0 + h]))
    return Union(parts)


def random_interval_union(rng: np.random.Generator, window: Box, max_parts: int = 3) -> Union:
    """Union of 1..max_parts random boxes inside ``window``."""
    parts = []
    for _ in range(int(rng.integers(1, max_parts + 1))):
        a = rng.uniform(window.lo, window.hi)
        b = rng.uniform(window.lo, window.hi)
        parts.append(Box(np.minimum(a, b), np.maximum(a, b)))
    return Union(parts)


@dataclass
class SpotCheck:
    n_sets: int
    failures: int
    worst_margin: float
    rows: list[dict]

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json(self):
        return {"n_sets": self.n_sets, "failures": self.failures, "worst_margin_in_stderr": self.worst_margin, "passed": self.passed, "rows": self.rows}


def hypothesis_spot_check(
    case: RadonCase,
    x: Sequence[float],
    n_sets: int = 50,
    budget: int = 1_000_000,
    seed: int = 0,
) -> SpotCheck:
    """Check ``A(E) >= delta |E|^(k+s)`` for random E (unions of <= 3 boxes) in the slice at ``x``.

    ``A`` is the integral functional of ``Phi_x`` under Lebesgue measure; a
    set passes when the estimate is at least the target minus 3 standard
    errors.  With a density-threshold region, sets not contained in the
    slice (tested on sample points) are redrawn.
    """
    phi = build_phi_jacobian(case.gamma).freeze(x)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows, failures, worst = [], 0, math.inf
    exponent = case.k + case.s
    drawn = 0
    while len(rows) < n_sets:
        drawn += 1
        if drawn > 50 * n_sets:
            raise ValueError("could not draw sets inside the slice")
        E = random_interval_union(rng, case.t_window)
        if E.volume() <= 0:
            continue
        if case.omega_tilde is not None:
            pts = E.sample(rng, 64)
            if not case.omega_tilde.mask(pts, np.asarray(x, dtype=float)).all():
                continue
        est = int_functional(phi, Lebesgue(), E, budget, int(rng.integers(2 ** 32)))
        target = case.delta * E.volume() ** exponent
        margin = (est.value - target) / est.stderr if est.stderr > 0 else (math.inf if est.value >= target else -math.inf)
        ok = est.value >= target - 3 * est.stderr
        failures += 0 if ok else 1
        worst = min(worst, margin)
        rows.append({"measure": E.volume(), "A": est.value, "stderr": est.stderr, "target": target, "passed": ok})
    return SpotCheck(n_sets, failures, worst, rows)


def vanishing_order(case: RadonCase) -> int:
    return int(order_of_vanishing(build_phi_jacobian(case.gamma)).q)


__all__ = [
    "OmegaTilde",
    "RadonCase",
    "RadonReport",
    "RatioRow",
    "SpotCheck",
    "apply_operator",
    "build_omega_tilde",
    "hypothesis_spot_check",
    "line_family_case",
    "lp_norm",
    "lp_ratio_check",
    "random_interval_union",
    "random_rectangle_union",
    "scaling_exponent",
]
