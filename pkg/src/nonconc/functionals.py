"""Nonconcentration functionals and the constructive Chebyshev set.

For a set ``E`` and a measure ``mu``:

    S(E) = sup over (x_1..x_k) in E^k of |Phi(x_1, .., x_k)|
    A(E) = integral over E^k of |Phi| d mu(x_1) .. d mu(x_k)

``S`` is estimated from below (a maximum over evaluated tuples), ``A`` by
Monte Carlo with a standard error.  ``constant_sweep`` turns both into the
implied constants ``c' = S / mu(E)^s`` and ``c = A / mu(E)^(k+s)`` over a
finite family of sets, so its minima are family-restricted estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .geometry import PhiSpec
from .poly import CompiledPoly, Polynomial, multiindices

VOLUME_SAMPLES = 200_000
SHARD = 50_000
# relative determinant gain below which a Chebyshev sweep counts as converged
SWEEP_GAIN = 1e-6


# ---------------------------------------------------------------------------
# sets


class SetSpec:
    """Bounded subset of R^dim with a volume routine and a uniform sampler."""

    dim: int

    def volume(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project(self, pts: np.ndarray) -> np.ndarray:
        """Map arbitrary points to points of the set (identity on the set)."""
        raise NotImplementedError

    def vertices(self) -> np.ndarray:
        """Extreme candidates for the sup search (possibly empty)."""
        return np.zeros((0, self.dim))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(data: dict) -> "SetSpec":
        kind = data.get("type")
        if kind == "box":
            return Box(data["lo"], data["hi"])
        if kind == "affine":
            return AffineImage(data["matrix"], data["offset"], SetSpec.from_json(data["base"]))
        if kind == "union":
            return Union([SetSpec.from_json(p) for p in data["parts"]])
        if kind == "predicate":
            ineqs = [Polynomial.from_json(p) for p in data["inequalities"]]
            return Predicate(ineqs, SetSpec.from_json(data["box"]))
        raise ValueError(f"unknown set type {kind!r}")


class Box(SetSpec):
    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        self.lo = np.asarray(lo, dtype=float).reshape(-1)
        self.hi = np.asarray(hi, dtype=float).reshape(-1)
        if self.lo.shape != self.hi.shape:
            raise ValueError("lo and hi must have the same length")
        if np.any(self.lo > self.hi):
            raise ValueError("box needs lo <= hi coordinatewise")
        self.dim = self.lo.size

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def sample(self, rng, count):
        return self.lo + (self.hi - self.lo) * rng.random((count, self.dim))

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def project(self, pts):
        return np.clip(pts, self.lo, self.hi)

    def vertices(self):
        if self.dim > 12:
            return np.zeros((0, self.dim))
        corners = np.array(list(product((0, 1), repeat=self.dim)), dtype=float)
        return np.unique(self.lo + corners * (self.hi - self.lo), axis=0)

    def bounds(self):
        return self.lo.copy(), self.hi.copy()

    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def scaled(self, factor: float, center: Sequence[float] | None = None) -> "Box":
        c = (self.lo + self.hi) / 2 if center is None else np.asarray(center, dtype=float)
        return Box(c + factor * (self.lo - c), c + factor * (self.hi - c))

    def subdivide(self, counts: Sequence[int]) -> list["Box"]:
        """Uniform grid of ``counts[i]`` cells along axis i, in row-major cell order."""
        counts = list(counts)
        edges = [np.linspace(self.lo[i], self.hi[i], counts[i] + 1) for i in range(self.dim)]
        cells = []
        for idx in product(*(range(c) for c in counts)):
            lo = [edges[i][j] for i, j in enumerate(idx)]
            hi = [edges[i][j + 1] for i, j in enumerate(idx)]
            cells.append(Box(lo, hi))
        return cells

    def to_json(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def __repr__(self):
        return f"Box({self.lo.tolist()}, {self.hi.tolist()})"


class AffineImage(SetSpec):
    """``{A y + b : y in base}`` with ``A`` nonsingular."""

    def __init__(self, matrix, offset, base: SetSpec):
        self.A = np.asarray(matrix, dtype=float)
        self.b = np.asarray(offset, dtype=float).reshape(-1)
        self.base = base
        self.dim = base.dim
        if self.A.shape != (self.dim, self.dim) or self.b.size != self.dim:
            raise ValueError("matrix and offset must match the base dimension")
        self.det = float(np.linalg.det(self.A))
        if self.det == 0:
            raise ValueError("affine matrix must be nonsingular")
        self.Ainv = np.linalg.inv(self.A)

    def _fwd(self, y):
        return y @ self.A.T + self.b

    def _back(self, x):
        return (x - self.b) @ self.Ainv.T

    def volume(self):
        return abs(self.det) * self.base.volume()

    def sample(self, rng, count):
        return self._fwd(self.base.sample(rng, count))

    def contains(self, pts):
        return self.base.contains(self._back(np.atleast_2d(pts)))

    def project(self, pts):
        return self._fwd(self.base.project(self._back(pts)))

    def vertices(self):
        v = self.base.vertices()
        return self._fwd(v) if v.size else v

    def bounds(self):
        v = self.vertices()
        if v.size:
            return v.min(axis=0), v.max(axis=0)
        pts = self.sample(np.random.default_rng(0), 10_000)
        return pts.min(axis=0), pts.max(axis=0)

    def to_json(self):
        return {"type": "affine", "matrix": self.A.tolist(), "offset": self.b.tolist(), "base": self.base.to_json()}


class Union(SetSpec):
    """Finite union; overlaps are handled by multiplicity weighting."""

    def __init__(self, parts: Sequence[SetSpec]):
        if not parts:
            raise ValueError("empty union")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise ValueError("union parts must share one dimension")
        self.parts = list(parts)
        self.dim = dims.pop()
        self._volume = None

    def _multiplicity(self, pts):
        return sum(p.contains(pts).astype(int) for p in self.parts)

    def _box_union_volume(self) -> float | None:
        """Exact area of a union of boxes by coordinate compression (None if some part is not a box)."""
        if not all(isinstance(p, Box) for p in self.parts):
            return None
        edges = [np.unique(np.concatenate([[p.lo[i], p.hi[i]] for p in self.parts])) for i in range(self.dim)]
        if np.prod([len(e) - 1 for e in edges]) > 1_000_000:
            return None
        mids = np.array(list(product(*[(e[:-1] + e[1:]) / 2 for e in edges])))
        sizes = np.prod(np.array(list(product(*[np.diff(e) for e in edges]))), axis=1)
        return math.fsum(sizes[self.contains(mids)])

    def volume(self):
        if self._volume is None:
            exact = self._box_union_volume()
            if exact is not None:
                self._volume = exact
            else:
                # E[1 / multiplicity] under each part's uniform law
                rng = np.random.default_rng(0)
                total = 0.0
                for p in self.parts:
                    v = p.volume()
                    if v > 0:
                        total += v * float(np.mean(1.0 / self._multiplicity(p.sample(rng, VOLUME_SAMPLES))))
                self._volume = total
        return self._volume

    def sample(self, rng, count):
        vols = np.array([p.volume() for p in self.parts])
        if vols.sum() == 0:
            vols = np.ones_like(vols)
        probs = vols / vols.sum()
        out = np.empty((0, self.dim))
        while out.shape[0] < count:
            need = count - out.shape[0]
            choice = rng.choice(len(self.parts), size=2 * need + 16, p=probs)
            pts = np.empty((choice.size, self.dim))
            for i, p in enumerate(self.parts):
                sel = choice == i
                if sel.any():
                    pts[sel] = p.sample(rng, int(sel.sum()))
            keep = rng.random(choice.size) < 1.0 / self._multiplicity(pts)
            out = np.vstack([out, pts[keep]])
        return out[:count]

    def contains(self, pts):
        return self._multiplicity(np.atleast_2d(pts)) > 0

    def project(self, pts):
        pts = np.atleast_2d(pts)
        cands = np.stack([p.project(pts) for p in self.parts])
        dist = np.linalg.norm(cands - pts[None], axis=2)
        return cands[np.argmin(dist, axis=0), np.arange(pts.shape[0])]

    def vertices(self):
        vs = [p.vertices() for p in self.parts]
        vs = [v for v in vs if v.size]
        return np.unique(np.vstack(vs), axis=0) if vs else np.zeros((0, self.dim))

    def bounds(self):
        bs = [p.bounds() for p in self.parts]
        return np.min([b[0] for b in bs], axis=0), np.max([b[1] for b in bs], axis=0)

    def to_json(self):
        return {"type": "union", "parts": [p.to_json() for p in self.parts]}


class Predicate(SetSpec):
    """``{x in box : p(x) >= 0 for every listed p}``; volume and sampling by rejection."""

    def __init__(self, inequalities: Sequence[Polynomial], box: Box):
        self.inequalities = list(inequalities)
        self.box = box
        self.dim = box.dim
        if any(p.nvars != self.dim for p in self.inequalities):
            raise ValueError("inequalities must be polynomials in the box coordinates")
        self._compiled = CompiledPoly(self.inequalities) if self.inequalities else None
        self._volume = None

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        inside = self.box.contains(pts)
        if self._compiled is not None:
            inside &= np.all(self._compiled(pts) >= 0, axis=1)
        return inside

    def volume(self):
        if self._volume is None:
            pts = self.box.sample(np.random.default_rng(0), VOLUME_SAMPLES)
            self._volume = self.box.volume() * float(np.mean(self.contains(pts)))
        return self._volume

    def sample(self, rng, count):
        out = np.empty((0, self.dim))
        tries = 0
        while out.shape[0] < count:
            pts = self.box.sample(rng, max(4 * count, 1024))
            out = np.vstack([out, pts[self.contains(pts)]])
            tries += 1
            if tries > 200 and out.shape[0] == 0:
                raise ValueError("predicate set appears empty: rejection sampling found no points")
        return out[:count]

    def project(self, pts):
        return self.box.project(pts)

    def vertices(self):
        v = self.box.vertices()
        return v[self.contains(v)] if v.size else v

    def bounds(self):
        return self.box.bounds()

    def to_json(self):
        return {"type": "predicate", "inequalities": [p.to_json() for p in self.inequalities], "box": self.box.to_json()}


# ---------------------------------------------------------------------------
# measures


class MeasureSpec:
    def mass(self, E: SetSpec) -> float:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(data: dict) -> "MeasureSpec":
        kind = data.get("type", "lebesgue")
        if kind == "lebesgue":
            return Lebesgue()
        if kind == "density":
            return DensityWeighted(Polynomial.from_json(data["density"]))
        if kind == "discrete":
            return Discrete(data["points"], data["weights"])
        raise ValueError(f"unknown measure type {kind!r}")


@dataclass
class Lebesgue(MeasureSpec):
    def mass(self, E):
        return E.volume()

    def to_json(self):
        return {"type": "lebesgue"}


class DensityWeighted(MeasureSpec):
    """``w(x) dx`` for a nonnegative polynomial or vectorized callable ``w``."""

    def __init__(self, density: Polynomial | Callable[[np.ndarray], np.ndarray]):
        self.density = density
        if isinstance(density, Polynomial):
            compiled = CompiledPoly([density])
            self._w = lambda pts: compiled(pts)[:, 0]
        else:
            self._w = density

    def weight(self, pts) -> np.ndarray:
        w = np.asarray(self._w(np.atleast_2d(pts)), dtype=float)
        if np.any(w < 0):
            raise ValueError("density must be nonnegative")
        return w

    def mass(self, E):
        pts = E.sample(np.random.default_rng(0), VOLUME_SAMPLES)
        return E.volume() * float(np.mean(self.weight(pts)))

    def to_json(self):
        if isinstance(self.density, Polynomial):
            return {"type": "density", "density": self.density.to_json()}
        return {"type": "density", "density": "callable"}


class Discrete(MeasureSpec):
    def __init__(self, points, weights):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.weights = np.asarray(weights, dtype=float).reshape(-1)
        if self.weights.size != self.points.shape[0]:
            raise ValueError("one weight per point")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")

    def restrict(self, E: SetSpec | None) -> tuple[np.ndarray, np.ndarray]:
        if E is None:
            return self.points, self.weights
        inside = E.contains(self.points)
        return self.points[inside], self.weights[inside]

    def mass(self, E=None):
        return math.fsum(self.restrict(E)[1])

    def to_json(self):
        return {"type": "discrete", "points": self.points.tolist(), "weights": self.weights.tolist()}


# ---------------------------------------------------------------------------
# sup functional


@dataclass
class SupEstimate:
    """Lower bound for the sup: the best value over evaluated tuples."""

    value: float
    argmax: list[list[float]]
    n_samples: int
    seed: int

    def __float__(self):
        return self.value

    def to_json(self):
        return {"value": self.value, "argmax": self.argmax, "n_samples": self.n_samples, "seed": self.seed}


def _evaluator(phi: PhiSpec, params: Sequence):
    if phi.params:
        phi = phi.freeze(params)
    return phi.compiled()


def _shard_counts(budget: int) -> list[int]:
    shards = max(1, math.ceil(budget / SHARD))
    base, extra = divmod(budget, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def sup_functional(
    phi: PhiSpec,
    E: SetSpec,
    budget: int = 200_000,
    seed: int = 0,
    polish: bool = True,
    params: Sequence = (),
    tuples: np.ndarray | None = None,
) -> SupEstimate:
    """Max of |Phi| over sampled k-tuples from E (vertex tuples first), then a projected polish.

    ``tuples`` (shape (N, k, n)) replaces the random draw, which lets nested
    sets share evaluation points.
    """
    if E.dim != phi.n:
        raise ValueError(f"set dimension {E.dim} does not match Phi's n = {phi.n}")
    ev = _evaluator(phi, params)
    k, n = phi.k, phi.n
    best_val, best_t = -math.inf, None
    count = 0

    def consider(batch):
        nonlocal best_val, best_t, count
        if batch.shape[0] == 0:
            return
        mags = ev.magnitude(batch.reshape(batch.shape[0], -1))
        i = int(np.argmax(mags))
        count += batch.shape[0]
        if mags[i] > best_val:
            best_val, best_t = float(mags[i]), batch[i].copy()

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if tuples is not None:
        consider(np.asarray(tuples, dtype=float).reshape(-1, k, n))
    else:
        verts = E.vertices()
        if verts.shape[0]:
            nv = verts.shape[0]
            if nv ** k <= budget // 2:
                idx = np.array(list(product(range(nv), repeat=k)))
            else:
                idx = rng.integers(0, nv, size=(budget // 2, k))
            consider(verts[idx])
        shards = _shard_counts(max(budget - count, 0))
        for c, child in zip(shards, np.random.SeedSequence(seed).spawn(len(shards))):
            if c == 0:
                continue
            pts = E.sample(np.random.default_rng(child), c * k)
            consider(pts.reshape(c, k, n))
    if best_t is None:
        raise ValueError("no tuples evaluated")
    if polish and best_val < math.inf:
        def neg(flat):
            pts = E.project(flat.reshape(k, n))
            if not np.all(E.contains(pts)):
                return 0.0
            return -float(ev.magnitude(pts.reshape(1, -1))[0])

        res = minimize(neg, best_t.reshape(-1), method="Nelder-Mead",
                       options={"maxiter": 200 * k * n, "xatol": 1e-12, "fatol": 1e-14})
        cand = E.project(res.x.reshape(k, n))
        if np.all(E.contains(cand)):
            val = float(ev.magnitude(cand.reshape(1, -1))[0])
            count += res.nfev
            if val > best_val:
                best_val, best_t = val, cand
    return SupEstimate(best_val, best_t.tolist(), count, seed)


# ---------------------------------------------------------------------------
# integral functional


@dataclass
class IntEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int
    exact: bool = False

    def __float__(self):
        return self.value

    def to_json(self):
        return {"value": self.value, "stderr": self.stderr, "n_samples": self.n_samples, "seed": self.seed, "exact": self.exact}


def _stratified_box(ev, E: Box, k: int, budget: int, rng) -> tuple[float, float, int]:
    n = E.dim
    D = k * n
    per_axis = max(1, int((budget / 8) ** (1.0 / D)))
    H = per_axis ** D
    m = max(2, budget // H)
    lo = np.tile(E.lo, k)
    width = np.tile(E.hi - E.lo, k) / per_axis
    cells = np.array(list(product(range(per_axis), repeat=D)), dtype=float)
    vol = E.volume() ** k
    means = np.empty(H)
    varis = np.empty(H)
    for start in range(0, H, 4096):
        block = cells[start:start + 4096]
        u = rng.random((block.shape[0], m, D))
        pts = lo + (block[:, None, :] + u) * width
        vals = ev.magnitude(pts.reshape(-1, D)).reshape(block.shape[0], m)
        means[start:start + block.shape[0]] = vals.mean(axis=1)
        varis[start:start + block.shape[0]] = vals.var(axis=1, ddof=1)
    value = vol * float(means.mean())
    stderr = vol * math.sqrt(float(varis.sum()) / (m * H * H))
    return value, stderr, H * m


def int_functional(
    phi: PhiSpec,
    mu: MeasureSpec,
    E: SetSpec,
    budget: int = 1_000_000,
    seed: int = 0,
    stratified: bool = False,
    params: Sequence = (),
) -> IntEstimate:
    """Monte Carlo estimate of the integral of |Phi| over E^k against mu^k, with standard error.

    Discrete measures are summed exactly when the number of k-tuples fits in
    the budget.
    """
    if E.dim != phi.n:
        raise ValueError(f"set dimension {E.dim} does not match Phi's n = {phi.n}")
    ev = _evaluator(phi, params)
    k, n = phi.k, phi.n
    if phi.body.is_zero():
        return IntEstimate(0.0, 0.0, 0, seed, exact=True)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if isinstance(mu, Discrete):
        pts, w = mu.restrict(E)
        N = pts.shape[0]
        if N == 0:
            return IntEstimate(0.0, 0.0, 0, seed, exact=True)
        if N ** k <= budget:
            total = 0.0
            idx_all = np.array(list(product(range(N), repeat=k)))
            for start in range(0, idx_all.shape[0], SHARD):
                idx = idx_all[start:start + SHARD]
                mags = ev.magnitude(pts[idx].reshape(idx.shape[0], -1))
                total += float(np.sum(mags * np.prod(w[idx], axis=1)))
            return IntEstimate(total, 0.0, int(N ** k), seed, exact=True)
        mass = float(w.sum())
        idx = rng.choice(N, size=(budget, k), p=w / mass)
        vals = ev.magnitude(pts[idx].reshape(budget, -1))
        return IntEstimate(mass ** k * float(vals.mean()), mass ** k * float(vals.std(ddof=1)) / math.sqrt(budget), budget, seed)
    if stratified and isinstance(E, Box) and isinstance(mu, Lebesgue):
        value, stderr, used = _stratified_box(ev, E, k, budget, rng)
        return IntEstimate(value, stderr, used, seed)
    vol = E.volume()
    total = 0.0
    total_sq = 0.0
    used = 0
    for c, child in zip(_shard_counts(budget), np.random.SeedSequence(seed).spawn(len(_shard_counts(budget)))):
        r = np.random.default_rng(child)
        pts = E.sample(r, c * k)
        vals = ev.magnitude(pts.reshape(c, -1))
        if isinstance(mu, DensityWeighted):
            vals = vals * np.prod(mu.weight(pts).reshape(c, k), axis=1)
        elif not isinstance(mu, Lebesgue):
            raise ValueError(f"unsupported measure {type(mu).__name__}")
        total += float(vals.sum())
        total_sq += float((vals ** 2).sum())
        used += c
    mean = total / used
    var = max(total_sq / used - mean * mean, 0.0) * used / max(used - 1, 1)
    scale = vol ** k
    return IntEstimate(scale * mean, scale * math.sqrt(var / used), used, seed)


# ---------------------------------------------------------------------------
# constant sweep


@dataclass
class FunctionalReport:
    """Both functionals on one set and the implied constants."""

    mu_E: float
    S_estimate: float
    A_estimate: float
    A_stderr: float
    s: float
    k: int
    c_prime: float
    c: float
    c_stderr: float
    sup_samples: int
    int_samples: int
    seed: int
    label: str = ""

    def to_json(self):
        return {
            "label": self.label,
            "mu_E": self.mu_E,
            "S_estimate": self.S_estimate,
            "S_is_lower_bound": True,
            "A_estimate": self.A_estimate,
            "A_stderr": self.A_stderr,
            "s": self.s,
            "k": self.k,
            "c_prime": self.c_prime,
            "c": self.c,
            "c_stderr": self.c_stderr,
            "sup_samples": self.sup_samples,
            "int_samples": self.int_samples,
            "seed": self.seed,
        }


def functional_report(phi, mu, E, s, sup_budget=200_000, int_budget=1_000_000, seed=0, label="", params=()) -> FunctionalReport:
    s = float(s)
    mass = mu.mass(E)
    sup = sup_functional(phi, E, sup_budget, seed, params=params)
    integ = int_functional(phi, mu, E, int_budget, seed, params=params)
    k = phi.k
    return FunctionalReport(
        mu_E=mass,
        S_estimate=sup.value,
        A_estimate=integ.value,
        A_stderr=integ.stderr,
        s=s,
        k=k,
        c_prime=sup.value / mass ** s,
        c=integ.value / mass ** (k + s),
        c_stderr=integ.stderr / mass ** (k + s),
        sup_samples=sup.n_samples,
        int_samples=integ.n_samples,
        seed=seed,
        label=label,
    )


@dataclass
class SweepTable:
    rows: list[FunctionalReport]
    min_c_prime: float
    min_c: float
    min_c_stderr: float
    chain_holds: bool
    ratio: float
    dominated_rows: bool
    skipped: list[int] = field(default_factory=list)

    def to_json(self):
        return {
            "family_restricted": True,
            "rows": [r.to_json() for r in self.rows],
            "min_c_prime": self.min_c_prime,
            "min_c": self.min_c,
            "min_c_stderr": self.min_c_stderr,
            "chain_holds": self.chain_holds,
            "min_c_over_min_c_prime": self.ratio,
            "every_row_dominated": self.dominated_rows,
            "skipped": self.skipped,
        }


def constant_sweep(
    phi: PhiSpec,
    mu: MeasureSpec,
    family: Sequence[SetSpec],
    s,
    sup_budget: int = 200_000,
    int_budget: int = 1_000_000,
    seed: int = 0,
    labels: Sequence[str] | None = None,
    params: Sequence = (),
) -> SweepTable:
    """Per-set implied constants over a finite family and the empirical chain ``min c <= min c'``.

    Every row is also checked for ``A <= S mu(E)^k`` within 3 standard
    errors.  Sets of zero measure are skipped with a warning.
    """
    rows, skipped = [], []
    children = np.random.SeedSequence(seed).generate_state(len(family))
    for i, E in enumerate(family):
        if mu.mass(E) <= 0:
            warnings.warn(f"family member {i} has zero measure; skipped")
            skipped.append(i)
            continue
        label = labels[i] if labels else f"set-{i}"
        rows.append(functional_report(phi, mu, E, s, sup_budget, int_budget, int(children[i]), label, params))
    if not rows:
        raise ValueError("every family member has zero measure")
    best_c = min(rows, key=lambda r: r.c)
    min_cp = min(r.c_prime for r in rows)
    chain = best_c.c <= min_cp + 3 * best_c.c_stderr
    dominated = all(r.A_estimate <= r.S_estimate * r.mu_E ** r.k + 3 * r.A_stderr for r in rows)
    ratio = best_c.c / min_cp if min_cp > 0 else math.inf
    return SweepTable(rows, min_cp, best_c.c, best_c.c_stderr, chain, ratio, dominated, skipped)


# ---------------------------------------------------------------------------
# Chebyshev set for a discrete measure


def monomial_exponents(nvars: int, degree: int) -> list[tuple[int, ...]]:
    return [m for d in range(degree + 1) for m in multiindices(nvars, d)]


def evaluation_matrix(points: np.ndarray, exponents: Sequence[Sequence[int]]) -> np.ndarray:
    pts = np.atleast_2d(points)
    E = np.asarray(exponents, dtype=int)
    return np.prod(pts[:, None, :] ** E[None, :, :], axis=2)


def _max_linear_on_l1_ball(g: np.ndarray, Vw: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Maximize ``g.a`` subject to ``sum_i w_i |(Vw a)_i| <= 1``.

    Solved through the small dual (largest ``lam`` with ``Vw^T (w y) = lam g``,
    ``|y_i| <= 1``), whose equality multipliers give the maximizer.  Falls back
    to the primal LP if the recovered point is off.
    """
    N, d1 = Vw.shape
    g = g / np.linalg.norm(g)
    c = np.zeros(N + 1)
    c[-1] = -1.0
    A_eq = np.hstack([(Vw * w[:, None]).T, -g[:, None]])
    res = linprog(c, A_eq=A_eq, b_eq=np.zeros(d1), bounds=[(-1, 1)] * N + [(0, None)], method="highs")
    if res.status == 0 and res.x[-1] > 0:
        a = np.asarray(res.eqlin.marginals, dtype=float)
        norm = float(w @ np.abs(Vw @ a))
        if norm > 0:
            a = a / norm
            if g @ a < 0:
                a = -a
            if abs(g @ a - 1.0 / res.x[-1]) <= 1e-7 * abs(g @ a):
                return a
    return _max_linear_primal(g, Vw, w)


def _max_linear_primal(g: np.ndarray, Vw: np.ndarray, w: np.ndarray) -> np.ndarray:
    N, d1 = Vw.shape
    c = np.concatenate([-g, np.zeros(N)])
    A_ub = np.block([
        [Vw, -np.eye(N)],
        [-Vw, -np.eye(N)],
        [np.zeros((1, d1)), w[None, :]],
    ])
    b_ub = np.concatenate([np.zeros(2 * N), [1.0]])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * d1 + [(0, None)] * N, method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return res.x[:d1]


def _cofactor_vector(A: np.ndarray, j: int) -> np.ndarray:
    # det(A with column j replaced by a) = g . a
    d = A.shape[0]
    g = np.empty(d)
    for i in range(d):
        minor = np.delete(np.delete(A, i, axis=0), j, axis=1)
        g[i] = (-1) ** (i + j) * (np.linalg.det(minor) if minor.size else 1.0)
    return g


@dataclass
class ChebyshevResult:
    exponents: list[tuple[int, ...]]
    basis: np.ndarray  # (D, d1) monomial coefficients of f_1..f_d1
    d: int  # dimension of the function space on the atoms
    d1: int
    tau: float
    mask: np.ndarray  # atoms in E_tau
    null_atoms: np.ndarray  # atoms where some function with zero integral is nonzero
    complement_mass: float
    determinant: float
    max_cramer: float
    verification: dict

    def to_json(self):
        return {
            "exponents": [list(e) for e in self.exponents],
            "basis": self.basis.tolist(),
            "d": self.d,
            "d1": self.d1,
            "tau": self.tau,
            "E_tau_atoms": int(self.mask.sum()),
            "null_atoms": int(self.null_atoms.sum()),
            "complement_mass": self.complement_mass,
            "complement_bound": 1.0 / self.tau,
            "determinant": self.determinant,
            "max_cramer_coefficient": self.max_cramer,
            "verification": self.verification,
        }


def _row_space(V: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    if V.size == 0:
        return np.zeros((V.shape[1], 0))
    _, sv, Wt = np.linalg.svd(V, full_matrices=False)
    rank = int(np.sum(sv > rtol * max(sv[0], 1e-300)))
    return Wt[:rank].T


def chebyshev_set(
    points,
    weights,
    degree: int,
    tau: float,
    restarts: int = 8,
    n_tests: int = 100,
    seed: int = 0,
    max_sweeps: int = 200,
) -> ChebyshevResult:
    """Constructive Chebyshev set for polynomials of degree <= ``degree`` on a discrete measure.

    The functions ``f_1..f_d1`` maximize ``|det|`` slot by slot over the unit
    ball of ``f -> sum w |f|``: each slot is an LP given the others, and the
    sweep stops when no slot improves.  At that point every Cramer
    coefficient of a unit-norm ``f`` is at most 1, which is the property the
    bound needs; it is measured on the test functions rather than assumed.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float).reshape(-1)
    if tau <= 0:
        raise ValueError("tau must be positive")
    exps = monomial_exponents(pts.shape[1], degree)
    V = evaluation_matrix(pts, exps)
    pos = w > 0
    span_all = _row_space(V)
    d = span_all.shape[1]
    F1 = _row_space(V[pos])  # complement of the zero-integral subspace
    d1 = F1.shape[1]
    # functions vanishing on the support: coefficients in span_all orthogonal to F1
    proj = span_all - F1 @ (F1.T @ span_all)
    F0 = _row_space(proj.T) if d > d1 else np.zeros((len(exps), 0))
    if F0.shape[1]:
        null_atoms = np.abs(V @ F0).sum(axis=1) > 1e-9 * max(1.0, float(np.abs(V).max()))
    else:
        null_atoms = np.zeros(pts.shape[0], dtype=bool)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    Vw = V[pos] @ F1
    wp = w[pos]
    best_A, best_det = None, -1.0
    if d1:
        for _ in range(restarts):
            A = rng.standard_normal((d1, d1))
            A /= np.array([wp @ np.abs(Vw @ A[:, j]) for j in range(d1)])
            det = abs(np.linalg.det(A))
            for _sweep in range(max_sweeps):
                improved = False
                for j in range(d1):
                    g = _cofactor_vector(A, j)
                    a = _max_linear_on_l1_ball(g, Vw, wp)
                    new = abs(g @ a)
                    if new > det * (1 + SWEEP_GAIN):
                        A[:, j] = a if g @ a > 0 else -a
                        det = abs(np.linalg.det(A))
                        improved = True
                if not improved:
                    break
            if det > best_det:
                best_A, best_det = A.copy(), det
    basis = F1 @ best_A if d1 else np.zeros((len(exps), 0))
    fvals = V @ basis
    total = np.abs(fvals).sum(axis=1)
    mask = (total <= tau * d) & ~null_atoms
    complement = math.fsum(w[~mask])

    # verification on random polynomials of the full space
    max_ratio = 0.0
    max_cramer = 0.0
    passed = complement < 1.0 / tau
    for _ in range(n_tests):
        c = rng.standard_normal(len(exps))
        vals = V @ c
        integral = math.fsum(w * np.abs(vals))
        sup = float(np.abs(vals[mask]).max()) if mask.any() else 0.0
        if integral > 0:
            ratio = sup / (tau * d * integral)
        else:
            ratio = 0.0 if sup <= 1e-9 * max(1.0, float(np.abs(c).max())) else math.inf
        max_ratio = max(max_ratio, ratio)
        if d1 and integral > 0:
            # Cramer coefficients of the support part of f in the basis
            coords = np.linalg.lstsq(Vw, vals[pos], rcond=None)[0]
            cram = np.linalg.solve(best_A, coords) * 1.0
            max_cramer = max(max_cramer, float(np.abs(cram).max()) / integral)
    passed = passed and max_ratio <= 1 + 1e-9
    verification = {
        "n_tests": n_tests,
        "max_sup_over_bound": max_ratio,
        "complement_mass_ok": complement < 1.0 / tau,
        "passed": bool(passed),
    }
    return ChebyshevResult(exps, basis, d, d1, float(tau), mask, null_atoms, complement, float(best_det), max_cramer, verification)


__all__ = [
    "AffineImage",
    "Box",
    "ChebyshevResult",
    "DensityWeighted",
    "Discrete",
    "FunctionalReport",
    "IntEstimate",
    "Lebesgue",
    "MeasureSpec",
    "Predicate",
    "SetSpec",
    "SupEstimate",
    "SweepTable",
    "Union",
    "chebyshev_set",
    "constant_sweep",
    "evaluation_matrix",
    "functional_report",
    "int_functional",
    "monomial_exponents",
    "sup_functional",
]
