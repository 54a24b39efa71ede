"""Polynomial families and the Jacobian functional built from them.

A family ``gamma(t, x)`` maps ``R^n x R^N2 -> R^N1`` with ``N2 = r*k`` and
``r = N1 - n``.  Its variables are ordered ``(t_1..t_n, x_1..x_N2)``.

From ``gamma`` we build the r-form ``omega(t, x)`` whose coefficient on
``dx_I`` (``I`` an increasing r-subset) is the determinant of the N1 x N1 matrix
``[d gamma/d x_I | d gamma/d t]``, and the scalar functional

    Phi_x(t_1, .., t_k) = omega(t_1,x) ^ ... ^ omega(t_k,x) / (dx_1 ^ ... ^ dx_N2)

in two independent ways: by expanding the wedge product over signed index
partitions, and as the determinant of the block Jacobian of
``(x, t_1..t_k) -> (gamma(t_1,x), .., gamma(t_k,x))``.

Sign convention: the Jacobian determinant is authoritative.  The two differ by
``(-1)^(r*n*k*(k-1)/2)`` (moving each t-column block past the later x-column
blocks), and the wedge route multiplies by that factor so both agree exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .poly import CompiledPoly, Polynomial, PolyVector, as_rational, det_poly_matrix

NORMS = ("max", "euclidean")


@dataclass(frozen=True)
class PhiSpec:
    """Polynomial map ``Phi : (R^n)^k -> R^m``, optionally with parameter variables.

    ``body`` lives in ``k*n + params`` variables: block ``j`` holds the point
    ``x_j`` (variables ``j*n .. j*n+n-1``), followed by the parameters.
    """

    n: int
    k: int
    body: PolyVector
    params: int = 0
    norm: str = "max"
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.body, PolyVector):
            object.__setattr__(self, "body", PolyVector(self.body))
        if self.n < 1 or self.k < 1 or self.params < 0:
            raise ValueError("need n >= 1, k >= 1, params >= 0")
        if self.body.nvars != self.k * self.n + self.params:
            raise ValueError(
                f"body has {self.body.nvars} variables, expected k*n + params = {self.k * self.n + self.params}"
            )
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")

    @property
    def m(self) -> int:
        return len(self.body)

    @property
    def nvars(self) -> int:
        return self.body.nvars

    @property
    def degree(self):
        return self.body.degree

    def block(self, j: int) -> range:
        return range(j * self.n, (j + 1) * self.n)

    @property
    def param_vars(self) -> range:
        return range(self.k * self.n, self.nvars)

    def freeze(self, values: Sequence) -> "PhiSpec":
        """Fix the parameters, giving a PhiSpec with ``params = 0``."""
        if len(values) != self.params:
            raise ValueError(f"expected {self.params} parameter values, got {len(values)}")
        if not self.params:
            return self
        assign = {self.k * self.n + i: as_rational(v) for i, v in enumerate(values)}
        keep = list(range(self.k * self.n))
        body = self.body.map(lambda p: p.substitute_values(assign).drop_variables(keep))
        return PhiSpec(self.n, self.k, body, 0, self.norm, self.name)

    def with_norm(self, norm: str) -> "PhiSpec":
        return PhiSpec(self.n, self.k, self.body, self.params, norm, self.name)

    def eval(self, points: Sequence[Sequence], param_values: Sequence = ()) -> tuple[Fraction, ...]:
        """Exact value at ``(x_1, .., x_k)``."""
        flat = [v for pt in points for v in pt] + list(param_values)
        return tuple(c.eval(flat) for c in self.body)

    def compiled(self, param_values: Sequence | None = None) -> "PhiEvaluator":
        spec = self if not self.params else self.freeze(param_values if param_values is not None else [])
        return PhiEvaluator(spec)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "params": self.params,
            "norm": self.norm,
            "name": self.name,
            "components": self.body.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PhiSpec":
        n, k, params = int(data["n"]), int(data["k"]), int(data.get("params", 0))
        nv = k * n + params
        comps = data["components"]
        if isinstance(comps, (dict, str)):
            comps = [comps]
        names = data.get("vars")
        body = PolyVector(Polynomial.from_json(c, nvars=nv, names=names) for c in comps)
        return cls(n, k, body, params, data.get("norm", "max"), data.get("name", ""))


class PhiEvaluator:
    """Vectorized float evaluation of a parameter-free PhiSpec."""

    def __init__(self, phi: PhiSpec):
        if phi.params:
            raise ValueError("freeze parameters before compiling")
        self.phi = phi
        self._poly = CompiledPoly(list(phi.body))

    def values(self, tuples) -> np.ndarray:
        """Raw values; ``tuples`` has shape (N, k, n) or (N, k*n).  Returns (N, m)."""
        arr = np.asarray(tuples, dtype=float)
        arr = arr.reshape(arr.shape[0], -1)
        return self._poly(arr)

    def magnitude(self, tuples) -> np.ndarray:
        vals = self.values(tuples)
        if vals.shape[1] == 1:
            return np.abs(vals[:, 0])
        if self.phi.norm == "euclidean":
            return np.sqrt((vals ** 2).sum(axis=1))
        return np.abs(vals).max(axis=1)


@dataclass(frozen=True)
class GammaSpec:
    """Polynomial family ``gamma : R^n x R^N2 -> R^N1`` in variables ``(t, x)``."""

    n: int
    N1: int
    N2: int
    components: PolyVector

    def __post_init__(self):
        if not isinstance(self.components, PolyVector):
            object.__setattr__(self, "components", PolyVector(self.components))
        r = self.N1 - self.n
        if self.n < 1 or r <= 0:
            raise ValueError("need n >= 1 and N1 > n")
        if self.N2 < r or self.N2 % r:
            raise ValueError(f"N2 = {self.N2} must be a positive multiple of r = {r}")
        if len(self.components) != self.N1:
            raise ValueError(f"expected {self.N1} components, got {len(self.components)}")
        if self.components.nvars != self.n + self.N2:
            raise ValueError(f"components must have n + N2 = {self.n + self.N2} variables")

    @property
    def r(self) -> int:
        return self.N1 - self.n

    @property
    def k(self) -> int:
        return self.N2 // self.r

    @property
    def t_vars(self) -> range:
        return range(self.n)

    @property
    def x_vars(self) -> range:
        return range(self.n, self.n + self.N2)

    @property
    def degree(self):
        return self.components.degree

    def bezout_constant(self) -> int:
        """Product of component degrees (the solution-count bound; never computed geometrically)."""
        out = 1
        for c in self.components:
            out *= max(int(c.degree), 1) if not c.is_zero() else 1
        return out

    def compiled(self) -> CompiledPoly:
        return CompiledPoly(list(self.components))

    def to_json(self) -> dict:
        return {"n": self.n, "N1": self.N1, "N2": self.N2, "components": self.components.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "GammaSpec":
        n, N1, N2 = int(data["n"]), int(data["N1"]), int(data["N2"])
        names = data.get("vars")
        comps = PolyVector(Polynomial.from_json(c, nvars=n + N2, names=names) for c in data["components"])
        return cls(n, N1, N2, comps)


@dataclass
class RForm:
    """An r-form on R^N2 with polynomial coefficients, keyed by increasing index tuples."""

    r: int
    N2: int
    coefficients: dict[tuple[int, ...], Polynomial] = field(default_factory=dict)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coefficients.values())

    def __getitem__(self, key: tuple[int, ...]) -> Polynomial:
        return self.coefficients[key]


def build_omega(g: GammaSpec) -> RForm:
    """Coefficient of ``dx_I`` is ``det[d gamma/d x_I | d gamma/d t]`` (0-based indices)."""
    nv = g.n + g.N2
    dx = [[c.partial(g.n + i) for c in g.components] for i in range(g.N2)]
    dt = [[c.partial(i) for c in g.components] for i in range(g.n)]
    coeffs: dict[tuple[int, ...], Polynomial] = {}
    for I in combinations(range(g.N2), g.r):
        cols = [dx[i] for i in I] + dt
        M = [[cols[c][row] for c in range(g.N1)] for row in range(g.N1)]
        if all(M[i][j].is_zero() for i in range(g.N1) for j in range(g.r)):
            coeffs[I] = Polynomial.zero(nv)
        else:
            coeffs[I] = det_poly_matrix(M)
    return RForm(g.r, g.N2, coeffs)


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation listed by ``seq`` (a rearrangement of distinct integers)."""
    sign = 1
    seen = list(seq)
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            if seen[i] > seen[j]:
                sign = -sign
    return sign


def ordered_partitions(N: int, r: int, k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Ordered partitions of ``range(N)`` into ``k`` increasing blocks of size ``r``."""

    def rec(remaining: tuple[int, ...], blocks_left: int):
        if blocks_left == 0:
            yield ()
            return
        for first in combinations(remaining, r):
            rest = tuple(i for i in remaining if i not in first)
            for tail in rec(rest, blocks_left - 1):
                yield (first,) + tail

    if r * k != N:
        raise ValueError("block sizes must exhaust the index set")
    yield from rec(tuple(range(N)), k)


def _phi_ring_embedding(g: GammaSpec, j: int) -> list[int]:
    # gamma variables (t, x) -> Phi variables (t_1..t_k, x): t -> block j, x -> params
    k = g.k
    return [j * g.n + i for i in range(g.n)] + [k * g.n + i for i in range(g.N2)]


def wedge_sign_to_jacobian(n: int, r: int, k: int) -> int:
    return -1 if (r * n * k * (k - 1) // 2) % 2 else 1


def _merge_sign(I: tuple[int, ...], J: tuple[int, ...]) -> int:
    # sign of the permutation sorting the concatenation I + J (both increasing)
    inv = sum(1 for a in I for b in J if a > b)
    return -1 if inv % 2 else 1


def build_phi_wedge(g: GammaSpec, omega: RForm | None = None) -> PhiSpec:
    """Phi_x from the wedge product of omega at t_1..t_k, in the Jacobian sign convention.

    The product is accumulated from the right, ``W_j = omega(t_j) ^ W_{j+1}``,
    each step enumerating disjoint index pairs with their merge sign.  Summed
    over all steps this is the signed sum over ordered index partitions.
    """
    omega = omega or build_omega(g)
    k, n = g.k, g.n
    nv = k * n + g.N2
    placed = [
        {I: c.embed(nv, _phi_ring_embedding(g, j)) for I, c in omega.coefficients.items() if not c.is_zero()}
        for j in range(k)
    ]
    acc: dict[tuple[int, ...], Polynomial] = dict(placed[k - 1])
    for j in range(k - 2, -1, -1):
        nxt: dict[tuple[int, ...], Polynomial] = {}
        for I, a in placed[j].items():
            Iset = set(I)
            for J, b in acc.items():
                if Iset.intersection(J):
                    continue
                key = tuple(sorted(I + J))
                term = a * b
                if _merge_sign(I, J) < 0:
                    term = -term
                nxt[key] = nxt[key] + term if key in nxt else term
        acc = {K: v for K, v in nxt.items() if not v.is_zero()}
    total = acc.get(tuple(range(g.N2)), Polynomial.zero(nv))
    total = total * wedge_sign_to_jacobian(n, g.r, k)
    return PhiSpec(n, k, PolyVector([total]), params=g.N2, name="phi_wedge")


def phi_wedge_by_partitions(g: GammaSpec, omega: RForm | None = None) -> PhiSpec:
    """Same as build_phi_wedge, summing directly over ordered partitions (slower; used as a check)."""
    omega = omega or build_omega(g)
    k, n = g.k, g.n
    nv = k * n + g.N2
    placed = [
        {I: c.embed(nv, _phi_ring_embedding(g, j)) for I, c in omega.coefficients.items() if not c.is_zero()}
        for j in range(k)
    ]
    total = Polynomial.zero(nv)
    for blocks in ordered_partitions(g.N2, g.r, k):
        if any(blocks[j] not in placed[j] for j in range(k)):
            continue
        term = Polynomial.const(nv, permutation_sign([i for b in blocks for i in b]))
        for j, I in enumerate(blocks):
            term = term * placed[j][I]
        total = total + term
    total = total * wedge_sign_to_jacobian(n, g.r, k)
    return PhiSpec(n, k, PolyVector([total]), params=g.N2, name="phi_wedge")


def jacobian_block_matrix(g: GammaSpec) -> list[list[Polynomial]]:
    """Jacobian of ``(x, t_1..t_k) -> (gamma(t_1,x), .., gamma(t_k,x))`` in the Phi ring."""
    k, n = g.k, g.n
    nv = k * n + g.N2
    rows: list[list[Polynomial]] = []
    zero = Polynomial.zero(nv)
    for j in range(k):
        emb = _phi_ring_embedding(g, j)
        for comp in g.components:
            c = comp.embed(nv, emb)
            row = [c.partial(k * n + i) for i in range(g.N2)]
            for jj in range(k):
                if jj == j:
                    row += [c.partial(j * n + i) for i in range(n)]
                else:
                    row += [zero] * n
            rows.append(row)
    return rows


def build_phi_jacobian(g: GammaSpec, method: str = "cofactor") -> PhiSpec:
    """Phi_x as the determinant of the (N2 + n*k) square block Jacobian.

    The default is memoized cofactor expansion at every size: the block
    Jacobian is sparse and fraction-free elimination suffers heavy
    intermediate growth on it.  Pass ``method="bareiss"`` for the other route.
    """
    det = det_poly_matrix(jacobian_block_matrix(g), method=method)
    return PhiSpec(g.n, g.k, PolyVector([det]), params=g.N2, name="phi_jacobian")


def build_phi_graph(gamma0: PolyVector, n: int, r: int, k: int) -> PhiSpec:
    """Phi for the graph family ``gamma = (t, gamma0(t, x))``.

    Returns ``(-1)^(n*r) * det M`` where column block ``j`` of the rk x rk matrix
    ``M`` is the transposed x-Jacobian of ``gamma0`` at ``(t_j, x)``.  This agrees
    with the Jacobian route up to a global sign.
    """
    gamma0 = PolyVector(gamma0)
    if len(gamma0) != r:
        raise ValueError(f"gamma0 must have r = {r} components")
    N2 = r * k
    if gamma0.nvars != n + N2:
        raise ValueError(f"gamma0 must have n + r*k = {n + N2} variables")
    nv = k * n + N2
    M: list[list[Polynomial]] = [[None] * N2 for _ in range(N2)]  # type: ignore[list-item]
    for j in range(k):
        emb = [j * n + i for i in range(n)] + [k * n + i for i in range(N2)]
        for c, comp in enumerate(gamma0):
            placed = comp.embed(nv, emb)
            for i in range(N2):
                M[i][j * r + c] = placed.partial(k * n + i)
    det = det_poly_matrix(M)
    if (n * r) % 2:
        det = -det
    return PhiSpec(n, k, PolyVector([det]), params=N2, name="phi_graph")


def lift_graph(gamma0: PolyVector, n: int, r: int, k: int) -> GammaSpec:
    """The family ``(t, gamma0(t, x))`` as a GammaSpec."""
    gamma0 = PolyVector(gamma0)
    nv = gamma0.nvars
    comps = [Polynomial.var(nv, i) for i in range(n)] + list(gamma0)
    return GammaSpec(n, n + r, r * k, PolyVector(comps))


class InconclusiveError(ValueError):
    """Raised when a check cannot be decided for the given input."""


def omega_at(g: GammaSpec, x: Sequence) -> RForm:
    """omega with x frozen at a rational point (coefficients still in the (t, x) ring)."""
    assign = {g.n + i: as_rational(v) for i, v in enumerate(x)}
    om = build_omega(g)
    return RForm(om.r, om.N2, {I: c.substitute_values(assign) for I, c in om.coefficients.items()})


def vanishing_order_bound_check(g: GammaSpec, sample_x: Sequence) -> bool:
    """True iff Phi at the frozen parameter vanishes on the diagonal to order >= r(k-1)."""
    from .diagonal import order_of_vanishing

    if len(sample_x) != g.N2:
        raise ValueError(f"sample_x must have length N2 = {g.N2}")
    if omega_at(g, sample_x).is_zero():
        raise InconclusiveError("omega vanishes identically at the sample point")
    phi = build_phi_jacobian(g).freeze(sample_x)
    q = order_of_vanishing(phi).q
    return q >= g.r * (g.k - 1)


def random_gamma(
    rng: random.Random,
    n: int,
    r: int,
    k: int,
    degree: int = 2,
    terms: int = 2,
    coeff_range: int = 3,
) -> GammaSpec:
    """Random family with small integer coefficients and total degree <= ``degree``.

    The first n components are ``t_i + c t_i^2`` plus noise, so ``d gamma / d t``
    is generically nondegenerate and depends on t (without that, omega(t) is
    affine in t and Phi vanishes identically once k exceeds 2 for r = 1).  The remaining r components contain every x
    variable linearly, each with a random constant or t-dependent coefficient
    when ``degree >= 2``, which keeps Phi from vanishing identically for most
    draws.  Every component also gets ``terms`` random monomials.
    """
    N2 = r * k
    nv = n + N2

    def unit(*idx):
        mono = [0] * nv
        for i in idx:
            mono[i] += 1
        return tuple(mono)

    def nonzero():
        c = 0
        while c == 0:
            c = rng.randint(-coeff_range, coeff_range)
        return c

    comps = []
    for c in range(n + r):
        poly: dict[tuple[int, ...], int] = {}

        def put(mono, coef):
            poly[mono] = poly.get(mono, 0) + coef

        if c < n:
            put(unit(c), 1)
            if degree >= 2:
                put(unit(c, c), nonzero())
        else:
            for i in range(N2):
                if rng.random() < 0.8:
                    put(unit(n + i), rng.randint(-coeff_range, coeff_range))
                if degree >= 2 and rng.random() < 0.6:
                    put(unit(rng.randrange(n), n + i), nonzero())
        for _ in range(terms):
            mono = unit(*(rng.randrange(nv) for _ in range(rng.randint(1, degree))))
            put(mono, nonzero())
        comps.append(Polynomial(nv, poly))
    return GammaSpec(n, n + r, N2, PolyVector(comps))


def line_family() -> GammaSpec:
    """``gamma(t, (x1, x2)) = (t, x1 + t*x2)``: lines in the plane, n = r = 1, k = 2."""
    t, x1, x2 = (Polynomial.var(3, i) for i in range(3))
    return GammaSpec(1, 2, 2, PolyVector([t, x1 + t * x2]))


def exchange_blocks(phi: PhiSpec, i: int, j: int) -> PhiSpec:
    """Swap the roles of x_i and x_j."""
    perm = list(range(phi.nvars))
    for a, b in zip(phi.block(i), phi.block(j)):
        perm[a], perm[b] = b, a
    return PhiSpec(phi.n, phi.k, phi.body.map(lambda p: p.embed(phi.nvars, perm)), phi.params, phi.norm, phi.name)


def max_abs_coefficient(p: Polynomial) -> Fraction:
    return max((abs(c) for _, c in p.terms()), default=Fraction(0))


__all__ = [
    "GammaSpec",
    "InconclusiveError",
    "PhiEvaluator",
    "PhiSpec",
    "RForm",
    "build_omega",
    "build_phi_graph",
    "build_phi_jacobian",
    "build_phi_wedge",
    "exchange_blocks",
    "jacobian_block_matrix",
    "lift_graph",
    "line_family",
    "omega_at",
    "ordered_partitions",
    "permutation_sign",
    "phi_wedge_by_partitions",
    "random_gamma",
    "vanishing_order_bound_check",
    "wedge_sign_to_jacobian",
]
