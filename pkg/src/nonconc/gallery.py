"""Built-in example functionals and families.

Each builder returns an exact PhiSpec or GammaSpec.  ``REGISTRY`` lists named
entries with their expected facts (order of vanishing, density positivity,
nonconcentration exponent) and the basis on which each fact is expected:
``"stated"`` for facts asserted by the underlying theory, ``"derived"`` for
facts computed independently here, ``"trivial"`` for immediate ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

from .geometry import GammaSpec, PhiSpec, line_family
from .poly import Polynomial, PolyVector, det_poly_matrix


def _blades(l: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for size in range(l + 1):
        out.extend(combinations(range(l), size))
    return out


def clifford_matrices(l: int) -> list[list[list[int]]]:
    """Left multiplication by ``e_1..e_l`` on the algebra with ``e_i e_j = -e_j e_i``, ``e_i^2 = 1``.

    The basis is the blades ordered by size, then lexicographically.  Moving
    ``e_j`` into place in ``e_S`` passes every ``e_i`` with ``i < j`` in ``S``.
    """
    if l < 1:
        raise ValueError("need l >= 1")
    if l > 4:
        raise ValueError("l > 4 refused: matrices would exceed 16 x 16")
    blades = _blades(l)
    index = {b: i for i, b in enumerate(blades)}
    size = len(blades)
    mats = []
    for j in range(l):
        M = [[0] * size for _ in range(size)]
        for col, S in enumerate(blades):
            sign = -1 if sum(1 for i in S if i < j) % 2 else 1
            target = tuple(sorted(set(S) ^ {j}))
            M[index[target]][col] = sign
        mats.append(M)
    return mats


def _matrix_poly(nv: int, entries: Sequence[Sequence]) -> list[list[Polynomial]]:
    return [[e if isinstance(e, Polynomial) else Polynomial.const(nv, e) for e in row] for row in entries]


def phi_determinantal(nprime: int) -> PhiSpec:
    """``det(A_1 - A_2)`` on ``nprime x nprime`` matrices (entries row-major)."""
    n = nprime * nprime
    nv = 2 * n
    v = [Polynomial.var(nv, i) for i in range(nv)]
    M = [[v[i * nprime + j] - v[n + i * nprime + j] for j in range(nprime)] for i in range(nprime)]
    return PhiSpec(n, 2, PolyVector([det_poly_matrix(M)]), name=f"determinantal-{nprime}")


def phi_affine(Gamma: PolyVector, k: int | None = None) -> PhiSpec:
    """``det(G(x_1) - G(x_K+1), .., G(x_K) - G(x_K+1))`` for ``G : R^p -> R^K``; arity ``K + 1``."""
    Gamma = PolyVector(Gamma)
    K = len(Gamma)
    if k is None:
        k = K + 1
    if k != K + 1:
        raise ValueError(f"arity must be len(Gamma) + 1 = {K + 1}, got {k}")
    p = Gamma.nvars
    nv = k * p
    placed = [[c.embed(nv, [j * p + i for i in range(p)]) for c in Gamma] for j in range(k)]
    M = [[placed[j][row] - placed[K][row] for j in range(K)] for row in range(K)]
    return PhiSpec(p, k, PolyVector([det_poly_matrix(M)]), name="affine")


def phi_quadratic(Q: Sequence, include_params: bool = False) -> PhiSpec:
    """``det Q(., t_2 - t_1)`` where ``Q(., a)[i][j] = sum_l Q[i][j][l] a_l``.

    ``Q[l][i][j]`` must be symmetric in ``(i, j)`` for each ``l``.  With
    ``include_params`` the result carries the 2n parameters ``(y, x)`` of the
    averaging family; the body never involves them.
    """
    Qf = [[[Fraction(v) for v in row] for row in mat] for mat in Q]
    n = len(Qf)
    if any(len(mat) != n or any(len(row) != n for row in mat) for mat in Qf):
        raise ValueError("Q must have shape n x n x n")
    for l in range(n):
        for i in range(n):
            for j in range(n):
                if Qf[l][i][j] != Qf[l][j][i]:
                    raise ValueError(f"Q is not symmetric: Q[{l}][{i}][{j}] != Q[{l}][{j}][{i}]")
    params = 2 * n if include_params else 0
    nv = 2 * n + params
    a = [Polynomial.var(nv, n + l) - Polynomial.var(nv, l) for l in range(n)]
    M = [[sum((a[l] * Qf[i][j][l] for l in range(n)), Polynomial.zero(nv)) for j in range(n)] for i in range(n)]
    return PhiSpec(n, 2, PolyVector([det_poly_matrix(M)]), params=params, name="quadratic")


def phi_hausdorff(gamma: PolyVector) -> PhiSpec:
    """``gamma(x) - gamma(y)`` with the Euclidean norm, so the sup functional is a diameter."""
    gamma = PolyVector(gamma)
    p = gamma.nvars
    nv = 2 * p
    body = [c.embed(nv, list(range(p))) - c.embed(nv, list(range(p, nv))) for c in gamma]
    return PhiSpec(p, 2, PolyVector(body), norm="euclidean", name="hausdorff")


def identity_map(n: int) -> PolyVector:
    return PolyVector(Polynomial.var(n, i) for i in range(n))


def phi_difference(n: int = 1) -> PhiSpec:
    """``x - y`` on ``R^n``."""
    return phi_hausdorff(identity_map(n))


def phi_square_difference() -> PhiSpec:
    """``(x_1 - y_1)^2`` for points ``x, y in R^2``: depends on the first coordinate only."""
    v = [Polynomial.var(4, i) for i in range(4)]
    return PhiSpec(2, 2, PolyVector([(v[0] - v[2]) ** 2]), name="square-difference")


def phi_degenerate() -> PhiSpec:
    """``(x_1 - x_2)^2 + (y_1 - y_2)^3`` for points ``(x_j, y_j) in R^2``."""
    v = [Polynomial.var(4, i) for i in range(4)]
    return PhiSpec(2, 2, PolyVector([(v[0] - v[2]) ** 2 + (v[1] - v[3]) ** 3]), name="degenerate")


def moment_curve(degree: int) -> PolyVector:
    t = Polynomial.var(1, 0)
    return PolyVector(t ** d for d in range(1, degree + 1))


def gamma_matrix_family(Gamma: Sequence[Sequence[Polynomial]]) -> GammaSpec:
    """``gamma(t, (y, x)) = (t, y + Gamma(t) x)`` with ``Gamma`` a square polynomial matrix in t."""
    nprime = len(Gamma)
    if any(len(row) != nprime for row in Gamma):
        raise ValueError("Gamma must be square")
    n = Gamma[0][0].nvars
    N2 = 2 * nprime
    nv = n + N2
    emb = list(range(n))
    comps = [Polynomial.var(nv, i) for i in range(n)]
    for i in range(nprime):
        c = Polynomial.var(nv, n + i)
        for j in range(nprime):
            c = c + Gamma[i][j].embed(nv, emb) * Polynomial.var(nv, n + nprime + j)
        comps.append(c)
    return GammaSpec(n, n + nprime, N2, PolyVector(comps))


def gamma0_of_matrix_family(Gamma: Sequence[Sequence[Polynomial]]) -> PolyVector:
    g = gamma_matrix_family(Gamma)
    return PolyVector(g.components[g.n:])


def clifford_Gamma(l: int, coefficient_polys: Sequence[Polynomial]) -> list[list[Polynomial]]:
    """``Gamma(t) = sum_j Gamma_j(t) M_j`` with the left-multiplication matrices."""
    if len(coefficient_polys) != l:
        raise ValueError(f"need {l} coefficient polynomials")
    mats = clifford_matrices(l)
    nv = coefficient_polys[0].nvars
    size = len(mats[0])
    out = [[Polynomial.zero(nv) for _ in range(size)] for _ in range(size)]
    for M, g in zip(mats, coefficient_polys):
        for i in range(size):
            for j in range(size):
                if M[i][j]:
                    out[i][j] = out[i][j] + g * M[i][j]
    return out


@dataclass
class Fact:
    name: str
    value: object
    basis: str

    def to_json(self) -> dict:
        value = self.value
        if isinstance(value, Fraction):
            value = f"{value.numerator}/{value.denominator}"
        return {"name": self.name, "value": value, "basis": self.basis}


@dataclass
class GalleryEntry:
    name: str
    description: str
    builder: Callable[[], object]
    facts: list[Fact] = field(default_factory=list)

    def build(self):
        return self.builder()

    def fact(self, name: str):
        for f in self.facts:
            if f.name == name:
                return f.value
        raise KeyError(name)


def _det2_gamma():
    t = [Polynomial.var(4, i) for i in range(4)]
    return gamma_matrix_family([[t[0], t[1]], [t[2], t[3]]])


REGISTRY: dict[str, GalleryEntry] = {
    e.name: e
    for e in [
        GalleryEntry(
            "difference",
            "x - y on R (the sup functional is the diameter)",
            lambda: phi_difference(1),
            [Fact("q", 1, "stated"), Fact("positivity", "positive", "trivial"), Fact("density", 1, "trivial")],
        ),
        GalleryEntry(
            "difference-2d",
            "x - y on R^2 with the Euclidean norm",
            lambda: phi_difference(2),
            [Fact("q", 1, "stated"), Fact("positivity", "positive", "derived")],
        ),
        GalleryEntry(
            "determinantal-2",
            "det(A_1 - A_2) on 2 x 2 matrices",
            lambda: phi_determinantal(2),
            [Fact("q", 2, "stated"), Fact("positivity", "positive", "stated")],
        ),
        GalleryEntry(
            "determinantal-3",
            "det(A_1 - A_2) on 3 x 3 matrices",
            lambda: phi_determinantal(3),
            [Fact("q", 3, "stated"), Fact("positivity", "positive", "stated")],
        ),
        GalleryEntry(
            "square-difference",
            "(x_1 - y_1)^2 for x, y in R^2",
            phi_square_difference,
            [Fact("q", 2, "derived"), Fact("positivity", "zero", "derived")],
        ),
        GalleryEntry(
            "degenerate",
            "(x_1 - x_2)^2 + (y_1 - y_2)^3 on R^2",
            phi_degenerate,
            [Fact("q", 2, "derived"), Fact("positivity", "zero", "derived"), Fact("exponent", Fraction(6, 5), "stated")],
        ),
        GalleryEntry(
            "affine-parabola",
            "affine determinant for the curve (t, t^2), arity 3",
            lambda: phi_affine(moment_curve(2), 3),
            [Fact("q", 3, "derived")],
        ),
        GalleryEntry(
            "quadratic-diagonal",
            "det Q(., t_2 - t_1) for Q(a, b) = (a_1 b_1, a_2 b_2)",
            lambda: phi_quadratic([[[1, 0], [0, 0]], [[0, 0], [0, 1]]]),
            [Fact("q", 2, "derived")],
        ),
        GalleryEntry(
            "line-family",
            "gamma(t, x) = (t, x_1 + t x_2): lines in the plane",
            line_family,
            [Fact("q", 1, "derived"), Fact("phi", "t_2 - t_1 up to sign", "derived")],
        ),
        GalleryEntry(
            "matrix-family-2",
            "gamma(t, (y, x)) = (t, y + Gamma(t) x) with Gamma(t) the generic 2 x 2 matrix",
            _det2_gamma,
            [Fact("q", 2, "stated")],
        ),
        GalleryEntry(
            "clifford-2",
            "Clifford family with Gamma(t) = t_1 e_1 + t_2 e_2 on the 4-dimensional algebra",
            lambda: gamma_matrix_family(clifford_Gamma(2, [Polynomial.var(2, 0), Polynomial.var(2, 1)])),
            [Fact("q", 4, "stated")],
        ),
    ]
}


def build(name: str):
    if name not in REGISTRY:
        raise KeyError(f"unknown gallery entry {name!r}; known: {sorted(REGISTRY)}")
    return REGISTRY[name].build()


def det_matrix_poly(entries: Sequence[Sequence[Polynomial]]) -> Polynomial:
    return det_poly_matrix(_matrix_poly(entries[0][0].nvars, entries))
