"""Order of vanishing on the diagonal and diagonal Taylor coefficients.

For ``Phi(x_1, .., x_k)`` with ``x_j in R^n`` the diagonal is ``x_1 = .. = x_k``.
Substituting ``x_j = x + h*u_j`` and expanding in ``h``, the lowest power of
``h`` with a nonzero coefficient is the order of vanishing ``q``.  Its
coefficient is

    sum over (alpha_1..alpha_k), sum |alpha_j| = q, of
        d^alpha Phi(x, .., x) / (alpha_1! .. alpha_k!) * u^alpha

so the leading coefficients reported here are the diagonal partials divided by
``alpha_1! .. alpha_k!``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .geometry import PhiSpec
from .poly import (
    Polynomial,
    PolyVector,
    as_rational,
    compose_linear,
    multi_factorial,
    multiindices,
)

Alphas = tuple[tuple[int, ...], ...]


@dataclass
class DiagonalExpansion:
    """``q`` and the leading coefficients, keyed by k-tuples of multiindices.

    Each leading value is a PolyVector (one entry per component of Phi) in the
    diagonal variable ``x`` (n variables) followed by any parameters.  ``q`` is
    0 when Phi does not vanish on the diagonal and ``math.inf`` when Phi is
    identically zero.
    """

    q: int | float
    n: int
    k: int
    leading: dict[Alphas, PolyVector] = field(default_factory=dict)

    def to_json(self) -> dict:
        q = self.q if self.q != math.inf else None
        return {
            "q": q,
            "identically_zero": self.q == math.inf,
            "leading_terms": [
                {"alphas": [list(a) for a in alphas], "polynomial": vec.to_json()}
                for alphas, vec in sorted(self.leading.items())
            ],
        }


def _split_alphas(mono: Sequence[int], n: int, k: int) -> Alphas:
    return tuple(tuple(mono[j * n:(j + 1) * n]) for j in range(k))


def alpha_tuples(n: int, k: int, order: int):
    """All k-tuples of n-multiindices with total order ``order``."""
    for mono in multiindices(k * n, order):
        yield _split_alphas(mono, n, k)


def shift_substitution(phi: PhiSpec) -> list[Polynomial]:
    """Images of the Phi variables under ``x_j -> x + h*u_j``.

    Target ring order: ``x`` (n), ``h`` (1), ``u`` (k*n), then the parameters.
    """
    n, k, P = phi.n, phi.k, phi.params
    nv = n + 1 + k * n + P
    h = Polynomial.var(nv, n)
    images = []
    for j in range(k):
        for i in range(n):
            images.append(Polynomial.var(nv, i) + h * Polynomial.var(nv, n + 1 + j * n + i))
    for p in range(P):
        images.append(Polynomial.var(nv, n + 1 + k * n + p))
    return images


def _diag_ring_positions(phi: PhiSpec) -> list[int]:
    # (x, h, u, params) -> (x, params): the positions of x and params
    n, k, P = phi.n, phi.k, phi.params
    return list(range(n)) + [n + 1 + k * n + p for p in range(P)]


def order_of_vanishing(phi: PhiSpec, at_params: Sequence | None = None, cross_check: bool = False) -> DiagonalExpansion:
    """Order of vanishing of Phi on the diagonal, with leading coefficients.

    ``at_params`` freezes the parameters first (the local order at that
    parameter point, which can exceed the generic one).  With
    ``cross_check=True`` the result is recomputed by direct symbolic
    differentiation and any disagreement raises AssertionError.
    """
    if at_params is not None:
        phi = phi.freeze(at_params)
    n, k = phi.n, phi.k
    if phi.body.is_zero():
        return DiagonalExpansion(math.inf, n, k)
    images = shift_substitution(phi)
    hvar = n
    keep = _diag_ring_positions(phi)
    shifted = [c.substitute(images) for c in phi.body]
    by_degree: dict[int, list[dict]] = {}
    for ci, s in enumerate(shifted):
        for d, part in s.homogeneous_components([hvar]).items():
            by_degree.setdefault(d, [dict() for _ in shifted])[ci] = part
    q = min(by_degree)
    leading: dict[Alphas, PolyVector] = {}
    if q > 0:
        uvars = list(range(n + 1, n + 1 + k * n))
        grouped: dict[Alphas, list[dict]] = {}
        for ci, part in enumerate(by_degree[q]):
            if not part:
                continue
            for mono, c in part.terms():
                alphas = _split_alphas([mono[v] for v in uvars], n, k)
                rest = [0] * (n + phi.params)
                for pos, v in enumerate(keep):
                    rest[pos] = mono[v]
                slot = grouped.setdefault(alphas, [dict() for _ in shifted])[ci]
                key = tuple(rest)
                slot[key] = slot.get(key, 0) + c
        nv = n + phi.params
        for alphas, comps in grouped.items():
            vec = PolyVector(Polynomial(nv, t) for t in comps)
            if not vec.is_zero():
                leading[alphas] = vec
    result = DiagonalExpansion(q, n, k, leading)
    if cross_check:
        other = order_by_differentiation(phi, max_order=q if q > 0 else 0)
        assert other.q == result.q, f"routes disagree on q: {other.q} vs {result.q}"
        assert other.leading == result.leading, "routes disagree on the leading coefficients"
    return result


def restrict_to_diagonal(phi: PhiSpec, p: Polynomial) -> Polynomial:
    """Set ``x_1 = .. = x_k = x``; result in the ring ``(x, params)``."""
    n, k, P = phi.n, phi.k, phi.params
    nv = n + P
    images = [Polynomial.var(nv, i) for _ in range(k) for i in range(n)]
    images += [Polynomial.var(nv, n + p_) for p_ in range(P)]
    return p.substitute(images)


def order_by_differentiation(phi: PhiSpec, max_order: int | None = None) -> DiagonalExpansion:
    """Direct route: differentiate symbolically order by order and restrict to the diagonal."""
    n, k, P = phi.n, phi.k, phi.params
    if phi.body.is_zero():
        return DiagonalExpansion(math.inf, n, k)
    limit = int(phi.degree) if max_order is None else max_order
    pad = (0,) * P
    for order in range(limit + 1):
        found: dict[Alphas, PolyVector] = {}
        for alphas in alpha_tuples(n, k, order):
            flat = tuple(a for al in alphas for a in al) + pad
            scale = Fraction(1, multi_factorial(flat))
            vec = PolyVector(restrict_to_diagonal(phi, c.derivative(flat)).scale(scale) for c in phi.body)
            if not vec.is_zero():
                found[alphas] = vec
        if found:
            return DiagonalExpansion(order, n, k, found if order > 0 else {})
    if max_order is not None:
        raise ValueError(f"no nonzero diagonal derivative up to order {max_order}")
    raise AssertionError("nonzero polynomial with no nonzero diagonal derivative")


def lower_orders_vanish(phi: PhiSpec, q: int) -> bool:
    """Exact check that every diagonal partial of total order < q is the zero polynomial."""
    pad = (0,) * phi.params
    for order in range(q):
        for alphas in alpha_tuples(phi.n, phi.k, order):
            flat = tuple(a for al in alphas for a in al) + pad
            for c in phi.body:
                if not restrict_to_diagonal(phi, c.derivative(flat)).is_zero():
                    return False
    return True


def _exact_matrix(T) -> list[list[Fraction]]:
    return [[as_rational(v) for v in row] for row in T]


def diagonal_derivative(
    phi: PhiSpec,
    T,
    alphas: Sequence[Sequence[int]],
    x: Sequence,
    params: Sequence = (),
    method: str = "compose",
) -> list[float]:
    """``(T*d)^alpha_1_1 .. (T*d)^alpha_k_k Phi(x, .., x)`` for each component.

    ``(T*d)_i = sum_j T[j][i] d_j`` acts on block ``j`` of the variables.  The
    computation is exact (floats are converted to their exact rational
    values) and only the final value is rounded.

    ``method="compose"`` substitutes ``x_j -> T x_j`` on every block, takes
    ordinary partials and evaluates at ``(T^-1 x, .., T^-1 x)``;
    ``method="taylor"`` expands ``Phi(x + T v_1, .., x + T v_k)`` and reads off
    the coefficient of ``v^alpha``.
    """
    return [float(v) for v in diagonal_derivative_exact(phi, T, alphas, x, params, method)]


def diagonal_derivative_exact(phi, T, alphas, x, params=(), method: str = "compose") -> list[Fraction]:
    n, k = phi.n, phi.k
    Tm = _exact_matrix(T)
    if len(Tm) != n or any(len(r) != n for r in Tm):
        raise ValueError(f"T must be {n} x {n}")
    if len(alphas) != k or any(len(a) != n for a in alphas):
        raise ValueError(f"alphas must be {k} multiindices of length {n}")
    if len(x) != n:
        raise ValueError(f"x must have length {n}")
    if any(a < 0 for al in alphas for a in al):
        raise ValueError("multiindices must be nonnegative")
    xs = [as_rational(v) for v in x]
    if phi.params:
        phi = phi.freeze(params)
    flat = tuple(a for al in alphas for a in al)
    if sum(flat) > phi.degree:
        return [Fraction(0)] * phi.m
    if method == "compose":
        from .poly import inverse_rational

        composed = list(phi.body)
        for j in range(k):
            composed = [compose_linear(c, Tm, start=j * n) for c in composed]
        Tinv = inverse_rational(Tm)
        y = [sum(Tinv[i][l] * xs[l] for l in range(n)) for i in range(n)]
        point = y * k
        return [c.derivative(flat).eval(point) for c in composed]
    if method == "taylor":
        nv = k * n
        images = []
        for j in range(k):
            for l in range(n):
                terms = {(0,) * nv: xs[l]} if xs[l] else {}
                for i in range(n):
                    if Tm[l][i]:
                        mono = [0] * nv
                        mono[j * n + i] = 1
                        terms[tuple(mono)] = Tm[l][i]
                images.append(Polynomial(nv, terms))
        fact = multi_factorial(flat)
        return [c.substitute(images).coeff(flat) * fact for c in phi.body]
    raise ValueError(f"unknown method {method!r}")


def taylor_at(phi: PhiSpec, x: Sequence, params: Sequence = ()) -> dict[int, PolyVector]:
    """Homogeneous parts of ``v -> Phi(x + v_1, .., x + v_k)`` keyed by degree.

    The result lives in k*n variables ``v``; degrees with an all-zero part are
    omitted.
    """
    if phi.params:
        phi = phi.freeze(params)
    n, k = phi.n, phi.k
    xs = [as_rational(v) for v in x]
    if len(xs) != n:
        raise ValueError(f"x must have length {n}")
    nv = k * n
    images = []
    for j in range(k):
        for l in range(n):
            images.append(Polynomial.var(nv, j * n + l) + xs[l])
    shifted = [c.substitute(images) for c in phi.body]
    parts: dict[int, list[Polynomial]] = {}
    for ci, s in enumerate(shifted):
        for d, part in s.homogeneous_components().items():
            parts.setdefault(d, [Polynomial.zero(nv) for _ in shifted])[ci] = part
    return {d: PolyVector(v) for d, v in sorted(parts.items()) if not PolyVector(v).is_zero()}


__all__ = [
    "DiagonalExpansion",
    "alpha_tuples",
    "diagonal_derivative",
    "diagonal_derivative_exact",
    "lower_orders_vanish",
    "order_by_differentiation",
    "order_of_vanishing",
    "restrict_to_diagonal",
    "taylor_at",
]
