"""Exact sparse multivariate polynomials over the rationals.

A :class:`Polynomial` lives in a fixed number of variables ``x_0 .. x_{nvars-1}``
and stores a mapping from exponent tuples to nonzero :class:`fractions.Fraction`
coefficients.  Instances are immutable; every operation returns a new value.

Terms are iterated in graded lexicographic order (highest first), which is the
order used for serialization and for the leading term in exact division.

The degree of the zero polynomial is ``ZERO_DEGREE`` (negative infinity), so
``deg(p*q) == deg(p) + deg(q)`` holds without special cases.
"""

from __future__ import annotations

import math
import re
from operator import add as _add
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]
Number = int | Fraction

ZERO_DEGREE = float("-inf")


def as_rational(value) -> Fraction:
    """Convert ints, Fractions, floats (exactly) or "num/den" strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        return Fraction(float(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def _grlex_key(mono: Exponent):
    return (sum(mono), mono)


class Polynomial:
    """Immutable sparse polynomial with rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Number] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        self.nvars = nvars
        clean: dict[Exponent, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != nvars:
                    raise ValueError(f"exponent {mono} has length {len(mono)}, expected {nvars}")
                if any(e < 0 for e in mono):
                    raise ValueError(f"negative exponent in {mono}")
                c = as_rational(c)
                if c:
                    clean[mono] = clean.get(mono, Fraction(0)) + c
                    if not clean[mono]:
                        del clean[mono]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict[Exponent, Fraction]) -> "Polynomial":
        # trusted constructor: terms already canonical
        p = cls.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, nvars: int, value: Number) -> "Polynomial":
        c = as_rational(value)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, nvars: int, index: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        mono = [0] * nvars
        mono[index] = 1
        return cls._raw(nvars, {tuple(mono): Fraction(1)})

    @classmethod
    def monomial(cls, exponents: Sequence[int], coeff: Number = 1) -> "Polynomial":
        return cls(len(exponents), {tuple(exponents): coeff})

    # ---- basic queries ------------------------------------------------

    def terms(self) -> Iterator[tuple[Exponent, Fraction]]:
        """Terms in graded lexicographic order, highest first."""
        for mono in sorted(self._terms, key=_grlex_key, reverse=True):
            yield mono, self._terms[mono]

    def coeff(self, mono: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def monomials(self) -> list[Exponent]:
        return [m for m, _ in self.terms()]

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def degree(self):
        if not self._terms:
            return ZERO_DEGREE
        return max(sum(m) for m in self._terms)

    def degree_in(self, variables: Iterable[int]):
        """Total degree in a subset of the variables."""
        vs = list(variables)
        if not self._terms:
            return ZERO_DEGREE
        return max(sum(m[v] for v in vs) for m in self._terms)

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def leading_term(self) -> tuple[Exponent, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        mono = max(self._terms, key=_grlex_key)
        return mono, self._terms[mono]

    def used_variables(self) -> set[int]:
        out: set[int] = set()
        for m in self._terms:
            out.update(i for i, e in enumerate(m) if e)
        return out

    # ---- arithmetic ---------------------------------------------------

    def _check(self, other: "Polynomial") -> None:
        if self.nvars != other.nvars:
            raise ValueError(f"variable-count mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.const(self.nvars, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono)
            if s is None:
                out[mono] = c
            else:
                s += c
                if s:
                    out[mono] = s
                else:
                    del out[mono]
        return Polynomial._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def scale(self, c: Number) -> "Polynomial":
        c = as_rational(c)
        if not c:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw(self.nvars, {m: c * v for m, v in self._terms.items()})

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        if not self._terms or not other._terms:
            return Polynomial.zero(self.nvars)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out: dict[Exponent, Fraction] = {}
        get = out.get
        for mb, cb in b.items():
            for ma, ca in a.items():
                mono = tuple(map(_add, ma, mb))
                out[mono] = get(mono, 0) + ca * cb
        return Polynomial._raw(self.nvars, {m: c for m, c in out.items() if c})

    def __rmul__(self, other) -> "Polynomial":
        return self.scale(other)

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.const(self.nvars, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.const(self.nvars, other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def exact_div(self, other: "Polynomial") -> "Polynomial":
        """Quotient ``self / other``; raises ValueError if the division is not exact."""
        self._check(other)
        if not other._terms:
            raise ZeroDivisionError("division by the zero polynomial")
        lm, lc = other.leading_term()
        rem = dict(self._terms)
        quot: dict[Exponent, Fraction] = {}
        while rem:
            m = max(rem, key=_grlex_key)
            c = rem[m]
            if any(x < y for x, y in zip(m, lm)):
                raise ValueError("polynomial division is not exact")
            qm = tuple(x - y for x, y in zip(m, lm))
            qc = c / lc
            quot[qm] = qc
            for om, oc in other._terms.items():
                mono = tuple(x + y for x, y in zip(qm, om))
                v = rem.get(mono, 0) - qc * oc
                if v:
                    rem[mono] = v
                else:
                    rem.pop(mono, None)
        return Polynomial._raw(self.nvars, quot)

    # ---- calculus and substitution ------------------------------------

    def partial(self, var: int) -> "Polynomial":
        """Formal partial derivative with respect to variable ``var``."""
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable index {var} out of range for {self.nvars} variables")
        out: dict[Exponent, Fraction] = {}
        for m, c in self._terms.items():
            e = m[var]
            if e:
                mono = m[:var] + (e - 1,) + m[var + 1:]
                out[mono] = c * e
        return Polynomial._raw(self.nvars, out)

    def derivative(self, alpha: Sequence[int]) -> "Polynomial":
        """Mixed partial ``d^alpha`` for a multiindex over all variables."""
        if len(alpha) != self.nvars:
            raise ValueError("multiindex length must equal the variable count")
        out: dict[Exponent, Fraction] = {}
        for m, c in self._terms.items():
            if any(e < a for e, a in zip(m, alpha)):
                continue
            factor = 1
            for e, a in zip(m, alpha):
                for j in range(a):
                    factor *= e - j
            out[tuple(e - a for e, a in zip(m, alpha))] = c * factor
        return Polynomial._raw(self.nvars, out)

    def substitute(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """Compose: replace variable i by ``images[i]`` (all in a common ring)."""
        if len(images) != self.nvars:
            raise ValueError(f"need {self.nvars} images, got {len(images)}")
        if not images:
            return Polynomial._raw(0, dict(self._terms))
        target = images[0].nvars
        if any(q.nvars != target for q in images):
            raise ValueError("substitution images must share a variable count")
        powers: list[dict[int, Polynomial]] = [{0: Polynomial.const(target, 1), 1: q} for q in images]

        def power(i: int, e: int) -> Polynomial:
            cache = powers[i]
            if e not in cache:
                cache[e] = power(i, e - 1) * images[i]
            return cache[e]

        acc: dict[Exponent, Fraction] = {}
        for m, c in self._terms.items():
            term = Polynomial.const(target, c)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            for tm, tc in term._terms.items():
                v = acc.get(tm, 0) + tc
                if v:
                    acc[tm] = v
                else:
                    acc.pop(tm, None)
        return Polynomial._raw(target, acc)

    def substitute_values(self, values: Mapping[int, Number]) -> "Polynomial":
        """Fix some variables to rational values, keeping the variable count."""
        vals = {i: as_rational(v) for i, v in values.items()}
        out: dict[Exponent, Fraction] = {}
        for m, c in self._terms.items():
            coeff = c
            mono = list(m)
            for i, v in vals.items():
                if mono[i]:
                    coeff *= v ** mono[i]
                    mono[i] = 0
            if coeff:
                key = tuple(mono)
                s = out.get(key, 0) + coeff
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return Polynomial._raw(self.nvars, out)

    def embed(self, nvars: int, positions: Sequence[int]) -> "Polynomial":
        """Map variable i to variable ``positions[i]`` of a ring with ``nvars`` variables."""
        if len(positions) != self.nvars:
            raise ValueError("positions must list one target per variable")
        out: dict[Exponent, Fraction] = {}
        for m, c in self._terms.items():
            mono = [0] * nvars
            for i, e in enumerate(m):
                mono[positions[i]] += e
            key = tuple(mono)
            s = out.get(key, 0) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return Polynomial._raw(nvars, out)

    def drop_variables(self, keep: Sequence[int]) -> "Polynomial":
        """Restrict to the listed variables; all others must be absent."""
        keep = list(keep)
        keep_set = set(keep)
        out: dict[Exponent, Fraction] = {}
        for m, c in self._terms.items():
            if any(e and i not in keep_set for i, e in enumerate(m)):
                raise ValueError("cannot drop a variable that occurs in the polynomial")
            out[tuple(m[i] for i in keep)] = c
        return Polynomial._raw(len(keep), out)

    def homogeneous_components(self, variables: Sequence[int] | None = None) -> dict[int, "Polynomial"]:
        """Split by total degree in ``variables`` (default: all variables)."""
        vs = range(self.nvars) if variables is None else list(variables)
        parts: dict[int, dict[Exponent, Fraction]] = {}
        for m, c in self._terms.items():
            parts.setdefault(sum(m[v] for v in vs), {})[m] = c
        return {d: Polynomial._raw(self.nvars, t) for d, t in sorted(parts.items())}

    # ---- evaluation -----------------------------------------------------

    def eval(self, point: Sequence[Number]) -> Fraction:
        """Exact value at a rational point."""
        if len(point) != self.nvars:
            raise ValueError(f"point has length {len(point)}, expected {self.nvars}")
        pt = [as_rational(v) for v in point]
        total = Fraction(0)
        for m, c in self._terms.items():
            term = c
            for v, e in zip(pt, m):
                if e:
                    term *= v ** e
            total += term
        return total

    def eval_f64(self, point: Sequence[float]) -> float:
        """Floating value at a point.

        Each term is formed as ``float(coeff) * prod(x_i ** e_i)`` and the terms
        are summed with :func:`math.fsum`, so the only rounding comes from the
        individual term products (no Horner rearrangement).
        """
        if len(point) != self.nvars:
            raise ValueError(f"point has length {len(point)}, expected {self.nvars}")
        pt = [float(v) for v in point]
        vals = []
        for m, c in self._terms.items():
            term = float(c)
            for v, e in zip(pt, m):
                if e:
                    term *= v ** e
            vals.append(term)
        return math.fsum(vals)

    def compile(self) -> "CompiledPoly":
        return CompiledPoly([self])

    # ---- formatting ---------------------------------------------------

    def to_str(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i}" for i in range(self.nvars)]
        if not self._terms:
            return "0"
        pieces = []
        for m, c in self.terms():
            factors = []
            for name, e in zip(names, m):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if factors:
                body = "*".join(factors)
                if mag != 1:
                    body = f"{_fmt_rational(mag)}*{body}"
            else:
                body = _fmt_rational(mag)
            pieces.append(("-" if c < 0 else "+", body))
        first_sign, first = pieces[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self.to_str()!r})"

    def to_json(self) -> dict:
        return {
            "nvars": self.nvars,
            "terms": [
                {"exponents": list(m), "coeff": f"{c.numerator}/{c.denominator}"}
                for m, c in self.terms()
            ],
        }

    @classmethod
    def from_json(cls, data, nvars: int | None = None, names: Sequence[str] | None = None) -> "Polynomial":
        """Accept the sparse term list, or ``{"expr": ..., "vars": [...]}``, or a bare string."""
        if isinstance(data, str):
            if names is None:
                raise ValueError("a bare expression string needs variable names")
            return parse(data, names)
        if "expr" in data:
            return parse(data["expr"], data.get("vars", names))
        nv = data.get("nvars", nvars)
        terms = data.get("terms", [])
        if nv is None:
            if not terms:
                raise ValueError("cannot infer the variable count of an empty polynomial")
            nv = len(terms[0]["exponents"])
        out: dict[Exponent, Fraction] = {}
        for t in terms:
            mono = tuple(t["exponents"])
            out[mono] = out.get(mono, Fraction(0)) + as_rational(t["coeff"])
        return cls(nv, out)


def _fmt_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"({c.numerator}/{c.denominator})"


# ---------------------------------------------------------------------------
# module-level operations


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    p._check(q)
    return p + q


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    p._check(q)
    return p * q


def partial(p: Polynomial, var: int) -> Polynomial:
    return p.partial(var)


def eval_exact(p: Polynomial, point: Sequence[Number]) -> Fraction:
    return p.eval(point)


def eval_f64(p: Polynomial, point: Sequence[float]) -> float:
    return p.eval_f64(point)


def linear_images(nvars: int, T, start: int = 0) -> list[Polynomial]:
    """Images of the substitution ``x_block -> T x_block`` used by compose_linear."""
    rows = [[as_rational(v) for v in row] for row in T]
    size = len(rows)
    if any(len(r) != size for r in rows):
        raise ValueError("T must be square")
    if start < 0 or start + size > nvars:
        raise ValueError(f"block [{start}, {start + size}) does not fit in {nvars} variables")
    images = [Polynomial.var(nvars, i) for i in range(nvars)]
    for i in range(size):
        terms = {}
        for j in range(size):
            if rows[i][j]:
                mono = [0] * nvars
                mono[start + j] = 1
                terms[tuple(mono)] = rows[i][j]
        images[start + i] = Polynomial._raw(nvars, terms)
    return images


def compose_linear(p: Polynomial, T, start: int = 0) -> Polynomial:
    """Substitute ``x_b -> T x_b`` on the contiguous block starting at ``start``.

    With ``q = compose_linear(p, T)``, the partial ``d_i q`` at ``y`` equals the
    directional derivative of ``p`` along column ``i`` of ``T`` at ``T y``.
    """
    return p.substitute(linear_images(p.nvars, T, start))


# ---------------------------------------------------------------------------
# polynomial vectors and fast evaluation


class PolyVector(tuple):
    """Nonempty tuple of polynomials sharing one variable count."""

    def __new__(cls, components: Iterable[Polynomial]):
        comps = tuple(components)
        if not comps:
            raise ValueError("a PolyVector needs at least one component")
        nv = comps[0].nvars
        if any(c.nvars != nv for c in comps):
            raise ValueError("all components must share the variable count")
        return super().__new__(cls, comps)

    @property
    def nvars(self) -> int:
        return self[0].nvars

    @property
    def degree(self):
        return max(c.degree for c in self)

    def map(self, fn) -> "PolyVector":
        return PolyVector(fn(c) for c in self)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self)

    def jacobian(self) -> list[list[Polynomial]]:
        return [[c.partial(j) for j in range(self.nvars)] for c in self]

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self]


class CompiledPoly:
    """Vectorized float evaluation of one or more polynomials in the same ring."""

    def __init__(self, polys: Sequence[Polynomial]):
        if not polys:
            raise ValueError("nothing to compile")
        self.nvars = polys[0].nvars
        self.ncomp = len(polys)
        monos: dict[Exponent, int] = {}
        for p in polys:
            for m in p._terms:
                monos.setdefault(m, len(monos))
        self.exps = np.array(list(monos) or [[0] * self.nvars], dtype=np.int64).reshape(-1, self.nvars)
        coef = np.zeros((max(len(monos), 1), self.ncomp))
        for j, p in enumerate(polys):
            for m, c in p._terms.items():
                coef[monos[m], j] = float(c)
        self.coef = coef
        self.maxdeg = self.exps.max(axis=0) if self.exps.size else np.zeros(self.nvars, dtype=np.int64)

    def __call__(self, points, chunk: int = 65536) -> np.ndarray:
        """Evaluate at ``points`` of shape (N, nvars); returns (N, ncomp)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != self.nvars:
            raise ValueError(f"points have {pts.shape[1]} coordinates, expected {self.nvars}")
        out = np.empty((pts.shape[0], self.ncomp))
        active = [v for v in range(self.nvars) if self.maxdeg[v] > 0]
        for lo in range(0, pts.shape[0], chunk):
            block = pts[lo:lo + chunk]
            vals = np.ones((block.shape[0], self.exps.shape[0]))
            for v in active:
                pw = block[:, v:v + 1] ** np.arange(self.maxdeg[v] + 1)
                vals *= pw[:, self.exps[:, v]]
            out[lo:lo + chunk] = vals @ self.coef
        return out


# ---------------------------------------------------------------------------
# determinants of polynomial matrices


def _det_cofactor(M: list[list[Polynomial]], nvars: int) -> Polynomial:
    # Laplace expansion along rows, memoized on the set of columns still in play
    n = len(M)
    memo: dict[tuple[int, ...], Polynomial] = {(): Polynomial.const(nvars, 1)}

    def minor(cols: tuple[int, ...]) -> Polynomial:
        if cols in memo:
            return memo[cols]
        row = n - len(cols)
        acc = Polynomial.zero(nvars)
        for pos, c in enumerate(cols):
            entry = M[row][c]
            if entry.is_zero():
                continue
            sub = minor(cols[:pos] + cols[pos + 1:])
            if sub.is_zero():
                continue
            term = entry * sub
            acc = acc - term if pos % 2 else acc + term
        memo[cols] = acc
        return acc

    return minor(tuple(range(n)))


def _det_bareiss(M: list[list[Polynomial]], nvars: int) -> Polynomial:
    n = len(M)
    A = [list(row) for row in M]
    sign = 1
    prev = Polynomial.const(nvars, 1)
    for k in range(n - 1):
        # prefer the sparsest nonzero pivot in column k
        candidates = [i for i in range(k, n) if not A[i][k].is_zero()]
        if not candidates:
            return Polynomial.zero(nvars)
        piv = min(candidates, key=lambda i: len(A[i][k]))
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            for j in range(k + 1, n):
                num = akk * A[i][j]
                if not aik.is_zero() and not A[k][j].is_zero():
                    num = num - aik * A[k][j]
                A[i][j] = num.exact_div(prev) if not num.is_zero() else num
            A[i][k] = Polynomial.zero(nvars)
        prev = akk
    det = A[n - 1][n - 1]
    return -det if sign < 0 else det


def det_poly_matrix(M: Sequence[Sequence[Polynomial]], method: str = "auto") -> Polynomial:
    """Exact determinant of a square polynomial matrix.

    ``method`` is "cofactor", "bareiss" or "auto" (cofactor up to size 6,
    fraction-free Bareiss elimination above).
    """
    n = len(M)
    if n == 0:
        raise ValueError("empty matrix")
    if any(len(row) != n for row in M):
        raise ValueError("matrix is not square")
    nvars = M[0][0].nvars
    if any(e.nvars != nvars for row in M for e in row):
        raise ValueError("matrix entries must share the variable count")
    if method == "auto":
        method = "cofactor" if n <= 6 else "bareiss"
    if method == "cofactor":
        return _det_cofactor([list(r) for r in M], nvars)
    if method == "bareiss":
        return _det_bareiss([list(r) for r in M], nvars)
    raise ValueError(f"unknown determinant method {method!r}")


def det_rational(M: Sequence[Sequence[Number]]) -> Fraction:
    """Exact determinant of a rational matrix by Gaussian elimination."""
    A = [[as_rational(v) for v in row] for row in M]
    n = len(A)
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k]), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            det = -det
        det *= A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            if f:
                for j in range(k, n):
                    A[i][j] -= f * A[k][j]
    return det


def inverse_rational(M: Sequence[Sequence[Number]]) -> list[list[Fraction]]:
    """Exact inverse of a rational matrix; raises ZeroDivisionError if singular."""
    n = len(M)
    A = [[as_rational(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k]), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        A[k], A[piv] = A[piv], A[k]
        inv = 1 / A[k][k]
        A[k] = [v * inv for v in A[k]]
        for i in range(n):
            if i != k and A[i][k]:
                f = A[i][k]
                A[i] = [a - f * b for a, b in zip(A[i], A[k])]
    return [row[n:] for row in A]


# ---------------------------------------------------------------------------
# expression parser


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()·−]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected character {text[pos]!r} at position {pos}")
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif name is not None:
            tokens.append(("name", name))
        else:
            op = {"·": "*", "−": "-", "**": "^"}.get(op, op)
            tokens.append(("op", op))
        pos = m.end()
    return tokens


def parse(text: str, names: Sequence[str]) -> Polynomial:
    """Parse ``+ - * ^ / ( )`` expressions with integer literals and named variables.

    Division is only allowed by a constant, so ``x/2`` and ``3/4*y`` parse but
    ``1/x`` does not.  ``·`` and ``−`` are accepted as ``*`` and ``-``.
    """
    names = list(names)
    index = {n: i for i, n in enumerate(names)}
    if len(index) != len(names):
        raise ValueError("duplicate variable names")
    nv = len(names)
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else ("end", "")

    def take(kind=None, value=None):
        nonlocal pos
        tok = peek()
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            raise ValueError(f"expected {value or kind} at token {pos} in {text!r}, found {tok[1] or 'end'}")
        pos += 1
        return tok

    def expr() -> Polynomial:
        node = term()
        while peek() in (("op", "+"), ("op", "-")):
            op = take()[1]
            rhs = term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term() -> Polynomial:
        node = unary()
        while peek() in (("op", "*"), ("op", "/")):
            op = take()[1]
            rhs = unary()
            if op == "*":
                node = node * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise ValueError("division is only allowed by a nonzero constant")
                node = node.scale(1 / rhs.constant_value())
        return node

    def unary() -> Polynomial:
        if peek() == ("op", "-"):
            take()
            return -unary()
        if peek() == ("op", "+"):
            take()
            return unary()
        return power()

    def power() -> Polynomial:
        base = atom()
        if peek() == ("op", "^"):
            take()
            neg = False
            if peek() == ("op", "-"):
                raise ValueError("negative exponents are not allowed")
            e = int(take("num")[1])
            if neg:
                e = -e
            return base ** e
        return base

    def atom() -> Polynomial:
        kind, val = peek()
        if kind == "num":
            take()
            return Polynomial.const(nv, int(val))
        if kind == "name":
            take()
            if val not in index:
                raise ValueError(f"unknown variable {val!r}; known: {names}")
            return Polynomial.var(nv, index[val])
        if (kind, val) == ("op", "("):
            take()
            node = expr()
            take("op", ")")
            return node
        raise ValueError(f"unexpected token {val or 'end'!r} in {text!r}")

    result = expr()
    if pos != len(tokens):
        raise ValueError(f"trailing input after token {pos} in {text!r}")
    return result


def variables(nvars: int) -> list[Polynomial]:
    return [Polynomial.var(nvars, i) for i in range(nvars)]


def multiindices(nvars: int, degree: int) -> Iterator[Exponent]:
    """All exponent tuples of exactly the given total degree (stars and bars)."""
    if nvars == 0:
        if degree == 0:
            yield ()
        return
    for bars in combinations(range(degree + nvars - 1), nvars - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(degree + nvars - 1 - prev - 1)
        yield tuple(out)


def multi_factorial(alpha: Sequence[int]) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out
