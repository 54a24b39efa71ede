import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonconc.poly import (
    CompiledPoly,
    Polynomial,
    PolyVector,
    compose_linear,
    det_poly_matrix,
    det_rational,
    inverse_rational,
    multi_factorial,
    multiindices,
    parse,
    variables,
)

NV = 3
coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=6)
monos = st.tuples(*[st.integers(0, 3)] * NV)
polys = st.dictionaries(monos, coeffs, max_size=5).map(lambda t: Polynomial(NV, t))
points = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=5), min_size=NV, max_size=NV)


@settings(max_examples=60, deadline=None)
@given(polys, polys, polys)
def test_ring_axioms(p, q, r):
    zero, one = Polynomial.zero(NV), Polynomial.const(NV, 1)
    assert p + q == q + p
    assert p * q == q * p
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p + zero == p and p * one == p and p - p == zero


@settings(max_examples=60, deadline=None)
@given(polys, polys, st.integers(0, NV - 1))
def test_leibniz_rule(p, q, v):
    assert (p * q).partial(v) == p.partial(v) * q + p * q.partial(v)


@settings(max_examples=40, deadline=None)
@given(polys)
def test_mixed_partials_commute(p):
    assert p.partial(0).partial(1) == p.partial(1).partial(0)
    assert p.derivative((1, 0, 2)) == p.partial(2).partial(0).partial(2)


@settings(max_examples=40, deadline=None)
@given(polys, points, points)
def test_eval_is_a_homomorphism(p, q_pt, x):
    q = Polynomial(NV, {(1, 0, 0): q_pt[0], (0, 1, 1): q_pt[1]})
    assert (p * q).eval(x) == p.eval(x) * q.eval(x)
    assert (p + q).eval(x) == p.eval(x) + q.eval(x)


@settings(max_examples=40, deadline=None)
@given(polys, points)
def test_float_evaluation_matches_exact(p, x):
    exact = float(p.eval(x))
    assert p.eval_f64([float(v) for v in x]) == pytest.approx(exact, rel=1e-9, abs=1e-9)
    compiled = CompiledPoly([p])(np.array([[float(v) for v in x]]))[0, 0]
    assert compiled == pytest.approx(exact, rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(polys)
def test_compose_with_identity_is_identity(p):
    assert compose_linear(p, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == p


@settings(max_examples=30, deadline=None)
@given(polys, points)
def test_chain_rule_for_linear_composition(p, y):
    T = [[1, 2, 0], [0, 1, -1], [Fraction(1, 2), 0, 3]]
    q = compose_linear(p, T)
    Ty = [sum(T[i][j] * y[j] for j in range(NV)) for i in range(NV)]
    for i in range(NV):
        directional = sum(T[l][i] * p.partial(l).eval(Ty) for l in range(NV))
        assert q.partial(i).eval(y) == directional


@settings(max_examples=30, deadline=None)
@given(polys, polys)
def test_exact_division_inverts_multiplication(p, q):
    if q.is_zero():
        return
    assert (p * q).exact_div(q) == p


def test_cofactor_and_bareiss_agree():
    x = variables(4)
    M = [
        [x[0], x[1] + 1, x[2], 0],
        [x[3], x[0] * x[1], 2, x[2]],
        [1, x[3] - x[0], x[1] ** 2, x[0]],
        [x[2], 0, x[3], x[1] + x[2]],
    ]
    M = [[e if isinstance(e, Polynomial) else Polynomial.const(4, e) for e in row] for row in M]
    a = det_poly_matrix(M, method="cofactor")
    b = det_poly_matrix(M, method="bareiss")
    assert a == b and not a.is_zero()


def test_determinant_of_generic_two_by_two():
    a, b, c, d = variables(4)
    assert det_poly_matrix([[a, b], [c, d]]) == a * d - b * c


def test_rational_determinant_and_inverse():
    M = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    assert det_rational(M) == 18
    inv = inverse_rational(M)
    prod = [[sum(Fraction(M[i][l]) * inv[l][j] for l in range(3)) for j in range(3)] for i in range(3)]
    assert prod == [[1 if i == j else 0 for j in range(3)] for i in range(3)]
    assert det_rational([[1, 2], [2, 4]]) == 0


@pytest.mark.parametrize(
    "text, expected",
    [
        ("x + y", {(1, 0): 1, (0, 1): 1}),
        ("(x - y)^2", {(2, 0): 1, (1, 1): -2, (0, 2): 1}),
        ("3/4*x*y", {(1, 1): Fraction(3, 4)}),
        ("x/2 - 1", {(1, 0): Fraction(1, 2), (0, 0): -1}),
        ("x·y − 2", {(1, 1): 1, (0, 0): -2}),
        ("-x**3", {(3, 0): -1}),
    ],
)
def test_parser(text, expected):
    assert parse(text, ["x", "y"]) == Polynomial(2, expected)


@pytest.mark.parametrize("bad", ["1/x", "x +", "(x", "z", "x $ y"])
def test_parser_rejects_malformed_input(bad):
    with pytest.raises((ValueError, ZeroDivisionError)):
        parse(bad, ["x", "y"])


@settings(max_examples=40, deadline=None)
@given(polys)
def test_json_round_trip(p):
    data = json.loads(json.dumps(p.to_json()))
    assert Polynomial.from_json(data) == p


def test_json_accepts_expressions():
    p = Polynomial.from_json({"expr": "x^2 - y", "vars": ["x", "y"]})
    assert p == Polynomial(2, {(2, 0): 1, (0, 1): -1})


def test_constructor_validation():
    with pytest.raises(ValueError):
        Polynomial(2, {(1,): 1})
    with pytest.raises(ValueError):
        Polynomial(2, {(1, -1): 1})
    with pytest.raises(ValueError):
        Polynomial.var(2, 0) + Polynomial.var(3, 0)
    with pytest.raises(ValueError):
        PolyVector([])


def test_homogeneous_components_and_degree():
    x, y = variables(2)
    p = x * y + x ** 3 + 5
    parts = p.homogeneous_components()
    assert set(parts) == {0, 2, 3}
    assert sum(parts.values(), Polynomial.zero(2)) == p
    assert p.degree == 3


def test_multiindex_helpers():
    assert len(list(multiindices(3, 2))) == 6
    assert multi_factorial((2, 3)) == 12


def _random_poly(rng, nvars, degree, terms=4):
    data = {}
    for _ in range(terms):
        mono = [0] * nvars
        for _ in range(rng.integers(0, degree + 1)):
            mono[rng.integers(nvars)] += 1
        data[tuple(mono)] = Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 4)))
    return Polynomial(nvars, data)


def _random_matrix(rng, n):
    return [[Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3))) for _ in range(n)] for _ in range(n)]


@pytest.mark.parametrize("seed", range(50))
def test_product_degree_against_naive_convolution(seed):
    rng = np.random.default_rng(seed)
    p, q = _random_poly(rng, NV, 3), _random_poly(rng, NV, 3)
    if p.is_zero() or q.is_zero():
        return
    naive = {}
    for a, ca in p.terms():
        for b, cb in q.terms():
            mono = tuple(x + y for x, y in zip(a, b))
            naive[mono] = naive.get(mono, 0) + ca * cb
    assert p * q == Polynomial(NV, naive)
    assert (p * q).degree == p.degree + q.degree


@pytest.mark.parametrize("seed", range(20))
def test_higher_order_chain_rule(seed):
    # oracle: apply sum_l T[l][i] d_l explicitly, alpha_i times per direction, then evaluate at T y
    rng = np.random.default_rng(100 + seed)
    p = _random_poly(rng, NV, 4, terms=6)
    T = _random_matrix(rng, NV)
    alpha = [0] * NV
    for _ in range(rng.integers(1, 4)):
        alpha[rng.integers(NV)] += 1
    y = [Fraction(int(v), 3) for v in rng.integers(-4, 5, NV)]
    r = p
    for i, times in enumerate(alpha):
        for _ in range(times):
            r = sum((r.partial(l).scale(T[l][i]) for l in range(NV)), Polynomial.zero(NV))
    Ty = [sum(T[i][j] * y[j] for j in range(NV)) for i in range(NV)]
    assert compose_linear(p, T).derivative(alpha).eval(y) == r.eval(Ty)


@pytest.mark.parametrize("seed", range(10))
def test_composition_law(seed):
    # x -> S x followed by x -> T x gives p(S T x)
    rng = np.random.default_rng(200 + seed)
    p = _random_poly(rng, NV, 3)
    S, T = _random_matrix(rng, NV), _random_matrix(rng, NV)
    ST = [[sum(S[i][l] * T[l][j] for l in range(NV)) for j in range(NV)] for i in range(NV)]
    assert compose_linear(compose_linear(p, S), T) == compose_linear(p, ST)


def test_compose_with_swap():
    x = variables(2)
    assert compose_linear(x[0], [[0, 1], [1, 0]]) == x[1]


@pytest.mark.parametrize("seed", range(20))
def test_cofactor_and_bareiss_agree_on_random_matrices(seed):
    rng = np.random.default_rng(300 + seed)
    M = [[_random_poly(rng, NV, 2, terms=2) for _ in range(4)] for _ in range(4)]
    assert det_poly_matrix(M, method="cofactor") == det_poly_matrix(M, method="bareiss")


@pytest.mark.parametrize("seed", range(10))
def test_determinant_is_multilinear_and_alternating(seed):
    rng = np.random.default_rng(400 + seed)
    M = [[_random_poly(rng, NV, 2, terms=2) for _ in range(3)] for _ in range(3)]
    u = [_random_poly(rng, NV, 1, terms=2) for _ in range(3)]
    a, b = _random_poly(rng, NV, 1, terms=2), Fraction(int(rng.integers(1, 5)))
    row = int(rng.integers(3))
    mixed = [list(r) for r in M]
    mixed[row] = [a * m + u_j.scale(b) for m, u_j in zip(M[row], u)]
    with_u = [list(r) for r in M]
    with_u[row] = u
    assert det_poly_matrix(mixed) == a * det_poly_matrix(M) + det_poly_matrix(with_u).scale(b)
    swapped = [M[1], M[0], M[2]]
    assert det_poly_matrix(swapped) == -det_poly_matrix(M)
    assert det_poly_matrix([M[0], M[0], M[2]]).is_zero()
