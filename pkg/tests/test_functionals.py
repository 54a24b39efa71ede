import math
import warnings
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonconc.functionals import (
    AffineImage,
    Box,
    DensityWeighted,
    Discrete,
    Lebesgue,
    MeasureSpec,
    Predicate,
    SetSpec,
    Union,
    chebyshev_set,
    constant_sweep,
    evaluation_matrix,
    functional_report,
    int_functional,
    monomial_exponents,
    sup_functional,
)
from nonconc.gallery import phi_degenerate, phi_determinantal, phi_difference
from nonconc.poly import Polynomial, parse


def test_box_basics():
    B = Box([0, 1], [2, 4])
    assert B.volume() == 6 and B.diameter() == pytest.approx(math.hypot(2, 3))
    cells = B.subdivide((2, 3))
    assert len(cells) == 6 and math.fsum(c.volume() for c in cells) == pytest.approx(6)
    assert B.contains(np.array([[1, 2], [3, 2]])).tolist() == [True, False]
    assert B.project(np.array([[5.0, -1.0]])).tolist() == [[2.0, 1.0]]
    assert len(B.vertices()) == 4


def test_box_validation():
    with pytest.raises(ValueError):
        Box([1], [0])
    with pytest.raises(ValueError):
        Box([0, 0], [1])


def test_union_volume_is_exact_for_boxes():
    U = Union([Box([0, 0], [2, 1]), Box([1, 0], [3, 1]), Box([0, 5], [1, 6])])
    assert U.volume() == pytest.approx(4.0, abs=1e-12)


def test_union_sampling_is_uniform():
    U = Union([Box([0], [2]), Box([1], [3])])
    pts = U.sample(np.random.default_rng(0), 60_000)
    assert U.contains(pts).all()
    # uniform on [0, 3]: mean 1.5, and the overlap holds a third of the mass
    assert pts.mean() == pytest.approx(1.5, abs=0.02)
    assert np.mean((pts >= 1) & (pts <= 2)) == pytest.approx(1 / 3, abs=0.01)


def test_affine_image():
    A = AffineImage([[2, 1], [0, 3]], [1, 1], Box([0, 0], [1, 1]))
    assert A.volume() == pytest.approx(6)
    pts = A.sample(np.random.default_rng(1), 1000)
    assert A.contains(pts).all()
    with pytest.raises(ValueError):
        AffineImage([[1, 1], [1, 1]], [0, 0], Box([0, 0], [1, 1]))


def test_predicate_volume():
    disc = Predicate([parse("1 - x^2 - y^2", ["x", "y"])], Box([-1, -1], [1, 1]))
    assert disc.volume() == pytest.approx(math.pi, rel=0.01)


@pytest.mark.parametrize(
    "data",
    [
        {"type": "box", "lo": [0, 0], "hi": [1, 2]},
        {"type": "affine", "matrix": [[1, 0], [1, 1]], "offset": [0, 1], "base": {"type": "box", "lo": [0, 0], "hi": [1, 1]}},
        {"type": "union", "parts": [{"type": "box", "lo": [0], "hi": [1]}, {"type": "box", "lo": [3], "hi": [4]}]},
    ],
)
def test_set_json_round_trip(data):
    E = SetSpec.from_json(data)
    again = SetSpec.from_json(E.to_json())
    assert again.volume() == pytest.approx(E.volume())


def test_measure_json():
    assert isinstance(MeasureSpec.from_json({"type": "lebesgue"}), Lebesgue)
    mu = MeasureSpec.from_json({"type": "discrete", "points": [[0.0], [1.0]], "weights": [0.5, 0.5]})
    assert mu.mass(Box([0.5], [2])) == 0.5
    with pytest.raises(ValueError):
        MeasureSpec.from_json({"type": "gaussian"})


def test_sup_of_difference_is_length():
    assert sup_functional(phi_difference(1), Box([0], [1]), budget=1000).value == 1.0
    assert sup_functional(phi_difference(1), Box([2], [2]), budget=1000).value == 0.0
    U = Union([Box([0], [0.1]), Box([5], [5.5])])
    assert sup_functional(phi_difference(1), U, budget=1000).value == pytest.approx(5.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_degenerate_sup_has_closed_form(a, b):
    S = sup_functional(phi_degenerate(), Box([0, 0], [a, b]), budget=2000, seed=1).value
    assert S == pytest.approx(a * a + b ** 3, rel=1e-12)


def test_sup_is_monotone_under_inclusion_with_shared_tuples():
    rng = np.random.default_rng(5)
    unit = rng.random((4000, 2, 4))
    big, small = Box(np.zeros(4), np.ones(4)), Box(np.zeros(4), 0.5 * np.ones(4))
    s_big = sup_functional(phi_determinantal(2), big, tuples=unit, polish=False).value
    s_small = sup_functional(phi_determinantal(2), small, tuples=0.5 * unit, polish=False).value
    assert s_small <= s_big


def test_sup_is_seed_reproducible():
    E = Box(np.zeros(4), np.ones(4))
    a = sup_functional(phi_determinantal(2), E, budget=5000, seed=9)
    b = sup_functional(phi_determinantal(2), E, budget=5000, seed=9)
    assert a.value == b.value and a.argmax == b.argmax


def test_integral_of_difference_matches_closed_form():
    est = int_functional(phi_difference(1), Lebesgue(), Box([0], [1]), budget=400_000, seed=2)
    assert abs(est.value - 1 / 3) <= 4 * est.stderr
    strat = int_functional(phi_difference(1), Lebesgue(), Box([0], [1]), budget=400_000, seed=2, stratified=True)
    assert abs(strat.value - 1 / 3) <= 4 * strat.stderr and strat.stderr < est.stderr


def test_integral_scales_with_length_cubed():
    est = int_functional(phi_difference(1), Lebesgue(), Box([0], [2]), budget=400_000, seed=3)
    assert abs(est.value - 8 / 3) <= 4 * est.stderr


def test_discrete_integral_is_exact():
    pts = np.array([[0.0], [1.0], [3.0]])
    w = np.array([0.2, 0.3, 0.5])
    est = int_functional(phi_difference(1), Discrete(pts, w), Box([-1], [5]))
    brute = sum(w[i] * w[j] * abs(pts[i, 0] - pts[j, 0]) for i, j in product(range(3), repeat=2))
    assert est.exact and est.value == pytest.approx(brute, rel=1e-14)


def test_density_weighted_integral():
    # weight 2x on [0, 1]: int int |x - y| 4xy dx dy = 4/15
    mu = DensityWeighted(Polynomial(1, {(1,): 2}))
    est = int_functional(phi_difference(1), mu, Box([0], [1]), budget=400_000, seed=4)
    assert abs(est.value - 4 / 15) <= 4 * est.stderr


def test_integral_bounded_by_sup_times_mass():
    rep = functional_report(phi_determinantal(2), Lebesgue(), Box(np.zeros(4), np.ones(4)), 0.5,
                            sup_budget=20_000, int_budget=100_000)
    assert rep.A_estimate <= rep.S_estimate * rep.mu_E ** 2 + 3 * rep.A_stderr
    assert rep.to_json()["S_is_lower_bound"]


def test_sweep_skips_null_sets():
    fam = [Box([0], [1]), Box([2], [2])]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sw = constant_sweep(phi_difference(1), Lebesgue(), fam, 1, sup_budget=1000, int_budget=20_000)
    assert sw.skipped == [1] and len(sw.rows) == 1 and caught
    assert sw.chain_holds and sw.dominated_rows


def test_monomial_basis():
    exps = monomial_exponents(2, 2)
    assert len(exps) == 6
    V = evaluation_matrix(np.array([[2.0, 3.0]]), exps)
    assert sorted(V[0].tolist()) == sorted([1, 2, 3, 4, 6, 9])


def test_chebyshev_set_small():
    rng = np.random.default_rng(0)
    pts = rng.random((150, 2))
    w = rng.random(150)
    w /= w.sum()
    res = chebyshev_set(pts, w, 1, 4, restarts=2, n_tests=50)
    assert res.d == res.d1 == 3
    assert res.complement_mass < 1 / 4
    assert res.verification["passed"]
    assert res.max_cramer <= 1 + 1e-6


def test_chebyshev_set_with_null_atoms():
    # atoms on the line y = x carry all weight; off-line atoms see y - x, which integrates to 0
    rng = np.random.default_rng(1)
    t = rng.random(80)
    on = np.stack([t, t], axis=1)
    off = rng.random((5, 2))
    pts = np.vstack([on, off])
    w = np.concatenate([np.full(80, 1 / 80), np.zeros(5)])
    res = chebyshev_set(pts, w, 1, 2, restarts=2, n_tests=30)
    assert res.d == 3 and res.d1 == 2
    assert res.null_atoms[80:].all() and not res.mask[80:].any()
    assert res.verification["passed"]


def test_chebyshev_rejects_bad_tau():
    with pytest.raises(ValueError):
        chebyshev_set(np.zeros((3, 2)), np.ones(3), 1, 0)
