import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonconc.density import (
    BoundViolation,
    CoordinateChange,
    QOrderError,
    density_infimum,
    exact_membership,
    hull_membership,
    multisystem_density,
    order_q_data,
    permutation_product_bound,
    positivity_criterion,
    random_orthogonal,
    standard_coordinates,
    triangular_determinantal_bound,
)
from nonconc.diagonal import alpha_tuples, diagonal_derivative
from nonconc.gallery import (
    phi_degenerate,
    phi_determinantal,
    phi_difference,
    phi_square_difference,
)
from nonconc.poly import Polynomial, PolyVector


def _objective_by_directional_derivatives(phi, q, x, T):
    # independent route: exact directional derivatives for every alpha tuple
    best = 0.0
    for alphas in alpha_tuples(phi.n, phi.k, q):
        vals = diagonal_derivative(phi, T, alphas, x)
        best = max(best, max(abs(v) for v in vals) if phi.norm == "max" else math.hypot(*vals))
    return best ** (phi.n / q) / abs(np.linalg.det(np.asarray(T, dtype=float)))


@pytest.mark.parametrize(
    "phi, q, x",
    [
        (phi_degenerate(), 2, [0.5, -1.0]),
        (phi_determinantal(2), 2, [1.0, 0.0, 0.5, 2.0]),
        (phi_difference(2), 1, [0.0, 0.0]),
    ],
)
def test_objective_matches_directional_derivatives(phi, q, x):
    rng = np.random.default_rng(4)
    data = order_q_data(phi, q, x)
    for _ in range(3):
        T = rng.standard_normal((phi.n, phi.n))
        assert data.objective(T) == pytest.approx(_objective_by_directional_derivatives(phi, q, x, T), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 1000))
def test_objective_is_scale_invariant(c, seed):
    data = order_q_data(phi_determinantal(2), 2, [0, 0, 0, 0])
    T = np.random.default_rng(seed).standard_normal((4, 4))
    assert data.objective(c * T) == pytest.approx(data.objective(T), rel=1e-9)


def test_difference_density_is_one():
    assert density_infimum(phi_difference(1), 1, [0.0], starts=4).upper == pytest.approx(1.0)
    assert density_infimum(phi_difference(2), 1, [0.0, 0.0], starts=8).upper == pytest.approx(1.0, rel=1e-3)


def test_degenerate_density_drops_to_zero():
    rep = density_infimum(phi_square_difference(), 2, [0.1, 0.2], starts=8)
    assert rep.upper < 1e-6


def test_density_search_is_deterministic_and_thread_independent():
    phi = phi_determinantal(2)
    a = density_infimum(phi, 2, [0, 0, 0, 0], starts=4, maxiter=100, seed=3)
    b = density_infimum(phi, 2, [0, 0, 0, 0], starts=4, maxiter=100, seed=3, workers=2)
    assert a.upper == b.upper and a.certificate_T == b.certificate_T


def test_certificate_reproduces_upper_value():
    phi = phi_determinantal(2)
    rep = density_infimum(phi, 2, [0, 0, 0, 0], starts=4, maxiter=200)
    assert order_q_data(phi, 2, [0, 0, 0, 0]).objective(rep.certificate_T) == pytest.approx(rep.upper, rel=1e-9)


def test_wrong_order_is_rejected():
    with pytest.raises(QOrderError):
        order_q_data(phi_difference(1), 2, [0.0])


def test_positive_witness_weights():
    res = positivity_criterion(phi_determinantal(2), 2, [0, 0, 0, 0], O_samples=20)
    assert res.verdict == "positive"
    total = sum(res.weights.values())
    centroid = np.sum([np.array(a) * w for a, w in res.weights.items()], axis=0)
    assert total == pytest.approx(1.0)
    assert centroid == pytest.approx([0.5] * 4)
    assert set(res.weights) <= set(res.cloud)


def test_zero_witness_separates_the_cloud():
    res = positivity_criterion(phi_square_difference(), 2, [0.3, 0.4])
    assert res.verdict == "zero"
    ell = [Fraction(v) for v in res.separator]
    rhs = Fraction(2, 2) * sum(ell)
    assert all(sum(l * a for l, a in zip(ell, pt)) > rhs for pt in res.cloud)
    assert res.separator == [1.0, -1.0]


def test_exact_membership_in_simple_clouds():
    assert exact_membership({(2, 0), (0, 2)}, 2, 2) == {(2, 0): Fraction(1, 2), (0, 2): Fraction(1, 2)}
    assert exact_membership({(2, 0)}, 2, 2) is None


def test_hull_membership_margin_and_separation():
    inside = hull_membership([(2, 0), (0, 2), (1, 1)], [1.0, 1.0])
    assert inside.member and inside.margin > 0
    outside = hull_membership([(2, 0), (3, 0)], [1.0, 1.0])
    assert not outside.member and outside.separation > 0


def test_positivity_report_json():
    out = positivity_criterion(phi_difference(1), 1, [0.0], O_samples=5).to_json()
    assert out["verdict"] == "positive" and out["witness_kind"] == "weights"


@pytest.mark.parametrize("seed", range(10))
def test_triangular_bound_holds(seed):
    rng = np.random.default_rng(seed)
    T = np.tril(rng.standard_normal((4, 4)))
    mx, rhs = triangular_determinantal_bound(2, T)
    assert mx >= rhs - 1e-9
    assert permutation_product_bound(2, T) == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize(
    "T",
    [np.ones((4, 4)), np.diag([1.0, 0.0, 1.0, 1.0]), np.eye(3)],
)
def test_triangular_bound_rejects_bad_frames(T):
    with pytest.raises(ValueError):
        triangular_determinantal_bound(2, T)


def test_bound_violation_type():
    assert issubclass(BoundViolation, AssertionError)


def test_random_orthogonal():
    O = random_orthogonal(np.random.default_rng(0), 3)
    assert O @ O.T == pytest.approx(np.eye(3))


def test_multisystem_restores_positivity_for_degenerate_example():
    val = multisystem_density(phi_degenerate(), Fraction(6, 5), 3, None, [0.0, 0.0], starts=8)
    assert val > 0.1


def test_multisystem_single_order_matches_plain_density():
    # with N = 1 only first-order derivatives enter; for x - y on R^2 at s = q/n both give 1
    val = multisystem_density(phi_difference(2), Fraction(1, 2), 1, [standard_coordinates(2)], [0.0, 0.0], starts=8)
    assert val == pytest.approx(1.0, rel=1e-3)


def test_multisystem_with_too_large_exponent_collapses():
    # only order-1 derivatives and s > q/n: scaling T up drives the objective to 0
    assert multisystem_density(phi_difference(2), 1, 1, None, [0.0, 0.0], starts=4) == 0.0


def test_singular_coordinate_change_is_rejected():
    y0, y1 = Polynomial.var(2, 0), Polynomial.var(2, 1)
    chi = CoordinateChange(PolyVector([y0 ** 2, y1]), "fold")
    with pytest.raises(ValueError):
        chi.centered_linearized()


@pytest.mark.parametrize(
    "phi, q, x",
    [
        (phi_degenerate(), 2, [0.5, -1.0]),
        (phi_determinantal(2), 2, [1.0, 0.0, 0.5, 2.0]),
        (phi_square_difference(), 2, [0.2, 0.7]),
    ],
)
def test_right_orthogonal_factor_changes_objective_by_bounded_factor(phi, q, x):
    data = order_q_data(phi, q, x)
    rng = np.random.default_rng(11)
    factor = phi.n ** (q * phi.k)
    for _ in range(20):
        T = rng.standard_normal((phi.n, phi.n))
        O2 = random_orthogonal(rng, phi.n)
        base, turned = data.objective(T), data.objective(T @ O2)
        assert turned <= factor * base * (1 + 1e-9)
        assert base <= factor * turned * (1 + 1e-9)
