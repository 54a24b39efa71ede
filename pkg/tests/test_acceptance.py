"""Acceptance suite: one test per criterion, each recording a pass/fail summary line."""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from nonconc.density import density_infimum, positivity_criterion, triangular_determinantal_bound
from nonconc.diagonal import order_by_differentiation, order_of_vanishing
from nonconc.functionals import AffineImage, Box, Lebesgue, Union, chebyshev_set, constant_sweep, sup_functional
from nonconc.gallery import (
    clifford_matrices,
    identity_map,
    phi_degenerate,
    phi_determinantal,
    phi_difference,
    phi_hausdorff,
    phi_square_difference,
)
from nonconc.geometry import (
    InconclusiveError,
    build_phi_jacobian,
    build_phi_wedge,
    omega_at,
    random_gamma,
    vanishing_order_bound_check,
)
from nonconc.hausdorff import WINDOWS, cover_profile, cover_upper, density_comparability_check
from nonconc.poly import det_rational
from nonconc.radon import (
    hypothesis_spot_check,
    line_family_case,
    lp_ratio_check,
    random_rectangle_union,
    scaling_exponent,
)

pytestmark = pytest.mark.acceptance

SHAPES = [(n, r, k) for n in (1, 2) for r in (1, 2) for k in (1, 2, 3)]


def test_jacobian_identity(criterion):
    rng = random.Random(20240601)
    # every shape with n, r <= 2 and k <= 3; the heaviest shape (2, 2, 3) once
    shapes = [s for s in SHAPES if s != (2, 2, 3)] * 2 + [(2, 2, 3)]
    start = time.perf_counter()
    agree = nonzero = 0
    for n, r, k in shapes:
        g = random_gamma(rng, n, r, k, degree=2)
        wedge, jac = build_phi_wedge(g), build_phi_jacobian(g)
        agree += wedge.body == jac.body
        nonzero += not jac.body.is_zero()
    elapsed = time.perf_counter() - start
    ok = len(shapes) >= 20 and agree == len(shapes) and nonzero >= len(shapes) // 2 and elapsed < 60
    criterion(1, "wedge route equals Jacobian route", ok,
              f"{agree}/{len(shapes)} agree, {nonzero} nonzero, {elapsed:.1f}s")
    assert ok


def test_order_of_vanishing(criterion):
    checks = {
        "hausdorff identity": (order_of_vanishing(phi_hausdorff(identity_map(2))).q, 1),
        "determinantal 2": (order_of_vanishing(phi_determinantal(2)).q, 2),
        "degenerate": (order_of_vanishing(phi_degenerate()).q, 2),
    }
    # independent route for the derived value: direct differentiation
    derived = order_by_differentiation(phi_degenerate()).q
    rng = random.Random(7)
    shapes = [(n, r, k) for n in (1, 2) for r in (1, 2) for k in (2, 3)]
    bound_ok, drawn, kept = True, 0, 0
    while kept < 10:
        n, r, k = shapes[drawn % len(shapes)]
        drawn += 1
        assert drawn < 200, "could not draw enough nondegenerate families"
        g = random_gamma(rng, n, r, k, degree=2)
        x = [rng.randint(-2, 2) for _ in range(g.N2)]
        if omega_at(g, x).is_zero() or build_phi_jacobian(g).freeze(x).body.is_zero():
            continue
        try:
            bound_ok &= vanishing_order_bound_check(g, x)
        except InconclusiveError:
            continue
        kept += 1
    ok = all(a == b for a, b in checks.values()) and derived == 2 and bound_ok
    detail = ", ".join(f"{k}: q={v[0]}" for k, v in checks.items()) + f", random bound {'ok' if bound_ok else 'violated'}"
    criterion(2, "order of vanishing", ok, detail)
    assert ok


def test_determinantal_density(criterion):
    rng = np.random.default_rng(11)
    worst = math.inf
    for _ in range(50):
        T = np.tril(rng.standard_normal((4, 4)))
        np.fill_diagonal(T, rng.uniform(0.2, 3.0, 4) * rng.choice([-1, 1], 4))
        mx, rhs = triangular_determinantal_bound(2, T)
        worst = min(worst, mx - rhs)
    phi = phi_determinantal(2)
    uppers = [density_infimum(phi, 2, rng.uniform(-2, 2, 4), seed=i).upper for i in range(5)]
    ok = worst >= -1e-9 and min(uppers) >= 0.01
    criterion(3, "determinantal density", ok, f"min(max - |det T|^1/2) = {worst:.3g}, min density upper = {min(uppers):.4f}")
    assert ok


def test_positivity_criterion(criterion):
    start = time.perf_counter()
    cases = {
        "x - y": (phi_difference(1), 1, [0.3], "positive"),
        "det(A1 - A2)": (phi_determinantal(2), 2, [0.5, -1.0, 2.0, 0.25], "positive"),
        "(x1 - x2)^2": (phi_square_difference(), 2, [0.2, 0.7], "zero"),
    }
    ok, parts = True, []
    for name, (phi, q, x, expected) in cases.items():
        verdict = positivity_criterion(phi, q, x).verdict
        upper = density_infimum(phi, q, x).upper
        behaves = upper > 1e-2 if expected == "positive" else upper < 1e-3
        ok &= verdict == expected and behaves
        parts.append(f"{name}: {verdict}/{upper:.2g}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    criterion(4, "positivity criterion", ok, ", ".join(parts) + f", {elapsed:.0f}s")
    assert ok


def test_degenerate_exponent(criterion):
    phi = phi_degenerate()
    aspects = [0.5, 2 ** -0.5, 1.0, 2 ** 0.5, 2.0]
    areas = [0.25, 0.5, 1.0, 2.0]
    ratio_min, mins, closed_ok = math.inf, [], True
    for A in areas:
        values = []
        for rho in aspects:
            a, b = A ** 0.6 * rho, A ** 0.4 / rho
            S = sup_functional(phi, Box([0, 0], [a, b]), budget=20_000, seed=3).value
            closed_ok &= math.isclose(S, a * a + b ** 3, rel_tol=1e-9)
            values.append(S)
            ratio_min = min(ratio_min, S / A ** 1.2)
        mins.append(min(values))
    slope = float(np.polyfit(np.log(areas), np.log(mins), 1)[0])
    ok = ratio_min >= 0.5 and abs(slope - 1.2) <= 0.05 and closed_ok
    criterion(5, "degenerate exponent 6/5", ok, f"min S/|E|^(6/5) = {ratio_min:.3f}, slope = {slope:.4f}")
    assert ok


def _difference_family():
    return [
        Box([0], [1]), Box([0], [0.1]), Box([2], [2.01]), Box([-3], [5]),
        Union([Box([0], [0.1]), Box([0.9], [1])]),
        Union([Box([0], [0.01]), Box([10], [10.01])]),
        Union([Box([0], [1]), Box([0.5], [2])]),
        Union([Box([0], [0.2]), Box([0.3], [0.4]), Box([0.6], [0.9])]),
        Box([0.25], [0.5]), Box([-1], [-0.999]),
        Union([Box([0], [0.05]), Box([0.1], [0.15]), Box([0.2], [0.25])]),
        Box([0], [3]),
    ]


def _matrix_family():
    rng = np.random.default_rng(3)
    unit = Box(np.zeros(4), np.ones(4))
    return [
        unit,
        Box(np.zeros(4), [1, 1, 0.1, 0.1]),
        Box(np.zeros(4), [0.2] * 4),
        Box(np.zeros(4), [2, 0.5, 1, 1]),
        Box([1, 0, 0, 1], [1.3, 0.3, 0.3, 1.3]),
        Box(np.zeros(4), [1, 0.05, 1, 1]),
        AffineImage(np.eye(4) + 0.3 * rng.standard_normal((4, 4)), np.zeros(4), unit),
        AffineImage([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1], [0, 0, 0, 1]], np.zeros(4), unit),
        Union([Box(np.zeros(4), [0.5] * 4), Box([0.5] * 4, np.ones(4))]),
        Box(np.zeros(4), [0.5, 2, 0.5, 2]),
        Box(-np.ones(4), np.ones(4)),
        AffineImage(np.diag([3, 1, 1, 1 / 3]), np.zeros(4), unit),
    ]


def test_constant_chain(criterion):
    results = {
        "x - y": constant_sweep(phi_difference(1), Lebesgue(), _difference_family(), 1, seed=1),
        "det(A1 - A2)": constant_sweep(phi_determinantal(2), Lebesgue(), _matrix_family(), Fraction(1, 2), seed=2),
    }
    ok, parts = True, []
    for name, sw in results.items():
        ok &= len(sw.rows) == 12 and sw.chain_holds and sw.ratio >= 1e-3
        parts.append(f"{name}: min c = {sw.min_c:.3g}, min c' = {sw.min_c_prime:.3g}")
    criterion(6, "integral and sup constants chain", ok, "; ".join(parts))
    assert ok


def test_chebyshev_set(criterion):
    ok, worst_mass, worst_ratio = True, 0.0, 0.0
    for m in range(5):
        rng = np.random.default_rng(100 + m)
        pts = rng.random((1000, 2))
        w = rng.random(1000)
        w /= w.sum()
        for tau in (2, 8):
            res = chebyshev_set(pts, w, 2, tau, n_tests=100, seed=m)
            mass_ok = res.complement_mass < 1 / tau
            # independent recheck of the sup bound on fresh random polynomials
            V = np.stack([np.prod(pts ** np.array(e), axis=1) for e in res.exponents], axis=1)
            trial = np.random.default_rng(500 + m)
            ratio = 0.0
            for _ in range(100):
                vals = V @ trial.standard_normal(V.shape[1])
                ratio = max(ratio, np.abs(vals[res.mask]).max() / (tau * res.d * math.fsum(w * np.abs(vals))))
            ok &= mass_ok and res.verification["passed"] and ratio <= 1 + 1e-9
            worst_mass = max(worst_mass, res.complement_mass * tau)
            worst_ratio = max(worst_ratio, ratio, res.verification["max_sup_over_bound"])
    criterion(7, "Chebyshev set", ok, f"max tau*mu(X\\E) = {worst_mass:.3g}, max sup/bound = {worst_ratio:.3f}")
    assert ok


def test_hausdorff_scaling(criterion):
    phi = phi_difference(1)
    unit = Box([0], [1])
    levels = list(range(0, 11))
    ones = [cover_upper(phi, 1, unit, L).value for L in levels]
    profile = cover_profile(phi, 2, unit, levels)
    slopes = profile["log2_slopes"]
    telescopes = all(abs(v - 1) <= 1e-12 for v in ones)
    slope_ok = all(abs(s + 1) <= 0.25 for s in slopes)
    diff = density_comparability_check(phi, 1, unit, 6, window=WINDOWS["difference"])
    det = density_comparability_check(
        phi_determinantal(2), 2, Box([0.0] * 4, [0.2] * 4), 2, window=WINDOWS["determinantal-2"]
    )
    square = density_comparability_check(phi_square_difference(), 2, Box([0, 0], [1, 1]), (6, 3), starts=16)
    ok = telescopes and slope_ok and diff.within_window and det.within_window and square.both_vanish
    criterion(8, "Hausdorff cover scaling", ok,
              f"sigma=1 values all 1: {telescopes}, sigma=2 slopes in [{min(slopes):.3f}, {max(slopes):.3f}], "
              f"ratios {diff.ratio:.3g} / {det.ratio:.3g}, degenerate both vanish: {square.both_vanish}")
    assert ok


def test_clifford_identity(criterion):
    rng = random.Random(5)
    start = time.perf_counter()
    ok = True
    for l in (1, 2, 3):
        Ms = clifford_matrices(l)
        size = len(Ms[0])
        for _ in range(20):
            a = [Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(l)]
            M = [[sum(a[j] * Ms[j][r][c] for j in range(l)) for c in range(size)] for r in range(size)]
            ok &= det_rational(M) ** 2 == sum(v * v for v in a) ** (2 ** l)
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30
    criterion(9, "Clifford determinant identity", ok, f"60 exact checks, {elapsed:.2f}s")
    assert ok


def test_radon_check(criterion):
    start = time.perf_counter()
    case = line_family_case()
    spot = hypothesis_spot_check(case, [0.0, 1.0], n_sets=50, seed=0)
    rng = np.random.default_rng(2024)
    family = [random_rectangle_union(rng) for _ in range(30)]
    report = lp_ratio_check(case, family)
    exponents = [scaling_exponent(case, F) for F in (Box([0.1, 0.1], [0.6, 0.4]), family[0])]
    elapsed = time.perf_counter() - start
    ok = (
        spot.passed
        and report.spread <= 10
        and report.passed
        and all(abs(e - 2 / 3) <= 0.07 for e in exponents)
        and elapsed < 600
    )
    criterion(10, "Radon operator check", ok,
              f"spot {spot.n_sets - spot.failures}/{spot.n_sets}, rho in [{report.min_rho:.3f}, {report.max_rho:.3f}] "
              f"cap {case.cap}, exponents {', '.join(f'{e:.3f}' for e in exponents)}, {elapsed:.0f}s")
    assert ok
