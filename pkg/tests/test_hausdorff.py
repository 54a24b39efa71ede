import math

import numpy as np
import pytest

from nonconc.functionals import Box
from nonconc.gallery import phi_determinantal, phi_difference, phi_square_difference
from nonconc.hausdorff import (
    WINDOWS,
    cell_sups,
    cover_profile,
    cover_upper,
    density_comparability_check,
    grid_counts,
    unit_tuples,
)


@pytest.mark.parametrize("level", range(0, 9))
def test_unit_interval_cover_at_sigma_one(level):
    assert cover_upper(phi_difference(1), 1, Box([0], [1]), level).value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sigma", [1.5, 2.0, 3.0])
def test_interval_cover_scales_with_level(sigma):
    prof = cover_profile(phi_difference(1), sigma, Box([0], [1]), [2, 3, 4, 5])
    assert prof["log2_slopes"] == pytest.approx([-(sigma - 1)] * 3, abs=1e-9)


def test_square_cover_for_difference_in_plane():
    # cells of side 2^-L have diameter sqrt(2) 2^-L; sigma = 2 keeps the sum at 2
    prof = cover_profile(phi_difference(2), 2, Box([0, 0], [1, 1]), [1, 2, 3])
    assert prof["values"] == pytest.approx([2.0, 2.0, 2.0], rel=1e-9)


def test_anisotropic_levels_shrink_degenerate_cover():
    prof = cover_profile(phi_square_difference(), 1, Box([0, 0], [1, 1]), [(2, 1), (4, 2), (6, 3)])
    assert prof["values"] == pytest.approx([0.5, 0.25, 0.125], rel=1e-9)


def test_cover_weights():
    phi = phi_difference(1)
    E = Box([0], [1])
    plain = cover_upper(phi, 1, E, 2)
    weighted = cover_upper(phi, 1, E, 2, weights=[2, 2, 2, 2])
    assert weighted.value == pytest.approx(2 * plain.value)
    with pytest.raises(ValueError):
        cover_upper(phi, 1, E, 2, weights=[1, 1])


def test_cover_delta_is_cell_diameter():
    est = cover_upper(phi_difference(2), 2, Box([0, 0], [1, 1]), 3)
    assert est.delta == pytest.approx(math.sqrt(2) / 8)
    assert est.n_cells == 64 and est.to_json()["grid_counts"] == [8, 8]


def test_grid_counts_validation():
    assert grid_counts(2, 3) == (8, 8)
    assert grid_counts(2, (1, 2)) == (2, 4)
    with pytest.raises(ValueError):
        grid_counts(2, (1,))
    with pytest.raises(ValueError):
        grid_counts(1, -1)


def test_unit_tuples_include_vertices():
    tup = unit_tuples(2, 2, 10, seed=0)
    assert tup.shape == (16 + 10, 2, 2)
    assert ((tup == 0) | (tup == 1))[:16].all()


def test_cell_sups_monotone_in_cell_size():
    phi = phi_determinantal(2)
    tup = unit_tuples(4, 2, 64, seed=1)
    coarse = cell_sups(phi, Box(np.zeros(4), np.ones(4)), (1, 1, 1, 1), tup)
    fine = cell_sups(phi, Box(np.zeros(4), np.ones(4)), (2, 2, 2, 2), tup)
    assert fine.max() <= coarse.max() + 1e-12


def test_comparability_for_difference():
    rep = density_comparability_check(phi_difference(1), 1, Box([0], [1]), 5, window=WINDOWS["difference"])
    assert rep.within_window and rep.ratio == pytest.approx(1.0)
    assert rep.to_json()["ratio"] == pytest.approx(1.0)


def test_cover_rejects_non_box():
    from nonconc.functionals import Union

    with pytest.raises(ValueError):
        cover_upper(phi_difference(1), 1, Union([Box([0], [1])]), 1)
