import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scmadesign.constellation import (
    build_mc,
    dimension_energy,
    mc_mpd,
    mc_mpd_brute_force,
    mc_mpd_closed_form,
)
from scmadesign.errors import ConfigError

OMEGA_GRID = [1.01] + [round(1.1 + 0.1 * i, 10) for i in range(90)]

orders = st.sampled_from([4, 8, 16, 32])
omegas = st.floats(min_value=1.001, max_value=20.0, allow_nan=False)


def test_build_mc_m4():
    mc = build_mc(4, 2.0)
    np.testing.assert_array_equal(mc.rows, [[2, 1, -1, -2], [-1, 2, -2, 1]])


def test_build_mc_m8_levels():
    mc = build_mc(8, 2.0)
    np.testing.assert_array_equal(mc.rows[0], [4, 3, 2, 1, -1, -2, -3, -4])
    np.testing.assert_array_equal(mc.rows[1], [-1, 2, 3, 4, -4, -3, -2, 1])


@pytest.mark.parametrize("M, omega", [(4, 1.0), (4, 0.5), (3, 2.0), (6, 2.0), (2, 2.0)])
def test_build_mc_rejects_bad_domain(M, omega):
    with pytest.raises(ConfigError):
        build_mc(M, omega)


def test_omega_boundary_message():
    with pytest.raises(ConfigError, match="omega must exceed 1"):
        build_mc(4, 1.0)


@pytest.mark.parametrize("M, omega, expected", [
    (4, 2.0, 10.0),
    (16, 2.0, 408.0),
])
def test_dimension_energy_values(M, omega, expected):
    assert dimension_energy(M, omega) == pytest.approx(expected, rel=1e-12)


def test_dimension_energy_fitted_omega():
    # ring ratio recovered from the published 4x6 codebook
    assert dimension_energy(4, 1.0684 / 0.3074) == pytest.approx(26.158, abs=0.01)


@given(orders, omegas)
def test_energy_matches_row_sums(M, omega):
    mc = build_mc(M, omega)
    E = dimension_energy(M, omega)
    for row in mc.rows:
        assert np.sum(row**2) == pytest.approx(E, rel=1e-9)


@given(orders, omegas)
def test_antipodal_columns(M, omega):
    rows = build_mc(M, omega).rows
    np.testing.assert_array_equal(rows, -rows[:, ::-1])


@pytest.mark.parametrize("M, omega, expected, tol", [
    (4, 3.4756, 11.080, 0.01),
    (4, 5.0, 20.0, 1e-12),
    (16, 1.5, 1.0, 1e-12),
])
def test_closed_form_branches(M, omega, expected, tol):
    assert mc_mpd_closed_form(M, omega) == pytest.approx(expected, abs=tol)


def test_brute_force_examples():
    assert mc_mpd_brute_force(build_mc(4, 3.4756)) == pytest.approx(11.080, abs=0.01)
    assert mc_mpd_brute_force(build_mc(4, 2.0)) == pytest.approx(3.0, rel=1e-12)


def test_brute_force_explicit_pairs_m4():
    # columns (w, -1), (1, w), (-1, -w), (-w, 1)
    w = 2.7
    cols = [(w, -1), (1, w), (-1, -w), (-w, 1)]
    prods = [abs(a[0] - b[0]) * abs(a[1] - b[1])
             for i, a in enumerate(cols) for b in cols[i + 1:]]
    assert mc_mpd_brute_force(build_mc(4, w)) == pytest.approx(min(prods), rel=1e-12)


@pytest.mark.parametrize("omega", OMEGA_GRID)
def test_closed_form_agrees_with_enumeration_m4(omega):
    brute = mc_mpd_brute_force(build_mc(4, omega))
    assert math.isclose(brute, mc_mpd_closed_form(4, omega), rel_tol=1e-9)


@pytest.mark.parametrize("M", [8, 16])
def test_closed_form_bounds_enumeration_from_above(M):
    for omega in OMEGA_GRID:
        assert mc_mpd_brute_force(build_mc(M, omega)) <= mc_mpd_closed_form(M, omega) * (1 + 1e-9)


def test_disagreement_is_logged(caplog):
    with caplog.at_level("INFO", logger="scmadesign.constellation"):
        value = mc_mpd(8, 2.0)
    assert value == pytest.approx(1.0)
    assert "differs from enumeration" in caplog.text


def test_mpd_increasing_in_omega_m4():
    values = [mc_mpd_closed_form(4, w) for w in OMEGA_GRID]
    assert all(b > a for a, b in zip(values, values[1:]))


@settings(max_examples=50)
@given(omegas)
def test_closed_form_continuous_at_m4_boundary(omega):
    edge = 2 + math.sqrt(5)
    below = mc_mpd_closed_form(4, edge - 1e-9)
    above = mc_mpd_closed_form(4, edge + 1e-9)
    assert below == pytest.approx(above, rel=1e-6)
