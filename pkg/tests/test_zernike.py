import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberao import zernike


def noll_table(j_max):
    """Independent enumeration oracle for the Noll ordering.

    Rows sorted by radial order n; within a row |m| ascending; for each
    |m| > 0 pair the even j takes m >= 0.
    """
    table = {}
    j = 1
    n = 0
    while j <= j_max:
        row = sorted(range(-n, n + 1, 2), key=abs)
        i = 0
        while i < len(row):
            m_abs = abs(row[i])
            if m_abs == 0:
                table[j] = (n, 0)
                j += 1
                i += 1
            else:
                table[j] = (n, m_abs) if j % 2 == 0 else (n, -m_abs)
                table[j + 1] = (n, m_abs) if (j + 1) % 2 == 0 else (n, -m_abs)
                j += 2
                i += 2
        n += 1
    return {k: v for k, v in table.items() if k <= j_max}


def test_noll_to_nm_matches_enumeration_oracle():
    oracle = noll_table(36)
    for j, nm in oracle.items():
        assert zernike.noll_to_nm(j) == nm


def test_noll_to_nm_known_values():
    assert zernike.noll_to_nm(1) == (0, 0)
    assert zernike.noll_to_nm(4) == (2, 0)
    assert zernike.noll_to_nm(11) == (4, 0)


def test_noll_to_nm_rejects_nonpositive():
    with pytest.raises(ValueError):
        zernike.noll_to_nm(0)
    with pytest.raises(ValueError):
        zernike.noll_to_nm(-3)


@given(st.integers(min_value=1, max_value=200))
def test_noll_mapping_is_injective_and_valid(j):
    n, m = zernike.noll_to_nm(j)
    assert n >= abs(m) >= 0
    assert (n - abs(m)) % 2 == 0
    others = {zernike.noll_to_nm(i) for i in range(1, 201) if i != j}
    assert (n, m) not in others or len(others) < 199


def test_evaluate_piston_is_one():
    assert zernike.evaluate(1, 0.37, 2.1) == pytest.approx(1.0)
    assert np.allclose(zernike.evaluate(1, [0.0, 0.5, 1.0], 0.0), 1.0)


def test_evaluate_defocus_center():
    # Noll defocus sqrt(3) (2 rho^2 - 1) at the origin
    assert zernike.evaluate(4, 0.0, 0.0) == pytest.approx(-math.sqrt(3.0))


def test_evaluate_tip_at_edge():
    # Noll tip 2 rho cos(theta) at rho=1, theta=0
    assert zernike.evaluate(2, 1.0, 0.0) == pytest.approx(2.0)


def test_evaluate_rejects_outside_disk():
    with pytest.raises(ValueError):
        zernike.evaluate(4, 1.2, 0.0)
    with pytest.raises(ValueError):
        zernike.evaluate(4, -0.1, 0.0)


def test_rotation_relations_tip_tilt_and_astigmatism():
    rho = np.linspace(0.1, 1.0, 7)
    theta = np.linspace(0.0, 2 * np.pi, 11)
    r, t = np.meshgrid(rho, theta)
    # rotating tip by 90 degrees gives tilt
    assert np.allclose(zernike.evaluate(2, r, t - np.pi / 2),
                       zernike.evaluate(3, r, t))
    # rotating vertical astigmatism (cos 2theta) by 45 degrees gives oblique
    assert np.allclose(zernike.evaluate(6, r, t - np.pi / 4),
                       zernike.evaluate(5, r, t))


def test_sample_basis_piston_grid():
    b = zernike.sample_basis(1, 64)
    assert b.samples.shape == (1, 64, 64)
    assert np.allclose(b.samples[0][b.mask], 1.0)
    assert np.all(b.samples[0][~b.mask] == 0.0)


def test_sample_basis_modes_outside_disk_are_zero():
    b = zernike.sample_basis(12, 128)
    assert np.all(b.samples[:, ~b.mask] == 0.0)


def test_gram_matrix_near_identity():
    b = zernike.sample_basis(12, 256)
    g = b.gram()
    assert np.abs(g - np.eye(12)).max() < 1e-2


def test_tip_tilt_grids_are_rot90_copies():
    b = zernike.sample_basis(3, 256)
    tip, tilt = b.samples[1], b.samples[2]
    assert np.allclose(np.rot90(tip), tilt) or np.allclose(np.rot90(tip), -tilt)


def test_fit_recovers_exact_basis_element():
    b = zernike.sample_basis(12, 128)
    phase = 3.0 * b.samples[3]  # 3 * Z4
    coeffs, residual = zernike.fit_coefficients(phase, b)
    expected = np.zeros(12)
    expected[3] = 3.0
    assert np.abs(coeffs - expected).max() < 1e-6
    assert np.abs(residual).max() < 1e-9


def test_fit_zero_phase_gives_zero_coefficients():
    b = zernike.sample_basis(8, 64)
    coeffs, residual = zernike.fit_coefficients(np.zeros((64, 64)), b)
    assert np.all(coeffs == 0.0)
    assert np.all(residual == 0.0)


@settings(deadline=None, max_examples=10)
@given(st.lists(st.floats(-2.0, 2.0), min_size=12, max_size=12))
def test_fit_round_trip_property(coeff_list):
    b = zernike.sample_basis(12, 128)
    a = np.array(coeff_list)
    fit, _ = zernike.fit_coefficients(b.compose(a), b)
    assert np.abs(fit - a).max() < 1e-5 * max(1.0, np.abs(a).max())


def test_fit_residual_decreases_with_mode_count():
    from fiberao import turbulence

    scr = turbulence.generate_screen(0.1, 25.0, 128, 0.4 / 128, seed=3)
    phase = scr.phase
    prev = np.inf
    for k in (3, 6, 9, 12):
        b = zernike.sample_basis(k, 128)
        _, residual = zernike.fit_coefficients(phase, b)
        power = float((residual[b.mask] ** 2).mean())
        assert power < prev
        prev = power


def test_fit_rejects_degenerate_basis():
    b = zernike.sample_basis(3, 64)
    dup = zernike.ZernikeBasis(
        (1, 2, 2), b.grid_size,
        np.stack([b.samples[0], b.samples[1], b.samples[1]]), b.mask,
    )
    with pytest.raises(np.linalg.LinAlgError, match="condition"):
        zernike.fit_coefficients(np.zeros((64, 64)), dup)


def test_sample_basis_input_validation():
    with pytest.raises(ValueError):
        zernike.sample_basis(0, 64)
    with pytest.raises(ValueError):
        zernike.sample_basis(4, 8)


def test_compose_rejects_wrong_length():
    b = zernike.sample_basis(4, 64)
    with pytest.raises(ValueError):
        b.compose(np.ones(5))
