import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from screensig.errors import DomainError, ParameterError
from screensig.farfield import reciprocity_defect
from screensig.oracle import (SignConvention, annular_spectrum, impedance_disk_coefficients,
                              impedance_disk_farfield, sector_eigenfunction, sector_spectrum)

SECTOR_TABLE = [-5.1518, -0.2236, 1.2691, 2.4727, 3.5859, 4.6584, 5.7090, 6.7464, 7.7753]
ANNULAR_08 = [-0.7565, 0.1692, 2.3567, 4.8812, 7.3089, 9.5760, 11.7270, 13.8097, 15.8557]
ANNULAR_09 = [-0.3849, 0.0413, 1.2482, 3.0534, 5.2381, 7.6118, 10.0414, 12.4500, 14.8025]

APPENDIX = SignConvention.APPENDIX
MAIN = SignConvention.MAIN


def test_sector_reference_values():
    spec = sector_spectrum(2.0, math.pi, 1.0, 0.0, 9, APPENDIX)
    assert np.allclose(spec.values, SECTOR_TABLE, atol=5e-4)
    assert not spec.poles.any()


def test_sector_shift():
    base = sector_spectrum(2.0, math.pi, 1.0, 0.0, 9, APPENDIX).values
    shifted = sector_spectrum(2.0, math.pi, 1.0, 1.0, 9, APPENDIX).values
    assert np.allclose(shifted, base + 1.0, atol=1e-12)


def test_main_convention_flips_sign():
    spec = sector_spectrum(2.0, math.pi, 1.0, 0.0, 9, MAIN)
    assert np.allclose(spec.values, -np.array(SECTOR_TABLE), atol=5e-4)


@pytest.mark.parametrize("r1, row", [(0.8, ANNULAR_08), (0.9, ANNULAR_09)])
def test_annular_reference_values(r1, row):
    spec = annular_spectrum(2.0, math.pi / 2, r1, 1.0, 0.0, 9, APPENDIX)
    assert np.allclose(spec.values, row, atol=5e-4)


def test_annular_real_form_matches_hankel_form():
    k, alpha, r1, r2 = 2.0, math.pi / 2, 0.8, 1.0
    nu = np.arange(5) * math.pi / alpha
    hp1, hp2 = special.h1vp(nu, k * r1), special.h2vp(nu, k * r1)
    # u = H2'(k r1) H1(k r) - H1'(k r1) H2(k r) has u'(r1) = 0
    u = hp2 * special.hankel1(nu, k * r2) - hp1 * special.hankel2(nu, k * r2)
    du = hp2 * special.h1vp(nu, k * r2) - hp1 * special.h2vp(nu, k * r2)
    ref = np.real(k * du / u)
    spec = annular_spectrum(k, alpha, r1, r2, 0.0, 5, APPENDIX)
    # the complex form itself loses digits to cancellation as n grows
    assert np.allclose(spec.values, ref, rtol=1e-6)


def test_pole_detected():
    # k r2 at the first zero of J_0 makes mode 0 a pole
    k = special.jn_zeros(0, 1)[0]
    spec = sector_spectrum(k, math.pi, 1.0, 0.0, 3)
    assert spec.poles[0] and math.isnan(spec.values[0])
    assert not spec.poles[1:].any()


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        sector_spectrum(-1.0, math.pi, 1.0)
    with pytest.raises(ParameterError):
        annular_spectrum(2.0, math.pi, 1.0, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 6.0), st.floats(0.2, 1.9), st.floats(-3.0, 3.0))
def test_conventions_differ_by_reflection(k, frac, sigma):
    alpha = frac * math.pi
    a = sector_spectrum(k, alpha, 1.0, sigma, 5, APPENDIX).values
    m = sector_spectrum(k, alpha, 1.0, sigma, 5, MAIN).values
    ok = np.isfinite(a)
    assert np.allclose(a[ok] + m[ok], 2 * sigma, atol=1e-9)


def test_eigenfunction_mode_zero_is_radial():
    theta = np.linspace(0.0, math.pi, 7)
    pts = np.column_stack([0.6 * np.cos(theta), 0.6 * np.sin(theta)])
    vals = sector_eigenfunction(0, 2.0, math.pi, 1.0, pts)
    assert np.allclose(vals, vals[0], atol=1e-14)


def test_eigenfunction_satisfies_steklov_ratio():
    n, k, alpha = 2, 2.0, math.pi
    eps = 1e-6
    pts = np.array([[1.0, 0.0], [1.0 - eps, 0.0]])
    u1, u0 = sector_eigenfunction(n, k, alpha, 1.0, pts)
    ratio = (u1 - u0) / eps / u1
    lam = sector_spectrum(k, alpha, 1.0, 0.0, 3, APPENDIX).values[n]
    assert ratio == pytest.approx(lam, rel=1e-4)


def test_eigenfunction_outside_sector():
    with pytest.raises(DomainError):
        sector_eigenfunction(0, 2.0, math.pi, 1.0, np.array([[0.0, -0.5]]))


def test_disk_oracle_reciprocity_and_symmetry():
    F = impedance_disk_farfield(2.0, 1.0, 1.0, 60)
    assert reciprocity_defect(F) < 1e-10
    # rotational invariance: circulant matrix
    assert np.allclose(np.roll(np.roll(F.entries, 1, 0), 1, 1), F.entries, atol=1e-12)


def test_disk_oracle_lossless_identity():
    # for real impedance the standard-normalised operator satisfies
    # Im T = (1/(8 pi)) T* T up to the k-independent constant
    F = impedance_disk_farfield(2.0, 1.0, 1.0, 60)
    from screensig.signature import standard_entries
    T = (2 * math.pi / 60) * standard_entries(F)
    im = (T - T.conj().T) / 2j
    assert np.allclose(im, T.conj().T @ T / (8 * math.pi), atol=1e-10)


def test_disk_coefficients_truncate():
    c = impedance_disk_coefficients(2.0, 1.0, 1.0)
    assert 10 < len(c) < 40
    assert abs(c[-1]) < 1e-10 * np.max(np.abs(c))
    with pytest.raises(ParameterError):
        impedance_disk_coefficients(2.0, -1j, 1.0)
