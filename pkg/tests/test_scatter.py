import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from screensig.errors import ConfigurationError, ParameterError
from screensig.farfield import reciprocity_defect, uniform_directions
from screensig.fem import P2Space
from screensig.mesh import DomainSpec, generate_mesh
from screensig.oracle import impedance_disk_farfield
from screensig.scatter import (ExteriorSolver, IncidentField, PmlConfig, aux_farfield_matrix,
                               extract_farfield, solve_auxiliary, solve_screen)
from screensig.signature import standard_entries
from screensig.specfun import farfield_point_source, fundamental_solution
from screensig.steklov import SigmaProfile

from conftest import K, N_DIRS


def test_pml_identity_outside_layer():
    pml = PmlConfig()
    r = np.array([0.5, 2.0, 3.0])
    rt, sr = pml.stretch(r, K)
    assert np.array_equal(rt, r.astype(complex)) and np.all(sr == 1.0)
    rt, sr = pml.stretch(np.array([3.5, 4.0]), K)
    assert np.all(np.diff(rt.imag) > 0) and np.all(sr.imag > 0)


def test_pml_rejects_bad_config():
    with pytest.raises(ParameterError):
        PmlConfig(R_inner=4.0, R_outer=3.0)
    with pytest.raises(ParameterError):
        PmlConfig(s0=0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.5, 2.5), st.floats(0, 2 * math.pi))
def test_plane_wave_gradient(phi, r, t):
    inc = IncidentField.plane_wave(K, (math.cos(phi), math.sin(phi)))
    x = np.array([r * math.cos(t), r * math.sin(t)])
    eps = 1e-6
    for i in range(2):
        e = np.zeros(2)
        e[i] = eps
        fd = (inc.value(x + e) - inc.value(x - e)) / (2 * eps)
        assert inc.gradient(x)[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_requires_exterior_mesh():
    mesh = generate_mesh(DomainSpec.sector(math.pi, 1.0), 0.3)
    with pytest.raises(ConfigurationError):
        ExteriorSolver(mesh, K, "SCREEN", sigma=SigmaProfile.constant(1.0))


def test_point_source_extraction(exterior_disk):
    # Phi(., z) for z inside the disk is smooth in the extraction annulus
    space = P2Space(exterior_disk)
    z = np.array([0.3, 0.0])
    d = uniform_directions(24)
    u = space.interpolate(lambda p: fundamental_solution(K, p, z))
    got = extract_farfield((space, u), d, K)
    assert np.allclose(got, farfield_point_source(K, d, z), atol=1e-4)
    assert np.all(extract_farfield((space, np.zeros(space.ndofs)), d, K) == 0)


def test_zero_screen_is_invisible(exterior_half_disk, pml, screen_sigma0):
    assert np.linalg.norm(screen_sigma0.entries) < 1e-3 * N_DIRS
    field = solve_screen(exterior_half_disk, K, SigmaProfile.constant(0.0),
                         IncidentField.plane_wave(K, (0.0, 1.0)), pml)
    ring = exterior_half_disk.tagged_edges("FARFIELD_CIRCLE")
    vals = field.values[np.unique(field.space.edge_dofs(ring))]
    assert np.max(np.abs(vals)) < 1e-3


def test_screen_reciprocity_and_energy(screen_sigma1):
    assert reciprocity_defect(screen_sigma1) < 1e-2
    # real sigma: no absorption, so Im T = T* T / (8 pi) in the standard normalisation
    T = (2 * math.pi / N_DIRS) * standard_entries(screen_sigma1)
    im = (T - T.conj().T) / 2j
    assert np.linalg.norm(im - T.conj().T @ T / (8 * math.pi)) < 1e-3 * np.linalg.norm(im)


def test_aux_sound_hard_disk(exterior_disk):
    F = aux_farfield_matrix(exterior_disk, K, 0.0, 20)
    ref = impedance_disk_farfield(K, 0.0, 1.0, 20)
    assert np.linalg.norm(F.entries - ref.entries) < 1e-3 * np.linalg.norm(ref.entries)


def test_aux_point_source_cancels(exterior_half_disk, pml):
    # for a source inside D the auxiliary solution is -Phi(., z), whatever lam is
    z = (0.1, 0.4)
    field = solve_auxiliary(exterior_half_disk, K, 1.7, IncidentField.point_source(K, z), pml)
    d = uniform_directions(16)
    got = extract_farfield(field, d)
    assert np.allclose(got, -farfield_point_source(K, d, np.array(z)), atol=5e-4)


def test_woodbury_matches_direct(exterior_half_disk, pml, aux_provider):
    lam = 0.7
    direct = aux_farfield_matrix(exterior_half_disk, K, lam, N_DIRS, pml)
    fast = aux_provider(lam)
    assert np.linalg.norm(fast.entries - direct.entries) < 1e-9 * np.linalg.norm(direct.entries)
    assert fast.params["lambda"] == lam


def test_aux_rejects_lossy_sign(aux_provider):
    with pytest.raises(ParameterError):
        aux_provider(1.0 - 0.5j)
