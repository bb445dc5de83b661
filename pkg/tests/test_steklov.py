import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from screensig.errors import AdmissibilityError, DomainError, ParameterError
from screensig.mesh import DomainSpec, generate_mesh, refine_mesh
from screensig.oracle import SignConvention, sector_spectrum
from screensig.steklov import (SigmaProfile, assemble_pencil, check_wavenumber_admissible,
                               extend_trace, mixed_dirichlet_neumann_eigs, perturb_first_order,
                               robin_neumann_tau1, sigma_eval, solve_pencil, solve_steklov)


@pytest.fixture(scope="module")
def coarse():
    return generate_mesh(DomainSpec.sector(math.pi, 1.0), 0.2)


@pytest.fixture(scope="module")
def coarse_base(coarse):
    return solve_steklov(coarse, 2.0, SigmaProfile.constant(0.0), 6).values


def test_angular_profile_values():
    assert sigma_eval(SigmaProfile.angular(0.0, 0.7), 1.0) == 1.0
    assert sigma_eval(SigmaProfile.angular(1.0, 0.0), math.pi / 2) == pytest.approx(2.0)
    assert sigma_eval(SigmaProfile.angular(1.0, 0.0), 0.1) == 1.0
    with pytest.raises(DomainError):
        sigma_eval(SigmaProfile.angular(1.0, 0.0), 4.0)


def test_profile_parsing():
    assert SigmaProfile.parse("const:1.5").value == 1.5
    p = SigmaProfile.parse("angular:2,0.1")
    assert (p.amplitude, p.beta) == (2.0, 0.1)
    assert SigmaProfile.parse(p.describe()) == p
    with pytest.raises(ParameterError):
        SigmaProfile.parse("wavy:3")
    with pytest.raises(ParameterError):
        SigmaProfile.angular(-1.0, 0.0)


def test_complex_sigma_rejected_by_eigen_solver(coarse):
    sigma = SigmaProfile.parse("const:1+0.5i")
    assert not sigma.is_real()
    with pytest.raises(ParameterError):
        assemble_pencil(coarse, 2.0, sigma)


def test_quadrant_converges_to_oracle():
    mesh = generate_mesh(DomainSpec.sector(math.pi / 2, 1.0), 0.2)
    ref = np.sort(sector_spectrum(2.0, math.pi / 2, 1.0, 0.0, 12, SignConvention.MAIN).values)[::-1][:4]
    errs = []
    for m in (mesh, refine_mesh(mesh)):
        vals = solve_steklov(m, 2.0, SigmaProfile.constant(0.0), 4).values
        errs.append(np.max(np.abs(vals - ref) / np.abs(ref)))
    assert errs[1] < errs[0] / 4
    assert errs[1] < 1e-3


@settings(max_examples=8, deadline=None)
@given(st.floats(-3.0, 3.0))
def test_constant_shift_is_exact(coarse, coarse_base, c):
    vals = solve_steklov(coarse, 2.0, SigmaProfile.constant(c), 6).values
    assert np.allclose(vals, coarse_base + c, atol=1e-9)


def test_traces_are_gamma_orthonormal(coarse):
    pencil = assemble_pencil(coarse, 2.0, SigmaProfile.constant(1.0))
    spec = solve_pencil(pencil, 4)
    g = spec.gamma_dofs
    Bgg = pencil.B[g][:, g].toarray()
    G = spec.gamma_traces.T @ Bgg @ spec.gamma_traces
    assert np.allclose(G, np.eye(4), atol=1e-10)
    full = extend_trace(pencil, spec.gamma_traces[:, 0])
    assert np.allclose(full[g], spec.gamma_traces[:, 0])


def test_admissibility(coarse):
    assert check_wavenumber_admissible(coarse, 2.0).admissible
    mu = mixed_dirichlet_neumann_eigs(coarse, 3)
    # first mixed eigenvalue of the half disk is j_{0,1}^2
    assert mu[0] == pytest.approx(2.404825557695773 ** 2, rel=1e-3)
    k_bad = math.sqrt(mu[0])
    assert not check_wavenumber_admissible(coarse, k_bad).admissible
    with pytest.raises(AdmissibilityError):
        solve_steklov(coarse, k_bad, SigmaProfile.constant(0.0))


def test_robin_tau1():
    mesh = generate_mesh(DomainSpec.sector(math.pi, 1.0), 0.1)
    assert robin_neumann_tau1(mesh, 0.0) == pytest.approx(0.0, abs=1e-8)
    coarse_val = robin_neumann_tau1(mesh, 1.0)
    fine_val = robin_neumann_tau1(refine_mesh(mesh), 1.0)
    assert abs(coarse_val - fine_val) < 1e-3
    # between the Neumann (0) and Dirichlet (j_{0,1}^2) limits
    assert 0 < fine_val < 2.404825557695773 ** 2


def test_perturbation_constant(coarse):
    s0 = SigmaProfile.constant(1.0)
    assert perturb_first_order(coarse, 2.0, s0, SigmaProfile.constant(0.7)) == pytest.approx(0.7, abs=1e-12)


def test_perturbation_orthogonal_profile(coarse):
    # the top mode has a constant trace, and cos(2 theta) integrates to 0 on the arc
    s0 = SigmaProfile.constant(1.0)
    s1 = SigmaProfile.custom(lambda th: np.cos(2 * th), "cos2")
    # the discrete trace is constant only up to discretization error
    assert abs(perturb_first_order(coarse, 2.0, s0, s1)) < 1e-4


def test_perturbation_second_order_remainder(coarse):
    s0 = SigmaProfile.constant(1.0)
    s1 = SigmaProfile.custom(lambda th: np.sin(th) ** 2, "sin2")
    lam0 = solve_steklov(coarse, 2.0, s0, 1).values[0]
    slope = perturb_first_order(coarse, 2.0, s0, s1)
    rem = []
    for eps in (0.2, 0.1, 0.05):
        s = SigmaProfile.custom(lambda th, e=eps: 1.0 + e * np.sin(th) ** 2, "p")
        lam = solve_steklov(coarse, 2.0, s, 1, check_admissible=False).values[0]
        rem.append(abs(lam - lam0 - eps * slope))
    assert 3 <= rem[0] / rem[1] <= 5
    assert 3 <= rem[1] / rem[2] <= 5
