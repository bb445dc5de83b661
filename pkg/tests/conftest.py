"""Shared, session-cached meshes and far-field data.

The scattering fixtures are the expensive part of the suite (a few
seconds each), so they are built once and reused by the module tests and
the acceptance checks.
"""

import math

import pytest

from screensig.mesh import DomainSpec, generate_mesh
from screensig.scatter import AuxiliaryFarField, PmlConfig, screen_farfield_matrix
from screensig.steklov import SigmaProfile

K = 2.0
N_DIRS = 60
H_SCATTER = 2 * math.pi / K / 32


@pytest.fixture(scope="session")
def half_disk():
    return DomainSpec.sector(math.pi, 1.0)


@pytest.fixture(scope="session")
def half_disk_mesh(half_disk):
    return generate_mesh(half_disk, 0.05)


@pytest.fixture(scope="session")
def coarse_half_disk_mesh(half_disk):
    return generate_mesh(half_disk, 0.1)


@pytest.fixture(scope="session")
def exterior_half_disk(half_disk):
    return generate_mesh(DomainSpec.exterior_of(half_disk), H_SCATTER)


@pytest.fixture(scope="session")
def exterior_disk():
    return generate_mesh(DomainSpec.exterior_of(DomainSpec.disk(1.0)), H_SCATTER)


@pytest.fixture(scope="session")
def pml(exterior_half_disk):
    return PmlConfig.for_mesh(exterior_half_disk)


@pytest.fixture(scope="session")
def screen_sigma1(exterior_half_disk, pml):
    return screen_farfield_matrix(exterior_half_disk, K, SigmaProfile.constant(1.0), N_DIRS, pml)


@pytest.fixture(scope="session")
def screen_sigma0(exterior_half_disk, pml):
    return screen_farfield_matrix(exterior_half_disk, K, SigmaProfile.constant(0.0), N_DIRS, pml)


@pytest.fixture(scope="session")
def aux_provider(exterior_half_disk, pml):
    return AuxiliaryFarField(exterior_half_disk, K, N_DIRS, pml)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
