"""Separable reference solutions for sectors, annular sectors and disks.

Two sign conventions coexist for the mixed Steklov problem:

* ``APPENDIX``: ``d_nu u = lambda u`` on the Steklov arc (sigma = 0),
  shifted by a constant sigma as ``lambda + sigma``.
* ``MAIN``: ``d_nu h - sigma h = -lambda h``, the form used by the finite
  element solver and by the sampling method. Separable modes give
  ``lambda = sigma - k J'_nu / J_nu``.

The finite element code reproduces the ``MAIN`` values, which is the
default convention for everything that is compared against it.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError, ParameterError
from .farfield import FarFieldMatrix, uniform_directions
from .specfun import farfield_constant

POLE_TOL = 1e-12


class SignConvention(enum.Enum):
    APPENDIX = "appendix"
    MAIN = "main"


@dataclass
class SeriesSpectrum:
    """Eigenvalues indexed by angular mode number ``n``.

    ``values[n]`` is NaN when the mode sits on a pole (``poles[n]``),
    i.e. ``k^2`` is a mixed Dirichlet-Neumann eigenvalue for that mode.
    """

    n: np.ndarray
    values: np.ndarray
    poles: np.ndarray
    convention: SignConvention

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _validate_sector(k, alpha, r2):
    if k <= 0:
        raise ParameterError("k must be positive")
    if not 0 < alpha < 2 * np.pi:
        raise ParameterError("sector angle must lie in (0, 2 pi)")
    if r2 <= 0:
        raise ParameterError("radius must be positive")


def _apply_convention(lam0, sigma, convention):
    convention = SignConvention(convention)
    if convention is SignConvention.APPENDIX:
        return sigma + lam0
    return sigma - lam0


def sector_spectrum(k, alpha, r2, sigma=0.0, count=9, convention=SignConvention.MAIN):
    """Mixed Steklov eigenvalues of the sector ``0 < r < r2, 0 < theta < alpha``.

    Steklov condition on the arc ``r = r2``, Neumann on both radii. Mode
    ``n`` has angular order ``nu = n pi / alpha``.
    """
    _validate_sector(k, alpha, r2)
    n = np.arange(count)
    nu = n * np.pi / alpha
    x = k * r2
    j = special.jv(nu, x)
    jp = 0.5 * (special.jv(nu - 1.0, x) - special.jv(nu + 1.0, x))
    poles = np.abs(j) < POLE_TOL * np.maximum(np.abs(x * jp), np.finfo(float).tiny)
    lam0 = np.full(count, np.nan)
    lam0[~poles] = k * jp[~poles] / j[~poles]
    values = _apply_convention(lam0, sigma, convention)
    return SeriesSpectrum(n, values, poles, SignConvention(convention))


def annular_spectrum(k, alpha, r1, r2, sigma=0.0, count=9, convention=SignConvention.MAIN):
    """Mixed Steklov eigenvalues of the annular sector ``r1 < r < r2``.

    The radial factor is the combination of Hankel functions with zero
    derivative at ``r = r1``; the Steklov ratio ``k u'(k r2) / u(k r2)``
    is taken on the outer arc. The Hankel expression is evaluated in the
    equivalent real form ``(J'_a Y'_b - Y'_a J'_b) / (J'_a Y_b - Y'_a J_b)``,
    which avoids the cancellation in ``J + iY`` once ``Y >> J``.
    """
    _validate_sector(k, alpha, r2)
    if not 0 < r1 < r2:
        raise ParameterError("annular sector needs 0 < r1 < r2")
    n = np.arange(count)
    nu = n * np.pi / alpha
    a, b = k * r1, k * r2
    jpa = special.jvp(nu, a)
    ypa = special.yvp(nu, a)
    num = jpa * special.yvp(nu, b) - ypa * special.jvp(nu, b)
    den = jpa * special.yv(nu, b) - ypa * special.jv(nu, b)
    scale = np.abs(jpa * special.yv(nu, b)) + np.abs(ypa * special.jv(nu, b))
    poles = np.abs(den) < POLE_TOL * np.maximum(scale, 1.0)
    lam0 = np.full(count, np.nan)
    lam0[~poles] = k * num[~poles] / den[~poles]
    values = _apply_convention(lam0, sigma, convention)
    return SeriesSpectrum(n, values, poles, SignConvention(convention))


def sector_eigenfunction(n, k, alpha, r2, points):
    """Evaluate ``cos(n pi theta / alpha) J_{n pi/alpha}(k r)`` at ``points``.

    Values are scaled so that the maximum modulus over the sector is 1.
    """
    _validate_sector(k, alpha, r2)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.hypot(pts[:, 0], pts[:, 1])
    theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
    tol = 1e-12
    theta = np.where(theta > 2 * np.pi - tol, 0.0, theta)
    if np.any(r > r2 * (1 + tol)) or np.any(theta > alpha + tol):
        raise DomainError("point outside the sector")
    nu = n * np.pi / alpha
    radial_grid = np.linspace(0.0, k * r2, 2001)
    peak = np.max(np.abs(special.jv(nu, radial_grid)))
    return np.cos(nu * theta) * special.jv(nu, k * r) / peak


def _disk_coefficients(k, lam, R, nmax):
    n = np.arange(nmax + 1)
    x = k * R
    j, jp = special.jv(n, x), special.jvp(n, x)
    h, hp = special.hankel1(n, x), special.h1vp(n, x)
    return (k * jp + lam * j) / (k * hp + lam * h)


def impedance_disk_coefficients(k, lam, R, tol=1e-12, nmax_cap=400):
    """Mode ratios ``c_n = (k J'_n + lam J_n) / (k H'_n + lam H_n)`` at ``kR``.

    Truncated once the coefficients drop below ``tol`` relative to the
    largest one.
    """
    if k <= 0 or R <= 0:
        raise ParameterError("k and R must be positive")
    if np.imag(lam) < 0:
        raise ParameterError("impedance must have non-negative imaginary part")
    nmax = int(np.ceil(k * R)) + 10
    while nmax <= nmax_cap:
        c = _disk_coefficients(k, lam, R, nmax)
        tail = np.abs(c[-3:])
        if np.all(tail < tol * max(np.max(np.abs(c)), 1e-300)):
            last = np.nonzero(np.abs(c) >= tol * np.max(np.abs(c)))[0][-1]
            return c[: last + 1]
        nmax *= 2
    raise NumericalError(f"disk series not converged within {nmax_cap} terms (kR = {k * R:g})")


def impedance_disk_farfield(k, lam, R, n_dirs):
    """Far-field matrix of the exterior impedance disk ``d_r w + lam w = 0`` on ``r = R``."""
    if n_dirs < 1:
        raise ParameterError("need at least one direction")
    c = impedance_disk_coefficients(k, lam, R)
    d = uniform_directions(n_dirs)
    ang = np.arctan2(d[:, 1], d[:, 0])
    phi = ang[:, None] - ang[None, :]
    n = np.arange(1, len(c))
    series = c[0] + 2.0 * np.tensordot(np.cos(phi[..., None] * n), c[1:], axes=([2], [0]))
    # far field of H_n(kr) e^{in theta} is sqrt(2/(pi k)) e^{-i pi/4} (-i)^n e^{in theta};
    # that prefactor equals -4i * farfield_constant(k)
    entries = -(-4j * farfield_constant(k)) * series
    return FarFieldMatrix(entries, float(k), "AUX", {"lambda": lam, "R": R, "domain": "disk"})
