"""Bessel and Hankel functions of real order and the 2D Helmholtz kernels.

Cylinder functions are evaluated with :mod:`scipy.special` (AMOS routines).
Derivatives use ``C'_nu = (C_{nu-1} - C_{nu+1}) / 2``, which is valid for
every real order including fractional ``nu < 1``.
"""

import warnings

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError


class BesselUnderflowWarning(RuntimeWarning):
    """J_nu(x) underflowed to zero (order much larger than argument)."""


def _check_order(nu):
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0) or not np.all(np.isfinite(nu)):
        raise ParameterError("Bessel order must be real and non-negative")
    # scipy's yv returns 0 for subnormal orders; those are 0 to double precision
    return np.where(nu < np.finfo(float).tiny, 0.0, nu)


def _check_wavenumber(k):
    if not np.isfinite(k) or k <= 0:
        raise ParameterError(f"wavenumber must be positive, got {k!r}")
    return float(k)


def _scalar(value):
    return value.item() if np.ndim(value) == 0 else value


def bessel_j(nu, x):
    """Bessel function of the first kind ``J_nu(x)`` for ``nu >= 0, x >= 0``.

    Values that underflow to zero for ``x > 0`` are returned as 0 and
    reported with a :class:`BesselUnderflowWarning`.
    """
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_j requires x >= 0")
    out = special.jv(nu, x)
    if np.any((out == 0.0) & (x > 0) & (nu > x)):
        warnings.warn("J_nu(x) underflowed to 0", BesselUnderflowWarning, stacklevel=2)
    return _scalar(out)


def bessel_j_prime(nu, x):
    """Derivative ``J'_nu(x)``."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_j_prime requires x >= 0")
    return _scalar(0.5 * (special.jv(nu - 1.0, x) - special.jv(nu + 1.0, x)))


def bessel_y(nu, x):
    """Bessel function of the second kind ``Y_nu(x)``, ``x > 0``."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("Y_nu is singular for x <= 0")
    return _scalar(special.yv(nu, x))


def bessel_y_prime(nu, x):
    """Derivative ``Y'_nu(x)``, ``x > 0``."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("Y_nu is singular for x <= 0")
    return _scalar(0.5 * (special.yv(nu - 1.0, x) - special.yv(nu + 1.0, x)))


def hankel(kind, nu, x):
    """Hankel function ``H^(kind)_nu(x) = J_nu(x) +/- i Y_nu(x)``."""
    if kind not in (1, 2):
        raise ParameterError("Hankel kind must be 1 or 2")
    sign = 1.0 if kind == 1 else -1.0
    j = np.asarray(bessel_j(nu, x))
    y = np.asarray(bessel_y(nu, x))
    return _scalar(j + sign * 1j * y)


def hankel_prime(kind, nu, x):
    """Derivative of :func:`hankel` with respect to its argument."""
    if kind not in (1, 2):
        raise ParameterError("Hankel kind must be 1 or 2")
    sign = 1.0 if kind == 1 else -1.0
    jp = np.asarray(bessel_j_prime(nu, x))
    yp = np.asarray(bessel_y_prime(nu, x))
    return _scalar(jp + sign * 1j * yp)


def farfield_constant(k):
    """Far-field normalisation of the 2D kernel, ``e^{i pi/4} / sqrt(8 pi k)``.

    With this constant a radiating field behaves like
    ``u(x) = e^{ikr} / sqrt(r) * (u_inf(xhat) + O(1/r))``.
    """
    k = _check_wavenumber(k)
    return np.exp(0.25j * np.pi) / np.sqrt(8.0 * np.pi * k)


def fundamental_solution(k, x, z):
    """Radiating fundamental solution ``(i/4) H^(1)_0(k |x - z|)``.

    ``x`` and ``z`` are broadcastable arrays of points with trailing
    dimension 2.
    """
    k = _check_wavenumber(k)
    diff = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(dist == 0.0):
        raise DomainError("fundamental solution is singular at x = z")
    return _scalar(0.25j * special.hankel1(0, k * dist))


def fundamental_solution_grad(k, x, z):
    """Gradient of :func:`fundamental_solution` with respect to ``x``."""
    k = _check_wavenumber(k)
    diff = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(dist == 0.0):
        raise DomainError("fundamental solution is singular at x = z")
    # d/dr H0 = -H1
    radial = -0.25j * k * special.hankel1(1, k * dist)
    return radial[..., None] * diff / dist[..., None]


def farfield_point_source(k, xhat, z):
    """Far-field pattern of ``fundamental_solution(k, ., z)`` in direction ``xhat``."""
    xhat = np.asarray(xhat, dtype=float)
    norms = np.hypot(xhat[..., 0], xhat[..., 1])
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ParameterError("observation directions must be unit vectors")
    z = np.asarray(z, dtype=float)
    phase = xhat[..., 0] * z[..., 0] + xhat[..., 1] * z[..., 1]
    return _scalar(farfield_constant(k) * np.exp(-1j * k * phase))
