"""Detection of Steklov eigenvalues from far-field data.

The modified operator ``M = A - B(lam)`` (screen minus auxiliary far-field
matrix) has an approximate null direction matching the point-source far
field exactly when ``lam`` is a mixed Steklov eigenvalue. The linear
sampling method (LSM) monitors the Tikhonov solution norm; the generalized
variant (GLSM) adds a penalty built from ``F_#``.

Discrete conventions: with ``N`` directions the far-field operator is the
matrix ``w * entries`` with ``w = 2 pi / N``, and ``L^2(S)`` norms carry the
same weight. Since both sides share the weight, operator adjoints are plain
conjugate transposes.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy import signal

from .errors import ConfigurationError, DataError, NumericalError, ParameterError
from .farfield import FarFieldMatrix, uniform_directions
from .mesh import DomainKind
from .specfun import farfield_constant
from .steklov import SigmaProfile, solve_steklov

DEFAULT_GAMMA = 1e-10
DEFAULT_PROMINENCE = 0.5
GLSM_RCOND = 1e-13


def _entries(F):
    return F.entries if isinstance(F, FarFieldMatrix) else np.asarray(F, dtype=complex)


def modified_operator(A, B):
    """Entrywise ``A - B`` after checking that both matrices are compatible."""
    a, b = _entries(A), _entries(B)
    if a.shape != b.shape:
        raise ConfigurationError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    if isinstance(A, FarFieldMatrix) and isinstance(B, FarFieldMatrix):
        if not math.isclose(A.k, B.k, rel_tol=1e-12):
            raise ConfigurationError(f"wavenumbers differ: {A.k} vs {B.k}")
    return a - b


def point_source_farfields(k, directions, z):
    """Right-hand sides ``b[l, j] = Phi_inf(d_l, z_j)`` for points ``z`` (nz, 2)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return farfield_constant(k) * np.exp(-1j * k * (np.asarray(directions) @ z.T))


def _weight(n, quad_weight):
    return 2.0 * np.pi / n if quad_weight is None else float(quad_weight)


class TikhonovSolver:
    """Tikhonov solutions ``(T* T + gamma I)^{-1} T* b`` for ``T = w M`` via one SVD."""

    def __init__(self, M, gamma, quad_weight=None):
        M = _entries(M)
        if not np.all(np.isfinite(M)):
            raise DataError("operator has non-finite entries")
        if not gamma > 0:
            raise ParameterError("Tikhonov parameter must be positive")
        self.w = _weight(M.shape[0], quad_weight)
        self.gamma = float(gamma)
        try:
            self.U, self.s, self.Vh = la.svd(self.w * M)
        except la.LinAlgError as exc:
            raise NumericalError(f"SVD failed: {exc}") from exc

    def solve(self, b):
        filt = self.s / (self.s ** 2 + self.gamma)
        coef = self.U.conj().T @ b
        coef = (filt[:, None] if coef.ndim == 2 else filt) * coef
        return self.Vh.conj().T @ coef

    def norms(self, b):
        """Weighted ``L^2(S)`` norms of the solutions for the columns of ``b``."""
        g = self.solve(b)
        return np.sqrt(self.w) * np.linalg.norm(g, axis=0)


def tikhonov_gz(M, z, gamma, k, quad_weight=None, b=None):
    """Tikhonov solution of ``T g = b_z`` with ``T = quad_weight * M``.

    ``b_z`` defaults to the point-source far field at ``z``. Returns ``g``
    and its weighted norm ``sqrt(quad_weight) |g|``.
    """
    M = _entries(M)
    n = M.shape[0]
    if b is None:
        b = point_source_farfields(k, uniform_directions(n), z)[:, 0]
    solver = TikhonovSolver(M, gamma, quad_weight)
    g = solver.solve(np.asarray(b, dtype=complex))
    return g, float(np.sqrt(solver.w) * np.linalg.norm(g))


# -- sampling regions -------------------------------------------------------

def _sector_boundary_distance(p, alpha, r2):
    """Distance from ``p`` to the boundary of the sector (point assumed inside)."""
    d = r2 - math.hypot(*p)
    for theta in (0.0, alpha):
        u = np.array([math.cos(theta), math.sin(theta)])
        t = min(max(float(p @ u), 0.0), r2)
        d = min(d, float(np.linalg.norm(p - t * u)))
    return d


def default_z_region(domain):
    """Ball at the centroid of D with radius 0.3 times the inradius."""
    if domain.kind is DomainKind.EXTERIOR:
        domain = domain.inner
    if domain.kind is DomainKind.DISK:
        return (0.0, 0.0), 0.3 * domain.R
    if domain.kind is not DomainKind.SECTOR:
        raise ConfigurationError("default sampling region needs a sector or a disk")
    a, r2 = domain.alpha, domain.r2
    # centroid of a circular sector along its bisector
    dist = 4.0 * r2 * math.sin(a / 2) / (3.0 * a)
    centre = (dist * math.cos(a / 2), dist * math.sin(a / 2))
    inradius = r2 * math.sin(a / 2) / (1 + math.sin(a / 2)) if a <= math.pi else r2 / 2
    return centre, 0.3 * inradius


def ball_inside(domain, centre, radius):
    if domain.kind is DomainKind.EXTERIOR:
        domain = domain.inner
    p = np.asarray(centre, dtype=float)
    if domain.kind is DomainKind.DISK:
        return math.hypot(*p) + radius < domain.R
    th = math.atan2(p[1], p[0]) % (2 * math.pi)
    if math.hypot(*p) >= domain.r2 or th >= domain.alpha:
        return False
    return _sector_boundary_distance(p, domain.alpha, domain.r2) > radius


@dataclass(frozen=True)
class SweepConfig:
    """Grid, regularization and sampling points of an LSM sweep."""

    lam_min: float = -8.0
    lam_max: float = 8.0
    step: float = 0.05
    gamma: float = DEFAULT_GAMMA
    n_z: int = 20
    centre: tuple = (0.0, 0.0)
    radius: float = 0.1
    seed: int = 1
    n_dirs: int = 60

    def __post_init__(self):
        if not self.lam_min < self.lam_max:
            raise ParameterError("need lam_min < lam_max")
        if not self.step > 0:
            raise ParameterError("step must be positive")
        if not self.gamma > 0:
            raise ParameterError("gamma must be positive")
        if self.n_z < 1:
            raise ParameterError("need at least one sampling point")
        if not self.radius > 0:
            raise ParameterError("sampling radius must be positive")
        if self.n_dirs < 2 or self.n_dirs % 2:
            raise ParameterError("n_dirs must be even and >= 2")

    @classmethod
    def for_domain(cls, domain, **kw):
        centre, radius = default_z_region(domain)
        kw.setdefault("centre", centre)
        kw.setdefault("radius", radius)
        return cls(**kw)

    def check_region(self, domain):
        if not ball_inside(domain, self.centre, self.radius):
            raise ConfigurationError("sampling ball is not strictly inside D")

    @property
    def grid(self):
        n = int(math.floor((self.lam_max - self.lam_min) / self.step + 1e-9)) + 1
        return np.round(self.lam_min + self.step * np.arange(n), 12)

    def z_points(self):
        """``n_z`` points uniform in the ball, reproducible from ``seed``."""
        rng = np.random.default_rng(self.seed)
        r = self.radius * np.sqrt(rng.random(self.n_z))
        t = 2 * np.pi * rng.random(self.n_z)
        return np.column_stack([self.centre[0] + r * np.cos(t), self.centre[1] + r * np.sin(t)])

    def to_dict(self):
        return {"lam_min": self.lam_min, "lam_max": self.lam_max, "step": self.step,
                "gamma": self.gamma, "n_z": self.n_z, "centre": list(self.centre),
                "radius": self.radius, "seed": self.seed, "n_dirs": self.n_dirs}


@dataclass
class Peak:
    lam: float
    height: float
    prominence: float
    index: int
    unresolved: bool = False


@dataclass
class SweepCurve:
    """Averaged indicator per grid value; failed grid points are NaN and listed in ``gaps``."""

    lam_values: np.ndarray
    indicator: np.ndarray
    peaks: list
    config: SweepConfig = None
    z_points: np.ndarray = None
    gaps: list = field(default_factory=list)

    @property
    def peak_positions(self):
        return np.array([p.lam for p in self.peaks])


def detect_peaks(lam_values, indicator, min_prominence_ratio=DEFAULT_PROMINENCE):
    """Local maxima with prominence above ``min_prominence_ratio * median``.

    Positions are refined by a parabola through the maximum and its two
    neighbours. Peaks closer than two grid steps, or flat-topped maxima,
    are flagged ``unresolved``.
    """
    lam = np.asarray(lam_values, dtype=float)
    y = np.asarray(indicator, dtype=float)
    if len(lam) < 5:
        raise ParameterError("peak detection needs at least 5 grid points")
    ok = np.isfinite(y)
    if not np.any(ok):
        return []
    threshold = min_prominence_ratio * float(np.median(y[ok]))
    # gaps are filled by their lower neighbour so they cannot create maxima
    yf = y.copy()
    yf[~ok] = np.min(y[ok])
    idx, props = signal.find_peaks(yf, prominence=max(threshold, 0.0), plateau_size=1)
    peaks = []
    for i, prom, width in zip(idx, props["prominences"], props["plateau_sizes"]):
        pos = lam[i]
        if 0 < i < len(lam) - 1 and width == 1:
            y0, y1, y2 = yf[i - 1], yf[i], yf[i + 1]
            denom = y0 - 2 * y1 + y2
            if denom < 0:
                shift = 0.5 * (y0 - y2) / denom
                pos = lam[i] + shift * 0.5 * (lam[i + 1] - lam[i - 1])
        peaks.append(Peak(float(pos), float(yf[i]), float(prom), int(i), bool(width > 1)))
    steps = np.diff(idx)
    for j, gap in enumerate(steps):
        if gap <= 2:
            peaks[j].unresolved = peaks[j + 1].unresolved = True
    return peaks


def lsm_sweep(A, provider, config, prominence=DEFAULT_PROMINENCE, threads=1):
    """Averaged Tikhonov norm ``lam -> mean_z |g_z|`` over ``config.grid``.

    ``provider(lam)`` returns the auxiliary far-field matrix for ``lam``;
    failures leave a NaN gap. The same sampling points are used for every
    grid value, and the result does not depend on ``threads``.
    """
    a = _entries(A)
    if a.shape[0] != config.n_dirs:
        raise ConfigurationError(f"screen matrix has {a.shape[0]} directions, config {config.n_dirs}")
    k = A.k if isinstance(A, FarFieldMatrix) else None
    if k is None:
        raise ConfigurationError("screen matrix must carry its wavenumber")
    grid = config.grid
    z = config.z_points()
    b = point_source_farfields(k, uniform_directions(config.n_dirs), z)

    def one(lam):
        try:
            B = provider(lam)
            norms = TikhonovSolver(modified_operator(A, B), config.gamma).norms(b)
        except (NumericalError, ConfigurationError, np.linalg.LinAlgError) as exc:
            return float("nan"), f"{lam!r}: {exc}"
        return math.fsum(norms) / len(norms), None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(lam) for lam in grid]
    indicator = np.array([r[0] for r in results])
    gaps = [r[1] for r in results if r[1] is not None]
    peaks = detect_peaks(grid, indicator, prominence)
    return SweepCurve(grid, indicator, peaks, config, z, gaps)


# -- F_# and GLSM -----------------------------------------------------------

def hermitian_parts(T):
    """``Re T = (T + T*)/2`` and ``Im T = (T - T*)/(2i)``."""
    T = np.asarray(T, dtype=complex)
    return 0.5 * (T + T.conj().T), (T - T.conj().T) / 2j


def standard_entries(F):
    """Kernel samples in the normalisation ``u^s ~ gamma_2 e^{ikr} r^{-1/2} u_inf``.

    Far-field matrices store ``u_inf`` from ``u^s ~ e^{ikr} r^{-1/2} u_inf``;
    dividing by ``gamma_2`` gives the kernel whose point-source far field is
    ``exp(-i k xhat.y)``, the normalisation in which the Herglotz
    factorization of ``F`` holds. Plain arrays are returned unchanged.
    """
    if isinstance(F, FarFieldMatrix):
        return F.entries / farfield_constant(F.k)
    return np.asarray(F, dtype=complex)


def fsharp(F, quad_weight=None):
    """``F_# = |Re T| - Im T`` for the operator ``T = quad_weight * F``.

    A :class:`FarFieldMatrix` is first brought to the standard
    normalisation (:func:`standard_entries`); arrays are used as given.
    """
    entries = standard_entries(F)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ConfigurationError("F_# needs a square matrix")
    T = _weight(entries.shape[0], quad_weight) * entries
    re, im = hermitian_parts(T)
    try:
        vals, vecs = la.eigh(re)
    except la.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    abs_re = (vecs * np.abs(vals)) @ vecs.conj().T
    out = abs_re - im
    return 0.5 * (out + out.conj().T)


def _psd_part(W):
    vals, vecs = la.eigh(W)
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T


@dataclass
class GlsmResult:
    """Minimizer of ``alpha (W g, g) + |T g - b|^2`` and the functional values at it."""

    g: np.ndarray
    penalty: float
    misfit: float
    exact: float = None
    condition: float = None


def glsm_indicator(M, penalty_matrix, alpha_reg, z, k, penalty="FSHARP", quad_weight=None, b=None):
    """GLSM quadratic surrogate at sampling point ``z``.

    ``penalty_matrix`` is the screen matrix (``"FSHARP"``, ``W = F_#``) or
    the auxiliary matrix (``"AUX"``, ``W = (F^lam)_#``). ``W`` is clipped
    to its positive semidefinite part; the minimizer solves
    ``(alpha W + T* T) g = T* b``; directions with eigenvalues below
    ``GLSM_RCOND`` times the largest are dropped (minimum-norm minimizer).
    The indicator is ``(W g, g)``; for ``"AUX"`` the value
    ``|(F^lam g, g)|`` is also reported.
    """
    if not alpha_reg > 0:
        raise ParameterError("alpha_reg must be positive")
    Me = _entries(M)
    if not np.all(np.isfinite(Me)):
        raise DataError("operator has non-finite entries")
    n = Me.shape[0]
    w = _weight(n, quad_weight)
    T = w * Me
    if penalty not in ("FSHARP", "AUX"):
        raise ParameterError(f"unknown penalty {penalty!r}")
    W = _psd_part(fsharp(penalty_matrix, w))
    if b is None:
        b = point_source_farfields(k, uniform_directions(n), z)[:, 0]
    system = alpha_reg * W + T.conj().T @ T
    system = 0.5 * (system + system.conj().T)
    if not np.all(np.isfinite(system)):
        raise NumericalError("GLSM system has non-finite entries")
    vals, vecs = la.eigh(system)
    top = float(np.max(np.abs(vals)))
    if top == 0.0:
        raise NumericalError("GLSM system is zero")
    # minimum-norm minimizer: the surrogate is rank deficient for compact data
    keep = vals > GLSM_RCOND * top
    cond = top / float(np.min(vals[keep]))
    rhs = vecs.conj().T @ (T.conj().T @ b)
    g = vecs[:, keep] @ (rhs[keep] / vals[keep])
    pen = float(w * np.real(np.vdot(g, W @ g)))
    misfit = float(w * np.linalg.norm(T @ g - b) ** 2)
    exact = None
    if penalty == "AUX":
        Fl = w * standard_entries(penalty_matrix)
        exact = float(w * abs(np.vdot(g, Fl @ g)))
    return GlsmResult(g, pen, misfit, exact, cond)


# -- sensitivity ------------------------------------------------------------

@dataclass
class SensitivityRow:
    alpha: float
    beta: float
    j: int
    lam: float
    rel_change: float
    defined: bool = True


def sensitivity_table(mesh, k, alpha_list, beta_list, count=6, order="magnitude"):
    """Relative eigenvalue changes ``(lam_j(a, b) - lam_j(0, 0)) / lam_j(0, 0)``.

    Modes are paired with the baseline ``sigma = 1`` in descending order.
    ``order`` fixes the labels ``j = 1..count``: ``"magnitude"`` numbers them
    by increasing ``|lam_j(0, 0)|``, ``"descending"`` keeps the descending
    order of the spectrum.
    """
    if order not in ("magnitude", "descending"):
        raise ParameterError(f"unknown ordering {order!r}")
    base = solve_steklov(mesh, k, SigmaProfile.angular(0.0, 0.0), count).values
    perm = np.argsort(np.abs(base), kind="stable") if order == "magnitude" else np.arange(count)
    rows = []
    for a in alpha_list:
        for b in beta_list:
            if a == 0:
                vals = base
            else:
                vals = solve_steklov(mesh, k, SigmaProfile.angular(a, b), count,
                                     check_admissible=False).values
            for j, m in enumerate(perm, start=1):
                defined = abs(base[m]) >= 1e-8
                rel = (vals[m] - base[m]) / base[m] if defined else float("nan")
                rows.append(SensitivityRow(float(a), float(b), j, float(vals[m]), float(rel), defined))
    return rows
