"""Mixed Steklov eigenproblem on a bounded domain D with P2 elements.

Find ``(lambda, h)`` with ``Delta h + k^2 h = 0`` in D,
``d_nu h - sigma h = -lambda h`` on the screen arc and ``d_nu h = 0`` on the
rest of the boundary. The discrete pencil is

    (grad w, grad v) - k^2 (w, v) - <sigma w, v>_Gamma = -lambda <w, v>_Gamma

and is reduced to the trace space on Gamma by a Schur complement.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AdmissibilityError, ConfigurationError, DomainError, NumericalError, ParameterError
from .fem import P2Space

ADMISSIBILITY_RTOL = 1e-2


class SigmaKind(str, enum.Enum):
    CONSTANT = "constant"
    ANGULAR = "angular"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SigmaProfile:
    """Surface parameter on the screen as a function of the polar angle.

    ``angular`` is 1 outside the band ``(pi/3 + beta, 2 pi/3 + beta)`` and
    ``1 + amplitude sin^2(3 beta - 3 theta)`` inside it. ``custom`` wraps
    a vectorised callable of theta.
    """

    kind: SigmaKind
    value: float = 0.0
    amplitude: float = 0.0
    beta: float = 0.0
    func: object = field(default=None, compare=False)
    label: str = ""

    @classmethod
    def constant(cls, c):
        c = complex(c)
        return cls(SigmaKind.CONSTANT, value=c.real if c.imag == 0 else c)

    @classmethod
    def angular(cls, amplitude, beta):
        if amplitude < 0:
            raise ParameterError("angular profile amplitude must be >= 0")
        return cls(SigmaKind.ANGULAR, amplitude=float(amplitude), beta=float(beta))

    @classmethod
    def custom(cls, func, label="custom"):
        return cls(SigmaKind.CUSTOM, func=func, label=label)

    @classmethod
    def parse(cls, text):
        """Parse ``const:<c>`` or ``angular:<amplitude>,<beta>``."""
        kind, _, rest = text.partition(":")
        try:
            if kind == "const":
                return cls.constant(complex(rest.replace("i", "j")))
            if kind == "angular":
                a, b = rest.split(",")
                return cls.angular(float(a), float(b))
        except ValueError:
            pass
        raise ParameterError(f"cannot parse sigma profile {text!r}")

    def describe(self):
        if self.kind is SigmaKind.CONSTANT:
            return f"const:{self.value!r}"
        if self.kind is SigmaKind.ANGULAR:
            return f"angular:{float(self.amplitude)!r},{float(self.beta)!r}"
        return self.label

    def is_real(self):
        return not (self.kind is SigmaKind.CONSTANT and isinstance(self.value, complex))

    def is_constant(self):
        return self.kind is SigmaKind.CONSTANT or (
            self.kind is SigmaKind.ANGULAR and self.amplitude == 0.0)

    def __call__(self, theta):
        return sigma_eval(self, theta)


def sigma_eval(profile, theta):
    """Evaluate ``profile`` at polar angle(s) ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if profile.kind is SigmaKind.CONSTANT:
        return np.full(theta.shape, profile.value) if theta.ndim else profile.value
    if profile.kind is SigmaKind.CUSTOM:
        return np.asarray(profile.func(theta), dtype=float)
    tol = 1e-12
    if np.any(theta < -tol) or np.any(theta > math.pi + tol):
        raise DomainError("angular sigma profile is defined for theta in [0, pi]")
    lo = math.pi / 3 + profile.beta
    hi = 2 * math.pi / 3 + profile.beta
    band = (theta > lo) & (theta < hi)
    out = np.where(band, 1.0 + profile.amplitude * np.sin(3 * profile.beta - 3 * theta) ** 2, 1.0)
    return out if theta.ndim else float(out)


def polar_angle(x):
    """Polar angle in ``[0, 2 pi)`` of points (..., 2), with ``-0`` mapped to 0."""
    th = np.arctan2(x[..., 1], x[..., 0])
    return np.where(th < 0, th + 2 * math.pi, th) % (2 * math.pi)


def gamma_sigma_weight(profile):
    """Edge weight function ``x -> sigma(theta(x))`` for the assembler."""
    def weight(x):
        th = polar_angle(x)
        # points on the upper arc numerically below the x-axis
        th = np.where(th > 2 * math.pi - 1e-9, 0.0, th)
        return sigma_eval(profile, th)
    return weight


@dataclass
class SteklovPencil:
    """``K w = -lambda B w`` with ``K = S - k^2 M - B_sigma`` and Gamma mass ``B``."""

    K: sp.csr_matrix
    B: sp.csr_matrix
    gamma_dofs: np.ndarray
    k: float
    sigma: SigmaProfile
    space: P2Space = field(repr=False)
    free_dofs: np.ndarray = field(default=None, repr=False)


@dataclass
class EigenSpectrum:
    """Eigenvalues sorted by descending real part with their Gamma traces.

    ``gamma_traces[:, j]`` holds the eigenvector restricted to
    ``gamma_dofs``, normalised to unit B-norm.
    """

    values: np.ndarray
    gamma_traces: np.ndarray
    gamma_dofs: np.ndarray
    mesh_h: float
    k: float
    sigma: SigmaProfile
    multiple: np.ndarray = None

    def __len__(self):
        return len(self.values)


def _gamma_edges(mesh):
    edges = mesh.tagged_edges("GAMMA")
    if len(edges) == 0:
        raise ConfigurationError("mesh has no GAMMA edges")
    return edges


def _domain_triangles(mesh):
    from .mesh import REGION_D
    return np.nonzero(mesh.regions == REGION_D)[0]


def assemble_pencil(mesh, k, sigma, space=None):
    """Assemble the Steklov pencil on the triangles of D."""
    if k <= 0:
        raise ParameterError("k must be positive")
    if not isinstance(sigma, SigmaProfile):
        raise ParameterError("sigma must be a SigmaProfile")
    if not sigma.is_real():
        raise ParameterError("the eigenvalue solver needs a real sigma profile")
    space = space or P2Space(mesh)
    edges = _gamma_edges(mesh)
    tris = _domain_triangles(mesh)
    A = space.assemble(tris, mass_scale=-k * k)
    B = space.edge_mass(edges)
    Bs = space.edge_mass(edges, gamma_sigma_weight(sigma))
    K = (A - Bs).tocsr()
    gamma_dofs = np.unique(space.edge_dofs(edges))
    used = np.unique(space.tri_dofs[tris])
    return SteklovPencil(K, B.tocsr(), gamma_dofs, float(k), sigma, space, used)


def _split(pencil):
    used = pencil.free_dofs
    g = pencil.gamma_dofs
    interior = np.setdiff1d(used, g)
    return interior, g


def schur_complement(pencil):
    """Dense Schur complement ``K_GG - K_GI K_II^{-1} K_IG`` on the Gamma dofs."""
    interior, g = _split(pencil)
    K = pencil.K
    Kii = K[interior][:, interior].tocsc()
    Kig = K[interior][:, g].toarray()
    Kgg = K[g][:, g].toarray()
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            lu = spla.splu(Kii)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise AdmissibilityError(
                "interior block is singular: k^2 is a mixed Dirichlet-Neumann eigenvalue") from exc
    X = lu.solve(Kig)
    if not np.all(np.isfinite(X)):
        raise AdmissibilityError("interior block is singular")
    S = Kgg - Kig.T @ X
    return 0.5 * (S + S.T), X


def solve_steklov(mesh, k, sigma, count=6, check_admissible=True):
    """The ``count`` eigenvalues of largest real part of the Steklov pencil."""
    if check_admissible:
        report = check_wavenumber_admissible(mesh, k)
        if not report.admissible:
            raise AdmissibilityError(
                f"k^2 = {k * k:g} is within {ADMISSIBILITY_RTOL:g} k^2 of the mixed "
                f"eigenvalue {report.nearest_mixed_eig:g}")
    pencil = assemble_pencil(mesh, k, sigma)
    return solve_pencil(pencil, count)


def solve_pencil(pencil, count=6):
    """Eigenpairs of an assembled pencil (see :func:`solve_steklov`)."""
    _, g = _split(pencil)
    if count > len(g):
        warnings.warn(f"count capped at the {len(g)} Gamma dofs", RuntimeWarning, stacklevel=2)
        count = len(g)
    S, _ = schur_complement(pencil)
    Bgg = pencil.B[g][:, g].toarray()
    try:
        vals, vecs = la.eigh(-S, Bgg)
    except la.LinAlgError as exc:
        raise NumericalError(f"generalized eigensolver failed: {exc}") from exc
    order = np.argsort(-vals)[:count]
    vals, vecs = vals[order], vecs[:, order]
    gaps = np.abs(np.diff(vals))
    multiple = np.zeros(count, dtype=bool)
    close = gaps < 1e-6 * np.maximum(1.0, np.abs(vals[:-1]))
    multiple[:-1] |= close
    multiple[1:] |= close
    mesh = pencil.space.mesh
    return EigenSpectrum(vals, vecs, g, mesh.h_max, pencil.k, pencil.sigma, multiple)


def extend_trace(pencil, trace):
    """Full dof vector of the discrete eigenfunction with Gamma values ``trace``."""
    interior, g = _split(pencil)
    _, X = schur_complement(pencil)
    out = np.zeros(pencil.space.ndofs, dtype=np.result_type(trace, float))
    out[g] = trace
    out[interior] = -X @ trace
    return out


@dataclass
class AdmissibilityReport:
    admissible: bool
    nearest_mixed_eig: float
    mixed_eigs: np.ndarray


def mixed_dirichlet_neumann_eigs(mesh, count=6, space=None):
    """Smallest eigenvalues of ``-Delta`` with u = 0 on Gamma, Neumann elsewhere."""
    space = space or P2Space(mesh)
    tris = _domain_triangles(mesh)
    S = space.stiffness(tris)
    M = space.mass(tris)
    used = np.unique(space.tri_dofs[tris])
    g = np.unique(space.edge_dofs(_gamma_edges(mesh)))
    free = np.setdiff1d(used, g)
    Sf = S[free][:, free].tocsc()
    Mf = M[free][:, free].tocsc()
    count = min(count, len(free) - 2)
    vals = spla.eigsh(Sf, k=count, M=Mf, sigma=0.0, which="LM", return_eigenvectors=False)
    return np.sort(vals)


def check_wavenumber_admissible(mesh, k, count=6):
    """Check that ``k^2`` is not near a mixed Dirichlet-Neumann eigenvalue of D."""
    mu = mixed_dirichlet_neumann_eigs(mesh, count)
    nearest = float(mu[np.argmin(np.abs(mu - k * k))])
    ok = abs(nearest - k * k) > ADMISSIBILITY_RTOL * k * k
    # also inadmissible if k^2 lies beyond the computed window and we cannot tell
    if k * k > mu[-1] * (1 + ADMISSIBILITY_RTOL):
        more = mixed_dirichlet_neumann_eigs(mesh, 4 * count)
        nearest = float(more[np.argmin(np.abs(more - k * k))])
        ok = abs(nearest - k * k) > ADMISSIBILITY_RTOL * k * k
        mu = more
    return AdmissibilityReport(bool(ok), nearest, mu)


def robin_neumann_tau1(mesh, alpha_robin):
    """Smallest mixed Robin-Neumann eigenvalue, the minimum of
    ``(|grad u|^2 + alpha |u|^2_Gamma) / |u|^2`` over the P2 space."""
    if alpha_robin < 0:
        raise ParameterError("Robin coefficient must be >= 0")
    space = P2Space(mesh)
    tris = _domain_triangles(mesh)
    used = np.unique(space.tri_dofs[tris])
    A = space.stiffness(tris) + alpha_robin * space.edge_mass(_gamma_edges(mesh))
    M = space.mass(tris)
    A = A[used][:, used].tocsc()
    M = M[used][:, used].tocsc()
    # shift below zero: A is singular for alpha = 0
    vals = spla.eigsh(A, k=1, M=M, sigma=-1.0, which="LM", return_eigenvectors=False)
    return max(float(vals[0]), 0.0)


def perturb_first_order(mesh, k, sigma0, sigma1, spectrum=None):
    """First-order coefficient of ``lambda_1(sigma0 + eps sigma1)`` in ``eps``.

    Equals ``<sigma1 h0, h0>_Gamma / <h0, h0>_Gamma`` for the trace ``h0``
    of the eigenfunction of the largest eigenvalue.
    """
    if spectrum is None:
        spectrum = solve_steklov(mesh, k, sigma0, count=2, check_admissible=False)
    if len(spectrum.values) > 1 and abs(spectrum.values[0] - spectrum.values[1]) < 1e-6:
        raise NumericalError("largest eigenvalue is not simple")
    space = P2Space(mesh)
    edges = _gamma_edges(mesh)
    g = spectrum.gamma_dofs
    B = space.edge_mass(edges)[g][:, g]
    B1 = space.edge_mass(edges, gamma_sigma_weight(sigma1))[g][:, g]
    h0 = spectrum.gamma_traces[:, 0]
    return float((h0 @ (B1 @ h0)) / (h0 @ (B @ h0)))
