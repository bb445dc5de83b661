"""Finite element scattering solvers with a radial PML.

Two problems are posed for the scattered field on an ``exterior_of`` mesh
(``nu`` is the outward normal of D, the jump is exterior minus interior):

* screen: ``[[d_nu u]] + sigma u = 0`` and ``[[u]] = 0`` on Gamma, which gives
  ``a(u^s, v) - <sigma u^s, v>_Gamma = <sigma u^i, v>_Gamma`` over all
  triangles;
* auxiliary: ``d_nu w + lam w = 0`` on Gamma, ``d_nu w = 0`` on the rest of
  ``boundary(D)``, posed outside D:
  ``a(w^s, v) - lam <w^s, v>_Gamma = <d_nu u^i + lam u^i, v>_Gamma
  + <d_nu u^i, v>_{boundary(D) - Gamma}``.

``a`` is the Helmholtz form with complex stretched coefficients beyond
``R_inner`` and zero Dirichlet data on the outer circle. Far fields are
read off the ``FARFIELD_CIRCLE`` by the Green representation.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, NumericalError, ParameterError
from .farfield import FarFieldMatrix, read_farfield, reciprocity_defect, uniform_directions, write_farfield
from .fem import TRI_WEIGHTS, P2Space
from .mesh import REGION_D, DomainKind
from .specfun import farfield_constant, fundamental_solution, fundamental_solution_grad
from .steklov import SigmaProfile, gamma_sigma_weight

__all__ = [
    "PmlConfig", "IncidentField", "ScatteredField", "ExteriorSolver",
    "solve_screen", "solve_auxiliary", "extract_farfield", "farfield_extractor",
    "farfield_matrix", "screen_farfield_matrix", "aux_farfield_matrix",
    "AuxiliaryFarField", "reciprocity_defect", "read_farfield", "write_farfield",
    "FarFieldMatrix",
]

DEFAULT_S0 = 5.0


@dataclass(frozen=True)
class PmlConfig:
    """Radial PML ``r~ = r + (i/k) int_{R_inner}^r s(t) dt`` on ``R_inner < r < R_outer``.

    ``s(t) = s0 ((t - R_inner) / (R_outer - R_inner))**p``; ``p = 0`` is the
    constant profile.
    """

    R_inner: float = 3.0
    R_outer: float = 4.0
    s0: float = DEFAULT_S0
    p: int = 0

    def __post_init__(self):
        if not 0 < self.R_inner < self.R_outer:
            raise ParameterError("PML needs 0 < R_inner < R_outer")
        if not self.s0 > 0:
            raise ParameterError("PML absorption s0 must be positive")
        if int(self.p) != self.p or self.p < 0:
            raise ParameterError("PML profile exponent must be a non-negative integer")

    @classmethod
    def for_mesh(cls, mesh, s0=DEFAULT_S0, p=0):
        spec = mesh.spec
        return cls(spec.R_pml_inner, spec.R_pml_outer, s0, p)

    def stretch(self, r, k):
        """Complex radius ``r~`` and ``dr~/dr`` at radii ``r``."""
        width = self.R_outer - self.R_inner
        inside = r > self.R_inner
        t = np.where(inside, (r - self.R_inner) / width, 0.0)
        sr = 1.0 + 1j * self.s0 / k * np.where(inside, t ** self.p, 0.0)
        rt = r + 1j * self.s0 / k * width * t ** (self.p + 1) / (self.p + 1)
        return rt, sr

    def coefficients(self, x, k):
        """Stiffness tensor (..., 2, 2) and mass factor (...) at points ``x``."""
        r = np.hypot(x[..., 0], x[..., 1])
        rt, sr = self.stretch(r, k)
        st = rt / r
        er = x / r[..., None]
        et = np.stack([-er[..., 1], er[..., 0]], axis=-1)
        A = ((st / sr)[..., None, None] * er[..., :, None] * er[..., None, :]
             + (sr / st)[..., None, None] * et[..., :, None] * et[..., None, :])
        return A, sr * st


@dataclass(frozen=True)
class IncidentField:
    """Plane wave ``exp(i k d.x)`` or point source ``Phi(x, z)``."""

    kind: str
    k: float
    d: tuple = None
    z: tuple = None

    @classmethod
    def plane_wave(cls, k, d):
        d = np.asarray(d, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ParameterError("plane wave direction must be a unit vector")
        return cls("plane_wave", float(k), d=tuple(d))

    @classmethod
    def point_source(cls, k, z):
        return cls("point_source", float(k), z=tuple(np.asarray(z, dtype=float)))

    def value(self, x):
        if self.kind == "plane_wave":
            return np.exp(1j * self.k * (x @ np.asarray(self.d)))
        return fundamental_solution(self.k, x, np.asarray(self.z))

    def gradient(self, x):
        if self.kind == "plane_wave":
            d = np.asarray(self.d)
            return 1j * self.k * self.value(x)[..., None] * d
        return fundamental_solution_grad(self.k, x, np.asarray(self.z))


def _plane_waves(k, directions, x):
    """Values (..., N) and gradients (..., 2, N) of plane waves along ``directions``."""
    phase = np.exp(1j * k * (x @ directions.T))
    return phase, 1j * k * directions.T * phase[..., None, :]


@dataclass
class ScatteredField:
    """P2 coefficients of a scattered field; ``values`` is (ndofs,) or (ndofs, nrhs)."""

    space: P2Space = field(repr=False)
    values: np.ndarray
    k: float
    problem: str


def _require_exterior(mesh):
    spec = mesh.spec
    if spec is None or spec.kind is not DomainKind.EXTERIOR:
        raise ConfigurationError("scattering solvers need an exterior_of mesh")
    for tag in ("GAMMA", "FARFIELD_CIRCLE", "PML_OUTER"):
        if len(mesh.tagged_edges(tag)) == 0:
            raise ConfigurationError(f"mesh has no {tag} edges")


class ExteriorSolver:
    """Factorised PML system for one problem (``"SCREEN"`` or ``"AUX"``).

    The matrix is ``A_pml - C`` restricted to the free dofs, with
    ``C = B_sigma`` (screen) or ``lam B_Gamma`` (auxiliary).
    """

    def __init__(self, mesh, k, problem, sigma=None, lam=None, pml=None, space=None):
        if k <= 0:
            raise ParameterError("k must be positive")
        _require_exterior(mesh)
        self.mesh = mesh
        self.k = float(k)
        self.problem = problem
        self.pml = pml or PmlConfig.for_mesh(mesh)
        if self.pml.R_inner < mesh.spec.R_farfield:
            raise ConfigurationError("far-field circle must lie inside the PML")
        self.space = space or P2Space(mesh)
        self.gamma_edges = mesh.tagged_edges("GAMMA")
        self.rest_edges = mesh.tagged_edges("NEUMANN_REST")
        if problem == "SCREEN":
            if not isinstance(sigma, SigmaProfile):
                raise ParameterError("screen problem needs a SigmaProfile")
            self.sigma = sigma
            tris = np.arange(mesh.n_triangles)
        elif problem == "AUX":
            if lam is None or np.imag(lam) < 0:
                raise ParameterError("auxiliary problem needs lam with Im(lam) >= 0")
            self.lam = lam
            tris = np.nonzero(mesh.regions != REGION_D)[0]
        else:
            raise ParameterError(f"unknown problem {problem!r}")
        self.tris = tris
        used = np.unique(self.space.tri_dofs[tris])
        outer = np.unique(self.space.edge_dofs(mesh.tagged_edges("PML_OUTER")))
        self.free = np.setdiff1d(used, outer)
        self.A0 = self._pml_matrix()
        if problem == "SCREEN":
            C = self.space.edge_mass(self.gamma_edges, gamma_sigma_weight(sigma))
        else:
            C = lam * self.space.edge_mass(self.gamma_edges)
        self.matrix = (self.A0 - C).tocsr()
        self._lu = None

    def _pml_matrix(self):
        pml, k = self.pml, self.k

        def stiff(x, regions):
            return pml.coefficients(x, k)[0]

        def mass(x, regions):
            return pml.coefficients(x, k)[1]

        return self.space.assemble(self.tris, stiff, mass, mass_scale=-k * k)

    def factor(self):
        if self._lu is None:
            f = self.free
            sub = self.matrix[f][:, f].tocsc()
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                try:
                    self._lu = spla.splu(sub)
                except (RuntimeError, spla.MatrixRankWarning) as exc:
                    raise NumericalError(f"PML system is singular: {exc}") from exc
            diag = np.abs(self._lu.U.diagonal())
            self.pivot_ratio = float(diag.max() / max(diag.min(), np.finfo(float).tiny))
            if not np.isfinite(self.pivot_ratio) or self.pivot_ratio > 1e14:
                raise NumericalError(
                    f"PML system is numerically singular (pivot ratio {self.pivot_ratio:.2e})")
        return self._lu

    def solve(self, rhs):
        """Solve with a full-length right-hand side (ndofs[, nrhs])."""
        lu = self.factor()
        rhs = np.asarray(rhs, dtype=complex)
        out = np.zeros(rhs.shape, dtype=complex)
        out[self.free] = lu.solve(rhs[self.free])
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"non-finite solution (pivot ratio {self.pivot_ratio:.2e})")
        return out

    # -- loads --------------------------------------------------------------

    def _samples(self, edges, incident):
        """Incident values (ne, nq, nrhs) and gradients (ne, nq, 2, nrhs) on ``edges``."""
        x, _, _ = self.space.edge_geometry(edges)
        if isinstance(incident, IncidentField):
            return incident.value(x)[..., None], incident.gradient(x)[..., None]
        return _plane_waves(self.k, np.asarray(incident, dtype=float), x)

    def screen_load(self, incident):
        x, _, _ = self.space.edge_geometry(self.gamma_edges)
        ui, _ = self._samples(self.gamma_edges, incident)
        sig = gamma_sigma_weight(self.sigma)(x)
        return self.space.edge_load(self.gamma_edges, sig[..., None] * ui)

    def aux_loads(self, incident):
        """Parts ``b0`` and ``b1`` of the auxiliary load ``b0 + lam b1``."""
        out0 = 0.0
        for edges in (self.gamma_edges, self.rest_edges):
            if len(edges) == 0:
                continue
            ui, gi = self._samples(edges, incident)
            nu = self.space.outward_normals(edges, REGION_D)
            dn = np.einsum("eqi,eqir->eqr", nu, gi)
            out0 = out0 + self.space.edge_load(edges, dn)
        ui, _ = self._samples(self.gamma_edges, incident)
        out1 = self.space.edge_load(self.gamma_edges, ui)
        return out0, out1

    def load(self, incident):
        if self.problem == "SCREEN":
            return self.screen_load(incident)
        b0, b1 = self.aux_loads(incident)
        return b0 + self.lam * b1

    def scattered(self, incident):
        values = self.solve(self.load(incident))
        if isinstance(incident, IncidentField):
            values = values[:, 0]
        return ScatteredField(self.space, values, self.k, self.problem)


def solve_screen(mesh, k, sigma, incident, pml=None):
    """Scattered field of the screen problem for one incident field."""
    return ExteriorSolver(mesh, k, "SCREEN", sigma=sigma, pml=pml).scattered(incident)


def solve_auxiliary(mesh, k, lam, incident, pml=None):
    """Scattered field of the auxiliary impedance problem outside D."""
    return ExteriorSolver(mesh, k, "AUX", lam=lam, pml=pml).scattered(incident)


EXTRACTION_METHODS = ("annulus", "circle")


def farfield_extractor(space, k, directions, method="annulus"):
    """Sparse (N, ndofs) matrix taking P2 coefficients to far-field samples.

    Both methods use the Green representation
    ``u_inf(xhat) = gamma_2 int_{|y|=R} (u d_nu e - d_nu u e) ds`` with
    ``e = exp(-i k xhat.y)``. ``circle`` evaluates it on
    ``FARFIELD_CIRCLE`` (gradients averaged over both neighbouring
    triangles). ``annulus`` averages it over ``R`` between the far-field
    circle and the PML with a smooth weight, which turns the boundary
    integral into a volume integral and avoids pointwise gradient traces.
    """
    if method == "circle":
        return _circle_extractor(space, k, directions)
    if method == "annulus":
        return _annulus_extractor(space, k, directions)
    raise ParameterError(f"unknown extraction method {method!r}")


def _annulus_extractor(space, k, directions):
    mesh = space.mesh
    spec = mesh.spec
    if spec is None or spec.kind is not DomainKind.EXTERIOR:
        raise ConfigurationError("annulus extraction needs an exterior_of mesh")
    r1, r2 = spec.R_farfield, spec.R_pml_inner
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    c = mesh.vertices[mesh.triangles].mean(axis=1)
    rc = np.hypot(c[:, 0], c[:, 1])
    tris = np.nonzero((rc > r1) & (rc < r2))[0]
    if len(tris) == 0:
        raise ConfigurationError("no triangles between the far-field circle and the PML")
    x, J, det = space.geometry(tris)
    G = space.physical_gradients(J, det)  # (nt, nq, 6, 2)
    r = np.hypot(x[..., 0], x[..., 1])
    s = np.clip((r - r1) / (r2 - r1), 0.0, 1.0)
    # weight -chi'(r) with chi the quintic smoothstep from 1 (r1) to 0 (r2)
    wr = 30.0 * s * s * (1.0 - s) ** 2 / (r2 - r1)
    er = x / r[..., None]
    e = np.exp(-1j * k * np.einsum("tqi,ni->tqn", x, directions))
    dr_e = -1j * k * np.einsum("tqi,ni->tqn", er, directions) * e
    phi = space._phi  # (nq, 6)
    dr_phi = np.einsum("tqai,tqi->tqa", G, er)
    w = det * TRI_WEIGHTS * wr
    local = farfield_constant(k) * np.einsum(
        "tq,tqna->tna", w, phi[None, :, None, :] * dr_e[..., None] - dr_phi[:, :, None, :] * e[..., None])
    dofs = space.tri_dofs[tris]
    n_dirs = len(directions)
    rows = np.broadcast_to(np.arange(n_dirs)[None, :, None], local.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], local.shape).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n_dirs, space.ndofs))


def _circle_extractor(space, k, directions):
    mesh = space.mesh
    edges = mesh.tagged_edges("FARFIELD_CIRCLE")
    if len(edges) == 0:
        raise ConfigurationError("mesh has no FARFIELD_CIRCLE edges")
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    x, ds, tang = space.edge_geometry(edges)
    nu = np.stack([tang[..., 1], -tang[..., 0]], axis=-1)
    nu *= np.sign(np.einsum("eqi,eqi->eq", nu, x))[..., None]
    e = np.exp(-1j * k * np.einsum("eqi,ni->eqn", x, directions))  # (ne, nq, N)
    dn_e = -1j * k * np.einsum("eqi,ni->eqn", nu, directions) * e
    gamma2 = farfield_constant(k)
    et = mesh.edge_triangles()[edges]
    rows, cols, data = [], [], []
    n_dirs = len(directions)
    for side in (0, 1):
        tris = et[:, side]
        weight = np.where(et[:, 1 - side] >= 0, 0.5, 1.0)
        ok = tris >= 0
        if not np.any(ok):
            continue
        phi, G = space.edge_basis(edges[ok], tris[ok])
        dn_phi = np.einsum("eqai,eqi->eqa", G, nu[ok])
        w = (ds[ok] * weight[ok, None])[..., None, None]
        local = gamma2 * np.sum(w * (phi[..., None, :] * dn_e[ok][..., :, None]
                                     - dn_phi[..., None, :] * e[ok][..., :, None]), axis=1)
        dofs = space.tri_dofs[tris[ok]]  # (ne, 6); local is (ne, N, 6)
        rows.append(np.broadcast_to(np.arange(n_dirs)[None, :, None], local.shape).ravel())
        cols.append(np.broadcast_to(dofs[:, None, :], local.shape).ravel())
        data.append(local.ravel())
    return sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n_dirs, space.ndofs))


def extract_farfield(field, directions, k=None, method="annulus"):
    """Far-field samples of a :class:`ScatteredField` (or ``(space, values)``) at ``directions``."""
    if isinstance(field, ScatteredField):
        space, values, k = field.space, field.values, field.k if k is None else k
    else:
        space, values = field
    if k is None:
        raise ParameterError("k is required")
    L = farfield_extractor(space, k, directions, method)
    return L @ np.asarray(values)


def _matrix(solver, n_dirs, provenance, params):
    if n_dirs < 2 or n_dirs % 2:
        raise ParameterError("far-field matrices need an even N >= 2")
    d = uniform_directions(n_dirs)
    U = solver.solve(solver.load(d))
    L = farfield_extractor(solver.space, solver.k, d)
    entries = L @ U
    bad = ~np.all(np.isfinite(entries), axis=0)
    if np.any(bad):
        raise NumericalError(f"non-finite far field in columns {np.nonzero(bad)[0].tolist()}")
    params = dict(params, h=solver.mesh.h_max, s0=solver.pml.s0)
    return FarFieldMatrix(entries, solver.k, provenance, params)


def screen_farfield_matrix(mesh, k, sigma, n_dirs, pml=None):
    """Far-field matrix ``A`` of the screen: one factorization, ``n_dirs`` right-hand sides."""
    solver = ExteriorSolver(mesh, k, "SCREEN", sigma=sigma, pml=pml)
    return _matrix(solver, n_dirs, "SCREEN", {"sigma": sigma.describe()})


def aux_farfield_matrix(mesh, k, lam, n_dirs, pml=None):
    """Far-field matrix ``B`` of the auxiliary problem for impedance ``lam``."""
    solver = ExteriorSolver(mesh, k, "AUX", lam=lam, pml=pml)
    return _matrix(solver, n_dirs, "AUX", {"lambda": lam})


def farfield_matrix(problem, mesh, k, n_dirs, value, pml=None):
    """Dispatch on ``problem``: ``"SCREEN"`` (``value`` is sigma) or ``"AUX"`` (``value`` is lam)."""
    if problem == "SCREEN":
        return screen_farfield_matrix(mesh, k, value, n_dirs, pml)
    if problem == "AUX":
        return aux_farfield_matrix(mesh, k, value, n_dirs, pml)
    raise ParameterError(f"unknown problem {problem!r}")


class AuxiliaryFarField:
    """Auxiliary far-field matrices for many impedances from one factorization.

    With ``A(lam) = A0 - lam P Bg P^T`` (``P`` selects the Gamma dofs) the
    Woodbury identity reduces every new ``lam`` to a dense solve of the size
    of the Gamma trace space.
    """

    def __init__(self, mesh, k, n_dirs, pml=None):
        if n_dirs < 2 or n_dirs % 2:
            raise ParameterError("far-field matrices need an even N >= 2")
        self.solver = ExteriorSolver(mesh, k, "AUX", lam=0.0, pml=pml)
        s = self.solver
        self.k = s.k
        self.n_dirs = n_dirs
        d = uniform_directions(n_dirs)
        b0, b1 = s.aux_loads(d)
        self.g = np.unique(s.space.edge_dofs(s.gamma_edges))
        Bg = s.space.edge_mass(s.gamma_edges)
        self.Bgg = Bg[self.g][:, self.g].toarray()
        P = np.zeros((s.space.ndofs, len(self.g)))
        P[self.g, np.arange(len(self.g))] = 1.0
        X = s.solve(np.hstack([b0, b1, P]))
        L = farfield_extractor(s.space, s.k, d)
        n = n_dirs
        LX = L @ X
        self._Lx0, self._Lx1, self._LY = LX[:, :n], LX[:, n:2 * n], LX[:, 2 * n:]
        Xg = X[self.g]
        self._gx0, self._gx1, self._gY = Xg[:, :n], Xg[:, n:2 * n], Xg[:, 2 * n:]
        self.params = {"h": mesh.h_max, "s0": s.pml.s0}

    def entries(self, lam):
        if np.imag(lam) < 0:
            raise ParameterError("impedance must have non-negative imaginary part")
        m = len(self.g)
        C = np.eye(m) - lam * (self.Bgg @ self._gY)
        t = self.Bgg @ (self._gx0 + lam * self._gx1)
        try:
            corr = np.linalg.solve(C, t)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"auxiliary system singular at lam = {lam}") from exc
        return self._Lx0 + lam * self._Lx1 + lam * (self._LY @ corr)

    def __call__(self, lam):
        return FarFieldMatrix(self.entries(lam), self.k, "AUX", dict(self.params, **{"lambda": lam}))
