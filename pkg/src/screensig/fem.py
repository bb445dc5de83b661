"""Isoparametric P2 Lagrange elements on :class:`~screensig.mesh.Mesh2D`.

Degrees of freedom: vertex ``i`` is dof ``i``, the node on edge ``e`` is
dof ``nv + e``. Local node order in a triangle is the three vertices
followed by the midpoints of the edges opposite vertices 0, 1, 2.
Forms are bilinear (no conjugation); with real basis functions they
coincide with the sesquilinear forms on the discrete space.
"""

import numpy as np
import scipy.sparse as sp

# Dunavant degree-5 rule on the reference triangle (weights sum to 1/2)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_W0, _W1, _W2 = 0.225, 0.132394152788506, 0.125939180544827
TRI_POINTS = np.array([
    [1 / 3, 1 / 3],
    [_B1, _B1], [_A1, _B1], [_B1, _A1],
    [_B2, _B2], [_A2, _B2], [_B2, _A2],
])
TRI_WEIGHTS = 0.5 * np.array([_W0, _W1, _W1, _W1, _W2, _W2, _W2])

_gx, _gw = np.polynomial.legendre.leggauss(5)
EDGE_POINTS = 0.5 * (_gx + 1.0)
EDGE_WEIGHTS = 0.5 * _gw


def shape_functions(xi):
    """P2 basis values (nq, 6) and reference gradients (nq, 6, 2) at ``xi``."""
    xi = np.atleast_2d(xi)
    s, t = xi[:, 0], xi[:, 1]
    l0, l1, l2 = 1.0 - s - t, s, t
    phi = np.column_stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1,
    ])
    # dL/ds = (-1, 1, 0), dL/dt = (-1, 0, 1)
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    L = [l0, l1, l2]
    grads = np.empty((len(s), 6, 2))
    for i in range(3):
        grads[:, i] = (4 * L[i] - 1)[:, None] * dl[i]
    for n, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        grads[:, 3 + n] = 4 * (L[a][:, None] * dl[b] + L[b][:, None] * dl[a])
    return phi, grads


def edge_shape_functions(t):
    """1D quadratic basis at ``t`` for nodes (start, end, middle)."""
    t = np.asarray(t, dtype=float)
    return np.column_stack([2 * (t - 0.5) * (t - 1), 2 * t * (t - 0.5), 4 * t * (1 - t)])


def edge_shape_derivatives(t):
    t = np.asarray(t, dtype=float)
    return np.column_stack([4 * t - 3, 4 * t - 1, 4 - 8 * t])


class P2Space:
    """Dof maps and element geometry for a mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.nv = mesh.n_vertices
        self.ndofs = mesh.n_dofs
        self.tri_dofs = np.hstack([mesh.triangles, self.nv + mesh.triangle_edges()])
        self.node_xy = np.vstack([mesh.vertices, mesh.midpoints])
        self._phi, self._dphi = shape_functions(TRI_POINTS)

    # -- volume terms -------------------------------------------------------

    def geometry(self, tris, xi=None):
        """Physical points, Jacobians and |det J| for ``tris`` at reference points."""
        if xi is None:
            phi, dphi = self._phi, self._dphi
        else:
            phi, dphi = shape_functions(xi)
        X = self.node_xy[self.tri_dofs[tris]]  # (nt, 6, 2)
        x = np.einsum("qa,tai->tqi", phi, X)
        J = np.einsum("qaj,tai->tqij", dphi, X)  # J[i, j] = dx_i / dxi_j
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        return x, J, det

    def physical_gradients(self, J, det, dphi=None):
        """Basis gradients (nt, nq, 6, 2) from the Jacobians."""
        if dphi is None:
            dphi = self._dphi
        inv = np.empty_like(J)
        inv[..., 0, 0] = J[..., 1, 1]
        inv[..., 1, 1] = J[..., 0, 0]
        inv[..., 0, 1] = -J[..., 0, 1]
        inv[..., 1, 0] = -J[..., 1, 0]
        inv /= det[..., None, None]
        # grad phi = J^{-T} grad_ref phi
        return np.einsum("tqji,qaj->tqai", inv, dphi)

    def assemble(self, tris=None, stiffness_coef=None, mass_coef=None, mass_scale=0.0):
        """Assemble ``int A grad u . grad v + c u v`` over triangles ``tris``.

        ``stiffness_coef(x, regions)`` returns an (nt, nq, 2, 2) tensor or
        ``None`` for the identity; ``mass_coef(x, regions)`` returns (nt, nq)
        values multiplying ``mass_scale`` (a constant factor such as ``-k^2``).
        """
        if tris is None:
            tris = np.arange(self.mesh.n_triangles)
        x, J, det = self.geometry(tris)
        if np.any(det <= 0):
            raise ValueError("inverted element")
        G = self.physical_gradients(J, det)
        w = det * TRI_WEIGHTS  # (nt, nq)
        regions = self.mesh.regions[tris][:, None]
        if stiffness_coef is None:
            local = np.einsum("tq,tqai,tqbi->tab", w, G, G)
        else:
            A = stiffness_coef(x, regions)
            local = np.einsum("tq,tqai,tqij,tqbj->tab", w, G, A, G)
        if mass_scale != 0.0:
            c = np.ones_like(w) if mass_coef is None else mass_coef(x, regions)
            local = local + mass_scale * np.einsum("tq,tq,qa,qb->tab", w, c, self._phi, self._phi)
        return self._scatter(tris, local)

    def mass(self, tris=None):
        if tris is None:
            tris = np.arange(self.mesh.n_triangles)
        x, J, det = self.geometry(tris)
        w = det * TRI_WEIGHTS
        local = np.einsum("tq,qa,qb->tab", w, self._phi, self._phi)
        return self._scatter(tris, local)

    def stiffness(self, tris=None):
        return self.assemble(tris)

    def _scatter(self, tris, local):
        dofs = self.tri_dofs[tris]
        rows = np.repeat(dofs, 6, axis=1).ravel()
        cols = np.tile(dofs, (1, 6)).ravel()
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(self.ndofs, self.ndofs))

    # -- edge terms ---------------------------------------------------------

    def edge_dofs(self, edges):
        """(ne, 3) dofs of edges ordered (start vertex, end vertex, midpoint)."""
        e = self.mesh.edges[edges]
        return np.column_stack([e[:, 0], e[:, 1], self.nv + np.asarray(edges)])

    def edge_geometry(self, edges):
        """Gauss points (ne, nq, 2), ds weights (ne, nq) and unit tangents."""
        dofs = self.edge_dofs(edges)
        X = self.node_xy[dofs]  # (ne, 3, 2)
        N = edge_shape_functions(EDGE_POINTS)
        dN = edge_shape_derivatives(EDGE_POINTS)
        x = np.einsum("qa,eai->eqi", N, X)
        dx = np.einsum("qa,eai->eqi", dN, X)
        speed = np.hypot(dx[..., 0], dx[..., 1])
        return x, speed * EDGE_WEIGHTS, dx / speed[..., None]

    def edge_mass(self, edges, weight=None):
        """``int_edges w u v ds``; ``weight(x)`` takes (ne, nq, 2) points."""
        edges = np.asarray(edges, dtype=int)
        x, ds, _ = self.edge_geometry(edges)
        c = np.ones(ds.shape) if weight is None else np.asarray(weight(x))
        N = edge_shape_functions(EDGE_POINTS)
        local = np.einsum("eq,eq,qa,qb->eab", ds, c, N, N)
        dofs = self.edge_dofs(edges)
        rows = np.repeat(dofs, 3, axis=1).ravel()
        cols = np.tile(dofs, (1, 3)).ravel()
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(self.ndofs, self.ndofs))

    def edge_load(self, edges, values):
        """Load vectors ``int_edges f v ds`` for (ne, nq, nrhs) samples ``values``."""
        edges = np.asarray(edges, dtype=int)
        _, ds, _ = self.edge_geometry(edges)
        N = edge_shape_functions(EDGE_POINTS)
        local = np.einsum("eq,eqr,qa->ear", ds, values, N)
        dofs = self.edge_dofs(edges)
        out = np.zeros((self.ndofs, values.shape[-1]), dtype=local.dtype)
        np.add.at(out, dofs.ravel(), local.reshape(-1, values.shape[-1]))
        return out

    def outward_normals(self, edges, inside_region):
        """Unit normals at edge Gauss points pointing away from ``inside_region``."""
        edges = np.asarray(edges, dtype=int)
        x, _, tang = self.edge_geometry(edges)
        normal = np.stack([tang[..., 1], -tang[..., 0]], axis=-1)
        et = self.mesh.edge_triangles()[edges]
        reg = np.where(et >= 0, self.mesh.regions[np.maximum(et, 0)], -1)
        owner = np.where(reg[:, 0] == inside_region, et[:, 0], et[:, 1])
        if np.any(owner < 0) or np.any(self.mesh.regions[owner] != inside_region):
            raise ValueError("edge not adjacent to the requested region")
        centroid = self.mesh.vertices[self.mesh.triangles[owner]].mean(axis=1)
        sign = np.sign(np.einsum("eqi,eqi->eq", normal, x - centroid[:, None, :]))
        return normal * sign[..., None]

    # -- evaluation ---------------------------------------------------------

    def edge_basis(self, edges, side_tris):
        """Basis values (ne, nq, 6) and gradients (ne, nq, 6, 2) at edge Gauss points.

        The basis is that of triangle ``side_tris[i]`` restricted to edge
        ``edges[i]``; the matching dofs are ``tri_dofs[side_tris]``.
        """
        mesh = self.mesh
        edges = np.asarray(edges, dtype=int)
        side_tris = np.asarray(side_tris, dtype=int)
        te = mesh.triangle_edges()[side_tris]
        local = np.argmax(te == edges[:, None], axis=1)
        tri = mesh.triangles[side_tris]
        e_start = mesh.edges[edges, 0]
        ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        a_loc = (local + 1) % 3
        b_loc = (local + 2) % 3
        start_is_a = tri[np.arange(len(edges)), a_loc] == e_start
        p_start = np.where(start_is_a[:, None], ref[a_loc], ref[b_loc])
        p_end = np.where(start_is_a[:, None], ref[b_loc], ref[a_loc])
        nq = len(EDGE_POINTS)
        vals = np.empty((len(edges), nq, 6))
        grads = np.empty((len(edges), nq, 6, 2))
        for i in range(len(edges)):
            xi = p_start[i] + EDGE_POINTS[:, None] * (p_end[i] - p_start[i])
            phi, dphi = shape_functions(xi)
            _, J, det = self.geometry(side_tris[i:i + 1], xi)
            vals[i] = phi
            grads[i] = self.physical_gradients(J, det, dphi)[0]
        return vals, grads

    def edge_traces(self, edges, u, side_tris):
        """Values and gradients of ``u`` at edge Gauss points from triangles ``side_tris``.

        ``u`` is (ndofs,) or (ndofs, nrhs). Returns arrays with shapes
        (ne, nq[, nrhs]) and (ne, nq, 2[, nrhs]).
        """
        phi, G = self.edge_basis(edges, side_tris)
        coeff = np.asarray(u)[self.tri_dofs[np.asarray(side_tris, dtype=int)]]  # (ne, 6[, nrhs])
        vals = np.einsum("eqa,ea...->eq...", phi, coeff)
        grads = np.einsum("eqai,ea...->eqi...", G, coeff)
        return vals, grads

    def interpolate(self, func):
        """Nodal interpolant of ``func(points (n, 2))`` (vertices then edge nodes)."""
        return np.asarray(func(self.node_xy))
