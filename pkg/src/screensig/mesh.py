"""Structured triangular meshes of sectors, annular sectors and disks.

Meshes are built ring by ring: each circle ``r = r_i`` carries equally
spaced points and neighbouring rings are joined by a merge walk that
always takes the shorter diagonal. Angular blocks (e.g. the screen sector
and its complement) are meshed separately on shared radii and glued, so
every block boundary is covered exactly by mesh edges.

Edges lying on a circle centred at the origin are flagged curved; their
P2 midpoint is placed on the exact arc and the finite element code treats
those triangles isoparametrically.
"""

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError, ParseError, ResolutionError

FORMAT_TOKEN = "meshv1"

TAGS = ("GAMMA", "NEUMANN_REST", "FARFIELD_CIRCLE", "PML_OUTER")

# triangle region labels
REGION_D = 0
REGION_EXTERIOR = 1
REGION_PML = 2


class DomainKind(str, enum.Enum):
    SECTOR = "sector"
    ANNULAR_SECTOR = "annular_sector"
    DISK = "disk"
    EXTERIOR = "exterior_of"


@dataclass(frozen=True)
class DomainSpec:
    """Geometry of a computational domain.

    ``sector``: ``0 < r < r2, 0 < theta < alpha`` (Steklov arc at ``r2``).
    ``annular_sector``: ``r1 < r < r2, 0 < theta < alpha``.
    ``disk``: ``r < R``.
    ``exterior_of``: disk of radius ``R_pml_outer`` around an ``inner``
    sector or disk ``D``, with rings at ``R_farfield`` and ``R_pml_inner``.
    """

    kind: DomainKind
    alpha: float = math.pi
    r1: float = 0.0
    r2: float = 1.0
    R: float = 1.0
    inner: "DomainSpec | None" = None
    R_farfield: float = 2.0
    R_pml_inner: float = 3.0
    R_pml_outer: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        self.validate()

    @classmethod
    def sector(cls, alpha, r2=1.0):
        return cls(DomainKind.SECTOR, alpha=alpha, r2=r2)

    @classmethod
    def annular_sector(cls, alpha, r1, r2):
        return cls(DomainKind.ANNULAR_SECTOR, alpha=alpha, r1=r1, r2=r2)

    @classmethod
    def disk(cls, R=1.0):
        return cls(DomainKind.DISK, R=R)

    @classmethod
    def exterior_of(cls, inner, R_farfield=2.0, R_pml_inner=3.0, R_pml_outer=4.0):
        return cls(DomainKind.EXTERIOR, inner=inner, R_farfield=R_farfield,
                   R_pml_inner=R_pml_inner, R_pml_outer=R_pml_outer)

    def validate(self):
        kind = self.kind
        if kind in (DomainKind.SECTOR, DomainKind.ANNULAR_SECTOR):
            if not 0 < self.alpha < 2 * math.pi:
                raise ParameterError("sector angle must lie in (0, 2 pi)")
            if self.r2 <= 0:
                raise ParameterError("r2 must be positive")
            if kind is DomainKind.ANNULAR_SECTOR and not 0 < self.r1 < self.r2:
                raise ParameterError("annular sector needs 0 < r1 < r2")
        elif kind is DomainKind.DISK:
            if self.R <= 0:
                raise ParameterError("disk radius must be positive")
        else:
            if self.inner is None or self.inner.kind not in (DomainKind.SECTOR, DomainKind.DISK):
                raise ParameterError("exterior domains need an inner sector or disk")
            if not self.inner_radius < self.R_farfield < self.R_pml_inner < self.R_pml_outer:
                raise ParameterError(
                    "need radius(D) < R_farfield < R_pml_inner < R_pml_outer")

    @property
    def inner_radius(self):
        inner = self.inner
        return inner.r2 if inner.kind is DomainKind.SECTOR else inner.R

    def to_dict(self):
        out = {"kind": self.kind.value}
        if self.kind is DomainKind.SECTOR:
            out.update(alpha=self.alpha, r2=self.r2)
        elif self.kind is DomainKind.ANNULAR_SECTOR:
            out.update(alpha=self.alpha, r1=self.r1, r2=self.r2)
        elif self.kind is DomainKind.DISK:
            out.update(R=self.R)
        else:
            out.update(inner=self.inner.to_dict(), R_farfield=self.R_farfield,
                       R_pml_inner=self.R_pml_inner, R_pml_outer=self.R_pml_outer)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kind = DomainKind(data.pop("kind"))
        if kind is DomainKind.EXTERIOR:
            data["inner"] = cls.from_dict(data["inner"])
        return cls(kind, **data)


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Triangulation with P2 edge nodes and tagged boundary/interface edges.

    Attributes
    ----------
    vertices : (nv, 2) float
    triangles : (nt, 3) int, counter-clockwise
    edges : (ne, 2) int, sorted vertex pairs; P2 node ``nv + e`` sits on edge ``e``
    midpoints : (ne, 2) float, P2 node coordinates
    edge_radius : (ne,) float, radius of the origin-centred arc an edge lies on, 0 if straight
    boundary_edges : (nb, 2) int, sorted vertex pairs
    boundary_tags : (nb,) str, one of ``TAGS``
    regions : (nt,) int, ``REGION_D``, ``REGION_EXTERIOR`` or ``REGION_PML``
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    midpoints: np.ndarray
    edge_radius: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    regions: np.ndarray
    h_max: float
    spec: "DomainSpec | None" = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_dofs(self):
        return len(self.vertices) + len(self.edges)

    def edge_index(self):
        """Dict mapping sorted vertex pairs to edge numbers."""
        if "edge_index" not in self._cache:
            self._cache["edge_index"] = {
                (int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}
        return self._cache["edge_index"]

    def triangle_edges(self):
        """(nt, 3) edge numbers; local edge ``l`` is opposite local vertex ``l``."""
        if "tri_edges" not in self._cache:
            idx = self.edge_index()
            t = self.triangles
            out = np.empty_like(t)
            for l, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
                lo = np.minimum(t[:, a], t[:, b])
                hi = np.maximum(t[:, a], t[:, b])
                out[:, l] = [idx[(int(p), int(q))] for p, q in zip(lo, hi)]
            self._cache["tri_edges"] = out
        return self._cache["tri_edges"]

    def edge_triangles(self):
        """(ne, 2) adjacent triangles per edge (``-1`` when missing)."""
        if "edge_tris" not in self._cache:
            te = self.triangle_edges()
            out = -np.ones((len(self.edges), 2), dtype=int)
            for tri, row in enumerate(te):
                for e in row:
                    slot = 0 if out[e, 0] < 0 else 1
                    out[e, slot] = tri
            self._cache["edge_tris"] = out
        return self._cache["edge_tris"]

    def tagged_edges(self, tag):
        """Edge numbers carrying boundary tag ``tag``."""
        if tag not in TAGS:
            raise ParameterError(f"unknown tag {tag!r}")
        idx = self.edge_index()
        sel = self.boundary_edges[self.boundary_tags == tag]
        return np.array([idx[(int(a), int(b))] for a, b in sel], dtype=int)

    def triangle_areas(self):
        """Signed areas of the straight-sided triangles."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self):
        """Area including the curved-edge corrections (Simpson on each chord)."""
        total = float(np.sum(self.triangle_areas()))
        if not np.any(self.edge_radius > 0):
            return total
        # boundary segments of the whole mesh: edges with a single triangle
        et = self.edge_triangles()
        for e in np.nonzero((self.edge_radius > 0) & (et[:, 1] < 0))[0]:
            a, b = self.edges[e]
            pa, pb, pm = self.vertices[a], self.vertices[b], self.midpoints[e]
            # area between chord and quadratic arc = (2/3) * chord * sagitta
            chord = pb - pa
            length = np.hypot(*chord)
            sag = abs(_cross2(chord, pm - 0.5 * (pa + pb))) / length
            # sign: bulge away from the owning triangle adds area
            tri = self.triangles[et[e, 0]]
            centroid = self.vertices[tri].mean(axis=0)
            outward = np.sign(_cross2(chord, pm - pa)) == -np.sign(_cross2(chord, centroid - pa))
            total += (2.0 / 3.0) * length * sag * (1 if outward else -1)
        return total

    def tagged_length(self, tag, curved=True):
        """Length of edges with ``tag``; along quadratic arcs when ``curved``."""
        edges = self.tagged_edges(tag)
        if not curved:
            a, b = self.edges[edges].T
            return float(np.sum(np.hypot(*(self.vertices[b] - self.vertices[a]).T)))
        t, w = np.polynomial.legendre.leggauss(5)
        t = 0.5 * (t + 1.0)
        w = 0.5 * w
        a, b = self.edges[edges].T
        pa, pb, pm = self.vertices[a], self.vertices[b], self.midpoints[edges]
        # derivative of the quadratic edge map at each Gauss point
        d = ((4 * t - 3)[None, :, None] * pa[:, None] + (4 * t - 1)[None, :, None] * pb[:, None]
             + (4 - 8 * t)[None, :, None] * pm[:, None])
        return float(np.sum(np.hypot(d[..., 0], d[..., 1]) * w))


# ---------------------------------------------------------------------------
# generation


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _subdivide(breaks, h):
    """Radii covering each interval of ``breaks`` with spacing ``<= h``."""
    radii = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((hi - lo) / h - 1e-9))
        radii.extend(lo + (hi - lo) * np.arange(1, n + 1) / n)
    return np.array(radii)


class _Builder:
    """Accumulates points, triangles and arc-edge radii of glued ring blocks."""

    def __init__(self):
        self.points = []
        self.triangles = []
        self.arc_edges = {}

    def add_point(self, x, y):
        self.points.append((x, y))
        return len(self.points) - 1

    def ring_block(self, radii, th0, th1, h, min_segments):
        span = th1 - th0
        periodic = abs(span - 2 * math.pi) < 1e-12
        rings = []
        for r in radii:
            if r == 0.0:
                rings.append((np.array([self.add_point(0.0, 0.0)]), np.array([0.0]), 0.0))
                continue
            m = max(min_segments, math.ceil(r * span / h - 1e-9))
            npts = m if periodic else m + 1
            ang = th0 + span * np.arange(npts) / m
            ids = np.array([self.add_point(r * math.cos(t), r * math.sin(t)) for t in ang])
            for i in range(npts - 1 if not periodic else npts):
                j = (i + 1) % npts
                self.arc_edges[(ids[i], ids[j])] = r
            rings.append((ids, ang, r))
        for inner, outer in zip(rings[:-1], rings[1:]):
            self._join(inner, outer, periodic)

    def _join(self, inner, outer, periodic):
        ia, aa, ra = inner
        ib, ab, rb = outer
        if periodic:
            ia, aa = np.append(ia, ia[0]), np.append(aa, aa[0] + 2 * math.pi)
            ib, ab = np.append(ib, ib[0]), np.append(ab, ab[0] + 2 * math.pi)
        if len(ia) == 1:
            for j in range(len(ib) - 1):
                self.triangles.append((ia[0], ib[j], ib[j + 1]))
            return
        i = j = 0
        while i < len(ia) - 1 or j < len(ib) - 1:
            if i == len(ia) - 1:
                advance_outer = True
            elif j == len(ib) - 1:
                advance_outer = False
            else:
                # shorter diagonal: compare the two candidate new edges
                pa_next = np.array([ra * math.cos(aa[i + 1]), ra * math.sin(aa[i + 1])])
                pb_next = np.array([rb * math.cos(ab[j + 1]), rb * math.sin(ab[j + 1])])
                pa = np.array([ra * math.cos(aa[i]), ra * math.sin(aa[i])])
                pb = np.array([rb * math.cos(ab[j]), rb * math.sin(ab[j])])
                advance_outer = np.hypot(*(pb_next - pa)) < np.hypot(*(pa_next - pb))
            if advance_outer:
                self.triangles.append((ia[i], ib[j], ib[j + 1]))
                j += 1
            else:
                self.triangles.append((ia[i], ib[j], ia[i + 1]))
                i += 1


def _finalize(builder, h_target, spec, classify_edges, classify_regions):
    pts = np.array(builder.points)
    tris = np.array(builder.triangles, dtype=int)
    # merge coincident points from glued blocks
    tree = cKDTree(pts)
    scale = max(1.0, float(np.max(np.abs(pts))))
    pairs = tree.query_pairs(1e-10 * scale, output_type="ndarray")
    parent = np.arange(len(pts))
    for a, b in sorted(map(tuple, pairs)):
        ra, rb = parent[a], parent[b]
        while parent[ra] != ra:
            ra = parent[ra]
        while parent[rb] != rb:
            rb = parent[rb]
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    for i in range(len(parent)):
        root = i
        while parent[root] != root:
            root = parent[root]
        parent[i] = root
    keep = np.unique(parent)
    renum = -np.ones(len(pts), dtype=int)
    renum[keep] = np.arange(len(keep))
    mapping = renum[parent]
    vertices = pts[keep]
    tris = mapping[tris]
    # drop degenerate triangles (possible only at merged points)
    tris = tris[(tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])]
    p = vertices[tris]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                    - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = signed < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    if len(tris) < 8:
        raise ResolutionError(f"h = {h_target:g} resolves the domain with only {len(tris)} triangles")

    arc = {}
    for (a, b), r in builder.arc_edges.items():
        a, b = mapping[a], mapping[b]
        arc[(min(a, b), max(a, b))] = r

    edge_list = np.sort(np.concatenate([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]]), axis=1)
    edges, counts = np.unique(edge_list, axis=0, return_counts=True)
    radius = np.array([arc.get((int(a), int(b)), 0.0) for a, b in edges])
    midpoints = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    curved = radius > 0
    mnorm = np.hypot(midpoints[curved, 0], midpoints[curved, 1])
    midpoints[curved] *= (radius[curved] / mnorm)[:, None]

    centroids = vertices[tris].mean(axis=1)
    regions = classify_regions(centroids)
    b_edges, b_tags = classify_edges(vertices, edges, counts, radius, tris, regions)
    order = np.lexsort((b_edges[:, 1], b_edges[:, 0])) if len(b_edges) else np.array([], int)
    lengths = np.hypot(*(vertices[edges[:, 1]] - vertices[edges[:, 0]]).T)
    return Mesh2D(vertices, tris, edges, midpoints, radius,
                  b_edges[order].reshape(-1, 2), np.asarray(b_tags, dtype=object)[order],
                  regions, float(lengths.max()), spec)


def _on_ray(points, theta, tol):
    """Mask of points lying on the ray at angle ``theta`` from the origin."""
    d = np.array([math.cos(theta), math.sin(theta)])
    along = points @ d
    across = points[:, 0] * d[1] - points[:, 1] * d[0]
    return (np.abs(across) < tol) & (along > -tol)


def generate_mesh(spec, h_target):
    """Mesh ``spec`` with target edge length ``h_target``.

    Tags: for sectors and annular sectors the outer arc ``r = r2`` is
    ``GAMMA`` and the remaining boundary ``NEUMANN_REST``; disks carry
    ``GAMMA`` on the whole circle. Exterior domains tag the screen arc
    (interface), the rest of ``boundary(D)``, the far-field circle and the
    outer PML circle.
    """
    if not isinstance(spec, DomainSpec):
        raise ParameterError("spec must be a DomainSpec")
    if not (h_target > 0 and math.isfinite(h_target)):
        raise ParameterError("h_target must be positive")
    h = float(h_target)
    b = _Builder()
    kind = spec.kind
    tol = 1e-9

    if kind is DomainKind.SECTOR:
        radii = _subdivide([0.0, spec.r2], h)
        b.ring_block(radii, 0.0, spec.alpha, h, max(2, math.ceil(spec.alpha / (math.pi / 3))))

        def regions(c):
            return np.full(len(c), REGION_D)

        def edges_fn(v, e, counts, radius, tris, reg):
            bnd = e[counts == 1]
            rad = radius[counts == 1]
            tags = np.where(np.abs(rad - spec.r2) < tol, "GAMMA", "NEUMANN_REST")
            return bnd, tags

    elif kind is DomainKind.ANNULAR_SECTOR:
        radii = _subdivide([spec.r1, spec.r2], h)
        b.ring_block(radii, 0.0, spec.alpha, h, max(2, math.ceil(spec.alpha / (math.pi / 3))))

        def regions(c):
            return np.full(len(c), REGION_D)

        def edges_fn(v, e, counts, radius, tris, reg):
            bnd = e[counts == 1]
            rad = radius[counts == 1]
            tags = np.where(np.abs(rad - spec.r2) < tol, "GAMMA", "NEUMANN_REST")
            return bnd, tags

    elif kind is DomainKind.DISK:
        radii = _subdivide([0.0, spec.R], h)
        b.ring_block(radii, 0.0, 2 * math.pi, h, 6)

        def regions(c):
            return np.full(len(c), REGION_D)

        def edges_fn(v, e, counts, radius, tris, reg):
            return e[counts == 1], np.full(int(np.sum(counts == 1)), "GAMMA", dtype=object)

    else:
        inner = spec.inner
        rD = spec.inner_radius
        radii = _subdivide([0.0, rD, spec.R_farfield, spec.R_pml_inner, spec.R_pml_outer], h)
        if inner.kind is DomainKind.DISK:
            b.ring_block(radii, 0.0, 2 * math.pi, h, 6)
            alpha = 2 * math.pi
        else:
            alpha = inner.alpha
            b.ring_block(radii, 0.0, alpha, h, max(2, math.ceil(alpha / (math.pi / 3))))
            rest = 2 * math.pi - alpha
            b.ring_block(radii, alpha, 2 * math.pi, h, max(2, math.ceil(rest / (math.pi / 3))))

        def regions(c):
            r = np.hypot(c[:, 0], c[:, 1])
            th = np.mod(np.arctan2(c[:, 1], c[:, 0]), 2 * math.pi)
            out = np.full(len(c), REGION_EXTERIOR)
            out[(r < rD) & (th < alpha)] = REGION_D
            out[r > spec.R_pml_inner] = REGION_PML
            return out

        def edges_fn(v, e, counts, radius, tris, reg):
            out_e, out_t = [], []
            r_mid = np.hypot(*(0.5 * (v[e[:, 0]] + v[e[:, 1]])).T)
            pa, pb = v[e[:, 0]], v[e[:, 1]]
            for i in range(len(e)):
                rad = radius[i]
                if rad > 0 and abs(rad - rD) < tol:
                    th = math.atan2(*(0.5 * (pa[i] + pb[i]))[::-1]) % (2 * math.pi)
                    if th < alpha:
                        out_e.append(e[i]); out_t.append("GAMMA")
                elif rad > 0 and abs(rad - spec.R_farfield) < tol:
                    out_e.append(e[i]); out_t.append("FARFIELD_CIRCLE")
                elif rad > 0 and abs(rad - spec.R_pml_outer) < tol:
                    out_e.append(e[i]); out_t.append("PML_OUTER")
                elif rad == 0 and alpha < 2 * math.pi and r_mid[i] < rD:
                    for theta in (0.0, alpha):
                        if (_on_ray(pa[i:i + 1], theta, 1e-9)[0]
                                and _on_ray(pb[i:i + 1], theta, 1e-9)[0]):
                            out_e.append(e[i]); out_t.append("NEUMANN_REST")
                            break
            return np.array(out_e, dtype=int).reshape(-1, 2), out_t

    return _finalize(b, h, spec, edges_fn, regions)


def refine_mesh(mesh):
    """Split every triangle into four; arc midpoints stay on their circles."""
    nv = mesh.n_vertices
    te = mesh.triangle_edges()
    vertices = np.vstack([mesh.vertices, mesh.midpoints])
    t = mesh.triangles
    m = nv + te  # m[:, l] = midpoint opposite local vertex l
    tris = np.concatenate([
        np.column_stack([t[:, 0], m[:, 2], m[:, 1]]),
        np.column_stack([m[:, 2], t[:, 1], m[:, 0]]),
        np.column_stack([m[:, 1], m[:, 0], t[:, 2]]),
        np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
    ])
    regions = np.tile(mesh.regions, 4)
    # child edges of a parent arc inherit its radius
    arc = {}
    for e, (a, b) in enumerate(mesh.edges):
        r = mesh.edge_radius[e]
        if r > 0:
            mid = nv + e
            arc[(min(a, mid), max(a, mid))] = r
            arc[(min(b, mid), max(b, mid))] = r
    edge_list = np.sort(np.concatenate([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]]), axis=1)
    edges = np.unique(edge_list, axis=0)
    radius = np.array([arc.get((int(a), int(b)), 0.0) for a, b in edges])
    midpoints = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    curved = radius > 0
    mnorm = np.hypot(midpoints[curved, 0], midpoints[curved, 1])
    midpoints[curved] *= (radius[curved] / mnorm)[:, None]
    b_edges, b_tags = [], []
    edge_idx = mesh.edge_index()
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        mid = nv + edge_idx[(int(a), int(b))]
        b_edges += [(min(a, mid), max(a, mid)), (min(b, mid), max(b, mid))]
        b_tags += [tag, tag]
    b_edges = np.array(b_edges, dtype=int).reshape(-1, 2)
    order = np.lexsort((b_edges[:, 1], b_edges[:, 0])) if len(b_edges) else np.array([], int)
    lengths = np.hypot(*(vertices[edges[:, 1]] - vertices[edges[:, 0]]).T)
    return Mesh2D(vertices, tris, edges, midpoints, radius, b_edges[order],
                  np.asarray(b_tags, dtype=object)[order], regions, float(lengths.max()), mesh.spec)


# ---------------------------------------------------------------------------
# text format


def write_mesh(mesh, path):
    """Write ``mesh`` in the ``meshv1`` text format (0-based indices)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{FORMAT_TOKEN}\n")
        fh.write(f"hmax {float(mesh.h_max)!r}\n")
        spec = json.dumps(mesh.spec.to_dict()) if mesh.spec is not None else "null"
        fh.write(f"domain {spec}\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"triangles {mesh.n_triangles}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        fh.write(f"p2 {len(mesh.edges)}\n")
        for (i, j), (x, y), r in zip(mesh.edges, mesh.midpoints, mesh.edge_radius):
            fh.write(f"{i} {j} {float(x)!r} {float(y)!r} {float(r)!r}\n")
        fh.write(f"bedges {len(mesh.boundary_edges)}\n")
        for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            fh.write(f"{i} {j} {tag}\n")
        fh.write(f"regions {mesh.n_triangles}\n")
        for r in mesh.regions:
            fh.write(f"{r}\n")


class _Lines:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what):
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        if self.pos >= len(self.lines):
            raise ParseError(f"unexpected end of file while reading {what}", line=self.pos + 1)
        self.pos += 1
        return self.lines[self.pos - 1].split()

    @property
    def lineno(self):
        return self.pos

    def at_end(self):
        return all(not line.strip() for line in self.lines[self.pos:])


def _block(lines, name):
    head = lines.next(f"{name} header")
    if len(head) != 2 or head[0] != name:
        raise ParseError(f"expected '{name} <count>'", line=lines.lineno)
    try:
        return int(head[1])
    except ValueError:
        raise ParseError(f"bad count in {name} header", line=lines.lineno) from None


def _rows(lines, name, count, width, conv):
    out = []
    for _ in range(count):
        parts = lines.next(name)
        if len(parts) != width:
            raise ParseError(f"{name} row needs {width} fields", line=lines.lineno)
        try:
            out.append([c(p) for c, p in zip(conv, parts)])
        except ValueError:
            raise ParseError(f"malformed {name} row", line=lines.lineno) from None
    return out


def read_mesh(path):
    """Read a mesh written by :func:`write_mesh`."""
    with open(path, encoding="ascii") as fh:
        lines = _Lines(fh.read())
    head = lines.next("format token")
    if head != [FORMAT_TOKEN]:
        raise ParseError(f"expected format token {FORMAT_TOKEN!r}", line=lines.lineno)
    parts = lines.next("hmax")
    if len(parts) != 2 or parts[0] != "hmax":
        raise ParseError("expected 'hmax <value>'", line=lines.lineno)
    h_max = float(parts[1])
    raw = lines.lines[lines.pos].strip() if lines.pos < len(lines.lines) else ""
    spec = None
    if raw.startswith("domain"):
        lines.pos += 1
        payload = raw[len("domain"):].strip()
        try:
            data = json.loads(payload)
        except json.JSONDecodeError:
            raise ParseError("malformed domain record", line=lines.lineno) from None
        spec = DomainSpec.from_dict(data) if data is not None else None
    nv = _block(lines, "vertices")
    vertices = np.array(_rows(lines, "vertices", nv, 2, (float, float)), dtype=float).reshape(-1, 2)
    nt = _block(lines, "triangles")
    tris = np.array(_rows(lines, "triangles", nt, 3, (int, int, int)), dtype=int).reshape(-1, 3)
    ne = _block(lines, "p2")
    p2 = _rows(lines, "p2", ne, 5, (int, int, float, float, float))
    nb = _block(lines, "bedges")
    start = lines.lineno
    bed = _rows(lines, "bedges", nb, 3, (int, int, str))
    for i, row in enumerate(bed):
        if row[2] not in TAGS:
            raise ParseError(f"unknown tag {row[2]!r}", line=start + i + 1)
    regions = np.zeros(nt, dtype=int)
    if not lines.at_end():
        nr = _block(lines, "regions")
        if nr != nt:
            raise ParseError("regions block must list every triangle", line=lines.lineno)
        regions = np.array([r[0] for r in _rows(lines, "regions", nr, 1, (int,))], dtype=int)
    for arr, bound, what in ((tris, nv, "triangle"),):
        if arr.size and (arr.min() < 0 or arr.max() >= bound):
            raise ParseError(f"{what} vertex index out of range")
    edges = np.array([r[:2] for r in p2], dtype=int).reshape(-1, 2)
    midpoints = np.array([r[2:4] for r in p2], dtype=float).reshape(-1, 2)
    radius = np.array([r[4] for r in p2], dtype=float)
    b_edges = np.array([r[:2] for r in bed], dtype=int).reshape(-1, 2)
    b_tags = np.array([r[2] for r in bed], dtype=object)
    return Mesh2D(vertices, tris, edges, midpoints, radius, b_edges, b_tags, regions, h_max, spec)


def meshes_equal(a, b):
    """Exact equality of geometry, connectivity and tags."""
    return (np.array_equal(a.vertices, b.vertices)
            and np.array_equal(a.triangles, b.triangles)
            and np.array_equal(a.edges, b.edges)
            and np.array_equal(a.midpoints, b.midpoints)
            and np.array_equal(a.edge_radius, b.edge_radius)
            and np.array_equal(a.boundary_edges, b.boundary_edges)
            and list(a.boundary_tags) == list(b.boundary_tags)
            and np.array_equal(a.regions, b.regions))
