"""Dimension-generic simplicial hypersurface meshes.

A mesh is a closed, consistently oriented (n-1)-dimensional simplicial
surface embedded in R^n, stored as a vertex table plus orientation-significant
facet index rows.  Meshes are immutable once constructed; derived quantities
(facet measures, normals, ridge incidence) are cached lazily.

Vectors are plain float64 numpy arrays of length n.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateFacet, NotClosed

# facet is degenerate when sqrt(gram) < this factor * (max edge length)^{n-1}
DEGENERACY_FACTOR = 1e-12


def as_vector(x, dim=None):
    """Validate and return a finite 1-D float64 vector."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def unit_vector(x, tol=1e-12):
    """Validate that x is a unit direction (|norm - 1| <= tol) and return it."""
    v = as_vector(x)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"not a unit vector: |v| = {norm!r}")
    return v


def normalized(x):
    """Return x scaled to unit length."""
    v = as_vector(x)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / norm


def orthonormal_complement(direction):
    """Deterministic orthonormal basis of direction^perp as an (n, n-1) matrix.

    Columns come from the Householder reflection mapping the direction onto a
    signed coordinate axis, so the construction is stable for every input.
    """
    d = normalized(direction)
    n = d.shape[0]
    k = int(np.argmax(np.abs(d)))
    s = 1.0 if d[k] >= 0 else -1.0
    w = d.copy()
    w[k] += s
    H = np.eye(n) - 2.0 * np.outer(w, w) / float(w @ w)
    cols = [j for j in range(n) if j != k]
    return H[:, cols]


@dataclass(frozen=True, eq=False)
class OrientedLine:
    """Oriented line: unit direction plus anchor in the direction's complement."""

    direction: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        d = unit_vector(self.direction)
        a = as_vector(self.anchor, d.shape[0])
        if abs(float(a @ d)) > 1e-10 * max(1.0, float(np.linalg.norm(a))):
            raise ValueError("anchor must lie in the direction's orthogonal complement")
        d.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "anchor", a)

    @property
    def dim(self):
        return self.direction.shape[0]

    def point_at(self, t):
        return self.anchor + t * self.direction

    @classmethod
    def through(cls, point, direction):
        """Line through a point: the anchor is the point projected off the direction."""
        d = normalized(direction)
        p = as_vector(point, d.shape[0])
        return cls(d, p - float(p @ d) * d)


@dataclass(frozen=True, eq=False)
class AffineFlat:
    """r-dimensional affine subspace: column-orthonormal basis plus offset.

    The offset is kept orthogonal to the span, which makes it the canonical
    foot point; flats through the origin have offset 0.
    """

    dim_r: int
    basis: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=np.float64)
        if B.ndim != 2:
            raise ValueError("basis must be an (n, r) matrix")
        n, r = B.shape
        if r != self.dim_r or not 1 <= r <= n:
            raise ValueError(f"basis shape {B.shape} inconsistent with dim_r={self.dim_r}")
        gram = B.T @ B
        if np.max(np.abs(gram - np.eye(r))) > 1e-10:
            raise ValueError("basis columns are not orthonormal within 1e-10")
        off = as_vector(self.offset, n)
        if np.max(np.abs(B.T @ off)) > 1e-8 * (1.0 + float(np.linalg.norm(off))):
            raise ValueError("offset must be orthogonal to the flat's span")
        B = B.copy()
        B.setflags(write=False)
        off = off.copy()
        off.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "offset", off)

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def through_origin(self):
        return bool(np.all(self.offset == 0.0))

    @classmethod
    def make(cls, basis, offset=None):
        """Canonicalize an arbitrary spanning set: orthonormalize + project offset."""
        B = np.asarray(basis, dtype=np.float64)
        Q, R = np.linalg.qr(B)
        if np.min(np.abs(np.diag(R))) < 1e-12:
            raise ValueError("basis is rank deficient")
        n, r = Q.shape
        if offset is None:
            off = np.zeros(n)
        else:
            off = as_vector(offset, n)
            off = off - Q @ (Q.T @ off)
        return cls(r, Q, off)

    @cached_property
    def complement_basis(self):
        """Orthonormal basis of the orthogonal complement: (n, n-r)."""
        n, r = self.basis.shape
        if r == n:
            return np.zeros((n, 0))
        q, _ = np.linalg.qr(self.basis, mode="complete")
        comp = q[:, r:].copy()
        # fix signs deterministically: first non-tiny entry of each column >= 0
        for j in range(comp.shape[1]):
            col = comp[:, j]
            idx = np.argmax(np.abs(col) > 1e-12)
            if col[idx] < 0:
                comp[:, j] = -col
        return comp

    def fiber_through(self, point):
        """The orthogonal-complement flat passing through the given point."""
        comp = self.complement_basis
        p = as_vector(point, self.ambient_dim)
        off = p - comp @ (comp.T @ p)
        return AffineFlat(comp.shape[1], comp, off)


def _pair_inversions(rows):
    """(-1)**inversions for each row of a small integer array."""
    k = rows.shape[1]
    inv = np.zeros(rows.shape[0], dtype=np.int64)
    for a in range(k):
        for b in range(a + 1, k):
            inv += rows[:, a] > rows[:, b]
    return np.where(inv % 2 == 0, 1, -1)


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    """Closed oriented (n-1)-dimensional simplicial hypersurface in R^n.

    ``vertices`` is (V, n) float64, ``facets`` is (F, n) int64 with
    orientation-significant vertex order.  Structural sanity (shapes, index
    ranges, finiteness) is enforced here; closedness, orientation and
    degeneracy are checked by :func:`validate_mesh`.
    """

    dim: int
    vertices: np.ndarray
    facets: np.ndarray

    def __post_init__(self):
        n = int(self.dim)
        if n < 2:
            raise ValueError(f"ambient dimension must be >= 2, got {n}")
        verts = np.array(self.vertices, dtype=np.float64)
        facets = np.array(self.facets, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != n:
            raise ValueError(f"vertices must have shape (V, {n}), got {verts.shape}")
        if facets.ndim != 2 or facets.shape[1] != n:
            raise ValueError(f"facets must have shape (F, {n}), got {facets.shape}")
        if not np.all(np.isfinite(verts)):
            raise ValueError("vertices contain non-finite coordinates")
        if facets.size:
            if facets.min() < 0 or facets.max() >= verts.shape[0]:
                raise ValueError("facet index out of range")
            sorted_rows = np.sort(facets, axis=1)
            if np.any(sorted_rows[:, :-1] == sorted_rows[:, 1:]):
                raise ValueError("facet has repeated vertex indices")
        verts.setflags(write=False)
        facets.setflags(write=False)
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "facets", facets)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_facets(self):
        return self.facets.shape[0]

    def facet_points(self, facet_id=None):
        """Vertex coordinates of one facet (n, n) or of all facets (F, n, n)."""
        if facet_id is None:
            return self.vertices[self.facets]
        return self.vertices[self.facets[facet_id]]

    # -- cached geometric tables -------------------------------------------

    @cached_property
    def _edges(self):
        """Edge matrices from vertex 0: (F, n-1, n)."""
        pts = self.facet_points()
        return pts[:, 1:, :] - pts[:, :1, :]

    @cached_property
    def _raw_normals(self):
        """Generalized cross products; |row| = (n-1)! * facet measure."""
        n = self.dim
        edges = self._edges
        out = np.empty((self.n_facets, n))
        cols = np.arange(n)
        for i in range(n):
            sub = edges[:, :, cols != i]
            out[:, i] = (-1.0) ** i * np.linalg.det(sub)
        return out

    @cached_property
    def facet_measures_raw(self):
        """(n-1)-measures via Gram determinants; no degeneracy check."""
        edges = self._edges
        gram = edges @ np.swapaxes(edges, 1, 2)
        det = np.linalg.det(gram)
        return np.sqrt(np.maximum(det, 0.0)) / math.factorial(self.dim - 1)

    @cached_property
    def max_edge_lengths(self):
        pts = self.facet_points()
        diffs = pts[:, :, None, :] - pts[:, None, :, :]
        return np.sqrt((diffs**2).sum(-1)).max(axis=(1, 2))

    @cached_property
    def degenerate_facet_ids(self):
        scale = DEGENERACY_FACTOR * self.max_edge_lengths ** (self.dim - 1)
        return np.nonzero(self.facet_measures_raw <= scale)[0]

    @cached_property
    def facet_normals(self):
        """Outward unit normals for an outward-oriented mesh: (F, n)."""
        raw = self._raw_normals
        norms = np.linalg.norm(raw, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        return raw / safe[:, None]

    @cached_property
    def facet_centroids(self):
        return self.facet_points().mean(axis=1)

    @cached_property
    def _ridge_table(self):
        """Grouped ridge incidence: which facets share each (n-2)-face.

        Returns (ridge_vertices, counts, offsets, owner, sign) where ``owner``
        and ``sign`` are grouped by ridge in offset order; ``sign`` is the
        induced boundary orientation of the ridge within its owner facet.
        """
        n = self.dim
        fac = self.facets
        F = fac.shape[0]
        cols = np.arange(n)
        rows = []
        owners = []
        signs = []
        for i in range(n):
            ridge = fac[:, cols != i]
            parity = _pair_inversions(ridge)
            rows.append(np.sort(ridge, axis=1))
            owners.append(np.arange(F, dtype=np.int64))
            signs.append(parity * (-1) ** i)
        rows = np.concatenate(rows, axis=0)
        owners = np.concatenate(owners)
        signs = np.concatenate(signs)
        uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        counts = np.bincount(inverse, minlength=uniq.shape[0])
        order = np.argsort(inverse, kind="stable")
        offsets = np.concatenate(([0], np.cumsum(counts)))
        return uniq, counts, offsets, owners[order], signs[order]

    @cached_property
    def ridge_facet_pairs(self):
        """(R, 2) facet ids and (R, n-1) vertex rows for 2-incident ridges."""
        uniq, counts, offsets, owner, _ = self._ridge_table
        good = counts == 2
        idx = np.nonzero(good)[0]
        pairs = np.stack([owner[offsets[idx]], owner[offsets[idx] + 1]], axis=1)
        return pairs, uniq[idx]

    # -- immutable transforms ----------------------------------------------

    def translated(self, offset):
        return SimplicialMesh(self.dim, self.vertices + as_vector(offset, self.dim), self.facets)

    def transformed(self, matrix=None, offset=None):
        verts = self.vertices
        if matrix is not None:
            verts = verts @ np.asarray(matrix, dtype=np.float64).T
        if offset is not None:
            verts = verts + as_vector(offset, self.dim)
        return SimplicialMesh(self.dim, verts, self.facets)

    def flipped(self):
        """Orientation-reversed copy (first two facet columns swapped)."""
        fac = np.array(self.facets)
        fac[:, [0, 1]] = fac[:, [1, 0]]
        return SimplicialMesh(self.dim, self.vertices, fac)


def facet_measure(mesh, facet_id):
    """(n-1)-dimensional Lebesgue measure of one facet simplex."""
    m = float(mesh.facet_measures_raw[facet_id])
    scale = DEGENERACY_FACTOR * float(mesh.max_edge_lengths[facet_id]) ** (mesh.dim - 1)
    if m <= scale:
        raise DegenerateFacet(int(facet_id))
    return m


def facet_normal(mesh, facet_id):
    """Unit normal of one facet, signed by the stored vertex order."""
    if facet_id in mesh.degenerate_facet_ids:
        raise DegenerateFacet(int(facet_id))
    return mesh.facet_normals[facet_id]


def exact_surface_area(mesh):
    """Sum of facet measures."""
    if mesh.degenerate_facet_ids.size:
        raise DegenerateFacet(int(mesh.degenerate_facet_ids[0]))
    return float(mesh.facet_measures_raw.sum())


def require_closed(mesh):
    """Raise NotClosed unless every ridge is shared by exactly two facets."""
    _, counts, _, _, _ = mesh._ridge_table
    bad = np.nonzero(counts != 2)[0]
    if bad.size:
        raise NotClosed(f"{bad.size} ridges are not shared by exactly 2 facets")


def enclosed_volume(mesh):
    """Signed enclosed volume via the divergence theorem.

    Positive iff the mesh is outward-oriented; negates under orientation
    reversal.
    """
    require_closed(mesh)
    n = mesh.dim
    # centroid . unit_normal * measure == centroid . raw_normal / (n-1)!
    flux = np.einsum("fi,fi->f", mesh.facet_centroids, mesh._raw_normals)
    return float(flux.sum() / (n * math.factorial(n - 1)))


def bounding_ball(mesh):
    """Enclosing ball from the vertex centroid; radius within 2x of optimal."""
    if mesh.n_vertices == 0:
        raise ValueError("mesh has no vertices")
    center = mesh.vertices.mean(axis=0)
    radius = float(np.sqrt(((mesh.vertices - center) ** 2).sum(axis=1).max()))
    return center, radius


def mesh_scale(mesh):
    """Characteristic length used for relative tolerances."""
    _, radius = bounding_ball(mesh)
    return max(radius, 1e-300)


@dataclass(frozen=True)
class ValidationReport:
    """Findings from validate_mesh; empty lists mean the check passed."""

    n_vertices: int
    n_facets: int
    boundary_ridges: list
    orientation_conflicts: list
    degenerate_facets: list
    volume: float | None
    self_intersecting_pairs: list | None = None

    @property
    def is_closed(self):
        return not self.boundary_ridges

    @property
    def is_consistently_oriented(self):
        return not self.orientation_conflicts

    @property
    def is_outward(self):
        return self.volume is not None and self.volume > 0

    @property
    def ok(self):
        return (
            self.is_closed
            and self.is_consistently_oriented
            and not self.degenerate_facets
            and self.is_outward
        )

    def summary(self):
        if self.ok:
            return (
                f"OK: {self.n_vertices} vertices, {self.n_facets} facets, "
                f"closed, oriented, volume {self.volume:.6g}"
            )
        parts = []
        if self.boundary_ridges:
            parts.append(f"{len(self.boundary_ridges)} bad-incidence ridges")
        if self.orientation_conflicts:
            parts.append(f"{len(self.orientation_conflicts)} orientation conflicts")
        if self.degenerate_facets:
            parts.append(f"{len(self.degenerate_facets)} degenerate facets")
        if self.volume is not None and self.volume <= 0:
            parts.append(f"non-positive volume {self.volume:.6g}")
        if self.self_intersecting_pairs:
            parts.append(f"{len(self.self_intersecting_pairs)} intersecting facet pairs")
        return "INVALID: " + "; ".join(parts)


def validate_mesh(mesh, check_self_intersection=False):
    """Check closedness, orientation consistency, degeneracy, and volume sign.

    Findings are reported, not raised.  Self-intersection testing is
    optional because it is quadratic with an LP per candidate pair.
    """
    uniq, counts, offsets, _, signs = mesh._ridge_table
    boundary = [
        (tuple(int(v) for v in uniq[i]), int(counts[i]))
        for i in np.nonzero(counts != 2)[0]
    ]
    conflicts = []
    for i in np.nonzero(counts == 2)[0]:
        s = signs[offsets[i]] + signs[offsets[i] + 1]
        if s != 0:
            conflicts.append(tuple(int(v) for v in uniq[i]))
    degenerate = [int(i) for i in mesh.degenerate_facet_ids]
    volume = None
    if not boundary:
        try:
            volume = enclosed_volume(mesh)
        except NotClosed:  # pragma: no cover - boundary check above
            volume = None
    pairs = None
    if check_self_intersection:
        pairs = self_intersecting_pairs(mesh)
    return ValidationReport(
        mesh.n_vertices,
        mesh.n_facets,
        boundary,
        conflicts,
        degenerate,
        volume,
        pairs,
    )


def self_intersecting_pairs(mesh, max_report=32):
    """Vertex-disjoint facet pairs whose simplices intersect (LP feasibility).

    Diagnostic helper; facets sharing a vertex are skipped since closed
    meshes legitimately touch along shared faces.
    """
    from scipy.optimize import linprog

    pts = mesh.facet_points()
    lo = pts.min(axis=1)
    hi = pts.max(axis=1)
    tol = 1e-12 * mesh_scale(mesh)
    found = []
    F = mesh.n_facets
    vsets = [set(map(int, row)) for row in mesh.facets]
    for a in range(F):
        boxes = np.all((lo[a + 1 :] <= hi[a] + tol) & (hi[a + 1 :] >= lo[a] - tol), axis=1)
        for b in np.nonzero(boxes)[0] + a + 1:
            if vsets[a] & vsets[int(b)]:
                continue
            n = mesh.dim
            # feasibility: convex combos of the two vertex sets coincide
            A_eq = np.zeros((n + 2, 2 * n))
            A_eq[:n, :n] = pts[a].T
            A_eq[:n, n:] = -pts[b].T
            A_eq[n, :n] = 1.0
            A_eq[n + 1, n:] = 1.0
            b_eq = np.zeros(n + 2)
            b_eq[n] = 1.0
            b_eq[n + 1] = 1.0
            res = linprog(np.zeros(2 * n), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
            if res.status == 0:
                found.append((int(a), int(b)))
                if len(found) >= max_report:
                    return found
    return found
