"""Geometric kernel: ray-facet intersection, line-mesh counting, flat slicing,
flat hit testing, and point-mesh distance.

Heavy per-sample queries (line counting, membership, distance) run in numba
kernels over a median-split BVH of facet boxes; meshes below
``BRUTE_THRESHOLD`` facets fall back to a linear scan.  Slicing is vectorized
numpy over the cached ridge table.

Degenerate configurations (hits near a simplex boundary, lines parallel to a
facet span, flats grazing a vertex) are data, not errors: line queries jitter
and retry, slice queries raise :class:`DegenerateSlice` so the caller can
resample.  Both are measure-zero for the absolutely continuous sampling
measures used by the estimators.
"""

import math
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import DegenerateSlice, PersistentDegeneracy
from .mesh import as_vector, bounding_ball, mesh_scale, normalized

B_TOL = 1e-9        # barycentric boundary tolerance (scale-free)
PAR_TOL = 1e-12     # |dir . normal| threshold for "parallel to facet span"
SLICE_TOL = 1e-9    # relative tolerance for vertex-on-flat degeneracy
MAX_RETRIES = 8
JITTER_REL = 1e-7   # anchor jitter, relative to the bounding radius
LEAF_SIZE = 8
BRUTE_THRESHOLD = 64


@dataclass
class MeshAccel:
    """Kernel-ready arrays for one immutable mesh."""

    flo: np.ndarray
    fhi: np.ndarray
    v0: np.ndarray
    nrm: np.ndarray
    pinv: np.ndarray
    pts: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    perm: np.ndarray
    center: np.ndarray
    radius: float
    dist_tol: float
    use_bvh: bool


_ACCEL = weakref.WeakKeyDictionary()


def _build_bvh(lo_f, hi_f, pad, leaf_size=LEAF_SIZE):
    F = lo_f.shape[0]
    centroids = 0.5 * (lo_f + hi_f)
    perm = np.arange(F, dtype=np.int64)
    nodes_lo, nodes_hi = [], []
    left, right, start, count = [], [], [], []

    def new_node():
        nodes_lo.append(None)
        nodes_hi.append(None)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(left) - 1

    stack = [(new_node(), 0, F)]
    while stack:
        nid, b, e = stack.pop()
        sel = perm[b:e]
        nodes_lo[nid] = lo_f[sel].min(axis=0) - pad
        nodes_hi[nid] = hi_f[sel].max(axis=0) + pad
        if e - b <= leaf_size:
            left[nid] = -1
            start[nid] = b
            count[nid] = e - b
            continue
        c = centroids[sel]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order = np.argsort(c[:, axis], kind="stable")
        perm[b:e] = sel[order]
        mid = (b + e) // 2
        lid = new_node()
        rid = new_node()
        left[nid] = lid
        right[nid] = rid
        stack.append((lid, b, mid))
        stack.append((rid, mid, e))
    return (
        np.array(nodes_lo),
        np.array(nodes_hi),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(start, dtype=np.int64),
        np.array(count, dtype=np.int64),
        perm,
    )


def accel(mesh):
    """Kernel arrays for the mesh, built once and cached by identity."""
    got = _ACCEL.get(mesh)
    if got is not None:
        return got
    pts = np.ascontiguousarray(mesh.facet_points())
    edges = pts[:, 1:, :] - pts[:, :1, :]
    gram = edges @ np.swapaxes(edges, 1, 2)
    pinv = np.ascontiguousarray(np.linalg.solve(gram, edges))
    center, radius = bounding_ball(mesh)
    scale = max(radius, 1e-30)
    lo_f = pts.min(axis=1)
    hi_f = pts.max(axis=1)
    bvh = _build_bvh(lo_f, hi_f, pad=1e-9 * scale)
    got = MeshAccel(
        flo=np.ascontiguousarray(lo_f),
        fhi=np.ascontiguousarray(hi_f),
        v0=np.ascontiguousarray(pts[:, 0, :]),
        nrm=np.ascontiguousarray(mesh.facet_normals),
        pinv=pinv,
        pts=pts,
        lo=bvh[0],
        hi=bvh[1],
        left=bvh[2],
        right=bvh[3],
        start=bvh[4],
        count=bvh[5],
        perm=bvh[6],
        center=center,
        radius=radius,
        dist_tol=1e-9 * scale,
        use_bvh=mesh.n_facets >= BRUTE_THRESHOLD,
    )
    _ACCEL[mesh] = got
    return got


# -- ray / line queries ---------------------------------------------------------


@dataclass(frozen=True)
class HitRecord:
    """One line-facet intersection; ``degenerate`` marks boundary or parallel
    configurations that a caller should resolve by jitter-and-retry."""

    facet_id: int
    t: float
    barycentric: np.ndarray
    degenerate: bool


def intersect_ray_facet(line, mesh, facet_id):
    """Intersect a full line with one facet; None on a clean miss."""
    n = mesh.dim
    pts = mesh.facet_points(facet_id)
    d = line.direction
    a = line.anchor
    nrm = mesh.facet_normals[facet_id]
    dn = float(d @ nrm)
    if abs(dn) <= PAR_TOL:
        off = float((pts[0] - a) @ nrm)
        if abs(off) <= accel(mesh).dist_tol:
            bary = np.full(n, np.nan)
            return HitRecord(int(facet_id), math.nan, bary, True)
        return None
    M = np.column_stack([pts[1:].T - pts[0][:, None], -d])
    sol = np.linalg.solve(M, a - pts[0])
    mu, t = sol[:-1], float(sol[-1])
    bary = np.concatenate([[1.0 - mu.sum()], mu])
    lam_min = float(bary.min())
    if lam_min > B_TOL:
        return HitRecord(int(facet_id), t, bary, False)
    if lam_min > -B_TOL:
        return HitRecord(int(facet_id), t, bary, True)
    return None


def _as_line_arrays(line):
    return (
        np.ascontiguousarray(line.direction[None, :]),
        np.ascontiguousarray(line.anchor[None, :]),
    )


def count_lines_batch(mesh, dirs, anchors, keys, enforce_parity=True, use_bvh=None):
    """Intersection counts for many lines; -1 marks persistent degeneracy."""
    acc = accel(mesh)
    out = np.empty(dirs.shape[0], dtype=np.int64)
    bvh = acc.use_bvh if use_bvh is None else bool(use_bvh)
    _kernels.count_lines_kernel(
        np.ascontiguousarray(dirs),
        np.ascontiguousarray(anchors),
        np.ascontiguousarray(keys, dtype=np.uint64),
        acc.v0, acc.nrm, acc.pinv, acc.lo, acc.hi, acc.left, acc.right,
        acc.start, acc.count, acc.perm,
        JITTER_REL * max(acc.radius, 1e-30),
        B_TOL, PAR_TOL, acc.dist_tol,
        enforce_parity, MAX_RETRIES, bvh, out,
    )
    return out


def any_hit_lines_batch(mesh, dirs, anchors, keys, max_retries=MAX_RETRIES):
    """Line-meets-mesh indicators (1/0), -1 for persistent degeneracy."""
    acc = accel(mesh)
    out = np.empty(dirs.shape[0], dtype=np.int8)
    _kernels.any_hit_lines_kernel(
        np.ascontiguousarray(dirs),
        np.ascontiguousarray(anchors),
        np.ascontiguousarray(keys, dtype=np.uint64),
        acc.v0, acc.nrm, acc.pinv, acc.lo, acc.hi, acc.left, acc.right,
        acc.start, acc.count, acc.perm,
        JITTER_REL * max(acc.radius, 1e-30),
        B_TOL, PAR_TOL, acc.dist_tol, max_retries, out,
    )
    return out


def count_line_mesh(line, mesh, rs):
    """Number of non-degenerate facet hits of a full line with a closed mesh.

    Degenerate or odd-parity passes jitter the anchor (1e-7 x bounding
    radius, derived from `rs`) and retest, up to 8 retries.
    """
    dirs, anchors = _as_line_arrays(line)
    keys = rs.raw(1)
    res = count_lines_batch(mesh, dirs, anchors, keys)
    if res[0] < 0:
        raise PersistentDegeneracy("line stayed degenerate after retries")
    return int(res[0])


def points_within_batch(mesh, points, eps):
    """Boolean indicators dist(p, mesh) < eps."""
    acc = accel(mesh)
    out = np.empty(points.shape[0], dtype=np.bool_)
    _kernels.points_within_kernel(
        np.ascontiguousarray(points), float(eps), acc.pts, acc.v0, acc.nrm,
        acc.pinv, acc.flo, acc.fhi, acc.lo, acc.hi, acc.left, acc.right,
        acc.start, acc.count, acc.perm, out,
    )
    return out


def point_distances_batch(mesh, points, brute=False):
    """Exact point-mesh distances for many points."""
    acc = accel(mesh)
    points = np.ascontiguousarray(points)
    out = np.empty(points.shape[0], dtype=np.float64)
    if brute:
        _kernels.point_distances_brute(
            points, acc.pts, acc.v0, acc.nrm, acc.pinv, acc.flo, acc.fhi, out
        )
    else:
        _kernels.point_distances_kernel(
            points, acc.pts, acc.v0, acc.nrm, acc.pinv, acc.flo, acc.fhi,
            acc.lo, acc.hi, acc.left, acc.right, acc.start, acc.count,
            acc.perm, out,
        )
    return out


def point_mesh_distance(point, mesh):
    """Distance from a point to the mesh (min over exact facet distances)."""
    p = as_vector(point, mesh.dim)
    return float(point_distances_batch(mesh, p[None, :])[0])


# -- flat slicing -----------------------------------------------------------------


def _hull2_classify(points2, atol=1e-9):
    """Does the 2-D convex hull of each point set contain the origin?

    points2: (M, K, 2).  Returns (inside, degenerate) boolean arrays; a set
    is degenerate when the maximal angular gap is within `atol` of pi
    (origin on the hull boundary: tangential configuration).
    """
    ang = np.arctan2(points2[..., 1], points2[..., 0])
    ang = np.sort(ang, axis=-1)
    gaps = np.diff(ang, axis=-1)
    wrap = 2.0 * math.pi - (ang[..., -1] - ang[..., 0])
    maxgap = np.maximum(gaps.max(axis=-1), wrap)
    inside = maxgap < math.pi - atol
    degenerate = np.abs(maxgap - math.pi) <= atol
    return inside, degenerate


def _hull_contains_origin_lp(points):
    """Exact 0-in-convex-hull test in any codimension via an LP."""
    from scipy.optimize import linprog

    K, c = points.shape
    A_eq = np.vstack([points.T, np.ones((1, K))])
    b_eq = np.zeros(c + 1)
    b_eq[-1] = 1.0
    res = linprog(np.zeros(K), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def _flat_images(flat, mesh):
    """Vertex images under the functionals vanishing on the flat: (V, c)."""
    C = flat.complement_basis
    phi = (mesh.vertices - flat.offset) @ C
    tol = SLICE_TOL * (mesh_scale(mesh) + float(np.linalg.norm(flat.offset)))
    return phi, tol


def _crossing_mask(images, tol):
    """(crossing, degenerate) facet/ridge masks from stacked images (M, K, c)."""
    c = images.shape[-1]
    if c == 1:
        vals = images[..., 0]
        lo = vals.min(axis=-1)
        hi = vals.max(axis=-1)
        return (lo < 0.0) & (hi > 0.0), np.zeros(lo.shape, dtype=bool)
    if c == 2:
        return _hull2_classify(images)
    # general codimension: per-coordinate straddle prefilter, then an LP
    lo = images.min(axis=1)
    hi = images.max(axis=1)
    candidates = np.all((lo < 0.0) & (hi > 0.0), axis=1)
    out = np.zeros(images.shape[0], dtype=bool)
    for i in np.nonzero(candidates)[0]:
        out[i] = _hull_contains_origin_lp(images[i])
    return out, np.zeros(images.shape[0], dtype=bool)


def slice_components(flat, mesh):
    """Number of connected components of (flat intersect mesh).

    Facets meeting the flat transversally are nodes; two nodes join when
    their shared ridge itself meets the flat.  Flats passing within
    tolerance of a vertex or grazing a facet tangentially raise
    DegenerateSlice so the caller can resample.
    """
    if not 1 <= flat.dim_r <= mesh.dim - 1:
        raise ValueError("flat dimension must be between 1 and n-1")
    phi, tol = _flat_images(flat, mesh)
    if float(np.linalg.norm(phi, axis=1).min()) < tol:
        raise DegenerateSlice("flat passes within tolerance of a mesh vertex")
    facet_imgs = phi[mesh.facets]
    crossing, degen = _crossing_mask(facet_imgs, tol)
    if bool(degen.any()):
        raise DegenerateSlice("flat grazes a facet tangentially")
    ids = np.nonzero(crossing)[0]
    if ids.size == 0:
        return 0
    pairs, ridge_verts = mesh.ridge_facet_pairs
    both = crossing[pairs[:, 0]] & crossing[pairs[:, 1]]
    if both.any():
        ridge_imgs = phi[ridge_verts[both]]
        r_cross, r_degen = _crossing_mask(ridge_imgs, tol)
        if bool(r_degen.any()):
            raise DegenerateSlice("flat grazes a ridge tangentially")
    else:
        r_cross = np.zeros(0, dtype=bool)
    remap = np.full(mesh.n_facets, -1, dtype=np.int64)
    remap[ids] = np.arange(ids.size)
    edges = pairs[both][r_cross]
    graph = coo_matrix(
        (np.ones(edges.shape[0]), (remap[edges[:, 0]], remap[edges[:, 1]])),
        shape=(ids.size, ids.size),
    )
    n_comp, _ = connected_components(graph, directed=False)
    return int(n_comp)


def flat_hits_mesh(flat, mesh):
    """True iff the affine flat meets the hypersurface (early-exit variant).

    For flats of dimension >= 1 against a closed surface this also equals
    "the flat meets the solid body".  Point flats are not supported.
    """
    if flat.dim_r < 1:
        raise ValueError("point-flats are not supported")
    if flat.dim_r == 1:
        d = flat.basis[:, 0]
        a = flat.offset - float(flat.offset @ d) * d
        res = any_hit_lines_batch(
            mesh, d[None, :], a[None, :], np.zeros(1, dtype=np.uint64), max_retries=0
        )
        if res[0] < 0:
            raise DegenerateSlice("line grazes the mesh within tolerance")
        return bool(res[0])
    phi, tol = _flat_images(flat, mesh)
    if float(np.linalg.norm(phi, axis=1).min()) < tol:
        raise DegenerateSlice("flat passes within tolerance of a mesh vertex")
    crossing, degen = _crossing_mask(phi[mesh.facets], tol)
    if crossing.any():
        return True
    if degen.any():
        raise DegenerateSlice("flat grazes a facet tangentially")
    return False


# -- batched membership backends (used by the estimators) -------------------------


def interval_membership_batch(mesh, direction, ts, tol=None):
    """Membership of scalar offsets in the mesh shadow along one direction.

    The shadow of a closed surface on a line is a union of facet intervals;
    returns int8 (1 inside, 0 outside, -1 within tolerance of a boundary).
    Used for fiber flats of codimension 1.
    """
    w = normalized(direction)
    if tol is None:
        tol = SLICE_TOL * mesh_scale(mesh)
    s = mesh.vertices @ w
    fs = s[mesh.facets]
    lo = fs.min(axis=1)
    hi = fs.max(axis=1)
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi_cm = np.maximum.accumulate(hi[order])

    def inside(vals):
        idx = np.searchsorted(lo, vals, side="right") - 1
        ok = idx >= 0
        res = np.zeros(vals.shape[0], dtype=bool)
        res[ok] = vals[ok] < hi_cm[idx[ok]]
        return res

    ts = np.asarray(ts, dtype=np.float64)
    in_lo = inside(ts - tol)
    in_hi = inside(ts + tol)
    out = np.where(in_lo & in_hi, 1, np.where(~in_lo & ~in_hi, 0, -1)).astype(np.int8)
    return out


def hull2_membership_batch(mesh, comp_basis, qs, tol=None):
    """Membership for fiber flats of codimension 2 (origin-in-hull test).

    comp_basis: (n, 2) orthonormal complement of the fiber directions;
    qs: (N, 2) functional coordinates of each sampled fiber anchor.
    """
    if tol is None:
        tol = SLICE_TOL * mesh_scale(mesh)
    P = mesh.vertices @ comp_basis
    out = np.empty(qs.shape[0], dtype=np.int8)
    facets = mesh.facets
    for i in range(qs.shape[0]):
        imgs = P[facets] - qs[i][None, None, :]
        if float(np.linalg.norm(imgs.reshape(-1, 2), axis=1).min()) < tol:
            out[i] = -1
            continue
        inside, degen = _hull2_classify(imgs)
        if inside.any():
            out[i] = 1
        elif degen.any():
            out[i] = -1
        else:
            out[i] = 0
    return out
