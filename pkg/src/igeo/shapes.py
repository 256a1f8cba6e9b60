"""Deterministic generators for test hypersurfaces in dimensions 2, 3, 4.

Every generator returns an outward-oriented mesh that passes
:func:`igeo.mesh.validate_mesh`; generation fails loudly otherwise.
Generators are cached since meshes are immutable.
"""

import math
from functools import lru_cache
from itertools import permutations

import numpy as np

from .errors import UnsupportedDimension
from .mesh import SimplicialMesh, validate_mesh


def _checked(mesh):
    report = validate_mesh(mesh)
    if not report.ok:
        raise RuntimeError(f"generator produced an invalid mesh: {report.summary()}")
    return mesh


def _simplex_normal(points):
    """Cofactor normal of an (n-1)-simplex given its n vertex rows."""
    edges = points[1:] - points[0]
    n = points.shape[1]
    cols = np.arange(n)
    return np.array(
        [(-1.0) ** i * np.linalg.det(edges[:, cols != i]) for i in range(n)]
    )


def _orient_outward(points, ids, outward):
    """Return ids, with two swapped if the simplex normal opposes `outward`."""
    if float(_simplex_normal(points) @ outward) < 0.0:
        ids = list(ids)
        ids[-1], ids[-2] = ids[-2], ids[-1]
    return tuple(ids)


# -- subdivision tables ------------------------------------------------------

_TRI_CHILDREN = (
    (("v", 0), ("m", 0, 1), ("m", 0, 2)),
    (("m", 0, 1), ("v", 1), ("m", 1, 2)),
    (("m", 0, 2), ("m", 1, 2), ("v", 2)),
    (("m", 0, 1), ("m", 1, 2), ("m", 0, 2)),
)


def _bary(slot, k):
    b = np.zeros(k)
    if slot[0] == "v":
        b[slot[1]] = 1.0
    else:
        b[slot[1]] = b[slot[2]] = 0.5
    return b


def _orient_children(children, k):
    """Flip child simplices that are negatively oriented in the parent chart."""
    out = []
    for kid in children:
        chart = np.array([_bary(s, k)[1:] for s in kid])
        if np.linalg.det(chart[1:] - chart[0]) < 0:
            kid = kid[:-2] + (kid[-1], kid[-2])
        out.append(kid)
    return tuple(out)


def _tet_children():
    def m(i, j):
        return ("m", min(i, j), max(i, j))

    def v(i):
        return ("v", i)

    # 4 corner tets + 4 around the (m02, m13) octahedron diagonal
    kids = (
        (v(0), m(0, 1), m(0, 2), m(0, 3)),
        (m(0, 1), v(1), m(1, 2), m(1, 3)),
        (m(0, 2), m(1, 2), v(2), m(2, 3)),
        (m(0, 3), m(1, 3), m(2, 3), v(3)),
        (m(0, 2), m(1, 3), m(0, 1), m(0, 3)),
        (m(0, 2), m(1, 3), m(0, 3), m(2, 3)),
        (m(0, 2), m(1, 3), m(2, 3), m(1, 2)),
        (m(0, 2), m(1, 3), m(1, 2), m(0, 1)),
    )
    return _orient_children(kids, 4)


_TET_CHILDREN = _tet_children()
_TRI_CHILDREN = _orient_children(_TRI_CHILDREN, 3)


def _subdivide(verts, facets, children, radius=None):
    """One red-refinement pass with a shared edge-midpoint cache.

    When ``radius`` is given all vertices are projected back to the sphere of
    that radius after splitting.
    """
    verts = [np.asarray(v, dtype=np.float64) for v in verts]
    cache = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in cache:
            cache[key] = len(verts)
            verts.append(0.5 * (verts[a] + verts[b]))
        return cache[key]

    new_facets = []
    for fac in facets:
        for kid in children:
            ids = []
            for slot in kid:
                if slot[0] == "v":
                    ids.append(fac[slot[1]])
                else:
                    ids.append(midpoint(fac[slot[1]], fac[slot[2]]))
            new_facets.append(tuple(ids))
    arr = np.array(verts)
    if radius is not None:
        arr = arr * (radius / np.linalg.norm(arr, axis=1))[:, None]
    return arr, new_facets


# -- sphere -------------------------------------------------------------------


def _icosahedron():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = np.array(raw, dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    oriented = [
        _orient_outward(verts[list(f)], f, verts[list(f)].mean(axis=0))
        for f in faces
    ]
    return verts, oriented


def _cross_polytope_4d():
    verts = np.concatenate([np.eye(4), -np.eye(4)])
    facets = []
    for signs in np.ndindex(2, 2, 2, 2):
        ids = [axis + 4 * s for axis, s in enumerate(signs)]
        pts = verts[ids]
        facets.append(_orient_outward(pts, ids, pts.mean(axis=0)))
    return verts, facets


@lru_cache(maxsize=64)
def make_sphere(n, refinement=0, radius=1.0):
    """Sphere approximation: polygon (n=2), icosphere (n=3), 16-cell (n=4)."""
    if refinement < 0:
        raise ValueError("refinement must be >= 0")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n == 2:
        m = 4 * 2**refinement
        ang = 2.0 * math.pi * np.arange(m) / m
        verts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        facets = [(i, (i + 1) % m) for i in range(m)]
        return _checked(SimplicialMesh(2, verts, facets))
    if n == 3:
        verts, facets = _icosahedron()
        verts = verts * radius
        for _ in range(refinement):
            verts, facets = _subdivide(verts, facets, _TRI_CHILDREN, radius=radius)
        return _checked(SimplicialMesh(3, verts, facets))
    if n == 4:
        verts, facets = _cross_polytope_4d()
        verts = verts * radius
        for _ in range(refinement):
            verts, facets = _subdivide(verts, facets, _TET_CHILDREN, radius=radius)
        return _checked(SimplicialMesh(4, verts, facets))
    raise UnsupportedDimension(f"make_sphere supports n in {{2,3,4}}, got {n}")


# -- box ----------------------------------------------------------------------


@lru_cache(maxsize=64)
def make_box(n, half_extents):
    """Boundary of an axis-aligned box, Kuhn-triangulated per hyper-face."""
    h = np.asarray(half_extents, dtype=np.float64)
    if h.shape != (n,) or np.any(h <= 0):
        raise ValueError(f"need {n} positive half extents, got {half_extents!r}")
    vert_ids = {}
    verts = []

    def vid(coord):
        key = tuple(coord)
        if key not in vert_ids:
            vert_ids[key] = len(verts)
            verts.append(np.array(coord))
        return vert_ids[key]

    facets = []
    for axis in range(n):
        free = [i for i in range(n) if i != axis]
        for side in (-1.0, 1.0):
            outward = np.zeros(n)
            outward[axis] = side
            for perm in permutations(free):
                corner = -h.copy()
                corner[axis] = side * h[axis]
                ids = [vid(corner)]
                for ax in perm:
                    corner = corner.copy()
                    corner[ax] = h[ax]
                    ids.append(vid(corner))
                pts = np.array([verts[i] for i in ids])
                facets.append(_orient_outward(pts, ids, outward))
    return _checked(SimplicialMesh(n, np.array(verts), facets))


# -- star ---------------------------------------------------------------------


@lru_cache(maxsize=64)
def make_star(n, spikes, r_in, r_out, refinement=0):
    """Nonconvex radial graph with `spikes` lobes between r_in and r_out."""
    if not 0 < r_in <= r_out:
        raise ValueError("need 0 < r_in <= r_out")
    if spikes < 3 and r_in != r_out:
        raise ValueError("need at least 3 spikes")
    if n == 2:
        m = 2 * spikes * 2**refinement
        ang = 2.0 * math.pi * np.arange(m) / m
        rho = r_in + (r_out - r_in) * 0.5 * (1.0 + np.cos(spikes * ang))
        verts = np.stack([rho * np.cos(ang), rho * np.sin(ang)], axis=1)
        facets = [(i, (i + 1) % m) for i in range(m)]
        return _checked(SimplicialMesh(2, verts, facets))
    if n == 3:
        base = make_sphere(3, refinement, 1.0)
        u = base.vertices
        theta = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
        phi = np.arctan2(u[:, 1], u[:, 0])
        # azimuthal lobes, damped to r_in at the poles so rho stays continuous
        rho = r_in + (r_out - r_in) * 0.5 * (1.0 + np.cos(spikes * phi)) * np.sin(theta) ** 2
        return _checked(SimplicialMesh(3, u * rho[:, None], base.facets))
    raise UnsupportedDimension(f"make_star supports n in {{2,3}}, got {n}")


# -- Reuleaux triangle ----------------------------------------------------------


@lru_cache(maxsize=64)
def make_reuleaux(width, refinement=0):
    """Discretized Reuleaux triangle of constant width (2D)."""
    if width <= 0:
        raise ValueError("width must be positive")
    w = float(width)
    corners = np.array(
        [[0.0, 0.0], [w, 0.0], [0.5 * w, 0.5 * math.sqrt(3.0) * w]]
    )
    centroid = corners.mean(axis=0)
    corners -= centroid
    segs = 2**refinement
    verts = []
    # arc opposite corner k: centered at corner k, sweeping between the others
    for k in range(3):
        center = corners[k]
        start = corners[(k + 1) % 3]
        a0 = math.atan2(*(start - center)[::-1])
        for s in range(segs):
            a = a0 + (math.pi / 3.0) * s / segs
            verts.append(center + w * np.array([math.cos(a), math.sin(a)]))
    verts = np.array(verts)
    m = len(verts)
    facets = [(i, (i + 1) % m) for i in range(m)]
    return _checked(SimplicialMesh(2, verts, facets))


# -- torus ----------------------------------------------------------------------


@lru_cache(maxsize=64)
def make_torus(ring_radius, tube_radius, refinement=0):
    """Triangulated torus around the z axis (genus-1 nonconvex test body)."""
    R, r = float(ring_radius), float(tube_radius)
    if not 0 < r < R:
        raise ValueError("need 0 < tube_radius < ring_radius")
    major = 4 * 2**refinement
    minor = max(3, 2 * 2**refinement)  # need >= 3 rows for a valid wrap
    theta = 2.0 * math.pi * np.arange(major) / major
    phi = 2.0 * math.pi * np.arange(minor) / minor
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    ring = R + r * cp[None, :]
    verts = np.stack(
        [ring * ct[:, None], ring * st[:, None], np.broadcast_to(r * sp, (major, minor))],
        axis=2,
    ).reshape(major * minor, 3)

    def vid(i, j):
        return (i % major) * minor + (j % minor)

    facets = []
    for i in range(major):
        for j in range(minor):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            facets.append((v00, v10, v11))
            facets.append((v00, v11, v01))
    return _checked(SimplicialMesh(3, verts, facets))
