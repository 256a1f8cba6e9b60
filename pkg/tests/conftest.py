import numpy as np
import pytest

from igeo import (
    RandomStream,
    count_line_mesh,
    make_box,
    make_sphere,
    make_star,
    make_torus,
    point_mesh_distance,
)
from igeo.mesh import OrientedLine


@pytest.fixture(scope="session")
def cube():
    return make_box(3, (0.5, 0.5, 0.5))


@pytest.fixture(scope="session")
def square():
    return make_box(2, (0.5, 0.5))


@pytest.fixture(scope="session")
def icosphere3():
    return make_sphere(3, 3)


@pytest.fixture(scope="session")
def icosphere4():
    return make_sphere(3, 4)


@pytest.fixture(scope="session")
def circle128():
    return make_sphere(2, 5)


@pytest.fixture(scope="session")
def star2d():
    return make_star(2, 5, 0.5, 1.0, 0)


@pytest.fixture(scope="session")
def star3d():
    return make_star(3, 6, 0.5, 1.0, 3)


@pytest.fixture(scope="session")
def torus():
    return make_torus(2.0, 0.5, 5)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Trigger numba compilation on a tiny mesh before any timed test."""
    from igeo.intersect import any_hit_lines_batch, points_within_batch

    mesh = make_box(3, (0.5, 0.5, 0.5))
    line = OrientedLine(np.array([0.0, 0.0, 1.0]), np.array([0.1, 0.2, 0.0]))
    count_line_mesh(line, mesh, RandomStream(0))
    point_mesh_distance(np.array([2.0, 0.0, 0.0]), mesh)
    points_within_batch(mesh, np.zeros((1, 3)), 0.1)
    any_hit_lines_batch(
        mesh, line.direction[None, :], line.anchor[None, :], np.zeros(1, dtype=np.uint64)
    )


def rotation_matrix(n, seed):
    """Deterministic random rotation (QR of a seeded Gaussian, det +1)."""
    rs = RandomStream(seed, 999)
    q, r = np.linalg.qr(rs.normal((n, n)))
    q = q * np.where(np.diag(r) >= 0, 1.0, -1.0)[None, :]
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def support_width(mesh, dirs):
    """Exact projected widths of the mesh along direction rows (V-support)."""
    h = mesh.vertices @ np.asarray(dirs, dtype=np.float64).T
    return h.max(axis=0) - h.min(axis=0)
