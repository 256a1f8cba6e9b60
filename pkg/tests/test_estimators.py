import math

import numpy as np
import pytest

from igeo import (
    MODE_BODY_SHADOW,
    MODE_COMPONENTS,
    RandomStream,
    cauchy_area,
    crofton_area,
    exact_surface_area,
    make_sphere,
    mean_rvolume,
    projected_area_exact,
    projected_area_raycast,
    projected_rvolume,
    recursion_check,
    silhouette_volume,
    tube_area,
)
from igeo.errors import InsufficientBudget
from igeo.estimators import projected_areas_exact
from igeo.intersect import accel, count_lines_batch
from igeo.measures import ball_volume_omega, grassmannian_volume, sphere_area_O
from igeo.mesh import AffineFlat
from igeo.samplers import sphere_block

from conftest import rotation_matrix, support_width


def _agrees(est, target, k=3.0, extra_se=0.0):
    floor = 1e-12 * max(1.0, abs(target))
    return abs(est.value - target) <= k * math.hypot(est.std_error, extra_se) + floor


def _flat_for_direction(direction):
    """Hyperplane through the origin orthogonal to the direction."""
    from igeo.mesh import orthonormal_complement

    return AffineFlat.make(orthonormal_complement(np.asarray(direction, float)))


def _line_flat(direction):
    return AffineFlat.make(np.asarray(direction, float).reshape(-1, 1))


# -- projected areas ------------------------------------------------------------


def test_projected_area_cube_axis(cube):
    assert projected_area_exact(cube, np.array([0.0, 0.0, 1.0])) == pytest.approx(
        1.0, rel=1e-12
    )


def test_projected_area_cube_diagonal(cube):
    # hand sum over the six unit faces: (1/2) * 6 * (1/sqrt(3))
    d = np.ones(3) / math.sqrt(3)
    assert projected_area_exact(cube, d) == pytest.approx(math.sqrt(3), rel=1e-12)


def test_projected_area_icosphere_near_pi(icosphere4):
    dirs = sphere_block(101, np.arange(50, dtype=np.uint64), 3)
    pas = projected_areas_exact(icosphere4, dirs)
    assert np.max(np.abs(pas / math.pi - 1.0)) < 3e-3


def test_projected_area_rigid_motion_equivariance(star3d):
    rs = RandomStream(55)
    for k in range(10):
        Q = rotation_matrix(3, 100 + k)
        d = sphere_block(77, np.array([k], dtype=np.uint64), 3)[0]
        a = projected_area_exact(star3d, d)
        b = projected_area_exact(star3d.transformed(matrix=Q), Q @ d)
        assert b == pytest.approx(a, rel=1e-9)


def test_raycast_matches_exact_on_sphere(icosphere3):
    d = np.array([0.0, 0.0, 1.0])
    est = projected_area_raycast(icosphere3, d, 100_000, RandomStream(5))
    exact = projected_area_exact(icosphere3, d)
    assert _agrees(est, exact)
    assert abs(est.value - exact) / exact < 0.01
    assert est.discarded == 0


def test_raycast_cube_axis_direction(cube):
    # every line is parallel to the four side faces; counts are 2 on the
    # unit shadow square and 0 outside
    est = projected_area_raycast(cube, np.array([0.0, 0.0, 1.0]), 100_000, RandomStream(44))
    assert _agrees(est, 1.0)
    assert est.discarded == 0


def test_raycast_matches_exact_on_star_polygon(star2d):
    rs_dirs = sphere_block(303, np.arange(20, dtype=np.uint64), 2)
    for i in range(20):
        d = rs_dirs[i]
        est = projected_area_raycast(star2d, d, 20_000, RandomStream(900 + i))
        exact = projected_area_exact(star2d, d)
        assert _agrees(est, exact), (i, est, exact)


def test_raycast_sees_high_multiplicity_on_star(star2d):
    # fibers across the lobes cross the boundary 4+ times
    acc = accel(star2d)
    d = np.array([0.0, 1.0])
    anchors = np.stack([np.linspace(-0.9, 0.9, 200), np.zeros(200)], axis=1)
    dirs = np.broadcast_to(d, (200, 2)).copy()
    counts = count_lines_batch(star2d, dirs, anchors, np.arange(200, dtype=np.uint64))
    assert counts.max() >= 4


def test_cauchy_cube(cube):
    est = cauchy_area(cube, 10_000, RandomStream(1))
    assert _agrees(est, 6.0)
    # integrand |nx|+|ny|+|nz| has mean 3/2, times O_2/omega_2 = 4
    assert est.value == pytest.approx(6.0, rel=5e-3)


def test_cauchy_sphere_nearly_constant_integrand(icosphere4):
    est = cauchy_area(icosphere4, 10_000, RandomStream(2))
    exact = exact_surface_area(icosphere4)
    assert _agrees(est, exact, k=4.0)
    # the facet-sum integrand of a refinement-4 icosphere is constant to ~4e-5
    assert est.std_error / est.value < 1e-5


def test_cauchy_star_fubini(star3d):
    est = cauchy_area(star3d, 10_000, RandomStream(3))
    assert _agrees(est, exact_surface_area(star3d))


def test_cauchy_star2d_unbiased(star2d):
    est = cauchy_area(star2d, 100_000, RandomStream(4))
    assert _agrees(est, exact_surface_area(star2d))


def test_cauchy_raycast_variant(icosphere3):
    est = cauchy_area(
        icosphere3, 64, RandomStream(6), use_raycast=True, raycast_samples=512
    )
    assert _agrees(est, exact_surface_area(icosphere3))


def test_crofton_sphere(icosphere3):
    est = crofton_area(icosphere3, 50_000, RandomStream(7))
    exact = exact_surface_area(icosphere3)
    assert _agrees(est, exact)
    assert abs(est.value - exact) / exact < 0.015
    assert est.discarded <= 50


def test_crofton_circle(circle128):
    est = crofton_area(circle128, 50_000, RandomStream(8))
    assert _agrees(est, exact_surface_area(circle128))
    assert est.value == pytest.approx(2 * math.pi, rel=0.02)


def test_crofton_torus(torus):
    est = crofton_area(torus, 50_000, RandomStream(9))
    assert _agrees(est, exact_surface_area(torus))


def test_crofton_star3d(star3d):
    est = crofton_area(star3d, 50_000, RandomStream(10))
    assert _agrees(est, exact_surface_area(star3d))


def test_tube_sphere_shell_value(icosphere3):
    eps = 0.05
    est = tube_area(icosphere3, eps, 1_000_000, RandomStream(11))
    shell = exact_surface_area(icosphere3) * (1 + eps**2 / 3)
    assert _agrees(est, shell)
    assert est.value == pytest.approx(4 * math.pi, rel=0.015)


def test_tube_cube(cube):
    est = tube_area(cube, 0.02, 1_000_000, RandomStream(12))
    assert abs(est.value - 6.0) / 6.0 < 0.02


def test_tube_epsilon_validation(cube):
    with pytest.raises(ValueError):
        tube_area(cube, 0.2, 100, RandomStream(0))


def test_tube_bias_shrinks_with_epsilon(icosphere3):
    # paired seeds; the O(eps^2) bias dominates the Monte Carlo noise
    exact = exact_surface_area(icosphere3)
    e_big = tube_area(icosphere3, 0.10, 4_000_000, RandomStream(13))
    e_small = tube_area(icosphere3, 0.05, 8_000_000, RandomStream(13))
    assert abs(e_small.value - exact) < abs(e_big.value - exact)


# -- silhouettes and r-volumes -----------------------------------------------------


def test_silhouette_sphere_plane(icosphere3):
    flat = _flat_for_direction([0.0, 0.0, 1.0])
    est = silhouette_volume(icosphere3, flat, 20_000, RandomStream(14))
    # convex: the once-counted shadow equals the weighted projected area
    assert _agrees(est, projected_area_exact(icosphere3, np.array([0.0, 0.0, 1.0])))
    assert est.value == pytest.approx(math.pi, rel=0.02)


def test_silhouette_sphere_line(icosphere3):
    d = np.array([0.3, -0.5, 0.81])
    d /= np.linalg.norm(d)
    est = silhouette_volume(icosphere3, _line_flat(d), 20_000, RandomStream(15))
    width = float(support_width(icosphere3, d[None, :])[0])
    assert _agrees(est, width)
    assert est.value == pytest.approx(2.0, rel=0.02)


def test_silhouette_cube_square(cube):
    flat = _flat_for_direction([0.0, 0.0, 1.0])
    est = silhouette_volume(cube, flat, 20_000, RandomStream(16))
    assert _agrees(est, 1.0)


def test_projected_rvolume_modes_on_sphere(icosphere3):
    d = np.array([0.0, 0.0, 1.0])
    line = _line_flat(d)
    comp = projected_rvolume(icosphere3, line, MODE_COMPONENTS, 20_000, RandomStream(17))
    body = projected_rvolume(icosphere3, line, MODE_BODY_SHADOW, 20_000, RandomStream(18))
    width = float(support_width(icosphere3, d[None, :])[0])
    # each fiber plane cuts one circle over the width interval: half of the width
    assert _agrees(comp, width / 2)
    assert comp.value == pytest.approx(1.0, rel=0.02)
    assert _agrees(body, width)
    assert body.value == pytest.approx(2.0, rel=0.02)


def test_rvolume_reduction_matches_projected_area(icosphere3, star3d):
    # flats of dimension n-1: 0-dimensional cross-sections reduce to the
    # weighted projected area
    for mesh, seed in ((icosphere3, 19), (star3d, 20)):
        dirs = sphere_block(seed, np.arange(6, dtype=np.uint64), 3)
        for i in range(6):
            flat = _flat_for_direction(dirs[i])
            pv = projected_rvolume(mesh, flat, MODE_COMPONENTS, 20_000, RandomStream(50 + i))
            assert _agrees(pv, projected_area_exact(mesh, dirs[i])), (mesh.n_facets, i)


def test_weighted_exceeds_silhouette_on_star(star2d):
    # multiplicity > 2 on a positive-measure set makes the weighted
    # projection strictly larger than the once-counted silhouette
    d = np.array([0.0, 1.0])
    pa = projected_area_exact(star2d, d)
    sil = silhouette_volume(star2d, _line_flat(np.array([1.0, 0.0])), 40_000, RandomStream(21))
    assert pa - sil.value > 3 * sil.std_error


def test_mean_rvolume_sphere_r1(icosphere3):
    i_est, e_est = mean_rvolume(icosphere3, 1, MODE_BODY_SHADOW, 64, 2048, RandomStream(22))
    # Fubini on the convex mesh: I_1 = m * omega_2/O_2 * area
    oracle = (
        grassmannian_volume(3, 2)
        * ball_volume_omega(2)
        / sphere_area_O(2)
        * exact_surface_area(icosphere3)
    )
    assert _agrees(i_est, oracle)
    assert i_est.value == pytest.approx(2 * math.pi**2, rel=0.01)
    assert e_est.value == pytest.approx(i_est.value / grassmannian_volume(3, 2), rel=1e-12)


def test_mean_rvolume_sphere_r2(icosphere3):
    i_est, _ = mean_rvolume(icosphere3, 2, MODE_BODY_SHADOW, 64, 2048, RandomStream(23))
    dirs = sphere_block(501, np.arange(20_000, dtype=np.uint64), 3)
    widths = support_width(icosphere3, dirs)
    oracle = grassmannian_volume(3, 1) * float(widths.mean())
    oracle_se = grassmannian_volume(3, 1) * float(widths.std(ddof=1)) / math.sqrt(widths.size)
    assert _agrees(i_est, oracle, extra_se=oracle_se)
    assert i_est.value == pytest.approx(4 * math.pi, rel=0.01)


def test_mean_rvolume_components_r1_equals_body_shadow_on_convex(icosphere3):
    ic, _ = mean_rvolume(icosphere3, 1, MODE_COMPONENTS, 48, 2048, RandomStream(24))
    ib, _ = mean_rvolume(icosphere3, 1, MODE_BODY_SHADOW, 48, 2048, RandomStream(24))
    assert abs(ic.value - ib.value) <= 3 * math.hypot(ic.std_error, ib.std_error)


# -- comparison corollary -----------------------------------------------------------


def test_nested_spheres_projection_ordering():
    inner = make_sphere(3, 3, radius=0.7)
    outer = make_sphere(3, 3, radius=1.0)
    dirs = sphere_block(601, np.arange(100, dtype=np.uint64), 3)
    pa_in = projected_areas_exact(inner, dirs)
    pa_out = projected_areas_exact(outer, dirs)
    assert np.all(pa_in <= pa_out)
    assert exact_surface_area(inner) <= exact_surface_area(outer)


# -- estimator cross-agreement -------------------------------------------------------


@pytest.mark.parametrize("shape", ["cube", "icosphere3", "star2d", "star3d", "torus"])
def test_estimator_cross_agreement(shape, request):
    mesh = request.getfixturevalue(shape)
    exact = exact_surface_area(mesh)
    ca = cauchy_area(mesh, 20_000, RandomStream(25))
    cr = crofton_area(mesh, 40_000, RandomStream(26))
    assert _agrees(ca, exact)
    assert _agrees(cr, exact)
    assert abs(ca.value - cr.value) <= 3 * math.hypot(ca.std_error, cr.std_error)
    _, radius = __import__("igeo").bounding_ball(mesh)
    eps = 0.04 * radius
    tu = tube_area(mesh, eps, 400_000, RandomStream(27))
    # allow the documented O(eps^2) bias band on top of the MC error
    bias = exact * eps**2
    assert abs(tu.value - exact) <= 3 * tu.std_error + bias


# -- recursion ------------------------------------------------------------------------


def test_recursion_cube_r1(cube):
    check = recursion_check(cube, 1, MODE_BODY_SHADOW, 200, 200, RandomStream(28))
    assert check.passed
    assert check.rel_gap < 0.05


def test_recursion_sphere_r1_matches_closed_form(icosphere3):
    check = recursion_check(icosphere3, 1, MODE_BODY_SHADOW, 96, 1024, RandomStream(29))
    assert check.passed
    # both sides near 2 pi^2 (mesh deficit inside the 1% band)
    assert check.lhs.value == pytest.approx(2 * math.pi**2, rel=0.01)
    assert check.rhs.value == pytest.approx(2 * math.pi**2, rel=0.01)


def test_recursion_sphere_r2_both_modes(icosphere3):
    # the recursion holds within each interpretation; their absolute levels
    # differ below r = n-1 (components halves every fiber crossing)
    for mode, seed, level in (
        (MODE_BODY_SHADOW, 30, 4 * math.pi),
        (MODE_COMPONENTS, 31, 2 * math.pi),
    ):
        check = recursion_check(icosphere3, 2, mode, 48, 900, RandomStream(seed))
        assert check.passed, (mode, check)
        assert check.lhs.value == pytest.approx(level, rel=0.03)


def test_recursion_insufficient_budget(cube):
    with pytest.raises(InsufficientBudget):
        recursion_check(cube, 1, MODE_BODY_SHADOW, 2, 2, RandomStream(32))


# -- determinism ------------------------------------------------------------------------


def test_worker_count_does_not_change_results(icosphere3):
    for fn in (
        lambda w: crofton_area(icosphere3, 20_000, RandomStream(33), workers=w),
        lambda w: cauchy_area(icosphere3, 5_000, RandomStream(34), workers=w),
        lambda w: tube_area(icosphere3, 0.05, 200_000, RandomStream(35), workers=w),
    ):
        a = fn(1)
        b = fn(8)
        assert a.value == b.value and a.std_error == b.std_error


def test_same_seed_bitwise_reproducible(star3d):
    a = crofton_area(star3d, 10_000, RandomStream(36))
    b = crofton_area(star3d, 10_000, RandomStream(36))
    assert a == b


# -- dimension-generic smoke tests (n = 4) ---------------------------------------


@pytest.fixture(scope="module")
def sphere4d():
    return make_sphere(4, 1)


def test_4d_surface_estimators_agree(sphere4d):
    exact = exact_surface_area(sphere4d)
    ca = cauchy_area(sphere4d, 4_000, RandomStream(60))
    cr = crofton_area(sphere4d, 20_000, RandomStream(61))
    assert _agrees(ca, exact)
    assert _agrees(cr, exact)
    tu = tube_area(sphere4d, 0.05, 200_000, RandomStream(62))
    assert abs(tu.value - exact) <= 3 * tu.std_error + exact * 0.05**2


def test_4d_silhouette_backends(sphere4d):
    # 3-flat: fibers are lines (any-hit kernel)
    flat3 = _flat_for_direction(np.array([0.0, 0.0, 0.0, 1.0]))
    est3 = silhouette_volume(sphere4d, flat3, 4_096, RandomStream(63))
    assert _agrees(est3, projected_area_exact(sphere4d, np.array([0.0, 0.0, 0.0, 1.0])))
    # 2-flat: fibers have codimension 2 (planar hull test); for the convex
    # mesh the shadow is the convex hull of the projected vertices
    from scipy.spatial import ConvexHull

    B = np.zeros((4, 2))
    B[0, 0] = B[1, 1] = 1.0
    est2 = silhouette_volume(sphere4d, AffineFlat.make(B), 512, RandomStream(64))
    shadow_area = ConvexHull(sphere4d.vertices @ B).volume
    assert _agrees(est2, shadow_area)


def test_4d_rvolume_reduction(sphere4d):
    d = np.array([0.5, -0.5, 0.5, 0.5])
    flat = _flat_for_direction(d)
    pv = projected_rvolume(sphere4d, flat, MODE_COMPONENTS, 8_192, RandomStream(65))
    assert _agrees(pv, projected_area_exact(sphere4d, d))


def test_4d_mean_rvolume_fubini(sphere4d):
    i_est, _ = mean_rvolume(sphere4d, 1, MODE_BODY_SHADOW, 24, 1_024, RandomStream(66))
    oracle = (
        grassmannian_volume(4, 3)
        * ball_volume_omega(3)
        / sphere_area_O(3)
        * exact_surface_area(sphere4d)
    )
    assert _agrees(i_est, oracle)


def test_4d_recursion_r1(sphere4d):
    check = recursion_check(sphere4d, 1, MODE_BODY_SHADOW, 32, 512, RandomStream(67))
    assert check.passed
