"""Surface-area and projected r-volume estimators.

Five mutually-verifying routes to the same quantities: exact facet sums for
weighted projected areas, ray-cast projection by multiplicity counting,
sphere-averaged (Cauchy) and line-measure (Crofton) surface areas, and the
tubular-neighborhood volume.  On top of those sit projected r-volumes onto
subspaces (two interpretations: cross-section component counting vs. the
once-counted body shadow), Grassmannian mean r-volumes, and the recursion
check relating dimension n to dimension n-1.

Randomness is keyed per sample index (see :mod:`igeo.rng`), so results are
bit-identical for a fixed seed regardless of the worker count; workers only
split the numba kernels across threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import intersect
from .errors import DegenerateSlice, InsufficientBudget
from .measures import ball_volume_omega, grassmannian_volume, sphere_area_O
from .mesh import AffineFlat, orthonormal_complement, unit_vector
from .rng import RandomStream, stream_key, substream_index, uniform_block
from .samplers import (
    Estimate,
    ball_block,
    estimate_from_values,
    line_block,
    sample_grassmannian,
    sphere_block,
)

MODE_COMPONENTS = "components"
MODE_BODY_SHADOW = "body_shadow"

_CHUNK = 8192


def _check_mode(mode):
    if mode not in (MODE_COMPONENTS, MODE_BODY_SHADOW):
        raise ValueError(f"mode must be '{MODE_COMPONENTS}' or '{MODE_BODY_SHADOW}'")


def _complement_of(basis):
    """Orthonormal complement of a column-orthonormal basis: (n, n-k)."""
    n, k = basis.shape
    q, _ = np.linalg.qr(basis, mode="complete")
    return np.ascontiguousarray(q[:, k:])


def _run_seed(rs):
    """64-bit seed for one estimator run, derived from (seed, stream_index)."""
    return int(stream_key(rs.seed, rs.stream_index))


def _child_stream(rs, role, index):
    """Independent stream for a nested estimator invocation."""
    child = int(stream_key(np.uint64(rs.stream_index), substream_index(role, index)))
    return RandomStream(rs.seed, child)


def _streams(role, count):
    return np.array([substream_index(role, i) for i in range(count)], dtype=np.uint64)


def _keys(run_seed, role, count):
    return stream_key(run_seed, _streams(role, count))


def _chunked(n, fill, workers):
    """Run fill(start, stop) over fixed-size chunks, optionally on threads.

    Chunk boundaries do not depend on the worker count and every chunk
    writes its own output slots, so results are identical for any value of
    ``workers``.
    """
    spans = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    if workers <= 1 or len(spans) == 1:
        for s, e in spans:
            fill(s, e)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda se: fill(se[0], se[1]), spans))


def _counts_chunked(mesh, dirs, anchors, keys, workers, enforce_parity=True):
    out = np.empty(dirs.shape[0], dtype=np.int64)

    def fill(s, e):
        out[s:e] = intersect.count_lines_batch(
            mesh, dirs[s:e], anchors[s:e], keys[s:e], enforce_parity=enforce_parity
        )

    _chunked(dirs.shape[0], fill, workers)
    return out


def _any_hits_chunked(mesh, dirs, anchors, keys, workers):
    out = np.empty(dirs.shape[0], dtype=np.int8)

    def fill(s, e):
        out[s:e] = intersect.any_hit_lines_batch(mesh, dirs[s:e], anchors[s:e], keys[s:e])

    _chunked(dirs.shape[0], fill, workers)
    return out


# -- projected areas ------------------------------------------------------------


def projected_area_exact(mesh, direction):
    """Weighted projected area onto direction-perp: (1/2) sum |d.n_f| area_f.

    Exact for a simplicial mesh; every sheet over a shadow point contributes
    with multiplicity.
    """
    d = unit_vector(direction)
    return 0.5 * float(np.abs(mesh.facet_normals @ d) @ mesh.facet_measures_raw)


def projected_areas_exact(mesh, dirs, chunk=1024):
    """Vectorized projected_area_exact over direction rows."""
    dirs = np.asarray(dirs, dtype=np.float64)
    out = np.empty(dirs.shape[0])
    nrm_t = mesh.facet_normals.T
    meas = mesh.facet_measures_raw
    for s in range(0, dirs.shape[0], chunk):
        out[s : s + chunk] = 0.5 * (np.abs(dirs[s : s + chunk] @ nrm_t) @ meas)
    return out


def projected_area_raycast(mesh, direction, n_samples, rs, workers=1):
    """Projected area by line counting: (omega_{n-1} R^{n-1} / 2) * mean #hits.

    Lines run parallel to the direction with anchors uniform in the radius-R
    disk of the direction's complement (R = bounding radius), so the disk
    covers the whole shadow and the estimator is unbiased for
    projected_area_exact.
    """
    if n_samples < 1:
        raise ValueError("need n_samples >= 1")
    d = unit_vector(direction)
    n = mesh.dim
    acc = intersect.accel(mesh)
    run = _run_seed(rs)
    balls = ball_block(run, _streams(0, n_samples), n - 1)
    comp = orthonormal_complement(d)
    c_perp = acc.center - float(acc.center @ d) * d
    anchors = c_perp[None, :] + (acc.radius * balls) @ comp.T
    dirs = np.broadcast_to(d, (n_samples, n)).copy()
    keys = _keys(run, 1, n_samples)
    counts = _counts_chunked(mesh, dirs, anchors, keys, workers)
    good = counts >= 0
    scale = 0.5 * ball_volume_omega(n - 1) * acc.radius ** (n - 1)
    return estimate_from_values(
        scale * counts[good], rs.seed, discarded=int((~good).sum())
    )


# -- surface-area estimators ------------------------------------------------------


def cauchy_area(mesh, n_dirs, rs, workers=1, use_raycast=False, raycast_samples=512):
    """Sphere-averaged surface area: (O_{n-1}/omega_{n-1}) * mean projected area.

    With exact per-direction projected areas the estimator's expectation
    equals the exact facet-sum area (Fubini), so the only error is Monte
    Carlo variance across directions.  ``use_raycast`` switches the inner
    projected areas to line counting for an end-to-end check of the
    multiplicity formula.
    """
    if n_dirs < 2:
        raise ValueError("need n_dirs >= 2")
    n = mesh.dim
    run = _run_seed(rs)
    dirs = sphere_block(run, _streams(0, n_dirs), n)
    factor = sphere_area_O(n - 1) / ball_volume_omega(n - 1)
    if not use_raycast:
        vals = factor * projected_areas_exact(mesh, dirs)
        return estimate_from_values(vals, rs.seed)
    acc = intersect.accel(mesh)
    m = int(raycast_samples)
    balls = ball_block(run, _streams(2, n_dirs * m), n - 1)
    dirs_rep = np.repeat(dirs, m, axis=0)
    comp_offsets = np.empty_like(dirs_rep)
    for i in range(n_dirs):
        comp = orthonormal_complement(dirs[i])
        comp_offsets[i * m : (i + 1) * m] = (acc.radius * balls[i * m : (i + 1) * m]) @ comp.T
    c_dot = dirs_rep @ acc.center
    anchors = acc.center[None, :] - c_dot[:, None] * dirs_rep + comp_offsets
    keys = _keys(run, 3, n_dirs * m)
    counts = _counts_chunked(mesh, dirs_rep, anchors, keys, workers)
    counts = counts.reshape(n_dirs, m)
    good = counts >= 0
    retained = good.sum(axis=1)
    pa_scale = 0.5 * ball_volume_omega(n - 1) * acc.radius ** (n - 1)
    with np.errstate(invalid="ignore"):
        pa = pa_scale * np.where(counts >= 0, counts, 0).sum(axis=1) / retained
    ok = retained > 0
    return estimate_from_values(
        factor * pa[ok], rs.seed, discarded=int((~good).sum())
    )


def crofton_area(mesh, n_lines, rs, workers=1):
    """Surface area from the invariant line measure.

    value = (O_{n-1} R^{n-1} / 2) * mean #(line ^ mesh) over lines meeting
    the bounding ball; lines missing the mesh count zero.  Unbiased for the
    exact mesh area (the line-counting identity holds facet-wise).
    """
    if n_lines < 2:
        raise ValueError("need n_lines >= 2")
    n = mesh.dim
    acc = intersect.accel(mesh)
    run = _run_seed(rs)
    dirs, anchors = line_block(run, _streams(0, n_lines), n, acc.center, acc.radius)
    keys = _keys(run, 1, n_lines)
    counts = _counts_chunked(mesh, dirs, anchors, keys, workers)
    good = counts >= 0
    scale = 0.5 * sphere_area_O(n - 1) * acc.radius ** (n - 1)
    return estimate_from_values(
        scale * counts[good], rs.seed, discarded=int((~good).sum())
    )


def tube_area(mesh, epsilon, n_points, rs, workers=1):
    """Surface area from the epsilon-neighborhood volume over 2*epsilon.

    Uniform points in the epsilon-inflated bounding box; the neighborhood
    volume estimate is box_volume * hit fraction.  Carries an O(epsilon^2)
    curvature/corner bias, so compare at the stated epsilon.
    """
    acc = intersect.accel(mesh)
    if not 0 < epsilon < acc.radius / 10:
        raise ValueError("need 0 < epsilon < bounding_radius / 10")
    if n_points < 1:
        raise ValueError("need n_points >= 1")
    n = mesh.dim
    lo = mesh.vertices.min(axis=0) - epsilon
    hi = mesh.vertices.max(axis=0) + epsilon
    box_volume = float(np.prod(hi - lo))
    run = _run_seed(rs)
    inside = np.empty(n_points, dtype=np.bool_)

    def fill(s, e):
        u = uniform_block(run, _streams(0, e - s) + np.uint64(s), n)
        pts = lo[None, :] + u * (hi - lo)[None, :]
        inside[s:e] = intersect.points_within_batch(mesh, pts, epsilon)

    _chunked(n_points, fill, workers)
    vals = (box_volume / (2.0 * epsilon)) * inside.astype(np.float64)
    return estimate_from_values(vals, rs.seed)


# -- projected r-volumes -----------------------------------------------------------


def _membership_batch(mesh, fiber_basis, points, keys, workers):
    """Indicator that the fiber flat through each point meets the mesh.

    Dispatches on fiber dimension/codimension: lines use the any-hit kernel
    (with jitter retries), codimension-1 fibers use shadow-interval lookup,
    codimension-2 the planar hull test, anything else an LP per sample.
    Returns int8 (1 hit / 0 miss / -1 degenerate).
    """
    n = mesh.dim
    k = fiber_basis.shape[1]
    if k == 1:
        d = fiber_basis[:, 0]
        dirs = np.broadcast_to(d, (points.shape[0], n)).copy()
        anchors = points - (points @ d)[:, None] * d[None, :]
        return _any_hits_chunked(mesh, dirs, anchors, keys, workers)
    if n - k == 1:
        comp = _complement_of(fiber_basis)
        w = comp[:, 0]
        return intersect.interval_membership_batch(mesh, w, points @ w)
    if n - k == 2:
        comp = _complement_of(fiber_basis)
        return intersect.hull2_membership_batch(mesh, comp, points @ comp)
    out = np.empty(points.shape[0], dtype=np.int8)
    for i in range(points.shape[0]):
        flat = AffineFlat.make(fiber_basis, points[i])
        try:
            out[i] = 1 if intersect.flat_hits_mesh(flat, mesh) else 0
        except DegenerateSlice:
            out[i] = -1
    return out


def silhouette_volume(mesh, flat, n_samples, rs, workers=1):
    """d-volume of the body's shadow on the flat (each point counted once).

    Membership of a sampled point u is tested on the perpendicular fiber
    through u against the original mesh; value = omega_d R^d * mean
    indicator over the radius-R ball around the projected mesh center.
    """
    d = flat.dim_r
    n = mesh.dim
    if not 1 <= d <= n - 1:
        raise ValueError("need 1 <= flat dim <= n-1")
    acc = intersect.accel(mesh)
    run = _run_seed(rs)
    balls = ball_block(run, _streams(0, n_samples), d)
    q0 = flat.basis.T @ acc.center
    points = flat.offset[None, :] + (q0[None, :] + acc.radius * balls) @ flat.basis.T
    keys = _keys(run, 1, n_samples)
    ind = _membership_batch(mesh, flat.complement_basis, points, keys, workers)
    good = ind >= 0
    scale = ball_volume_omega(d) * acc.radius**d
    return estimate_from_values(
        scale * ind[good].astype(np.float64), rs.seed, discarded=int((~good).sum())
    )


def projected_rvolume(mesh, flat, mode, n_samples, rs, workers=1):
    """Projected r-volume of the hypersurface onto an r-flat through 0.

    ``components`` realizes the weighted multiplicity reading: half the
    number of connected components of the perpendicular cross-section,
    averaged over the shadow ball.  ``body_shadow`` counts each shadow point
    once (the classical silhouette volume).
    """
    _check_mode(mode)
    r = flat.dim_r
    n = mesh.dim
    if not 1 <= r <= n - 1:
        raise ValueError("need 1 <= r <= n-1")
    if mode == MODE_BODY_SHADOW:
        return silhouette_volume(mesh, flat, n_samples, rs, workers=workers)
    acc = intersect.accel(mesh)
    run = _run_seed(rs)
    balls = ball_block(run, _streams(0, n_samples), r)
    q0 = flat.basis.T @ acc.center
    points = flat.offset[None, :] + (q0[None, :] + acc.radius * balls) @ flat.basis.T
    scale = 0.5 * ball_volume_omega(r) * acc.radius**r
    if n - r == 1:
        # 0-dimensional cross-sections: component count == line hit count
        d = flat.complement_basis[:, 0]
        dirs = np.broadcast_to(d, (n_samples, n)).copy()
        anchors = points - (points @ d)[:, None] * d[None, :]
        keys = _keys(run, 1, n_samples)
        counts = _counts_chunked(mesh, dirs, anchors, keys, workers)
        good = counts >= 0
        return estimate_from_values(
            scale * counts[good], rs.seed, discarded=int((~good).sum())
        )
    comp = flat.complement_basis
    vals = []
    discarded = 0
    for i in range(n_samples):
        fiber = AffineFlat.make(comp, points[i])
        try:
            vals.append(scale * intersect.slice_components(fiber, mesh))
        except DegenerateSlice:
            discarded += 1
    return estimate_from_values(np.array(vals), rs.seed, discarded=discarded)


def mean_rvolume(mesh, r, mode, n_flats, n_inner, rs, workers=1):
    """Mean (n-r)-volume I_r: Grassmannian integral of projected volumes.

    Samples flats of dimension n-r through the origin, estimates the
    projected (n-r)-volume on each, and scales the average by the
    Grassmannian mass m(G_{n,n-r}).  Returns ``(I, E)`` where E = I / m(G)
    is the mean value; both carry a combined (between + within flat)
    standard error via the spread of per-flat estimates.
    """
    _check_mode(mode)
    n = mesh.dim
    if not 1 <= r <= n - 1:
        raise ValueError("need 1 <= r <= n-1")
    if n_flats < 2:
        raise ValueError("need n_flats >= 2")
    mass = grassmannian_volume(n, n - r)
    vals = np.empty(n_flats)
    discarded = 0
    for j in range(n_flats):
        flat = sample_grassmannian(_child_stream(rs, 0, j), n, n - r)
        pv = projected_rvolume(mesh, flat, mode, n_inner, _child_stream(rs, 1, j), workers=workers)
        vals[j] = pv.value
        discarded += pv.discarded
    i_est = estimate_from_values(mass * vals, rs.seed, discarded=discarded)
    e_est = Estimate(i_est.value / mass, i_est.std_error / mass, i_est.samples, rs.seed, discarded)
    return i_est, e_est


@dataclass(frozen=True)
class RecursionCheck:
    """Both sides of the mean-volume recursion plus their gap statistics."""

    lhs: Estimate
    rhs: Estimate
    rel_gap: float
    combined_rel_se: float

    @property
    def passed(self):
        return self.rel_gap < 3.0 * self.combined_rel_se


def _inner_mean_rvolume_on_hyperplane(mesh, hyper, r, mode, n_inner, rs, workers):
    """Mean (r-1)-volume of the unmeshed shadow of the mesh on a hyperplane.

    Membership of a point in the sub-shadow is tested on the composed fiber
    flat (inner fiber directions within the hyperplane plus the hyperplane
    normal) against the original mesh, so the shadow body never needs to be
    meshed.  For r = 1 this is the base case: the full shadow volume.
    """
    n = mesh.dim
    h_basis = hyper.basis
    if r == 1:
        est = silhouette_volume(mesh, hyper, n_inner, rs, workers=workers)
        return est.value, est.discarded
    acc = intersect.accel(mesh)
    m_dim = n - 1
    sub_dim = n - r
    n_mid = max(4, int(math.sqrt(n_inner)))
    n_pts = max(8, n_inner // n_mid)
    mass = grassmannian_volume(m_dim, sub_dim)
    normal = hyper.complement_basis[:, 0]
    vals = np.empty(n_mid)
    discarded = 0
    scale = ball_volume_omega(sub_dim) * acc.radius**sub_dim
    for k in range(n_mid):
        local = sample_grassmannian(_child_stream(rs, 2, k), m_dim, sub_dim)
        sub_basis = h_basis @ local.basis
        inner_fiber = h_basis @ local.complement_basis
        fiber_basis = np.column_stack([inner_fiber, normal])
        run = _run_seed(_child_stream(rs, 3, k))
        balls = ball_block(run, _streams(0, n_pts), sub_dim)
        q0 = sub_basis.T @ acc.center
        points = (q0[None, :] + acc.radius * balls) @ sub_basis.T
        keys = _keys(run, 1, n_pts)
        if mode == MODE_BODY_SHADOW:
            ind = _membership_batch(mesh, fiber_basis, points, keys, workers)
            good = ind >= 0
            discarded += int((~good).sum())
            vals[k] = scale * float(ind[good].mean()) if good.any() else 0.0
        else:
            halves = []
            for i in range(n_pts):
                fiber = AffineFlat.make(fiber_basis, points[i])
                try:
                    halves.append(0.5 * intersect.slice_components(fiber, mesh))
                except DegenerateSlice:
                    discarded += 1
            vals[k] = scale * float(np.mean(halves)) if halves else 0.0
    return mass * float(vals.mean()), discarded


def recursion_check(mesh, r, mode, n_outer, n_inner, rs, workers=1):
    """Monte Carlo check of I_r(K) = (2/O_{r-1}) Int I^{(n-1)}_{r-1}(K') dL.

    lhs is the direct mean (n-r)-volume; rhs averages the inner mean volume
    of the (unmeshed) hyperplane shadows.  Raises InsufficientBudget when
    either side's standard error exceeds 20% of its value.
    """
    _check_mode(mode)
    n = mesh.dim
    if not 1 <= r <= n - 1:
        raise ValueError("need 1 <= r <= n-1")
    lhs, _ = mean_rvolume(mesh, r, mode, n_outer, n_inner, _child_stream(rs, 10, 0), workers=workers)
    ys = np.empty(n_outer)
    discarded = 0
    for j in range(n_outer):
        hyper = sample_grassmannian(_child_stream(rs, 11, j), n, n - 1)
        y, disc = _inner_mean_rvolume_on_hyperplane(
            mesh, hyper, r, mode, n_inner, _child_stream(rs, 12, j), workers
        )
        ys[j] = y
        discarded += disc
    factor = 2.0 / sphere_area_O(r - 1) * grassmannian_volume(n, n - 1)
    rhs = estimate_from_values(factor * ys, rs.seed, discarded=discarded)
    for side, name in ((lhs, "lhs"), (rhs, "rhs")):
        if not math.isfinite(side.value) or side.std_error > 0.2 * abs(side.value):
            raise InsufficientBudget(
                f"{name} std error {side.std_error:.3g} exceeds 20% of value {side.value:.3g}"
            )
    denom = max(abs(lhs.value), abs(rhs.value))
    rel_gap = abs(lhs.value - rhs.value) / denom
    combined = math.hypot(lhs.std_error, rhs.std_error) / denom
    return RecursionCheck(lhs, rhs, rel_gap, combined)
