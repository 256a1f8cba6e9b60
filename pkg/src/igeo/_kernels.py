"""Numba kernels for line counting and point-distance queries.

These are the hot loops behind the Crofton/ray-cast estimators (full-line vs
facet intersection counting over a BVH) and the tube estimator (point within
epsilon of the surface).  All kernels are nogil so estimator threads can run
them concurrently; outputs depend only on per-sample inputs, never on
scheduling.

The jitter RNG here mirrors :mod:`igeo.rng` bit-for-bit (same splitmix64
mixing over golden-ratio counters).
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U53 = 2.0**-53
_JITTER_BASE = np.uint64(1) << np.uint64(32)
_HUGE = 1.7976931348623157e308


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True, inline="always")
def _uniform(key, ctr):
    bits = _mix64(key + ctr * _GOLDEN)
    return (np.float64(bits >> _S11) + 0.5) * _U53


@njit(cache=True, nogil=True, inline="always")
def _ray_facet(d, a, v0_row, nrm_row, pinv_f, b_tol, par_tol, dist_tol):
    """One line vs one facet: 0 = miss, 1 = hit, 2 = degenerate."""
    nd = d.shape[0]
    dn = 0.0
    off = 0.0
    for k in range(nd):
        dn += d[k] * nrm_row[k]
        off += (v0_row[k] - a[k]) * nrm_row[k]
    if abs(dn) <= par_tol:
        # parallel: degenerate only if the line lies in the facet's span
        if abs(off) <= dist_tol:
            return 2, 0.0
        return 0, 0.0
    t = off / dn
    lam_min = 1.0
    lam_sum = 0.0
    for j in range(nd - 1):
        lam = 0.0
        for k in range(nd):
            lam += pinv_f[j, k] * (a[k] + t * d[k] - v0_row[k])
        lam_sum += lam
        if lam < lam_min:
            lam_min = lam
    lam0 = 1.0 - lam_sum
    if lam0 < lam_min:
        lam_min = lam0
    if lam_min > b_tol:
        return 1, t
    if lam_min > -b_tol:
        return 2, t
    return 0, t


@njit(cache=True, nogil=True, inline="always")
def _slab_miss(d, a, lo, hi, node):
    """True when the full line misses the node's AABB."""
    tmin = -_HUGE
    tmax = _HUGE
    for k in range(d.shape[0]):
        dk = d[k]
        if abs(dk) < 1e-300:
            if a[k] < lo[node, k] or a[k] > hi[node, k]:
                return True
        else:
            inv = 1.0 / dk
            t0 = (lo[node, k] - a[k]) * inv
            t1 = (hi[node, k] - a[k]) * inv
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
            if tmin > tmax:
                return True
    return False


@njit(cache=True, nogil=True)
def _line_count_once(d, a, v0, nrm, pinv, lo, hi, left, right, start, count,
                     perm, stack, b_tol, par_tol, dist_tol):
    cnt = 0
    sp = 1
    stack[0] = 0
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if _slab_miss(d, a, lo, hi, node):
            continue
        if left[node] < 0:
            for ii in range(start[node], start[node] + count[node]):
                f = perm[ii]
                st, _ = _ray_facet(d, a, v0[f], nrm[f], pinv[f], b_tol, par_tol, dist_tol)
                if st == 1:
                    cnt += 1
                elif st == 2:
                    return 0, True
        else:
            stack[sp] = left[node]
            sp += 1
            stack[sp] = right[node]
            sp += 1
    return cnt, False


@njit(cache=True, nogil=True)
def _line_count_brute(d, a, v0, nrm, pinv, b_tol, par_tol, dist_tol):
    cnt = 0
    for f in range(v0.shape[0]):
        st, _ = _ray_facet(d, a, v0[f], nrm[f], pinv[f], b_tol, par_tol, dist_tol)
        if st == 1:
            cnt += 1
        elif st == 2:
            return 0, True
    return cnt, False


@njit(cache=True, nogil=True)
def _line_any_once(d, a, v0, nrm, pinv, lo, hi, left, right, start, count,
                   perm, stack, b_tol, par_tol, dist_tol):
    degen = False
    sp = 1
    stack[0] = 0
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if _slab_miss(d, a, lo, hi, node):
            continue
        if left[node] < 0:
            for ii in range(start[node], start[node] + count[node]):
                f = perm[ii]
                st, _ = _ray_facet(d, a, v0[f], nrm[f], pinv[f], b_tol, par_tol, dist_tol)
                if st == 1:
                    return True, False
                if st == 2:
                    degen = True
        else:
            stack[sp] = left[node]
            sp += 1
            stack[sp] = right[node]
            sp += 1
    return False, degen


@njit(cache=True, nogil=True)
def _jitter_anchor(a_cur, a0, d, key, retry, scale):
    """Move the anchor by `scale` in a pseudorandom direction within d-perp."""
    nd = d.shape[0]
    base = _JITTER_BASE + np.uint64(retry) * np.uint64(64)
    for attempt in range(8):
        dot = 0.0
        for k in range(nd):
            u = _uniform(key, base + np.uint64(attempt * nd + k))
            a_cur[k] = 2.0 * u - 1.0
        for k in range(nd):
            dot += a_cur[k] * d[k]
        s = 0.0
        for k in range(nd):
            a_cur[k] -= dot * d[k]
            s += a_cur[k] * a_cur[k]
        if s > 1e-12:
            f = scale / np.sqrt(s)
            for k in range(nd):
                a_cur[k] = a0[k] + a_cur[k] * f
            return
    for k in range(nd):
        a_cur[k] = a0[k]


@njit(cache=True, nogil=True)
def count_lines_kernel(dirs, anchors, keys, v0, nrm, pinv, lo, hi, left, right,
                       start, count, perm, jitter_scale, b_tol, par_tol,
                       dist_tol, enforce_parity, max_retries, use_bvh, out):
    """Intersection counts per line; -1 marks persistent degeneracy.

    Degenerate hits (boundary/parallel within tolerance) and odd parities on
    closed meshes trigger an anchor jitter and a retest, up to max_retries.
    """
    n_lines = dirs.shape[0]
    nd = dirs.shape[1]
    stack = np.empty(256, np.int64)
    a_cur = np.empty(nd)
    for i in range(n_lines):
        d = dirs[i]
        for k in range(nd):
            a_cur[k] = anchors[i, k]
        result = -1
        for retry in range(max_retries + 1):
            if use_bvh:
                c, degen = _line_count_once(d, a_cur, v0, nrm, pinv, lo, hi, left,
                                            right, start, count, perm, stack,
                                            b_tol, par_tol, dist_tol)
            else:
                c, degen = _line_count_brute(d, a_cur, v0, nrm, pinv, b_tol,
                                             par_tol, dist_tol)
            if not degen and (not enforce_parity or c % 2 == 0):
                result = c
                break
            _jitter_anchor(a_cur, anchors[i], d, keys[i], retry, jitter_scale)
        out[i] = result


@njit(cache=True, nogil=True)
def any_hit_lines_kernel(dirs, anchors, keys, v0, nrm, pinv, lo, hi, left,
                         right, start, count, perm, jitter_scale, b_tol,
                         par_tol, dist_tol, max_retries, out):
    """Membership indicator per line: 1 hit, 0 miss, -1 persistent degeneracy."""
    n_lines = dirs.shape[0]
    nd = dirs.shape[1]
    stack = np.empty(256, np.int64)
    a_cur = np.empty(nd)
    for i in range(n_lines):
        d = dirs[i]
        for k in range(nd):
            a_cur[k] = anchors[i, k]
        result = np.int8(-1)
        for retry in range(max_retries + 1):
            found, degen = _line_any_once(d, a_cur, v0, nrm, pinv, lo, hi, left,
                                          right, start, count, perm, stack,
                                          b_tol, par_tol, dist_tol)
            if found:
                result = np.int8(1)
                break
            if not degen:
                result = np.int8(0)
                break
            _jitter_anchor(a_cur, anchors[i], d, keys[i], retry, jitter_scale)
        out[i] = result


# -- point-to-simplex distance -------------------------------------------------


@njit(cache=True, nogil=True)
def _solve_inplace(G, b, x, m):
    """Gauss with partial pivoting; returns False on a near-singular pivot."""
    if m == 0:
        return True
    scale = 0.0
    for i in range(m):
        for j in range(m):
            aij = abs(G[i, j])
            if aij > scale:
                scale = aij
    if scale == 0.0:
        return False
    tol = 1e-14 * scale
    for colv in range(m):
        piv = colv
        pv = abs(G[colv, colv])
        for rr in range(colv + 1, m):
            if abs(G[rr, colv]) > pv:
                pv = abs(G[rr, colv])
                piv = rr
        if pv <= tol:
            return False
        if piv != colv:
            for j in range(m):
                tmp = G[colv, j]
                G[colv, j] = G[piv, j]
                G[piv, j] = tmp
            tmp = b[colv]
            b[colv] = b[piv]
            b[piv] = tmp
        inv = 1.0 / G[colv, colv]
        for rr in range(colv + 1, m):
            f = G[rr, colv] * inv
            if f != 0.0:
                for j in range(colv, m):
                    G[rr, j] -= f * G[colv, j]
                b[rr] -= f * b[colv]
    for i in range(m - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, m):
            s -= G[i, j] * x[j]
        x[i] = s / G[i, i]
    return True


@njit(cache=True, nogil=True)
def _face_dist2(p, pts, idx, mm, G, b, mu):
    """Squared distance to the affine hull of a vertex subset, or HUGE when
    the hull projection falls outside the face."""
    nd = p.shape[0]
    if mm == 1:
        d2 = 0.0
        for k in range(nd):
            diff = p[k] - pts[idx[0], k]
            d2 += diff * diff
        return d2
    for j in range(mm - 1):
        bj = 0.0
        for k in range(nd):
            bj += (pts[idx[j + 1], k] - pts[idx[0], k]) * (p[k] - pts[idx[0], k])
        b[j] = bj
        for l in range(mm - 1):
            g = 0.0
            for k in range(nd):
                g += (pts[idx[j + 1], k] - pts[idx[0], k]) * (
                    pts[idx[l + 1], k] - pts[idx[0], k]
                )
            G[j, l] = g
    if not _solve_inplace(G, b, mu, mm - 1):
        return _HUGE
    lam0 = 1.0
    for j in range(mm - 1):
        if mu[j] < -1e-12:
            return _HUGE
        lam0 -= mu[j]
    if lam0 < -1e-12:
        return _HUGE
    d2 = 0.0
    for k in range(nd):
        x = pts[idx[0], k]
        for j in range(mm - 1):
            x += mu[j] * (pts[idx[j + 1], k] - pts[idx[0], k])
        diff = p[k] - x
        d2 += diff * diff
    return d2


@njit(cache=True, nogil=True)
def _point_simplex_dist2(p, pts, G, b, mu, idx):
    """Exact squared distance from a point to a simplex (face enumeration)."""
    K = pts.shape[0]
    for v in range(K):
        idx[v] = v
    d2 = _face_dist2(p, pts, idx, K, G, b, mu)
    if d2 < _HUGE:
        return d2
    best = _HUGE
    for mask in range(1, (1 << K) - 1):
        mm = 0
        for v in range(K):
            if mask & (1 << v):
                idx[mm] = v
                mm += 1
        d2 = _face_dist2(p, pts, idx, mm, G, b, mu)
        if d2 < best:
            best = d2
    return best


@njit(cache=True, nogil=True, inline="always")
def _facet_dist2_fast(p, pts_f, v0_f, nrm_f, pinv_f, G, b, mu, idx):
    """Exact facet distance with a codim-1 fast path.

    The hull projection's barycentric coordinates come from the cached
    pseudo-inverse; when they are all nonnegative the distance is just the
    plane distance, otherwise fall back to boundary-face enumeration.
    """
    nd = p.shape[0]
    dp = 0.0
    for k in range(nd):
        dp += (p[k] - v0_f[k]) * nrm_f[k]
    lam_min = 1.0
    lam_sum = 0.0
    for j in range(nd - 1):
        lam = 0.0
        for k in range(nd):
            lam += pinv_f[j, k] * (p[k] - v0_f[k])
        lam_sum += lam
        if lam < lam_min:
            lam_min = lam
    if 1.0 - lam_sum < lam_min:
        lam_min = 1.0 - lam_sum
    if lam_min >= -1e-12:
        return dp * dp
    best = _HUGE
    K = pts_f.shape[0]
    for mask in range(1, (1 << K) - 1):
        mm = 0
        for v in range(K):
            if mask & (1 << v):
                idx[mm] = v
                mm += 1
        d2 = _face_dist2(p, pts_f, idx, mm, G, b, mu)
        if d2 < best:
            best = d2
    return best


@njit(cache=True, nogil=True, inline="always")
def _fbox_mindist2(p, flo, fhi, f):
    s = 0.0
    for k in range(p.shape[0]):
        v = p[k]
        l = flo[f, k]
        h = fhi[f, k]
        if v < l:
            s += (l - v) * (l - v)
        elif v > h:
            s += (v - h) * (v - h)
    return s


@njit(cache=True, nogil=True, inline="always")
def _box_mindist2(p, lo, hi, node):
    s = 0.0
    for k in range(p.shape[0]):
        v = p[k]
        l = lo[node, k]
        h = hi[node, k]
        if v < l:
            s += (l - v) * (l - v)
        elif v > h:
            s += (v - h) * (v - h)
    return s


@njit(cache=True, nogil=True)
def points_within_kernel(points, eps, pts_f, v0, nrm, pinv, flo, fhi, lo, hi,
                         left, right, start, count, perm, out):
    """out[i] = True iff dist(points[i], mesh) < eps (early-exit traversal)."""
    N = points.shape[0]
    K = pts_f.shape[1]
    stack = np.empty(256, np.int64)
    G = np.empty((K, K))
    b = np.empty(K)
    mu = np.empty(K)
    idx = np.empty(K, np.int64)
    e2 = eps * eps
    for i in range(N):
        p = points[i]
        found = False
        sp = 1
        stack[0] = 0
        while sp > 0 and not found:
            sp -= 1
            node = stack[sp]
            if _box_mindist2(p, lo, hi, node) >= e2:
                continue
            if left[node] < 0:
                for ii in range(start[node], start[node] + count[node]):
                    f = perm[ii]
                    if _fbox_mindist2(p, flo, fhi, f) >= e2:
                        continue
                    d2 = _facet_dist2_fast(p, pts_f[f], v0[f], nrm[f], pinv[f],
                                           G, b, mu, idx)
                    if d2 < e2:
                        found = True
                        break
            else:
                stack[sp] = left[node]
                sp += 1
                stack[sp] = right[node]
                sp += 1
        out[i] = found


@njit(cache=True, nogil=True)
def point_distances_kernel(points, pts_f, v0, nrm, pinv, flo, fhi, lo, hi,
                           left, right, start, count, perm, out):
    """Exact mesh distance per point (best-pruned traversal, near child first)."""
    N = points.shape[0]
    K = pts_f.shape[1]
    stack = np.empty(256, np.int64)
    G = np.empty((K, K))
    b = np.empty(K)
    mu = np.empty(K)
    idx = np.empty(K, np.int64)
    for i in range(N):
        p = points[i]
        best2 = _HUGE
        sp = 1
        stack[0] = 0
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_mindist2(p, lo, hi, node) >= best2:
                continue
            if left[node] < 0:
                for ii in range(start[node], start[node] + count[node]):
                    f = perm[ii]
                    if _fbox_mindist2(p, flo, fhi, f) >= best2:
                        continue
                    d2 = _facet_dist2_fast(p, pts_f[f], v0[f], nrm[f], pinv[f],
                                           G, b, mu, idx)
                    if d2 < best2:
                        best2 = d2
            else:
                l_ = left[node]
                r_ = right[node]
                dl = _box_mindist2(p, lo, hi, l_)
                dr = _box_mindist2(p, lo, hi, r_)
                if dl <= dr:
                    stack[sp] = r_
                    sp += 1
                    stack[sp] = l_
                    sp += 1
                else:
                    stack[sp] = l_
                    sp += 1
                    stack[sp] = r_
                    sp += 1
        out[i] = np.sqrt(best2)


@njit(cache=True, nogil=True)
def point_distances_brute(points, pts_f, v0, nrm, pinv, flo, fhi, out):
    """Linear-scan twin of point_distances_kernel (acceleration cross-check)."""
    N = points.shape[0]
    K = pts_f.shape[1]
    G = np.empty((K, K))
    b = np.empty(K)
    mu = np.empty(K)
    idx = np.empty(K, np.int64)
    for i in range(N):
        best2 = _HUGE
        for f in range(pts_f.shape[0]):
            if _fbox_mindist2(points[i], flo, fhi, f) >= best2:
                continue
            d2 = _facet_dist2_fast(points[i], pts_f[f], v0[f], nrm[f], pinv[f],
                                   G, b, mu, idx)
            if d2 < best2:
                best2 = d2
        out[i] = np.sqrt(best2)
