"""Reproducible samplers for the three measures the estimators integrate against.

Uniform directions on S^{n-1}, rotation-invariant subspaces of the
Grassmannian G_{n,r}, the invariant line measure restricted to lines meeting
a ball (direction x anchor in the direction's complement), and uniform points
in solid balls.

Scalar ops consume a :class:`igeo.rng.RandomStream`; the ``*_block``
functions are the vectorized twins used by estimators, keyed per sample
index so the draws are bit-identical to the scalar path and independent of
worker chunking.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .mesh import AffineFlat, OrientedLine, as_vector
from .rng import uniform_block


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo result.

    ``std_error`` is the sample standard deviation of the per-sample
    estimator divided by sqrt(samples); ``samples`` counts retained samples
    and ``discarded`` the degenerate ones that were dropped.
    """

    value: float
    std_error: float
    samples: int
    seed: int
    discarded: int = 0

    def interval(self, k=3.0):
        return self.value - k * self.std_error, self.value + k * self.std_error


def estimate_from_values(values, seed, discarded=0):
    """Estimate from an array of per-sample estimator values."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        return Estimate(math.nan, math.nan, 0, seed, discarded)
    value = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return Estimate(value, se, n, seed, discarded)


# -- scalar samplers ----------------------------------------------------------


def sample_sphere(rs, n):
    """Uniform unit direction on S^{n-1} (normalized Gaussian vector)."""
    if n < 2:
        raise ValueError("need ambient dimension n >= 2")
    while True:
        g = rs.normal((n,))
        norm = math.sqrt(float((g * g).sum()))
        if norm > 1e-6:
            return g / norm


def _positivize_columns(Q):
    """Flip column signs so the first non-tiny entry of each column is > 0."""
    Q = np.array(Q)
    for j in range(Q.shape[1]):
        col = Q[:, j]
        idx = np.argmax(np.abs(col) > 1e-12)
        if col[idx] < 0:
            Q[:, j] = -col
    return Q


def sample_grassmannian(rs, n, r):
    """Rotation-invariant random r-subspace of R^n as an AffineFlat at 0.

    QR-orthonormalization of an n x r Gaussian matrix; the subspace law is
    invariant because the Gaussian column span is.  Column signs are
    normalized so the representative frame is deterministic.
    """
    if not 1 <= r <= n - 1:
        raise ValueError(f"need 1 <= r <= n-1, got r={r}, n={n}")
    G = rs.normal((n, r))
    Q, R = np.linalg.qr(G)
    Q = Q * np.where(np.diag(R) >= 0, 1.0, -1.0)[None, :]
    Q = _positivize_columns(Q)
    return AffineFlat(r, Q, np.zeros(n))


def _ball_direction_radius(rs, k):
    """Uniform point in the unit k-ball via Gaussian direction x radius.

    Fixed consumption of k + 1 draws per round, so the vectorized twin can
    reproduce the stream exactly.
    """
    while True:
        g = rs.normal((k,))
        u = rs.uniform()
        norm = math.sqrt(float((g * g).sum()))
        if norm > 1e-6:
            return (u ** (1.0 / k)) * g / norm


def sample_line_meeting_ball(rs, n, center, radius):
    """Oriented line meeting B(center, radius), by the invariant line measure.

    Direction uniform on S^{n-1}; anchor uniform in the (n-1)-ball of the
    direction's complement, centered at the center's perpendicular part.
    The in-complement ball point comes from projecting an ambient Gaussian
    off the direction (isotropic in the complement) times a radius factor.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = as_vector(center, n)
    d = sample_sphere(rs, n)
    while True:
        g = rs.normal((n,))
        u = rs.uniform()
        g = g - (g * d).sum() * d
        norm = math.sqrt(float((g * g).sum()))
        if norm > 1e-6:
            break
    offset = (radius * u ** (1.0 / (n - 1)) / norm) * g
    anchor = center - (center * d).sum() * d + offset
    return OrientedLine(d, anchor)


def sample_ball_point(rs, n, center, radius):
    """Uniform point in the solid n-ball (rejection from the bounding cube)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = as_vector(center, n)
    while True:
        x = 2.0 * rs.uniform((n,)) - 1.0
        if float(x @ x) <= 1.0:
            return center + radius * x


# -- vectorized twins ---------------------------------------------------------


def sphere_block(seed, streams, n):
    """(len(streams), n) unit directions; row i replays RandomStream(seed, streams[i])."""
    streams = np.asarray(streams, dtype=np.uint64)
    out = np.empty((streams.size, n))
    pending = np.arange(streams.size)
    ctr = 0
    while pending.size:
        g = ndtri(uniform_block(seed, streams[pending], n, counter_start=ctr))
        norms = np.sqrt((g * g).sum(axis=1))
        ok = norms > 1e-6
        out[pending[ok]] = g[ok] / norms[ok, None]
        pending = pending[~ok]
        ctr += n
    return out


def ball_block(seed, streams, k, counter_start=0):
    """(len(streams), k) uniform points in the unit k-ball (direction x radius)."""
    streams = np.asarray(streams, dtype=np.uint64)
    out = np.empty((streams.size, k))
    pending = np.arange(streams.size)
    ctr = counter_start
    while pending.size:
        u = uniform_block(seed, streams[pending], k + 1, counter_start=ctr)
        g = ndtri(u[:, :k])
        norms = np.sqrt((g * g).sum(axis=1))
        ok = norms > 1e-6
        radii = u[ok, k] ** (1.0 / k)
        out[pending[ok]] = g[ok] * (radii / norms[ok])[:, None]
        pending = pending[~ok]
        ctr += k + 1
    return out


def line_block(seed, streams, n, center, radius):
    """Directions and anchors for lines meeting B(center, radius).

    Replays :func:`sample_line_meeting_ball` draw-for-draw: direction at
    counters [0, n), then (n + 1)-draw anchor rounds starting at counter n.
    """
    center = as_vector(center, n)
    streams = np.asarray(streams, dtype=np.uint64)
    dirs = sphere_block(seed, streams, n)
    offsets = np.empty_like(dirs)
    pending = np.arange(streams.size)
    ctr = n
    while pending.size:
        u = uniform_block(seed, streams[pending], n + 1, counter_start=ctr)
        g = ndtri(u[:, :n])
        d = dirs[pending]
        g = g - (g * d).sum(axis=1)[:, None] * d
        norms = np.sqrt((g * g).sum(axis=1))
        ok = norms > 1e-6
        radii = radius * u[ok, n] ** (1.0 / (n - 1))
        offsets[pending[ok]] = (radii / norms[ok])[:, None] * g[ok]
        pending = pending[~ok]
        ctr += n + 1
    anchors = center[None, :] - (dirs * center).sum(axis=1)[:, None] * dirs + offsets
    return dirs, anchors


def halton_sphere(n, count, start_index=0):
    """Low-discrepancy directions on S^{n-1} (inverse-CDF on a Halton set).

    Optional alternative to pseudorandom directions for convergence sweeps;
    standard-error formulas assume independence, so this is not the default.
    """
    from scipy.stats import qmc

    eng = qmc.Halton(d=n, scramble=False)
    # engine index 0 is the degenerate all-zero point; logical index skips it
    eng.fast_forward(start_index + 1)
    u = eng.random(count)
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    return g / norms[:, None]
