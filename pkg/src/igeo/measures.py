"""Closed-form constants of integral geometry.

Unit-sphere areas ``O_r``, unit-ball volumes ``omega_r``, Grassmannian
volumes ``m(G_{n,r})``, flag-measure totals, and the total invariant measure
of lines meeting a ball.  Everything is evaluated through log-gamma so the
products stay stable well past the dimensions exercised here.
"""

import math
from dataclasses import dataclass

from scipy.special import gammaln

from .errors import InvalidFlag

_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class MeasureValue:
    """A positive constant together with the closed form that produced it."""

    value: float
    formula_id: str


def _log_sphere_area(r):
    # O_r = 2 pi^{(r+1)/2} / Gamma((r+1)/2)
    return math.log(2.0) + 0.5 * (r + 1) * _LOG_PI - gammaln(0.5 * (r + 1))


def sphere_area_O(r):
    """Surface area O_r of the unit sphere in R^{r+1} (O_0 = 2)."""
    if r < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {r}")
    return math.exp(_log_sphere_area(r))


def ball_volume_omega(r):
    """Volume omega_r of the unit ball in R^r (omega_0 = 1)."""
    if r < 0:
        raise ValueError(f"ball dimension must be >= 0, got {r}")
    return math.exp(0.5 * r * _LOG_PI - gammaln(0.5 * r + 1.0))


def grassmannian_volume(n, r):
    """Total invariant measure m(G_{n,r}) of r-subspaces of R^n.

    The product formula (O_{n-1} ... O_{n-r}) / (O_{r-1} ... O_1 O_0) is
    evaluated as a log-sum.  The boundary values r = 0 and r = n are empty
    products and equal 1.
    """
    if not 0 <= r <= n:
        raise ValueError(f"need 0 <= r <= n, got r={r}, n={n}")
    log_num = sum(_log_sphere_area(i) for i in range(n - r, n))
    log_den = sum(_log_sphere_area(i) for i in range(r))
    return math.exp(log_num - log_den)


def flag_measure(n, r, q):
    """Total measure of r-planes through a fixed q-plane in R^n.

    Equals (O_{n-q-1} ... O_{n-r}) / (O_{r-q-1} ... O_1 O_0); the q = 0 case
    reduces to ``grassmannian_volume(n, r)``.
    """
    if not (0 <= q < r <= n - 1):
        raise InvalidFlag(f"need 0 <= q < r <= n-1, got n={n}, r={r}, q={q}")
    log_num = sum(_log_sphere_area(i) for i in range(n - r, n - q))
    log_den = sum(_log_sphere_area(i) for i in range(r - q))
    return math.exp(log_num - log_den)


def line_measure_ball(n, radius):
    """Invariant measure of oriented lines meeting a ball of the given radius.

    The line measure factors as (direction on S^{n-1}) x (anchor in the
    (n-1)-ball of the direction's complement), so the total is
    O_{n-1} * omega_{n-1} * radius^{n-1}.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    return sphere_area_O(n - 1) * ball_volume_omega(n - 1) * radius ** (n - 1)


def ball_recursion_identity(n, r):
    """Both sides of the mean-volume recursion evaluated on the unit ball.

    Every shadow of the unit ball is a unit ball, so the recursion collapses
    to the closed form

        (2 / O_{r-1}) * m(G_{n,n-1}) * m(G_{n-1,n-r}) * omega_{n-r}
            = m(G_{n,n-r}) * omega_{n-r}.

    Returns ``(lhs, rhs)`` for 1 <= r <= n-1.
    """
    if not 1 <= r <= n - 1:
        raise ValueError(f"need 1 <= r <= n-1, got r={r}, n={n}")
    w = ball_volume_omega(n - r)
    lhs = (
        2.0
        / sphere_area_O(r - 1)
        * grassmannian_volume(n, n - 1)
        * grassmannian_volume(n - 1, n - r)
        * w
    )
    rhs = grassmannian_volume(n, n - r) * w
    return lhs, rhs


def constants_table(n):
    """Tagged table of O, omega, and m(G_{n,r}) values used by the CLI."""
    table = {
        "sphere_area_O": {
            str(r): MeasureValue(sphere_area_O(r), f"O_{r}") for r in range(n + 1)
        },
        "ball_volume_omega": {
            str(r): MeasureValue(ball_volume_omega(r), f"omega_{r}")
            for r in range(n + 1)
        },
        "grassmannian_volume": {
            f"{n},{r}": MeasureValue(grassmannian_volume(n, r), f"m(G_{{{n},{r}}})")
            for r in range(1, n)
        },
    }
    return table
