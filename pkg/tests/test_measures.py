import math

import mpmath
import pytest

from igeo.errors import InvalidFlag
from igeo.measures import (
    ball_recursion_identity,
    ball_volume_omega,
    constants_table,
    flag_measure,
    grassmannian_volume,
    line_measure_ball,
    sphere_area_O,
)


def test_sphere_area_known_values():
    assert sphere_area_O(0) == pytest.approx(2.0, rel=1e-14)
    assert sphere_area_O(1) == pytest.approx(2 * math.pi, rel=1e-14)
    assert sphere_area_O(2) == pytest.approx(4 * math.pi, rel=1e-14)


def test_sphere_area_gamma_specials():
    # Gamma(2) = 1 and Gamma(3) = 2
    assert sphere_area_O(3) == pytest.approx(2 * math.pi**2, rel=1e-14)
    assert sphere_area_O(5) == pytest.approx(math.pi**3, rel=1e-14)


def test_ball_volume_values():
    assert ball_volume_omega(0) == 1.0
    assert ball_volume_omega(1) == pytest.approx(2.0, rel=1e-14)
    assert ball_volume_omega(2) == pytest.approx(math.pi, rel=1e-14)
    assert ball_volume_omega(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)


def test_ball_volume_derivative_relation():
    # omega_r = O_{r-1} / r
    for r in range(1, 11):
        assert ball_volume_omega(r) == pytest.approx(sphere_area_O(r - 1) / r, rel=1e-14)


def test_grassmannian_closed_forms():
    assert grassmannian_volume(3, 1) == pytest.approx(2 * math.pi, rel=1e-12)
    assert grassmannian_volume(3, 2) == pytest.approx(2 * math.pi, rel=1e-12)


def test_grassmannian_duality():
    for n in range(2, 7):
        for r in range(1, n):
            assert grassmannian_volume(n, r) == pytest.approx(
                grassmannian_volume(n, n - r), rel=1e-12
            )


def test_grassmannian_boundary_conventions():
    for n in range(1, 7):
        assert grassmannian_volume(n, 0) == 1.0
        assert grassmannian_volume(n, n) == pytest.approx(1.0, rel=1e-12)


def test_flag_measure_telescopes_to_half_spheres():
    # integrating (r-1)-planes through 0 inside an r-dim ambient: O_{r-1}/O_0
    for r in range(2, 8):
        assert flag_measure(r, r - 1, 0) == pytest.approx(
            sphere_area_O(r - 1) / 2, rel=1e-12
        )
    # (n-1)-planes about a fixed r-plane: O_{n-r-1}/O_0
    for n in range(3, 8):
        for r in range(1, n - 1):
            assert flag_measure(n, n - 1, r) == pytest.approx(
                sphere_area_O(n - r - 1) / 2, rel=1e-12
            )


def test_flag_measure_q0_is_grassmannian():
    for n in range(2, 7):
        for r in range(1, n):
            assert flag_measure(n, r, 0) == pytest.approx(
                grassmannian_volume(n, r), rel=1e-12
            )


def test_flag_measure_rejects_bad_indices():
    with pytest.raises(InvalidFlag):
        flag_measure(3, 3, 0)
    with pytest.raises(InvalidFlag):
        flag_measure(3, 2, 2)
    with pytest.raises(InvalidFlag):
        flag_measure(4, 1, 1)


def test_line_measure_values():
    assert line_measure_ball(2, 1.0) == pytest.approx(4 * math.pi, rel=1e-12)
    assert line_measure_ball(3, 1.0) == pytest.approx(4 * math.pi**2, rel=1e-12)


def test_line_measure_scaling():
    for n in (2, 3, 4):
        ratio = line_measure_ball(n, 2.0) / line_measure_ball(n, 1.0)
        assert ratio == pytest.approx(2 ** (n - 1), rel=1e-14)


def test_against_high_precision_gamma():
    mpmath.mp.dps = 50
    for r in range(0, 21):
        o_exact = 2 * mpmath.pi ** ((r + 1) / mpmath.mpf(2)) / mpmath.gamma((r + 1) / mpmath.mpf(2))
        w_exact = mpmath.pi ** (r / mpmath.mpf(2)) / mpmath.gamma(r / mpmath.mpf(2) + 1)
        assert abs(sphere_area_O(r) / float(o_exact) - 1) < 1e-12
        assert abs(ball_volume_omega(r) / float(w_exact) - 1) < 1e-12
    for n in range(2, 7):
        for r in range(1, n):
            num = mpmath.mpf(1)
            for i in range(n - r, n):
                num *= 2 * mpmath.pi ** ((i + 1) / mpmath.mpf(2)) / mpmath.gamma((i + 1) / mpmath.mpf(2))
            den = mpmath.mpf(1)
            for i in range(r):
                den *= 2 * mpmath.pi ** ((i + 1) / mpmath.mpf(2)) / mpmath.gamma((i + 1) / mpmath.mpf(2))
            assert abs(grassmannian_volume(n, r) / float(num / den) - 1) < 1e-12


def test_ball_recursion_identity_closed_form():
    # the mean-volume recursion specialized to the unit ball, all n <= 6
    for n in range(2, 7):
        for r in range(1, n):
            lhs, rhs = ball_recursion_identity(n, r)
            assert abs(lhs - rhs) / rhs < 1e-10


def test_constants_table_tags():
    table = constants_table(4)
    assert table["sphere_area_O"]["2"].value == pytest.approx(4 * math.pi)
    assert table["sphere_area_O"]["2"].formula_id == "O_2"
    assert table["grassmannian_volume"]["4,2"].value == pytest.approx(
        grassmannian_volume(4, 2)
    )


def test_log_space_stability_large_n():
    # products stay finite and positive well past the tested range
    v = grassmannian_volume(50, 25)
    assert math.isfinite(v) and v > 0
    assert flag_measure(40, 30, 10) > 0
    lhs, rhs = ball_recursion_identity(20, 7)
    assert abs(lhs - rhs) / rhs < 1e-10
