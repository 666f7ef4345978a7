import math
import random
import sys

import pytest
from hypothesis import given, settings, strategies as st

from fueterlab.errors import DegenerateFrameError, DomainError
from fueterlab.quat_core import (
    ONE,
    I,
    J,
    K,
    Quaternion,
    SphericalPoint,
    cartesian_to_spherical_partials,
    frame_at,
    frame_derivatives,
    from_spherical,
    iota_at,
    iota_from_cartesian,
    q_inv,
    q_mul,
    spherical_to_cartesian_partials,
    to_spherical,
)

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
quats = st.builds(Quaternion, finite, finite, finite, finite)


def close(a: Quaternion, b: Quaternion, tol=1e-12) -> bool:
    return (a - b).norm() <= tol * max(1.0, b.norm())


# --- products and inverses --------------------------------------------------


def test_unit_table():
    assert q_mul(I, J) == K
    assert q_mul(J, K) == I
    assert q_mul(K, I) == J
    assert q_mul(J, I) == -K
    for u in (I, J, K):
        assert q_mul(u, u) == -ONE


def test_distributive_example():
    assert (ONE + I) * (ONE + J) == Quaternion(1, 1, 1, 1)


def test_inverse_examples():
    q = Quaternion(2, 1, 0, -3)
    assert close(q * q_inv(q), ONE)
    assert q_inv(I) == -I
    assert q_inv(Quaternion(2.0)) == Quaternion(0.5)
    assert q_inv(Quaternion(1, 1, 1, 1)) == Quaternion(0.25, -0.25, -0.25, -0.25)


def test_inverse_of_zero_is_refused():
    with pytest.raises(DomainError):
        q_inv(Quaternion())


def test_scalars_commute_and_divide():
    q = Quaternion(1, 2, 3, 4)
    assert 2.0 * q == q * 2.0 == Quaternion(2, 4, 6, 8)
    assert q / 2.0 == Quaternion(0.5, 1, 1.5, 2)
    assert close(q / q, ONE)
    assert 1.0 - q == Quaternion(0, -2, -3, -4)


@given(quats, quats)
def test_norm_is_multiplicative(a, b):
    lhs = (a * b).norm()
    rhs = a.norm() * b.norm()
    assert abs(lhs - rhs) <= 4 * sys.float_info.epsilon * rhs + 1e-300


@given(quats, quats, quats)
def test_associativity(a, b, c):
    err = ((a * b) * c - a * (b * c)).norm()
    assert err <= 1e-13 * max(1.0, a.norm() * b.norm() * c.norm())


@given(quats)
def test_inverse_law(q):
    if q.norm() < 1e-3:
        return
    assert close(q * q.inv(), ONE)
    assert close(q.inv() * q, ONE)


@given(quats)
def test_conjugate_gives_norm(q):
    assert close(q * q.conj(), Quaternion(q.norm2()))


# --- coordinates ------------------------------------------------------------


def test_iota_from_cartesian_examples():
    assert iota_from_cartesian(1, 0, 0) == I
    assert close(iota_from_cartesian(0, 3, 4), Quaternion(0, 0, 0.6, 0.8))
    with pytest.raises(DomainError):
        iota_from_cartesian(0, 0, 0)


def test_to_spherical_examples():
    sp = to_spherical(Quaternion(1, 2, 0, 0))
    assert sp == pytest.approx((1.0, 2.0, 0.0, math.pi / 2))
    assert not sp.degenerate
    assert close(from_spherical(SphericalPoint(0, 1, math.pi / 2, math.pi / 2)), J)


def test_pole_convention():
    sp = to_spherical(Quaternion(3, 0, 0, 4))
    assert sp == (3.0, 4.0, 0.0, 0.0)
    assert sp.degenerate


def test_origin_has_no_spherical_form():
    with pytest.raises(DomainError):
        to_spherical(Quaternion(1.0))


@given(finite, finite, finite, finite)
def test_round_trip(t, x, y, z):
    if math.hypot(x, y) < 1e-6:
        return
    q = Quaternion(t, x, y, z)
    sp = to_spherical(q)
    assert 0.0 <= sp.alpha < 2 * math.pi and 0.0 < sp.beta < math.pi
    assert sp.r == pytest.approx(math.sqrt(x * x + y * y + z * z), rel=1e-15)
    assert close(from_spherical(sp), q)


@given(finite, finite, finite)
def test_iota_chart_matches_cartesian(x, y, z):
    if math.hypot(x, y) < 1e-6:
        return
    sp = to_spherical(Quaternion(0.0, x, y, z))
    assert (iota_at(sp.alpha, sp.beta) - iota_from_cartesian(x, y, z)).norm() < 1e-13


@given(st.floats(0, 2 * math.pi), st.floats(0.01, math.pi - 0.01))
def test_iota_squares_to_minus_one(a, b):
    assert (iota_at(a, b) * iota_at(a, b) + ONE).norm() < 1e-15


# --- frame ------------------------------------------------------------------


def test_frame_at_equator():
    fr = frame_at(0.0, math.pi / 2)
    assert close(fr.iota, I, 1e-15)
    assert close(fr.iota_alpha, J, 1e-15)
    assert close(fr.iota_beta, -K, 1e-15)
    assert close(fr.inv_iota_alpha, -J, 1e-15)
    assert close(fr.inv_iota_beta, K, 1e-15)
    fr = frame_at(math.pi / 2, math.pi / 2)
    assert close(fr.iota, J, 1e-15)
    assert close(fr.iota_alpha, -I, 1e-15)


def test_frame_refused_at_poles():
    for b in (0.0, math.pi, 1e-13):
        with pytest.raises(DegenerateFrameError):
            frame_at(0.3, b)
        with pytest.raises(DegenerateFrameError):
            frame_derivatives(0.3, b)


@settings(max_examples=200)
@given(st.floats(0, 2 * math.pi), st.floats(0.05, math.pi - 0.05))
def test_frame_algebra(a, b):
    fr = frame_at(a, b)
    assert (fr.iota_alpha * fr.iota_beta + fr.iota_beta * fr.iota_alpha).norm() < 1e-14
    assert close(fr.iota_alpha * fr.inv_iota_alpha, ONE)
    assert close(fr.iota_beta * fr.inv_iota_beta, ONE)
    sb = math.sin(b)
    assert close(fr.inv_iota_alpha, -1.0 / (sb * sb) * fr.iota_alpha)
    assert close(fr.inv_iota_beta, -fr.iota_beta)


def test_frame_derivatives_match_finite_differences():
    # oracle: fd4 of the inverse frame vectors computed by q_inv
    rng = random.Random(7)
    h = 1e-4
    for _ in range(200):
        a, b = rng.uniform(0, 2 * math.pi), rng.uniform(0.3, math.pi - 0.3)

        def d(fn, var):
            def at(s):
                return fn(*(frame_at(s, b) if var == 0 else frame_at(a, s)))

            x = a if var == 0 else b
            return (at(x - 2 * h) - 8.0 * at(x - h) + 8.0 * at(x + h) - at(x + 2 * h)) * (1.0 / (12 * h))

        ia = lambda *fr: fr[3]  # noqa: E731
        ib = lambda *fr: fr[4]  # noqa: E731
        exp = frame_derivatives(a, b)
        assert (exp.inv_alpha_d_alpha - d(ia, 0)).norm() < 1e-9
        assert (exp.inv_alpha_d_beta - d(ia, 1)).norm() < 1e-9
        assert (exp.inv_beta_d_alpha - d(ib, 0)).norm() < 1e-9
        assert (exp.inv_beta_d_beta - d(ib, 1)).norm() < 1e-9


def test_jacobian_round_trip():
    rng = random.Random(3)
    for _ in range(50):
        sp = SphericalPoint(rng.uniform(-1, 1), rng.uniform(0.2, 3), rng.uniform(0, 6.28), rng.uniform(0.2, 2.9))
        cart = tuple(rng.uniform(-1, 1) for _ in range(4))
        back = spherical_to_cartesian_partials(sp, *cartesian_to_spherical_partials(sp, *cart))
        assert back == pytest.approx(cart, abs=1e-12)
