"""Quaternion algebra, spherical coordinates and the radial unit frame.

A quaternion ``p = t + x i + y j + z k`` with ``r = |(x, y, z)| > 0`` is written
``p = t + r * iota`` where ``iota`` is the unit pure-imaginary direction

    iota = (cos a sin b, sin a sin b, cos b)

parametrised by the azimuth ``a`` (alpha) and polar angle ``b`` (beta).

Closed-form frame derivatives
-----------------------------
With ``iota_a = d iota / d alpha`` and ``iota_b = d iota / d beta`` both pure and
orthogonal to ``iota``, their quaternionic inverses are

    inv(iota_a) = -iota_a / sin(b)**2 = (sin a, -cos a, 0) / sin b
    inv(iota_b) = -iota_b             = (-cos a cos b, -sin a cos b, sin b)

and differentiating those vectors componentwise gives

    d/da inv(iota_a) = (cos a, sin a, 0) / sin b
    d/db inv(iota_a) = -cos b / sin(b)**2 * (sin a, -cos a, 0)
    d/da inv(iota_b) = (sin a cos b, -cos a cos b, 0)
    d/db inv(iota_b) = (cos a sin b, sin a sin b, cos b) = iota

These are what :func:`frame_derivatives` returns; the test-suite checks them
against finite differences of :func:`frame_at`.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import DegenerateFrameError, DomainError

TWO_PI = 2.0 * math.pi
DEGENERATE_SIN = 1e-12


class Quaternion(NamedTuple):
    """Immutable quaternion ``w + x i + y j + z k`` (Hamilton convention, ij = k)."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)
        return Quaternion(self.w + other, self.x, self.y, self.z)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)
        return Quaternion(self.w - other, self.x, self.y, self.z)

    def __rsub__(self, other):
        return Quaternion(other - self.w, -self.x, -self.y, -self.z)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return q_mul(self, other)
        return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)

    def __rmul__(self, other):
        # only reached for real scalars, which commute
        return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)

    def __truediv__(self, other):
        if isinstance(other, Quaternion):
            return q_mul(self, q_inv(other))
        return Quaternion(self.w / other, self.x / other, self.y / other, self.z / other)

    def __abs__(self):
        return self.norm()

    def conj(self) -> Quaternion:
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self) -> float:
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def inv(self) -> Quaternion:
        return q_inv(self)

    @property
    def vector(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def is_finite(self) -> bool:
        return all(map(math.isfinite, self))


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)
ZERO = Quaternion()
UNITS = (I, J, K)


def q_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product ``a * b``."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return Quaternion(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def q_conj(a: Quaternion) -> Quaternion:
    return a.conj()


def q_inv(a: Quaternion) -> Quaternion:
    """``conj(a) / |a|^2``; raises :class:`DomainError` for the zero quaternion."""
    n2 = a.norm2()
    if n2 == 0.0:
        raise DomainError("zero quaternion has no inverse")
    return Quaternion(a.w / n2, -a.x / n2, -a.y / n2, -a.z / n2)


def pure(v) -> Quaternion:
    return Quaternion(0.0, v[0], v[1], v[2])


class SphericalPoint(NamedTuple):
    """Point ``t + r * iota(alpha, beta)`` of quaternion space."""

    t: float
    r: float
    alpha: float
    beta: float

    @property
    def degenerate(self) -> bool:
        return abs(math.sin(self.beta)) < DEGENERATE_SIN

    def shifted(self, index: int, delta: float) -> SphericalPoint:
        values = list(self)
        values[index] += delta
        return SphericalPoint(*values)

    def as_dict(self) -> dict:
        return {"t": self.t, "r": self.r, "alpha": self.alpha, "beta": self.beta}


def iota_from_cartesian(x: float, y: float, z: float) -> Quaternion:
    """Unit radial direction ``(x i + y j + z k) / r``."""
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise DomainError("iota is undefined at r = 0")
    return Quaternion(0.0, x / r, y / r, z / r)


def to_spherical(q: Quaternion) -> SphericalPoint:
    """Split ``q`` into ``(t, r, alpha, beta)``.

    On the t-axis through the poles (x = y = 0) alpha is set to 0 and the
    returned point reports ``degenerate``.
    """
    t, x, y, z = q
    rho = math.hypot(x, y)
    r = math.hypot(rho, z)
    if r == 0.0:
        raise DomainError("spherical coordinates need r > 0")
    beta = math.atan2(rho, z)
    if rho == 0.0:
        alpha = 0.0
    else:
        alpha = math.atan2(y, x) % TWO_PI
        if alpha >= TWO_PI:  # tiny negative angles round up to 2*pi
            alpha = 0.0
    return SphericalPoint(t, r, alpha, beta)


def from_spherical(sp: SphericalPoint) -> Quaternion:
    t, r, a, b = sp
    sb = math.sin(b)
    return Quaternion(t, r * math.cos(a) * sb, r * math.sin(a) * sb, r * math.cos(b))


def iota_at(alpha: float, beta: float) -> Quaternion:
    sb = math.sin(beta)
    return Quaternion(0.0, math.cos(alpha) * sb, math.sin(alpha) * sb, math.cos(beta))


def iota_partials(alpha: float, beta: float) -> tuple[Quaternion, Quaternion]:
    """``(d iota/d alpha, d iota/d beta)``; defined on the whole sphere."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return (Quaternion(0.0, -sa * sb, ca * sb, 0.0), Quaternion(0.0, ca * cb, sa * cb, -sb))


class Frame(NamedTuple):
    iota: Quaternion
    iota_alpha: Quaternion
    iota_beta: Quaternion
    inv_iota_alpha: Quaternion
    inv_iota_beta: Quaternion


def frame_at(alpha: float, beta: float) -> Frame:
    if abs(math.sin(beta)) < DEGENERATE_SIN:
        raise DegenerateFrameError(f"frame undefined at beta={beta!r} (sin beta = 0)")
    ia, ib = iota_partials(alpha, beta)
    return Frame(iota_at(alpha, beta), ia, ib, q_inv(ia), q_inv(ib))


class FrameDerivatives(NamedTuple):
    inv_alpha_d_alpha: Quaternion
    inv_alpha_d_beta: Quaternion
    inv_beta_d_alpha: Quaternion
    inv_beta_d_beta: Quaternion


def frame_derivatives(alpha: float, beta: float) -> FrameDerivatives:
    """Closed-form alpha/beta derivatives of the inverse frame vectors."""
    sb = math.sin(beta)
    if abs(sb) < DEGENERATE_SIN:
        raise DegenerateFrameError(f"frame undefined at beta={beta!r} (sin beta = 0)")
    ca, sa, cb = math.cos(alpha), math.sin(alpha), math.cos(beta)
    return FrameDerivatives(
        Quaternion(0.0, ca / sb, sa / sb, 0.0),
        Quaternion(0.0, -cb * sa / (sb * sb), cb * ca / (sb * sb), 0.0),
        Quaternion(0.0, sa * cb, -ca * cb, 0.0),
        Quaternion(0.0, ca * sb, sa * sb, cb),
    )


def spherical_jacobian(sp: SphericalPoint) -> tuple[tuple[float, float, float], ...]:
    """Rows ``d(r, alpha, beta)/dx``, ``.../dy``, ``.../dz`` at ``sp``."""
    _, r, a, b = sp
    sb = math.sin(b)
    if abs(sb) < DEGENERATE_SIN or r <= 0.0:
        raise DegenerateFrameError("Jacobian of spherical coordinates is singular here")
    ca, sa, cb = math.cos(a), math.sin(a), math.cos(b)
    return (
        (ca * sb, -sa / (r * sb), ca * cb / r),
        (sa * sb, ca / (r * sb), sa * cb / r),
        (cb, 0.0, -sb / r),
    )


def spherical_to_cartesian_partials(sp: SphericalPoint, d_t, d_r, d_a, d_b):
    """Map ``(d/dt, d/dr, d/dalpha, d/dbeta)`` to ``(d/dt, d/dx, d/dy, d/dz)``.

    Works for real or quaternion-valued partials.
    """
    jx, jy, jz = spherical_jacobian(sp)
    return (
        d_t,
        jx[0] * d_r + jx[1] * d_a + jx[2] * d_b,
        jy[0] * d_r + jy[1] * d_a + jy[2] * d_b,
        jz[0] * d_r + jz[1] * d_a + jz[2] * d_b,
    )


def cartesian_to_spherical_partials(sp: SphericalPoint, d_t, d_x, d_y, d_z):
    """Inverse of :func:`spherical_to_cartesian_partials` (valid at any r >= 0)."""
    _, r, a, b = sp
    ca, sa, cb, sb = math.cos(a), math.sin(a), math.cos(b), math.sin(b)
    d_r = ca * sb * d_x + sa * sb * d_y + cb * d_z
    d_a = (-r * sa * sb) * d_x + (r * ca * sb) * d_y
    d_b = (r * ca * cb) * d_x + (r * sa * cb) * d_y + (-r * sb) * d_z
    return d_t, d_r, d_a, d_b
