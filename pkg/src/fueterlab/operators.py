"""Fueter operators, Laplacian and the angular operator over derivative backends.

All operators act on :class:`~fueterlab.fields.Field` objects at a
:class:`~fueterlab.quat_core.SphericalPoint`.  First partials come from the
field (``analytic``) or from central differences in ``(t, r, alpha, beta)``
(``fd2``/``fd4``); Cartesian partials always go through the exact Jacobian of
the spherical chart, so stencils never step across the polar axis.

Second derivatives are finite differences of analytic first partials when the
field has them, otherwise plain second-difference stencils on values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import BackendError, DegenerateFrameError, NumericError
from .fields import Field, FunctionField, StructuredField
from .quat_core import (
    DEGENERATE_SIN,
    I,
    J,
    K,
    Quaternion,
    SphericalPoint,
    frame_at,
    frame_derivatives,
    iota_at,
    spherical_to_cartesian_partials,
)

BACKENDS = ("analytic", "fd2", "fd4")

# (offset, weight) pairs; derivative = sum(weight * f(x + offset*h)) / h
FIRST_STENCILS = {
    "fd2": ((-1, -0.5), (1, 0.5)),
    "fd4": ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)),
}
SECOND_STENCILS = {
    "fd2": ((-1, 1.0), (0, -2.0), (1, 1.0)),
    "fd4": ((-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0)),
}
ORDERS = {"fd2": 2, "fd4": 4}


class MeaninglessResultWarning(UserWarning):
    """An operator was applied outside the hypothesis its formula relies on."""


@dataclass(frozen=True)
class DerivativeEngine:
    """How derivatives are obtained.

    ``backend`` selects first partials.  ``h`` is the step of any finite
    difference the engine performs; with the analytic backend it is the step
    used when second derivatives are differenced from analytic first partials.
    """

    backend: str = "analytic"
    h: float = 5e-4
    richardson: bool = False

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ValueError(f"step h must be positive, got {self.h!r}")

    @property
    def scheme(self) -> str:
        return "fd4" if self.backend == "analytic" else self.backend

    @property
    def order(self) -> int:
        return ORDERS[self.scheme]

    def describe(self) -> str:
        return self.backend + ("+richardson" if self.richardson else "")

    def as_dict(self) -> dict:
        return {"backend": self.backend, "h": self.h, "richardson": self.richardson}


ANALYTIC = DerivativeEngine()
# third-order quantities: fd4 around first-order closed forms
OUTER = DerivativeEngine("fd4", h=5e-4)


def _finite(q, what: str):
    if isinstance(q, Quaternion):
        ok = q.is_finite()
    else:
        ok = math.isfinite(q)
    if not ok:
        raise NumericError(f"non-finite value in {what}")
    return q


def _diff(fn, x: float, h: float, scheme: str, richardson: bool = False):
    """Central first difference of ``fn`` at ``x``."""

    def once(step):
        return sum(w * fn(x + o * step) for o, w in FIRST_STENCILS[scheme]) * (1.0 / step)

    if not richardson:
        return once(h)
    p = 2.0 ** ORDERS[scheme]
    return (p * once(h / 2.0) - once(h)) * (1.0 / (p - 1.0))


def _diff2(fn, x: float, h: float, scheme: str):
    return sum(w * fn(x + o * h) for o, w in SECOND_STENCILS[scheme]) * (1.0 / (h * h))


def _check_point(p: SphericalPoint):
    if p.r <= 0.0 or abs(math.sin(p.beta)) < DEGENERATE_SIN:
        raise DegenerateFrameError(f"operators need r > 0 and sin(beta) != 0, got {p}")


# ---------------------------------------------------------------------------
# partials


def spherical_partials(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC):
    """``(f_t, f_r, f_alpha, f_beta)`` as quaternions."""
    if engine.backend == "analytic":
        if not f.analytic:
            raise BackendError(f"analytic backend needs analytic partials; {f.name} has none")
        return tuple(_as_q(d) for d in f.spherical_partials(p))
    out = []
    for k in range(4):
        out.append(
            _diff(lambda s, k=k: f.value(p.shifted(k, s - p[k])), p[k], engine.h, engine.scheme, engine.richardson)
        )
    return tuple(out)


def _as_q(d):
    return d if isinstance(d, Quaternion) else Quaternion(d)


def cartesian_partials(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC):
    """``(f_t, f_x, f_y, f_z)`` as quaternions."""
    _check_point(p)
    if engine.backend == "analytic":
        if not f.analytic:
            raise BackendError(f"analytic backend needs analytic partials; {f.name} has none")
        return tuple(_as_q(d) for d in f.cartesian_partials(p))
    return spherical_to_cartesian_partials(p, *spherical_partials(f, p, engine))


def second_partial(f: Field, p: SphericalPoint, i: int, j: int, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """``d_i d_j f`` in spherical variables (indices into ``(t, r, alpha, beta)``).

    Analytic first partials are differenced once along ``i``; value-only
    fields use second-difference stencils.
    """
    h, scheme = engine.h, engine.scheme
    if f.analytic and engine.backend == "analytic":
        return _diff(lambda s: _as_q(f.spherical_partials(p.shifted(i, s - p[i]))[j]), p[i], h, scheme)
    if i == j:
        return _diff2(lambda s: f.value(p.shifted(i, s - p[i])), p[i], h, scheme)
    inner = DerivativeEngine(scheme, h)
    return _diff(lambda s: spherical_partials(f, p.shifted(i, s - p[i]), inner)[j], p[i], h, scheme)


# ---------------------------------------------------------------------------
# Fueter operators


def _left(d):
    d_t, d_x, d_y, d_z = d
    return d_t + I * d_x + J * d_y + K * d_z


def _right(d):
    d_t, d_x, d_y, d_z = d
    return d_t + d_x * I + d_y * J + d_z * K


def _conj_left(d):
    d_t, d_x, d_y, d_z = d
    return d_t - I * d_x - J * d_y - K * d_z


def _conj_right(d):
    d_t, d_x, d_y, d_z = d
    return d_t - d_x * I - d_y * J - d_z * K


def fueter_left(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """``D_l f = f_t + i f_x + j f_y + k f_z``."""
    return _finite(_left(cartesian_partials(f, p, engine)), "fueter_left")


def fueter_right(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """``D_r f = f_t + f_x i + f_y j + f_z k``."""
    return _finite(_right(cartesian_partials(f, p, engine)), "fueter_right")


def fueter_conj_left(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    return _finite(_conj_left(cartesian_partials(f, p, engine)), "fueter_conj_left")


def fueter_conj_right(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    return _finite(_conj_right(cartesian_partials(f, p, engine)), "fueter_conj_right")


def fueter_pair(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC):
    """``(D_l f, D_r f)`` sharing one set of partials."""
    d = cartesian_partials(f, p, engine)
    return _finite(_left(d), "fueter_left"), _finite(_right(d), "fueter_right")


def all_fueter(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> dict:
    d = cartesian_partials(f, p, engine)
    return {"l": _left(d), "r": _right(d), "lbar": _conj_left(d), "rbar": _conj_right(d)}


def laplacian(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """4D Laplacian ``f_tt + f_xx + f_yy + f_zz`` via the spherical chart.

    ``f_tt + f_rr + 2 f_r / r + (f_bb + cot(b) f_b + f_aa / sin(b)^2) / r^2``.
    """
    _check_point(p)
    _, r, _, b = p
    sb, cb = math.sin(b), math.cos(b)
    if f.analytic and engine.backend == "analytic":
        d = spherical_partials(f, p, engine)
    else:
        d = spherical_partials(f, p, DerivativeEngine(engine.scheme, engine.h))
    f_tt, f_rr, f_aa, f_bb = (second_partial(f, p, k, k, engine) for k in range(4))
    lap = f_tt + f_rr + (2.0 / r) * d[1] + (1.0 / (r * r)) * (f_bb + (cb / sb) * d[3] + (1.0 / (sb * sb)) * f_aa)
    return _finite(lap, "laplacian")


# ---------------------------------------------------------------------------
# angular operator


def angular_derivative(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """``inv(iota_a) f_alpha + inv(iota_b) f_beta`` (frame inverses on the left)."""
    fr = frame_at(p.alpha, p.beta)
    d = spherical_partials(f, p, engine)
    return _finite(fr.inv_iota_alpha * d[2] + fr.inv_iota_beta * d[3], "angular_derivative")


def angular_second(v: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """The angular operator applied twice to a scalar, expanded by the product rule.

    Both mixed partials are computed separately, so their cancellation is
    observed rather than assumed.
    """
    fr = frame_at(p.alpha, p.beta)
    dfr = frame_derivatives(p.alpha, p.beta)
    ia, ib = fr.inv_iota_alpha, fr.inv_iota_beta
    d = spherical_partials(v, p, engine)
    v_a, v_b = d[2], d[3]
    v_aa = second_partial(v, p, 2, 2, engine)
    v_ab = second_partial(v, p, 2, 3, engine)  # d_alpha of v_beta
    v_ba = second_partial(v, p, 3, 2, engine)  # d_beta of v_alpha
    v_bb = second_partial(v, p, 3, 3, engine)
    first = ia * (dfr.inv_alpha_d_alpha * v_a + ia * v_aa + dfr.inv_beta_d_alpha * v_b + ib * v_ab)
    second = ib * (dfr.inv_alpha_d_beta * v_a + ia * v_ba + dfr.inv_beta_d_beta * v_b + ib * v_bb)
    return _finite(first + second, "angular_second")


def angular_second_rhs(v: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """Reduced form ``-iota A(v) - v_aa / sin(b)^2 - v_bb - cot(b) v_b`` with ``A`` the angular operator."""
    b = p.beta
    sb = math.sin(b)
    iota = iota_at(p.alpha, b)
    d = spherical_partials(v, p, engine)
    v_aa = second_partial(v, p, 2, 2, engine)
    v_bb = second_partial(v, p, 3, 3, engine)
    return -(iota * angular_derivative(v, p, engine)) - (1.0 / (sb * sb)) * v_aa - v_bb - (math.cos(b) / sb) * d[3]


def fueter_left_spherical(f: Field, p: SphericalPoint, engine: DerivativeEngine = ANALYTIC) -> Quaternion:
    """``(d_t + iota d_r) f - (1/r) * angular_derivative(f)``."""
    _check_point(p)
    iota = iota_at(p.alpha, p.beta)
    d = spherical_partials(f, p, engine)
    fr = frame_at(p.alpha, p.beta)
    ang = fr.inv_iota_alpha * d[2] + fr.inv_iota_beta * d[3]
    return _finite(d[0] + iota * d[1] - (1.0 / p.r) * ang, "fueter_left_spherical")


def laplacian_via_dbar(f: StructuredField, p: SphericalPoint) -> Quaternion:
    """Laplacian from first derivatives only, valid when ``D_l f = -2 v / r``.

    ``-2 * (-(iota/r) f_t + (iota/r^2) v + (1/r^2) * angular_derivative(v))``.
    For fields outside that class the number has no meaning; a
    :class:`MeaninglessResultWarning` is emitted.
    """
    if not getattr(f, "satisfies_condition", False):
        warnings.warn(f"laplacian_via_dbar applied to {f.name}, which does not satisfy the defect equation",
                      MeaninglessResultWarning, stacklevel=2)
    _check_point(p)
    u, v, du, dv = f.jet(p)
    r = p.r
    fr = frame_at(p.alpha, p.beta)
    iota = fr.iota
    f_t = du[0] + iota * dv[0]
    ang_v = fr.inv_iota_alpha * dv[2] + fr.inv_iota_beta * dv[3]
    inner = -(1.0 / r) * (iota * f_t) + (v / (r * r)) * iota + (1.0 / (r * r)) * ang_v
    return _finite(-2.0 * inner, "laplacian_via_dbar")


def laplacian_field(f: Field, route: str = "direct", engine: DerivativeEngine = ANALYTIC) -> FunctionField:
    """Value-only field ``q -> Laplacian of f at q`` for either route."""
    if route == "dbar":
        return FunctionField(lambda q: laplacian_via_dbar(f, q), name=f"lap_dbar[{f.name}]")
    if route == "direct":
        return FunctionField(lambda q: laplacian(f, q, engine), name=f"lap[{f.name}]")
    raise ValueError(f"unknown Laplacian route {route!r}")
