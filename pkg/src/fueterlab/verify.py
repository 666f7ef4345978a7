"""Residual checks over sampled points.

Every check evaluates a pointwise residual (the norm of left side minus right
side of one identity) together with the magnitude of the field under test and
folds them into a :class:`ResidualReport`.  The relative residual at a point
is ``|residual| / (1 + |f(p)|)``; ``rel_max`` is its maximum over the sample
and ``pass`` means ``rel_max <= tol``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

from .errors import ConfigError, EmptySampleError
from .fields import (
    AngularPair,
    CartesianField,
    Field,
    FunctionField,
    ScalarField,
    StructuredField,
    fueter_transform,
)
from .operators import (
    ANALYTIC,
    OUTER,
    DerivativeEngine,
    angular_derivative,
    angular_second,
    angular_second_rhs,
    all_fueter,
    fueter_left,
    fueter_left_spherical,
    fueter_pair,
    laplacian,
    laplacian_field,
    laplacian_via_dbar,
    second_partial,
    spherical_partials,
    _diff,
)
from .quat_core import (
    TWO_PI,
    Quaternion,
    SphericalPoint,
    frame_at,
    frame_derivatives,
    iota_at,
)

POLE_EXCLUSION = 0.15
MAX_REJECTIONS = 10_000
FLOOR = 1e-11

FIRST_ORDER_TOL = {"analytic": 1e-9, "fd4": 1e-6, "fd2": 1e-4}
DEGRADED_TOL = 1e-4


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SamplingPlan:
    t_min: float = -1.5
    t_max: float = 1.5
    r_min: float = 0.4
    r_max: float = 2.5
    beta_min: float = 0.35
    beta_max: float = math.pi - 0.35
    n: int = 256
    seed: int = 12345
    mode: str = "random"

    def validate(self) -> None:
        if not self.r_min > 0.0:
            raise ConfigError(f"r_min must be > 0 (r = 0 is singular), got {self.r_min}")
        if not (self.t_min < self.t_max and self.r_min < self.r_max):
            raise ConfigError("empty sampling box")
        if not (0.0 < self.beta_min < self.beta_max < math.pi):
            raise ConfigError("beta range must satisfy 0 < beta_min < beta_max < pi")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.mode not in ("random", "grid"):
            raise ConfigError(f"unknown sampling mode {self.mode!r}")

    def as_dict(self) -> dict:
        return {
            "t": [self.t_min, self.t_max],
            "r": [self.r_min, self.r_max],
            "alpha": [0.0, TWO_PI],
            "beta": [self.beta_min, self.beta_max],
            "n": self.n,
            "rng_seed": self.seed,
            "mode": self.mode,
        }


def _near_pole(t: float, r: float, poles) -> bool:
    return any(abs(complex(t, r) - z) < POLE_EXCLUSION for z in poles)


def sample_points(plan: SamplingPlan, exclude: Sequence[complex] = ()) -> list[SphericalPoint]:
    """Deterministic sample of the plan's box.

    ``exclude`` holds seed-plane singularities; points closer than
    ``POLE_EXCLUSION`` to one of them are redrawn (random mode) or dropped
    (grid mode, where ``n`` is the number of points per axis).
    """
    plan.validate()
    if plan.mode == "grid":
        k = plan.n

        def axis(lo, hi):
            if k == 1:
                return [0.5 * (lo + hi)]
            return [lo + (hi - lo) * i / (k - 1) for i in range(k)]

        alphas = [TWO_PI * i / k for i in range(k)]
        pts = [
            SphericalPoint(t, r, a, b)
            for t in axis(plan.t_min, plan.t_max)
            for r in axis(plan.r_min, plan.r_max)
            for a in alphas
            for b in axis(plan.beta_min, plan.beta_max)
        ]
        return [p for p in pts if not _near_pole(p.t, p.r, exclude)]

    rng = random.Random(plan.seed)
    pts = []
    rejections = 0
    while len(pts) < plan.n:
        t = rng.uniform(plan.t_min, plan.t_max)
        r = rng.uniform(plan.r_min, plan.r_max)
        a = rng.uniform(0.0, TWO_PI)
        b = rng.uniform(plan.beta_min, plan.beta_max)
        if _near_pole(t, r, exclude):
            rejections += 1
            if rejections > MAX_REJECTIONS:
                raise ConfigError("sampling box lies (almost) entirely inside a pole exclusion zone")
            continue
        pts.append(SphericalPoint(t, r, a, b))
    return pts


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ResidualReport:
    check: str
    field: str
    backend: str
    h: float
    n: int
    max_abs: float
    mean_abs: float
    rel_max: float
    worst_point: SphericalPoint
    tol: float
    passed: bool

    KEYS = ("check", "field", "backend", "h", "n", "max_abs", "mean_abs", "rel_max", "worst_point", "tol", "pass")

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "field": self.field,
            "backend": self.backend,
            "h": self.h,
            "n": self.n,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "rel_max": self.rel_max,
            "worst_point": self.worst_point.as_dict(),
            "tol": self.tol,
            "pass": self.passed,
        }

    def csv_row(self) -> list:
        wp = self.worst_point
        return [self.check, self.field, self.backend, repr(self.h), self.n, repr(self.max_abs),
                repr(self.mean_abs), repr(self.rel_max), repr(wp.t), repr(wp.r), repr(wp.alpha),
                repr(wp.beta), repr(self.tol), self.passed]

    CSV_HEADER = ("check", "field", "backend", "h", "n", "max_abs", "mean_abs", "rel_max",
                  "worst_t", "worst_r", "worst_alpha", "worst_beta", "tol", "pass")


@dataclass
class Accumulator:
    """Mergeable residual statistics.

    Entries are keyed by sample index, so merging partial accumulators built
    over any partition of the sample reproduces the serial result exactly.
    """

    entries: dict = dc_field(default_factory=dict)  # index -> (abs, rel, point)

    def add(self, index: int, residual: float, magnitude: float, point: SphericalPoint) -> None:
        self.entries[index] = (residual, residual / (1.0 + magnitude), point)

    def merge(self, other: Accumulator) -> Accumulator:
        out = Accumulator(dict(self.entries))
        out.entries.update(other.entries)
        return out

    def report(self, check: str, field_name: str, backend: str, h: float, tol: float) -> ResidualReport:
        if not self.entries:
            raise EmptySampleError(f"{check} on {field_name}: no sample points")
        order = sorted(self.entries)
        abs_vals = [self.entries[i][0] for i in order]
        max_abs = max(abs_vals)
        mean_abs = math.fsum(abs_vals) / len(abs_vals)
        rel_max, worst = -1.0, None
        for i in order:
            rel = self.entries[i][1]
            # strict '>' keeps the first occurrence on ties; NaN counts as worst
            if rel > rel_max or (math.isnan(rel) and not math.isnan(rel_max)):
                rel_max, worst = rel, self.entries[i][2]
        return ResidualReport(check, field_name, backend, h, len(order), max_abs, mean_abs, rel_max,
                              worst, tol, bool(rel_max <= tol))


def _run(check, name, points, point_fn, backend, h, tol) -> ResidualReport:
    acc = Accumulator()
    for idx, p in enumerate(points):
        res, mag = point_fn(p)
        acc.add(idx, res, mag, p)
    return acc.report(check, name, backend, h, tol)


def _points(plan: SamplingPlan, obj) -> list[SphericalPoint]:
    pts = sample_points(plan, getattr(obj, "poles", ()))
    if not pts:
        raise EmptySampleError("sampling plan produced no usable points")
    return pts


def first_order_tol(engine: DerivativeEngine) -> float:
    return FIRST_ORDER_TOL[engine.backend]


def _hybrid_tol(engine: DerivativeEngine, nominal: float) -> float:
    return nominal if engine.backend == "analytic" else max(nominal, DEGRADED_TOL)


def _first_h(engine: DerivativeEngine) -> float:
    return 0.0 if engine.backend == "analytic" else engine.h


def _hybrid_backend(engine: DerivativeEngine) -> str:
    return engine.describe() + "+" + engine.scheme


def _magnitude(f, p) -> float:
    return f.magnitude(p)


# ---------------------------------------------------------------------------
# helpers on structured fields


def _v_over_r(f: StructuredField) -> ScalarField:
    v = f.v

    def value(p):
        return v(p) / p.r

    def grad(p):
        val = v(p)
        vt, vr, va, vb = v.partials(p)
        r = p.r
        # (v_r r - v) / r^2 cancels exactly when v is linear in r
        return (vt / r, (vr * r - val) / (r * r), va / r, vb / r)

    return ScalarField(value, grad, name=f"v/r[{f.name}]")


def _defect_scalar(f: StructuredField) -> ScalarField:
    """``-2 v / r``, the value ``D_l f`` must take."""
    g = _v_over_r(f)
    return ScalarField(lambda p: -2.0 * g(p), lambda p: tuple(-2.0 * d for d in g.partials(p)),
                       name=f"-2v/r[{f.name}]")


def _as_scalar_v(obj) -> ScalarField:
    return obj.v if isinstance(obj, StructuredField) else obj


# ---------------------------------------------------------------------------
# checks on structured fields


def check_condition(f: StructuredField, plan: SamplingPlan = SamplingPlan(), engine: DerivativeEngine = ANALYTIC,
                    tol: Optional[float] = None) -> ResidualReport:
    """``D_l f + 2 v / r`` (and ``D_r f + 2 v / r`` for axial fields)."""

    def point(p):
        _, v = f.uv(p)
        target = -2.0 * v / p.r
        dl, dr = fueter_pair(f, p, engine)
        res = (dl - target).norm()
        if f.axial:
            res = max(res, (dr - target).norm())
        return res, _magnitude(f, p)

    return _run("condition", f.name, _points(plan, f), point, engine.describe(), _first_h(engine),
                first_order_tol(engine) if tol is None else tol)


def check_holomorphy_tr(f: StructuredField, plan: SamplingPlan = SamplingPlan(), engine: DerivativeEngine = ANALYTIC,
                        tol: Optional[float] = None) -> ResidualReport:
    """``(d_t + iota d_r) f = 0``, i.e. ``u_t = v_r`` and ``u_r = -v_t``."""

    def point(p):
        d = spherical_partials(f, p, engine)
        iota = iota_at(p.alpha, p.beta)
        return (d[0] + iota * d[1]).norm(), _magnitude(f, p)

    return _run("holomorphy_tr", f.name, _points(plan, f), point, engine.describe(), _first_h(engine),
                first_order_tol(engine) if tol is None else tol)


def check_angular_condition(f: StructuredField, plan: SamplingPlan = SamplingPlan(),
                            engine: DerivativeEngine = ANALYTIC, tol: Optional[float] = None) -> ResidualReport:
    """Three equivalent angular forms, maximum residual per point.

    ``A(f) = 2v``, ``A(u) = iota A(v)`` and ``A(iota f) = 2u`` where ``A`` is the
    angular operator.
    """
    u_field, v_field = f.u, f.v
    iota_f = FunctionField(lambda q: iota_at(q.alpha, q.beta) * f.value(q), name=f"iota*{f.name}")
    iota_f_engine = engine if engine.backend != "analytic" else DerivativeEngine("fd4", engine.h)

    def point(p):
        u, v = f.uv(p)
        iota = iota_at(p.alpha, p.beta)
        r1 = (angular_derivative(f, p, engine) - 2.0 * v).norm()
        r2 = (angular_derivative(u_field, p, engine) - iota * angular_derivative(v_field, p, engine)).norm()
        if engine.backend == "analytic":
            # A(iota f) through the product rule on analytic partials
            fr = frame_at(p.alpha, p.beta)
            d = f.spherical_partials(p)
            fv = f.value(p)
            a_iota_f = (fr.inv_iota_alpha * (fr.iota_alpha * fv + iota * d[2])
                        + fr.inv_iota_beta * (fr.iota_beta * fv + iota * d[3]))
        else:
            a_iota_f = angular_derivative(iota_f, p, iota_f_engine)
        r3 = (a_iota_f - 2.0 * u).norm()
        return max(r1, r2, r3), _magnitude(f, p)

    return _run("angular_condition", f.name, _points(plan, f), point, engine.describe(), _first_h(engine),
                first_order_tol(engine) if tol is None else tol)


def _cr_residual(uvfun, p):
    """Spherical CR system for real pair; ``uvfun(p) -> (u, v, du, dv)``."""
    _, _, du, dv = uvfun(p)
    sb = math.sin(p.beta)
    return max(abs(du[2] / sb - dv[3]), abs(dv[2] / sb + du[3]))


def check_cr_system(obj, plan: SamplingPlan = SamplingPlan(), engine: DerivativeEngine = ANALYTIC,
                    tol: Optional[float] = None) -> ResidualReport:
    """``u_a / sin b = v_b`` and ``v_a / sin b = -u_b`` for a field or an angular pair."""
    if isinstance(obj, AngularPair):
        A, B = obj.A, obj.B
        name = obj.name

        def magnitude(p):
            return math.hypot(A(p), B(p))
    else:
        A, B = obj.u, obj.v
        name = obj.name

        def magnitude(p):
            return obj.magnitude(p)

    def jet(p):
        if engine.backend == "analytic":
            return None, None, A.partials(p), B.partials(p)
        da = [q.w for q in spherical_partials(A, p, engine)]
        db = [q.w for q in spherical_partials(B, p, engine)]
        return None, None, da, db

    def point(p):
        return _cr_residual(jet, p), magnitude(p)

    return _run("cr_system", name, _points(plan, obj), point, engine.describe(), _first_h(engine),
                first_order_tol(engine) if tol is None else tol)


def check_t_derivative_closure(f: StructuredField, plan: SamplingPlan = SamplingPlan(),
                               engine: DerivativeEngine = ANALYTIC, tol: Optional[float] = None) -> ResidualReport:
    """The analytic ``d/dt`` field of ``f`` satisfies the defect equation as well."""
    g = f.t_derivative()
    rep = check_condition(g, plan, engine, tol)
    return _rename(rep, "t_derivative_closure", f.name)


def _rename(rep: ResidualReport, check: str, name: str) -> ResidualReport:
    return ResidualReport(check, name, rep.backend, rep.h, rep.n, rep.max_abs, rep.mean_abs, rep.rel_max,
                          rep.worst_point, rep.tol, rep.passed)


def check_harmonic_v_over_r(f: StructuredField, plan: SamplingPlan = SamplingPlan(),
                            engine: DerivativeEngine = ANALYTIC, tol: Optional[float] = None) -> ResidualReport:
    """4D Laplacian of ``v / r`` vanishes (second derivatives by FD of analytic first partials)."""
    g = _v_over_r(f)

    def point(p):
        return laplacian(g, p, engine).norm(), _magnitude(f, p)

    return _run("harmonic_v_over_r", f.name, _points(plan, f), point, _hybrid_backend(engine), engine.h,
                _hybrid_tol(engine, 1e-6) if tol is None else tol)


THEOREM_TOL = {"dbar": 1e-6, "direct": 1e-4, "both": 1e-4}


def check_theorem(f: StructuredField, plan: SamplingPlan = SamplingPlan(), engine: DerivativeEngine = ANALYTIC,
                  *, outer: DerivativeEngine = OUTER, route: str = "both",
                  tol: Optional[float] = None) -> ResidualReport:
    """``D_l (Laplacian f) = D_r (Laplacian f) = 0``.

    ``route`` picks how the Laplacian is obtained: ``dbar`` (closed form from
    first derivatives, only meaningful for fields satisfying the defect
    equation), ``direct`` (finite differences of analytic first partials) or
    ``both``.  The outer operator is a finite difference with ``outer``.  For
    fields outside the condition class ``both`` falls back to ``direct``.
    """
    if route not in THEOREM_TOL:
        raise ValueError(f"unknown route {route!r}")
    routes = ["dbar", "direct"] if route == "both" else [route]
    if not f.satisfies_condition:
        if route == "dbar":
            raise ValueError(f"{f.name} does not satisfy the defect equation; the dbar route is meaningless")
        routes = ["direct"]
    lap_fields = [laplacian_field(f, r, engine) for r in routes]

    def point(p):
        res = 0.0
        for g in lap_fields:
            dl, dr = fueter_pair(g, p, outer)
            res = max(res, dl.norm(), dr.norm())
        return res, _magnitude(f, p)

    check = "theorem" if route == "both" else f"theorem_{route}"
    if tol is None:
        tol = THEOREM_TOL[route] if engine.backend == "analytic" else DEGRADED_TOL
    return _run(check, f.name, _points(plan, f), point, f"{_hybrid_backend(engine)}/{outer.scheme}", outer.h, tol)


def check_spherical_cartesian(f: Field, plan: SamplingPlan = SamplingPlan(), engine: DerivativeEngine = ANALYTIC,
                              tol: Optional[float] = None) -> ResidualReport:
    """Spherical form of ``D_l`` agrees with the Cartesian definition."""

    def point(p):
        return (fueter_left_spherical(f, p, engine) - fueter_left(f, p, engine)).norm(), _magnitude(f, p)

    return _run("spherical_cartesian", f.name, _points(plan, f), point, engine.describe(), _first_h(engine),
                first_order_tol(engine) if tol is None else tol)


def check_laplacian_routes(f: StructuredField, plan: SamplingPlan = SamplingPlan(),
                           engine: DerivativeEngine = ANALYTIC, tol: Optional[float] = None) -> ResidualReport:
    """Closed-form (first-derivative) Laplacian against the finite-difference one."""

    def point(p):
        return (laplacian_via_dbar(f, p) - laplacian(f, p, engine)).norm(), _magnitude(f, p)

    return _run("laplacian_routes", f.name, _points(plan, f), point, _hybrid_backend(engine), engine.h,
                _hybrid_tol(engine, 1e-6) if tol is None else tol)


def check_angular_laplace_relation(obj, plan: SamplingPlan = SamplingPlan(), engine: DerivativeEngine = ANALYTIC,
                                   tol: Optional[float] = None) -> ResidualReport:
    """``v_aa / sin(b)^2 + v_bb + cot(b) v_b = 0`` (angular Laplacian of ``v``)."""
    v = _as_scalar_v(obj)

    def point(p):
        sb = math.sin(p.beta)
        v_b = spherical_partials(v, p, engine)[3].w
        v_aa = second_partial(v, p, 2, 2, engine).w
        v_bb = second_partial(v, p, 3, 3, engine).w
        return abs(v_aa / (sb * sb) + v_bb + math.cos(p.beta) / sb * v_b), obj.magnitude(p)

    return _run("angular_laplace_relation", obj.name, _points(plan, obj), point, _hybrid_backend(engine), engine.h,
                _hybrid_tol(engine, 1e-7) if tol is None else tol)


def check_operator_commutation(g: Field, plan: SamplingPlan = SamplingPlan(), engine: DerivativeEngine = ANALYTIC,
                               *, outer: DerivativeEngine = OUTER,
                               tol: Optional[float] = None) -> ResidualReport:
    """``D_l``, ``D_r`` and their conjugates commute; ``D_l Dbar_l = Laplacian``.

    For a structured field the operators act on the scalar ``-2 v / r``, and
    the chain ``Dbar_l D_l (-2 v / r) = 0`` is included; for scalar inputs
    ``D_l g = D_r g`` is included as well.
    """
    chain = isinstance(g, StructuredField)
    target = _defect_scalar(g) if chain else g
    scalar = isinstance(target, ScalarField)
    inner = {key: FunctionField(lambda q, key=key: all_fueter(target, q, engine)[key], name=key)
             for key in ("l", "r", "lbar", "rbar")}

    def point(p):
        of = {key: all_fueter(fld, p, outer) for key, fld in inner.items()}
        lap = laplacian(target, p, engine)
        res = max(
            (of["lbar"]["l"] - of["l"]["lbar"]).norm(),
            (of["rbar"]["r"] - of["r"]["rbar"]).norm(),
            (of["lbar"]["l"] - lap).norm(),
            (of["rbar"]["r"] - lap).norm(),
        )
        if scalar:
            base = all_fueter(target, p, engine)
            res = max(res, (base["l"] - base["r"]).norm())
        if chain:
            res = max(res, of["l"]["lbar"].norm())
        return res, _magnitude(g, p)

    return _run("commutation", g.name, _points(plan, g), point, f"{_hybrid_backend(engine)}/{outer.scheme}",
                outer.h, _hybrid_tol(engine, 1e-6) if tol is None else tol)


def check_angular_tr_vanishing(f: StructuredField, plan: SamplingPlan = SamplingPlan(),
                               engine: DerivativeEngine = ANALYTIC, tol: Optional[float] = None) -> ResidualReport:
    """``(d_t + iota d_r)`` annihilates the angular derivative of ``v``."""
    v = f.v

    def ang(p):
        return angular_derivative(v, p, engine)

    def point(p):
        d_t = _diff(lambda s: ang(p.shifted(0, s - p.t)), p.t, engine.h, engine.scheme)
        d_r = _diff(lambda s: ang(p.shifted(1, s - p.r)), p.r, engine.h, engine.scheme)
        return (d_t + iota_at(p.alpha, p.beta) * d_r).norm(), _magnitude(f, p)

    return _run("angular_tr_vanishing", f.name, _points(plan, f), point, _hybrid_backend(engine), engine.h,
                _hybrid_tol(engine, 1e-6) if tol is None else tol)


def check_axial_regularity(f: StructuredField, plan: SamplingPlan = SamplingPlan(),
                           engine: DerivativeEngine = ANALYTIC, tol: Optional[float] = None) -> ResidualReport:
    """The closed-form Laplacian ``g = u~ + iota v~`` of a Fueter field is regular.

    Residual is the larger of ``|(d_t + iota d_r) g - 2 v~ / r|`` (the axial
    form of regularity) and ``|D_l g|``.
    """
    if f.seed is None or not f.axial:
        raise ValueError(f"{f.name} is not a Fueter-mapped field")
    g = fueter_transform(f.seed)

    def point(p):
        _, vt = g.uv(p)
        d = spherical_partials(g, p, engine)
        iota = iota_at(p.alpha, p.beta)
        axial_form = (d[0] + iota * d[1] - 2.0 * vt / p.r).norm()
        return max(axial_form, fueter_left(g, p, engine).norm()), g.magnitude(p)

    return _run("axial_regularity", f.name, _points(plan, f), point, engine.describe(), _first_h(engine),
                first_order_tol(engine) if tol is None else tol)


# ---------------------------------------------------------------------------
# unconditional identities


def frame_residuals(alpha: float, beta: float) -> tuple[float, float, float, float, float]:
    """Residuals of the five inverse-frame identities at one direction."""
    fr = frame_at(alpha, beta)
    dfr = frame_derivatives(alpha, beta)
    ia, ib, iota = fr.inv_iota_alpha, fr.inv_iota_beta, fr.iota
    sb = math.sin(beta)
    return (
        (ia * dfr.inv_alpha_d_alpha + ib * dfr.inv_alpha_d_beta + iota * ia).norm(),
        (ib * dfr.inv_beta_d_beta + iota * ib).norm(),
        (ib * ib + 1.0).norm(),
        (ia * ia + 1.0 / (sb * sb)).norm(),
        (ia * dfr.inv_beta_d_alpha + math.cos(beta) / sb).norm(),
    )


def check_frame_identities(plan: SamplingPlan = SamplingPlan(), tol: float = 1e-12) -> ResidualReport:
    def point(p):
        return max(frame_residuals(p.alpha, p.beta)), 0.0

    return _run("frame_identities", "frame", _points(plan, None), point, "closed-form", 0.0, tol)


def check_second_angular_identity(v: ScalarField, plan: SamplingPlan = SamplingPlan(),
                                  engine: DerivativeEngine = ANALYTIC, tol: Optional[float] = None) -> ResidualReport:
    """The expanded second angular derivative equals its reduced form, for any scalar."""

    def point(p):
        return (angular_second(v, p, engine) - angular_second_rhs(v, p, engine)).norm(), v.magnitude(p)

    return _run("second_angular_identity", v.name, _points(plan, v), point, _hybrid_backend(engine), engine.h,
                _hybrid_tol(engine, 1e-8) if tol is None else tol)


def check_iota_product_rule(f: Field, plan: SamplingPlan = SamplingPlan(),
                            engine: DerivativeEngine = DerivativeEngine("fd4", 1e-3),
                            tol: Optional[float] = None) -> ResidualReport:
    """``A(iota f) = 2 f - iota A(f)`` for quaternion-valued ``f``.

    The left side differentiates the product ``iota f`` numerically with
    ``engine``; the right side uses the analytic partials of ``f``.
    """
    iota_f = FunctionField(lambda q: iota_at(q.alpha, q.beta) * f.value(q), name=f"iota*{f.name}")

    def point(p):
        lhs = angular_derivative(iota_f, p, engine)
        rhs = 2.0 * f.value(p) - iota_at(p.alpha, p.beta) * angular_derivative(f, p, ANALYTIC)
        return (lhs - rhs).norm(), f.magnitude(p)

    nominal = 1e-8 if engine.scheme == "fd4" else DEGRADED_TOL
    return _run("iota_product_rule", f.name, _points(plan, f), point, engine.describe(), engine.h,
                nominal if tol is None else tol)


# ---------------------------------------------------------------------------
# random fixtures for the unconditional identities


def random_trig_scalar(seed: int, terms: int = 3) -> ScalarField:
    """Random trigonometric polynomial in the angles with smooth (t, r) weights."""
    rng = random.Random(seed)
    spec = []
    for _ in range(terms):
        spec.append((
            rng.uniform(-1.0, 1.0),  # amplitude
            rng.randint(0, 3), rng.uniform(0.0, TWO_PI),  # alpha frequency, phase
            rng.randint(0, 3), rng.uniform(0.0, TWO_PI),  # beta frequency, phase
            rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),  # t, r slopes
        ))

    def parts(p):
        val, g = 0.0, [0.0, 0.0, 0.0, 0.0]
        for c, m, pa, n, pb, st, sr in spec:
            ca, sa = math.cos(m * p.alpha + pa), math.sin(m * p.alpha + pa)
            cb, sbv = math.cos(n * p.beta + pb), math.sin(n * p.beta + pb)
            w = 1.0 + st * p.t + sr * p.r
            ang = c * ca * cb
            val += ang * w
            g[0] += ang * st
            g[1] += ang * sr
            g[2] += -c * m * sa * cb * w
            g[3] += -c * n * ca * sbv * w
        return val, tuple(g)

    return ScalarField(lambda p: parts(p)[0], lambda p: parts(p)[1], name=f"random:trig#{seed}")


def random_quaternion_field(seed: int, terms: int = 3) -> CartesianField:
    """Sum of plane waves ``q_k sin(w_k . (t, x, y, z) + phi_k)`` with random quaternion ``q_k``."""
    rng = random.Random(seed)
    spec = []
    for _ in range(terms):
        q = Quaternion(*(rng.uniform(-1.0, 1.0) for _ in range(4)))
        w = tuple(rng.uniform(-1.2, 1.2) for _ in range(4))
        spec.append((q, w, rng.uniform(0.0, TWO_PI)))

    def fn(t, x, y, z):
        X = (t, x, y, z)
        return sum((q * math.sin(sum(a * b for a, b in zip(w, X)) + ph) for q, w, ph in spec), Quaternion())

    def grad(t, x, y, z):
        X = (t, x, y, z)
        out = [Quaternion()] * 4
        for q, w, ph in spec:
            c = math.cos(sum(a * b for a, b in zip(w, X)) + ph)
            out = [out[m] + q * (c * w[m]) for m in range(4)]
        return tuple(out)

    return CartesianField(fn, grad, name=f"random:quat#{seed}")


# ---------------------------------------------------------------------------
# convergence


@dataclass(frozen=True)
class ConvergenceResult:
    check: str
    field: str
    backend: str
    hs: tuple
    residuals: tuple
    order: Optional[float]
    floor_reached: bool

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "field": self.field,
            "backend": self.backend,
            "levels": [{"h": h, "rel_max": e} for h, e in zip(self.hs, self.residuals)],
            "order": self.order,
            "floor_reached": self.floor_reached,
        }


def _slope(xs, ys) -> float:
    n = len(xs)
    mx, my = math.fsum(xs) / n, math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / sxx


def estimate_convergence_order(check_id: str, field: StructuredField, plan: SamplingPlan = SamplingPlan(),
                               h0: float = 0.05, levels: int = 4, backend: str = "fd2",
                               richardson: bool = False) -> ConvergenceResult:
    """Least-squares slope of ``log(rel_max)`` against ``log(h)`` over ``h0, h0/2, ...``.

    Residuals below ``FLOOR`` (or non-finite) are dropped; when fewer than
    two remain the result reports ``floor_reached`` instead of an order.
    """
    if levels < 3:
        raise ConfigError("convergence estimation needs at least 3 levels")
    if check_id not in FIRST_ORDER_CHECKS:
        raise ConfigError(f"{check_id!r} is not a first-derivative check; choose from {sorted(FIRST_ORDER_CHECKS)}")
    fn = FIRST_ORDER_CHECKS[check_id]
    hs, errs = [], []
    for k in range(levels):
        h = h0 / 2**k
        rep = fn(field, plan, DerivativeEngine(backend, h, richardson))
        hs.append(h)
        errs.append(rep.rel_max)
    usable = [(h, e) for h, e in zip(hs, errs) if math.isfinite(e) and e > FLOOR]
    if len(usable) < 2:
        return ConvergenceResult(check_id, field.name, backend, tuple(hs), tuple(errs), None, True)
    order = _slope([math.log(h) for h, _ in usable], [math.log(e) for _, e in usable])
    return ConvergenceResult(check_id, field.name, backend, tuple(hs), tuple(errs), order, False)


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class CheckSpec:
    id: str
    fn: Callable
    applies: Callable[[StructuredField], bool]


def _always(f):
    return True


def _condition_only(f):
    return f.satisfies_condition


FIRST_ORDER_CHECKS = {
    "condition": check_condition,
    "holomorphy_tr": check_holomorphy_tr,
    "angular_condition": check_angular_condition,
    "cr_system": check_cr_system,
    "spherical_cartesian": check_spherical_cartesian,
}

FIELD_CHECKS = {
    spec.id: spec
    for spec in (
        CheckSpec("condition", check_condition, _always),
        CheckSpec("holomorphy_tr", check_holomorphy_tr, _always),
        CheckSpec("angular_condition", check_angular_condition, _always),
        CheckSpec("cr_system", check_cr_system, _always),
        CheckSpec("t_derivative_closure", check_t_derivative_closure, lambda f: f.has_t_derivative),
        CheckSpec("harmonic_v_over_r", check_harmonic_v_over_r, _always),
        CheckSpec("spherical_cartesian", check_spherical_cartesian, _always),
        CheckSpec("laplacian_routes", check_laplacian_routes, _condition_only),
        CheckSpec("angular_laplace_relation", check_angular_laplace_relation, _always),
        CheckSpec("angular_tr_vanishing", check_angular_tr_vanishing, _condition_only),
        CheckSpec("commutation", check_operator_commutation, _always),
        CheckSpec("axial_regularity", check_axial_regularity, lambda f: f.kind == "fueter"),
        CheckSpec("theorem", check_theorem, _always),
        CheckSpec("theorem_dbar", lambda f, plan, engine: check_theorem(f, plan, engine, route="dbar"),
                  _condition_only),
        CheckSpec("theorem_direct", lambda f, plan, engine: check_theorem(f, plan, engine, route="direct"),
                  _always),
    )
}

IDENTITY_CHECKS = ("frame_identities", "second_angular_identity", "iota_product_rule")
ALL_CHECKS = tuple(FIELD_CHECKS) + IDENTITY_CHECKS
