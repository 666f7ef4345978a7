"""Catalog of quaternionic test fields ``f = u + iota v``.

Three families are built here:

* ``fueter:<seed>``   -- a holomorphic seed ``F(z)`` lifted by ``u + iv = F(t + ir)``
  (axially symmetric).
* ``product:<seed>*mercator:<g>`` -- the seed multiplied, as complex numbers,
  by an angular factor ``A + iB = g(alpha + i ln tan(beta/2))``.  The angular
  factor solves the spherical Cauchy-Riemann system and does not depend on
  ``t, r``; the seed does not depend on the angles, so the product keeps both
  properties (see ``docs/derivations.md``).  These fields are not axial.
* ``control:<name>`` -- fields that deliberately violate the defect equation.

Every field exposes analytic first partials in ``(t, r, alpha, beta)``;
anything of higher order is produced by the operators module.
"""

from __future__ import annotations

import cmath
import fnmatch
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import BackendError, DegenerateFrameError, DomainError, PoleError
from .quat_core import (
    DEGENERATE_SIN,
    Quaternion,
    SphericalPoint,
    cartesian_to_spherical_partials,
    from_spherical,
    iota_at,
    iota_partials,
    spherical_to_cartesian_partials,
)

VARS = ("t", "r", "alpha", "beta")
ZERO4 = (0.0, 0.0, 0.0, 0.0)


def _var_index(var) -> int:
    if isinstance(var, int):
        return var
    try:
        return VARS.index(var)
    except ValueError:
        raise ValueError(f"unknown variable {var!r}; expected one of {VARS}") from None


# ---------------------------------------------------------------------------
# generic fields


class Field:
    """Quaternion-valued function of a :class:`SphericalPoint`.

    Subclasses provide ``value`` and, when ``analytic`` is true,
    ``spherical_partials`` returning the four partials in (t, r, alpha, beta).
    """

    name = "field"
    analytic = False

    def value(self, p: SphericalPoint) -> Quaternion:
        raise NotImplementedError

    def spherical_partials(self, p: SphericalPoint):
        raise BackendError(f"{self.name} exposes no analytic partials")

    def cartesian_partials(self, p: SphericalPoint):
        return spherical_to_cartesian_partials(p, *self.spherical_partials(p))

    def magnitude(self, p: SphericalPoint) -> float:
        return self.value(p).norm()


class FunctionField(Field):
    """Value-only field wrapping a point function; derivatives need FD."""

    def __init__(self, fn: Callable[[SphericalPoint], Quaternion], name: str = "function"):
        self.fn = fn
        self.name = name

    def value(self, p):
        return self.fn(p)


class ScalarField(Field):
    """Real-valued field with analytic first partials.

    ``fn(p)`` returns the value, ``grad(p)`` the tuple of partials in
    ``(t, r, alpha, beta)``.  Without ``grad`` the field is value-only.
    """

    def __init__(self, fn, grad=None, name: str = "scalar"):
        self.fn = fn
        self.grad = grad
        self.name = name
        self.analytic = grad is not None

    def __call__(self, p: SphericalPoint) -> float:
        return self.fn(p)

    def eval(self, p: SphericalPoint) -> float:
        return self.fn(p)

    def partial(self, p: SphericalPoint, var) -> float:
        if self.grad is None:
            raise BackendError(f"{self.name} exposes no analytic partials")
        return self.grad(p)[_var_index(var)]

    def partials(self, p: SphericalPoint):
        if self.grad is None:
            raise BackendError(f"{self.name} exposes no analytic partials")
        return self.grad(p)

    def value(self, p):
        return Quaternion(self.fn(p))

    def spherical_partials(self, p):
        return tuple(Quaternion(d) for d in self.partials(p))

    def magnitude(self, p):
        return abs(self.fn(p))


class CartesianField(Field):
    """Quaternion-valued field given in Cartesian form ``fn(t, x, y, z)``.

    ``grad(t, x, y, z)`` returns the four Cartesian partials as quaternions.
    """

    def __init__(self, fn, grad=None, name: str = "cartesian"):
        self.fn = fn
        self.grad = grad
        self.name = name
        self.analytic = grad is not None

    def value(self, p):
        return _as_quaternion(self.fn(*from_spherical(p)))

    def cartesian_partials(self, p):
        if self.grad is None:
            raise BackendError(f"{self.name} exposes no analytic partials")
        return tuple(_as_quaternion(d) for d in self.grad(*from_spherical(p)))

    def spherical_partials(self, p):
        return cartesian_to_spherical_partials(p, *self.cartesian_partials(p))


def _as_quaternion(v) -> Quaternion:
    return v if isinstance(v, Quaternion) else Quaternion(float(v))


def scalar_from_cartesian(fn, grad, name: str) -> ScalarField:
    """Real field written in Cartesian coordinates, exposed in spherical ones."""

    def value(p):
        return fn(*from_spherical(p))

    def sph_grad(p):
        return cartesian_to_spherical_partials(p, *grad(*from_spherical(p)))

    return ScalarField(value, sph_grad, name=name)


# ---------------------------------------------------------------------------
# complex seeds


@dataclass(frozen=True)
class ComplexSeed:
    """Holomorphic function with an analytic jet ``(F, F', F'', F''')``."""

    name: str
    jet_fn: Callable[[complex], tuple]
    poles: tuple = ()
    max_order: int = 3

    def eval(self, z: complex, order: int = 0) -> tuple:
        if not 0 <= order <= self.max_order:
            raise ValueError(f"seed {self.name} provides derivatives up to order {self.max_order}")
        for pole in self.poles:
            if z == pole:
                raise PoleError(f"seed {self.name} is singular at z={z!r}")
        return tuple(self.jet_fn(complex(z))[: order + 1])

    def __call__(self, z: complex) -> complex:
        return self.eval(z)[0]

    def derivative(self) -> ComplexSeed:
        """Seed of ``F'`` (one order of jet is consumed)."""
        if self.max_order < 1:
            raise ValueError(f"seed {self.name} has no derivative jet left")
        base = self.jet_fn
        return ComplexSeed(
            name=f"d({self.name})",
            jet_fn=lambda z: tuple(base(z)[1:]),
            poles=self.poles,
            max_order=self.max_order - 1,
        )


def power_seed(n: int) -> ComplexSeed:
    if n < 0:
        raise ValueError("use inverse_seed for negative powers")
    coeffs = []
    c = 1.0
    for k in range(4):
        coeffs.append((c, n - k))
        c *= n - k

    def jet(z):
        return tuple(a * z**e if e >= 0 else 0j for a, e in coeffs)

    name = "z" if n == 1 else ("1" if n == 0 else f"z^{n}")
    return ComplexSeed(name, jet)


def constant_seed(c: complex, name: Optional[str] = None) -> ComplexSeed:
    c = complex(c)
    return ComplexSeed(name or f"const({c.real:g}{c.imag:+g}i)", lambda z: (c, 0j, 0j, 0j))


def _exp_jet(z):
    e = cmath.exp(z)
    return (e, e, e, e)


def _inv_jet(z):
    w = 1.0 / z
    return (w, -w * w, 2.0 * w**3, -6.0 * w**4)


def _log_jet(z):
    w = 1.0 / z
    return (cmath.log(z), w, -w * w, 2.0 * w**3)


EXP = ComplexSeed("exp", _exp_jet)
INV = ComplexSeed("1/z", _inv_jet, poles=(0j,))
# principal branch; t + ir with r > 0 never reaches the cut on the negative axis
LOG = ComplexSeed("log", _log_jet, poles=(0j,))


def seed_catalog() -> list[ComplexSeed]:
    return [power_seed(1), power_seed(2), power_seed(3), EXP, INV, LOG]


def _exp_i_jet(n: int):
    def jet(w):
        e = cmath.exp(1j * n * w)
        d = 1j * n
        return (e, d * e, d * d * e, d**3 * e)

    return jet


def _cos_jet(w):
    c, s = cmath.cos(w), cmath.sin(w)
    return (c, -s, -c, s)


# seeds for the angular (Mercator) variable; they stay 2*pi-periodic in alpha
ANGULAR_SEEDS = {
    "exp": ComplexSeed("exp(iw)", _exp_i_jet(1)),
    "exp2": ComplexSeed("exp(2iw)", _exp_i_jet(2)),
    "cos": ComplexSeed("cos(w)", _cos_jet),
    "w": power_seed(1),
}


# ---------------------------------------------------------------------------
# structured fields f = u + iota v


Jet = Callable[[SphericalPoint], tuple]


class StructuredField(Field):
    """``f = u + iota v`` with real ``u, v`` given by a joint jet.

    ``jet(p)`` returns ``(u, v, du, dv)`` where ``du`` and ``dv`` are the
    partials in ``(t, r, alpha, beta)``.
    """

    analytic = True

    def __init__(
        self,
        name: str,
        jet: Jet,
        *,
        kind: str,
        satisfies_condition: bool,
        axial: bool = False,
        singular_loci: str = "r=0",
        poles: tuple = (),
        t_derivative: Optional[Callable[[], StructuredField]] = None,
        expectations: Optional[dict] = None,
        seed: Optional[ComplexSeed] = None,
    ):
        self.name = name
        self.seed = seed
        self.jet = jet
        self.kind = kind
        self.satisfies_condition = satisfies_condition
        self.axial = axial
        self.singular_loci = singular_loci
        self.poles = tuple(poles)
        self._t_derivative = t_derivative
        self.expectations = dict(expectations or {})

    def __repr__(self):
        return f"StructuredField({self.name!r})"

    def _checked_jet(self, p):
        if p.r <= 0.0:
            raise DomainError(f"{self.name}: iota is undefined at r = 0")
        return self.jet(p)

    @property
    def u(self) -> ScalarField:
        return ScalarField(
            lambda p: self._checked_jet(p)[0], lambda p: self._checked_jet(p)[2], name=f"u[{self.name}]"
        )

    @property
    def v(self) -> ScalarField:
        return ScalarField(
            lambda p: self._checked_jet(p)[1], lambda p: self._checked_jet(p)[3], name=f"v[{self.name}]"
        )

    def uv(self, p):
        u, v, _, _ = self._checked_jet(p)
        return u, v

    def value(self, p):
        u, v, _, _ = self._checked_jet(p)
        iota = iota_at(p.alpha, p.beta)
        return u + iota * v

    def spherical_partials(self, p):
        u, v, du, dv = self._checked_jet(p)
        iota = iota_at(p.alpha, p.beta)
        ia, ib = iota_partials(p.alpha, p.beta)
        return (
            du[0] + iota * dv[0],
            du[1] + iota * dv[1],
            du[2] + ia * v + iota * dv[2],
            du[3] + ib * v + iota * dv[3],
        )

    def t_derivative(self) -> StructuredField:
        if self._t_derivative is None:
            raise BackendError(f"{self.name} has no analytic t-derivative field")
        return self._t_derivative()

    @property
    def has_t_derivative(self) -> bool:
        return self._t_derivative is not None

    def expected(self, check_id: str) -> Optional[bool]:
        """Expected pass flag of ``check_id``; ``None`` when not part of the contract."""
        if self.satisfies_condition:
            return True
        return self.expectations.get(check_id)

    def listing(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "singular_loci": self.singular_loci,
            "satisfies_condition": self.satisfies_condition,
        }


def eval_structured(f: StructuredField, p: SphericalPoint) -> Quaternion:
    """``u(p) + iota(p) v(p)``."""
    return f.value(p)


def _seed_jet_at(seed: ComplexSeed, p: SphericalPoint):
    z = complex(p.t, p.r)
    for pole in seed.poles:
        if z == pole:
            raise PoleError(f"seed {seed.name} is singular at z={z!r}")
    return seed.jet_fn(z)


def fueter_map(seed: ComplexSeed) -> StructuredField:
    """Axial lift ``u + iv = F(t + i r)``.

    ``d/dr F(t + ir) = i F'``, hence ``u_r = -Im F' = -v_t`` and ``v_r = Re F' = u_t``.
    """

    def jet(p):
        val, d1 = _seed_jet_at(seed, p)[:2]
        return (
            val.real,
            val.imag,
            (d1.real, -d1.imag, 0.0, 0.0),
            (d1.imag, d1.real, 0.0, 0.0),
        )

    loci = "r=0"
    if seed.poles:
        loci += "; seed singularity at " + ", ".join(f"z={z.real:g}{z.imag:+g}i" for z in seed.poles)
    t_der = (lambda: fueter_map(seed.derivative())) if seed.max_order >= 2 else None
    return StructuredField(
        f"fueter:{seed.name}",
        jet,
        kind="fueter",
        satisfies_condition=True,
        axial=True,
        singular_loci=loci,
        poles=seed.poles,
        t_derivative=t_der,
        seed=seed,
    )


def fueter_transform(seed: ComplexSeed) -> StructuredField:
    """Laplacian of ``fueter_map(seed)`` in closed form (an axial field).

    With ``F1 = F'`` and ``F2 = F''`` at ``z = t + ir``::

        u~ = -2 Im F1 / r
        v~ =  2 Re F1 / r - 2 Im F / r^2

    Partials follow from ``d/dt G = G'`` and ``d/dr G = i G'``.
    """
    if seed.max_order < 2:
        raise ValueError(f"seed {seed.name} needs a jet of order 2")

    def jet(p):
        F, F1, F2 = _seed_jet_at(seed, p)[:3]
        r = p.r
        r2, r3 = r * r, r * r * r
        ut = -2.0 * F2.imag / r
        ur = -2.0 * (F2.real / r - F1.imag / r2)
        vt = 2.0 * F2.real / r - 2.0 * F1.imag / r2
        vr = -2.0 * F2.imag / r - 4.0 * F1.real / r2 + 4.0 * F.imag / r3
        return (
            -2.0 * F1.imag / r,
            2.0 * F1.real / r - 2.0 * F.imag / r2,
            (ut, ur, 0.0, 0.0),
            (vt, vr, 0.0, 0.0),
        )

    return StructuredField(
        f"fueter_transform:{seed.name}",
        jet,
        kind="regular",
        satisfies_condition=False,
        axial=True,
        poles=seed.poles,
        seed=seed,
    )


class AngularPair:
    """Real pair ``(A, B)`` depending on ``(alpha, beta)`` only."""

    def __init__(self, jet, name: str):
        self.jet = jet  # jet(alpha, beta) -> (A, B, (A_a, A_b), (B_a, B_b))
        self.name = name

    def _scalar(self, idx: int, label: str) -> ScalarField:
        def value(p):
            return self.jet(p.alpha, p.beta)[idx]

        def grad(p):
            da, db = self.jet(p.alpha, p.beta)[idx + 2]
            return (0.0, 0.0, da, db)

        return ScalarField(value, grad, name=f"{label}[{self.name}]")

    @property
    def A(self) -> ScalarField:
        return self._scalar(0, "A")

    @property
    def B(self) -> ScalarField:
        return self._scalar(1, "B")

    def __repr__(self):
        return f"AngularPair({self.name!r})"


def mercator_pair(g: ComplexSeed, name: Optional[str] = None) -> AngularPair:
    """``A + iB = g(alpha + i ln tan(beta/2))``.

    ``d/dbeta ln tan(beta/2) = 1/sin(beta)`` so ``d/dbeta g(w) = i g'(w) / sin(beta)``.
    """

    def jet(alpha, beta):
        sb = math.sin(beta)
        if abs(sb) < DEGENERATE_SIN or math.tan(beta / 2.0) <= 0.0:
            raise DegenerateFrameError(f"mercator variable undefined at beta={beta!r}")
        w = complex(alpha, math.log(math.tan(beta / 2.0)))
        val, d1 = g.jet_fn(w)[:2]
        return (
            val.real,
            val.imag,
            (d1.real, -d1.imag / sb),
            (d1.imag, d1.real / sb),
        )

    return AngularPair(jet, name or f"mercator:{g.name}")


def angular_pair(A: ScalarField, B: ScalarField, name: str) -> AngularPair:
    """Pair from two explicit angular scalars (not necessarily a CR solution)."""

    def jet(alpha, beta):
        p = SphericalPoint(0.0, 1.0, alpha, beta)
        ga, gb = A.partials(p), B.partials(p)
        return (A(p), B(p), (ga[2], ga[3]), (gb[2], gb[3]))

    return AngularPair(jet, name)


def product_field(
    seed: ComplexSeed, ang: AngularPair, *, satisfies_condition: bool = True, name: Optional[str] = None
) -> StructuredField:
    """``u + iv = (U + iV)(A + iB)`` with ``U + iV = F(t + ir)``."""

    def jet(p):
        val, d1 = _seed_jet_at(seed, p)[:2]
        U, V = val.real, val.imag
        dU = (d1.real, -d1.imag, 0.0, 0.0)
        dV = (d1.imag, d1.real, 0.0, 0.0)
        A, B, (A_a, A_b), (B_a, B_b) = ang.jet(p.alpha, p.beta)
        dA = (0.0, 0.0, A_a, A_b)
        dB = (0.0, 0.0, B_a, B_b)
        du = tuple(dU[k] * A + U * dA[k] - dV[k] * B - V * dB[k] for k in range(4))
        dv = tuple(dU[k] * B + U * dB[k] + dV[k] * A + V * dA[k] for k in range(4))
        return (U * A - V * B, U * B + V * A, du, dv)

    t_der = (
        (lambda: product_field(seed.derivative(), ang, satisfies_condition=satisfies_condition))
        if seed.max_order >= 2
        else None
    )
    return StructuredField(
        name or f"product:{seed.name}*{ang.name}",
        jet,
        kind="product",
        satisfies_condition=satisfies_condition,
        axial=False,
        singular_loci="r=0; sin(beta)=0" + "".join(f"; seed singularity at z={z.real:g}{z.imag:+g}i" for z in seed.poles),
        poles=seed.poles,
        t_derivative=t_der,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# negative controls


def zero_field() -> StructuredField:
    return StructuredField(
        "zero",
        lambda p: (0.0, 0.0, ZERO4, ZERO4),
        kind="control",
        satisfies_condition=True,
        axial=True,
        t_derivative=lambda: zero_field(),
    )


def _x_jet(p):
    _, r, a, b = p
    ca, sa, cb, sb = math.cos(a), math.sin(a), math.cos(b), math.sin(b)
    return r * ca * sb, (0.0, ca * sb, -r * sa * sb, r * ca * cb)


def _x3_jet(p):
    x, dx = _x_jet(p)
    return x**3, tuple(3.0 * x * x * d for d in dx)


def _real_control(name, scalar_jet, expectations, *, into_v=False, loci="r=0"):
    def jet(p):
        s, ds = scalar_jet(p)
        if into_v:
            return (0.0, s, ZERO4, ds)
        return (s, 0.0, ds, ZERO4)

    return StructuredField(
        name,
        jet,
        kind="control",
        satisfies_condition=False,
        axial=False,
        singular_loci=loci,
        t_derivative=lambda: zero_field(),
        expectations=expectations,
    )


def _cos_beta_jet(p):
    return math.cos(p.beta), (0.0, 0.0, 0.0, -math.sin(p.beta))


def negative_controls() -> list[StructuredField]:
    """Fixtures that violate the defect equation ``D_l f = -2 v / r``.

    ``expectations`` lists the checks each control must fail (``False``) or,
    for checks that hold for every field, must pass (``True``).  Checks not
    listed carry no expectation: ``x`` is harmonic, for example, so the
    regularity of its Laplacian holds trivially.
    """
    violated = ("condition", "holomorphy_tr", "angular_condition", "cr_system")
    base = {c: False for c in violated}
    base["spherical_cartesian"] = True
    x3 = dict(base, theorem=False, theorem_direct=False)
    v_x3 = dict(base, harmonic_v_over_r=False, theorem=False, theorem_direct=False)
    cosb = {
        "condition": False,
        "theorem": False,
        "theorem_direct": False,
        "angular_condition": False,
        "cr_system": False,
        "angular_laplace_relation": False,
        "spherical_cartesian": True,
    }
    return [
        _real_control("control:x", _x_jet, base),
        _real_control("control:x^3", _x3_jet, x3),
        _real_control("control:iota*x^3", _x3_jet, v_x3, into_v=True),
        _real_control("control:iota*cos(beta)", _cos_beta_jet, cosb, into_v=True, loci="r=0; sin(beta)=0"),
    ]


# ---------------------------------------------------------------------------
# catalog


PRODUCT_RECIPES = (
    ("z^2", "exp"),
    ("z", "exp2"),
    ("exp", "cos"),
    ("z^3", "exp"),
)


def fueter_fields() -> list[StructuredField]:
    return [fueter_map(s) for s in seed_catalog()]


def product_fields() -> list[StructuredField]:
    seeds = {s.name: s for s in seed_catalog()}
    out = []
    for seed_name, ang_name in PRODUCT_RECIPES:
        pair = mercator_pair(ANGULAR_SEEDS[ang_name], name=f"mercator:{ang_name}")
        out.append(product_field(seeds[seed_name], pair))
    return out


def catalog() -> list[StructuredField]:
    return fueter_fields() + product_fields() + negative_controls()


def catalog_listing() -> list[dict]:
    return [f.listing() for f in catalog()]


def _normalise(name: str) -> str:
    return name.replace("^", "")


def select_fields(patterns) -> list[StructuredField]:
    """Catalog entries matching any glob; ``^`` may be omitted (``control:x3``)."""
    fields = catalog()
    if not patterns:
        return fields
    out = []
    for f in fields:
        for pat in patterns:
            if fnmatch.fnmatchcase(f.name, pat) or fnmatch.fnmatchcase(_normalise(f.name), _normalise(pat)):
                out.append(f)
                break
    return out


def get_field(name: str) -> StructuredField:
    for f in catalog():
        if f.name == name or _normalise(f.name) == _normalise(name):
            return f
    raise KeyError(name)
