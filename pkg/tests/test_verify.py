import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from fueterlab.errors import ConfigError, EmptySampleError
from fueterlab.fields import (
    ScalarField,
    StructuredField,
    constant_seed,
    fueter_map,
    get_field,
    power_seed,
    scalar_from_cartesian,
)
from fueterlab.quat_core import SphericalPoint
from fueterlab.verify import (
    FIELD_CHECKS,
    Accumulator,
    ResidualReport,
    SamplingPlan,
    check_angular_condition,
    check_angular_laplace_relation,
    check_angular_tr_vanishing,
    check_axial_regularity,
    check_condition,
    check_frame_identities,
    check_harmonic_v_over_r,
    check_holomorphy_tr,
    check_iota_product_rule,
    check_laplacian_routes,
    check_operator_commutation,
    check_second_angular_identity,
    check_t_derivative_closure,
    check_theorem,
    estimate_convergence_order,
    frame_residuals,
    random_quaternion_field,
    sample_points,
)

SMALL = SamplingPlan(n=48, seed=7)


def t_squared() -> StructuredField:
    return StructuredField("t^2", lambda p: (p.t * p.t, 0.0, (2 * p.t, 0.0, 0.0, 0.0), (0.0,) * 4),
                           kind="control", satisfies_condition=False)


COS_BETA = ScalarField(lambda p: math.cos(p.beta), lambda p: (0.0, 0.0, 0.0, -math.sin(p.beta)), "cos(beta)")


# --- sampling ---------------------------------------------------------------


def test_sampling_is_deterministic():
    plan = SamplingPlan(n=4, seed=12345)
    assert sample_points(plan) == sample_points(plan)
    assert sample_points(plan) != sample_points(SamplingPlan(n=4, seed=1))


def test_sampling_rejects_bad_boxes():
    for kw in ({"r_min": 0.0}, {"t_min": 1.0, "t_max": 1.0}, {"beta_min": 0.0}, {"beta_max": math.pi},
               {"n": 0}, {"mode": "sobol"}):
        with pytest.raises(ConfigError):
            sample_points(SamplingPlan(**kw))


def test_grid_counts_points_per_axis():
    pts = sample_points(SamplingPlan(n=2, mode="grid"))
    assert len(pts) == 16
    assert len(set(pts)) == 16


def test_samples_stay_inside_box():
    plan = SamplingPlan()
    for p in sample_points(plan):
        assert plan.t_min <= p.t <= plan.t_max
        assert plan.r_min <= p.r <= plan.r_max
        assert plan.beta_min <= p.beta <= plan.beta_max
        assert not p.degenerate


def test_pole_exclusion_can_exhaust_a_box():
    plan = SamplingPlan(t_min=-0.05, t_max=0.05, r_min=0.01, r_max=0.1, n=4)
    with pytest.raises(ConfigError):
        sample_points(plan, exclude=(0j,))


# --- reports and aggregation ------------------------------------------------


def _fill(acc, items):
    for idx, (res, mag, p) in items:
        acc.add(idx, res, mag, p)
    return acc


def _items(seed, n=40):
    rng = random.Random(seed)
    pts = sample_points(SamplingPlan(n=n, seed=seed))
    return [(i, (rng.random() ** 3, rng.uniform(0, 5), pts[i])) for i in range(n)]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(0, 3), min_size=40, max_size=40))
def test_merge_is_partition_independent(seed, labels):
    items = _items(seed)
    serial = _fill(Accumulator(), items).report("c", "f", "b", 0.0, 0.5)
    parts = [Accumulator() for _ in range(4)]
    for lab, item in zip(labels, items):
        _fill(parts[lab], [item])
    merged = parts[3].merge(parts[1]).merge(parts[0].merge(parts[2]))
    assert merged.report("c", "f", "b", 0.0, 0.5) == serial


def test_report_invariants():
    rep = _fill(Accumulator(), _items(3)).report("c", "f", "b", 0.0, 0.1)
    assert rep.max_abs >= rep.mean_abs >= 0.0
    assert rep.passed == (rep.rel_max <= rep.tol)
    d = rep.to_dict()
    assert list(d) == list(ResidualReport.KEYS)
    assert set(d["worst_point"]) == {"t", "r", "alpha", "beta"}
    assert len(rep.csv_row()) == len(ResidualReport.CSV_HEADER)


def test_ties_keep_first_point():
    a, b = SphericalPoint(0, 1, 0, 1), SphericalPoint(0, 2, 0, 1)
    acc = Accumulator()
    acc.add(1, 1.0, 0.0, b)
    acc.add(0, 1.0, 0.0, a)
    assert acc.report("c", "f", "b", 0.0, 1.0).worst_point == a


def test_empty_accumulator():
    with pytest.raises(EmptySampleError):
        Accumulator().report("c", "f", "b", 0.0, 1.0)


def test_reports_are_reproducible():
    f = get_field("product:z^2*mercator:exp")
    assert check_condition(f) == check_condition(f)
    assert check_harmonic_v_over_r(f, SMALL) == check_harmonic_v_over_r(f, SMALL)


# --- first-order checks -----------------------------------------------------


def test_condition_examples():
    rep = check_condition(fueter_map(power_seed(1)))
    assert rep.max_abs < 1e-12 and rep.passed
    assert check_condition(get_field("product:z^2*mercator:exp")).rel_max < 1e-9
    rep = check_condition(get_field("control:x"))
    assert 0.5 < rep.rel_max <= 1.0 and not rep.passed
    assert rep.max_abs == pytest.approx(1.0)


def test_holomorphy_examples():
    for f in [fueter_map(s) for s in (power_seed(2), constant_seed(1 + 1j))]:
        assert check_holomorphy_tr(f).max_abs < 1e-10
    assert check_holomorphy_tr(get_field("product:exp*mercator:cos")).rel_max < 1e-9
    assert check_holomorphy_tr(t_squared()).rel_max > 0.1


def test_angular_condition_examples():
    assert check_angular_condition(get_field("fueter:exp")).rel_max < 1e-12
    assert check_angular_condition(get_field("product:z^2*mercator:exp")).rel_max < 1e-9
    assert check_angular_condition(get_field("control:x")).rel_max > 0.1


def test_t_derivative_closure_examples():
    assert check_t_derivative_closure(get_field("fueter:z^3")).rel_max < 1e-9
    assert check_t_derivative_closure(fueter_map(constant_seed(2.0))).max_abs == 0.0
    for name in ("product:z*mercator:exp2", "product:exp*mercator:cos"):
        assert check_t_derivative_closure(get_field(name)).rel_max < 1e-8


# --- second-order checks ----------------------------------------------------


def test_harmonic_examples():
    assert check_harmonic_v_over_r(get_field("fueter:z^2")).max_abs < 1e-12
    assert check_harmonic_v_over_r(get_field("fueter:exp")).rel_max < 1e-6
    assert check_harmonic_v_over_r(get_field("control:iota*x^3"), SMALL).rel_max > 1e-2


def test_angular_laplace_examples():
    assert check_angular_laplace_relation(get_field("fueter:z^3"), SMALL).max_abs == 0.0
    assert check_angular_laplace_relation(get_field("product:z^2*mercator:exp")).rel_max < 1e-7
    assert not check_angular_laplace_relation(COS_BETA, SMALL).passed


def test_laplacian_routes_agree():
    for name in ("fueter:z^3", "product:z^3*mercator:exp"):
        assert check_laplacian_routes(get_field(name), SMALL).rel_max < 1e-6


def test_angular_tr_vanishing():
    assert check_angular_tr_vanishing(get_field("product:z*mercator:exp2"), SMALL).rel_max < 1e-6


def test_axial_regularity():
    for name in ("fueter:exp", "fueter:1/z"):
        assert check_axial_regularity(get_field(name), SMALL).rel_max < 1e-9
    with pytest.raises(ValueError):
        check_axial_regularity(get_field("product:z^2*mercator:exp"), SMALL)


# --- theorem ----------------------------------------------------------------


def test_theorem_on_square_is_exact():
    rep = check_theorem(get_field("fueter:z^2"), SMALL, route="dbar")
    assert rep.max_abs < 1e-10


def test_theorem_control_x3():
    rep = check_theorem(get_field("control:x^3"), SMALL)
    assert rep.max_abs == pytest.approx(6.0, rel=1e-6)
    assert not rep.passed


def test_theorem_refuses_dbar_on_controls():
    with pytest.raises(ValueError):
        check_theorem(get_field("control:x"), SMALL, route="dbar")
    with pytest.raises(ValueError):
        check_theorem(get_field("fueter:z"), SMALL, route="sideways")


def test_commutation_examples():
    tx_y2 = scalar_from_cartesian(lambda t, x, y, z: t * x + y * y, lambda t, x, y, z: (x, t, 2 * y, 0.0), "tx+y^2")
    assert check_operator_commutation(tx_y2, SMALL).rel_max < 1e-6
    assert check_operator_commutation(get_field("fueter:z^3"), SMALL).rel_max < 1e-6


# --- unconditional identities -----------------------------------------------


def test_frame_identity_spot_values():
    res = frame_residuals(0.7, 1.1)
    assert res[2] < 1e-14
    assert frame_residuals(0.0, math.pi / 2)[3] == 0.0
    assert check_frame_identities(SamplingPlan(n=2000)).max_abs < 1e-12


def test_second_angular_identity_fixtures():
    const = ScalarField(lambda p: 1.0, lambda p: (0.0,) * 4, "1")
    assert check_second_angular_identity(const, SMALL).max_abs == 0.0
    assert check_second_angular_identity(COS_BETA, SMALL).max_abs < 1e-10


def test_iota_product_rule():
    assert check_iota_product_rule(random_quaternion_field(0), SMALL).passed


# --- convergence ------------------------------------------------------------


@pytest.mark.parametrize("backend,order,tol", [("fd2", 2.0, 0.3), ("fd4", 4.0, 0.4)])
def test_convergence_order(backend, order, tol):
    res = estimate_convergence_order("condition", get_field("fueter:exp"), SMALL, backend=backend)
    assert not res.floor_reached
    assert res.order == pytest.approx(order, abs=tol)


def test_convergence_floor():
    res = estimate_convergence_order("condition", get_field("fueter:exp"), SMALL, backend="analytic")
    assert res.floor_reached and res.order is None


def test_convergence_arguments():
    with pytest.raises(ConfigError):
        estimate_convergence_order("condition", get_field("fueter:exp"), SMALL, levels=2)
    with pytest.raises(ConfigError):
        estimate_convergence_order("theorem", get_field("fueter:exp"), SMALL)


# --- registry and expectations ----------------------------------------------


def test_registry_contents():
    assert {"condition", "holomorphy_tr", "angular_condition", "cr_system", "t_derivative_closure",
            "harmonic_v_over_r", "theorem"} <= set(FIELD_CHECKS)


def test_every_control_has_a_failing_contract():
    for name in ("control:x", "control:x^3", "control:iota*x^3", "control:iota*cos(beta)"):
        f = get_field(name)
        assert f.expected("condition") is False
        assert f.expected("spherical_cartesian") is True
