import dataclasses
import math

import numpy as np
import pytest

from .. import steady_state
from ..column import OperatingPoint, bulk_velocities
from ..constitutive import _fb, _jb, critical_points, vtilde
from ..errors import (
    FrothConditionViolated,
    Infeasible,
    MarginalIntegralWarning,
    NonPositiveParameter,
    NoRoot,
    PhiEOutOfRange,
    SolidsOverload,
    ZeroUnderflow,
)
from .conftest import CIRCLE, EXAMPLE_PHI_E, EXAMPLE_Q_U, FEED, SQUARE


def _point(Q_U, **overrides):
    return OperatingPoint(Q_U=Q_U, **{**FEED, **overrides})


@pytest.mark.parametrize("Q_U, phi_E", list(zip(EXAMPLE_Q_U, EXAMPLE_PHI_E)))
def test_effluent_fraction(Q_U, phi_E):
    assert steady_state.effluent_fraction(_point(Q_U)) == pytest.approx(
        phi_E, abs=5e-4
    )


def test_effluent_fraction_increases_with_underflow():
    values = [steady_state.effluent_fraction(_point(q)) for q in EXAMPLE_Q_U]
    assert np.all(np.diff(values) > 0)


def test_feed_jump_root_is_smallest(params, geom, example_point):
    phi_bar2 = steady_state.solve_fjc(example_point, params, geom)
    v = bulk_velocities(geom, example_point)
    assert abs(v.q_2 * phi_bar2 + float(_jb(phi_bar2, params)) - v.s_F) < 1e-14
    sup_M = critical_points(v.q_2, params).phi_sup_M
    scan = np.linspace(0, sup_M, 1_000_001)
    first = scan[np.argmax(v.q_2 * scan + _jb(scan, params) >= v.s_F)]
    assert phi_bar2 == pytest.approx(first, abs=1e-6)
    assert phi_bar2 < sup_M <= params.phi_infl < params.phi_c


def test_feed_jump_without_root(params, geom):
    op = OperatingPoint(Q_U=0.0, Q_F=8.9927e-5, Q_W=2e-6, phi_F=0.9, psi_F=0.0)
    with pytest.raises(NoRoot):
        steady_state.solve_fjc(op, params, geom)


def test_solids_jump_without_solids(params, geom):
    op = _point(EXAMPLE_Q_U[0], psi_F=0.0)
    assert steady_state.solve_fjcs(op, params, geom) == (0.0, 0.0)


def test_solids_jump_residual(params, geom, example_point):
    varphi_1, varphi_U = steady_state.solve_fjcs(example_point, params, geom)
    q_s = example_point.Q_U / geom.A_U
    supplied = example_point.Q_F * example_point.psi_F
    carried = geom.A_U * (float(_fb(varphi_1, params)) + q_s * varphi_1)
    assert abs(supplied - carried) < 1e-14
    assert example_point.Q_U * varphi_U == pytest.approx(
        example_point.Q_U * varphi_1 + geom.A_U * float(_fb(varphi_1, params)),
        rel=1e-12,
    )


def test_solids_overload(params, geom):
    with pytest.raises(SolidsOverload):
        steady_state.solve_fjcs(_point(1e-6, psi_F=0.5), params, geom)


def test_solids_jump_at_capacity(params, geom):
    # slow enough underflow for the solids flux to keep a dilute-branch maximum
    Q_U = 1e-5
    q_s = Q_U / geom.A_U
    cp = critical_points(q_s, params, "solids")
    capacity = geom.A_U * (float(_fb(cp.phi_sub_M, params)) + q_s * cp.phi_sub_M)
    psi_F = capacity / FEED["Q_F"] * (1 - 1e-15)
    op = _point(Q_U, phi_F=0.1, psi_F=psi_F)
    varphi_1, _ = steady_state.solve_fjcs(op, params, geom)
    assert varphi_1 <= cp.phi_m < cp.phi_sub_M
    assert varphi_1 == pytest.approx(cp.phi_m, abs=1e-6)


def test_zero_underflow_with_solids(params, geom):
    with pytest.raises(ZeroUnderflow):
        steady_state.solve_fjcs(_point(0.0), params, geom)


@pytest.mark.parametrize("Q_U, expected", [(6.0155e-5, 0.8027), (6.0171e-5, 0.7081)])
def test_froth_interface(params, geom, Q_U, expected):
    assert steady_state.z_fr(_point(Q_U), params, geom) == pytest.approx(
        expected, abs=5e-3
    )


def test_vanishing_froth_layer(params, geom):
    target = params.phi_c + 1e-9
    Q_U = FEED["Q_W"] + FEED["Q_F"] - FEED["Q_F"] * FEED["phi_F"] / target
    op = _point(Q_U)
    assert steady_state.effluent_fraction(op) > params.phi_c
    assert steady_state.z_fr(op, params, geom) == pytest.approx(geom.z_E, abs=1e-6)


def _random_feasible_points(params, geom, count, seed=2024, attempts=2000):
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(attempts):
        Q_F = FEED["Q_F"] * rng.uniform(0.97, 1.03)
        Q_W = rng.uniform(1.5e-6, 2.5e-6)
        phi_F = rng.uniform(0.28, 0.32)
        phi_E = rng.uniform(0.80, 0.849)
        op = OperatingPoint(
            Q_U=Q_F + Q_W - Q_F * phi_F / phi_E,
            Q_F=Q_F,
            Q_W=Q_W,
            phi_F=phi_F,
            psi_F=rng.uniform(0.0, 0.2),
        )
        if steady_state.check_conditions(op, params, geom).feasible:
            points.append(op)
            if len(points) == count:
                break
    return points


def test_froth_interface_routes_agree(params, geom):
    points = _random_feasible_points(params, geom, 50)
    assert len(points) == 50
    for op in points:
        by_quad = steady_state.z_fr(op, params, geom)
        by_ode = steady_state.z_fr(op, params, geom, method="ode")
        assert by_quad == pytest.approx(by_ode, abs=1e-4)


def test_froth_interface_errors(params, geom):
    with pytest.raises(PhiEOutOfRange):
        steady_state.z_fr(OperatingPoint(**SQUARE), params, geom)
    with pytest.raises(FrothConditionViolated):
        steady_state.z_fr(OperatingPoint(**CIRCLE), params, geom)
    with pytest.raises(NonPositiveParameter):
        steady_state.z_fr(
            _point(EXAMPLE_Q_U[2]), dataclasses.replace(params, d_cap=0.0), geom
        )
    with pytest.raises(ValueError):
        steady_state.z_fr(_point(EXAMPLE_Q_U[2]), params, geom, method="euler")


def test_froth_profile(params, geom):
    op = _point(EXAMPLE_Q_U[2])
    grid = np.linspace(geom.z_U, geom.z_E, 801)
    branch = steady_state.froth_profile(op, params, geom, grid)
    phi_E = steady_state.effluent_fraction(op)
    assert abs(branch.phi[0] - params.phi_c) < 1e-6
    assert abs(branch.phi[-1] - phi_E) < 1e-6
    assert branch.z[0] == pytest.approx(steady_state.z_fr(op, params, geom))
    assert np.all(np.diff(branch.phi) > 0)

    picks = np.linspace(1, branch.z.size - 2, 20).round().astype(int)
    for k in picks:
        height = steady_state.froth_height(branch.phi[k], op, params, geom)
        assert height == pytest.approx(branch.z[k], abs=1e-4)


def test_conditions_at_feasible_point(params, geom, diamond):
    report = steady_state.check_conditions(diamond, params, geom)
    assert report.feasible
    assert geom.z_F < report.z_fr < geom.z_E
    assert report.z_fr_code == report.z_fr
    assert all(
        margin >= 0
        for margin in (
            report.fib_margin,
            report.fias_margin,
            report.froth1_margin,
            report.froth2_margin,
            report.froth3_margin,
        )
    )


def test_conditions_without_froth(params, geom):
    report = steady_state.check_conditions(OperatingPoint(**SQUARE), params, geom)
    assert not report.froth1_ok
    assert report.phi_E <= params.phi_c
    assert not report.feasible
    assert report.z_fr is None
    assert report.z_fr_code == math.inf


def test_conditions_column_full_of_froth(params, geom):
    report = steady_state.check_conditions(OperatingPoint(**CIRCLE), params, geom)
    assert not report.feasible
    assert report.z_fr is None
    assert report.z_fr_code == -math.inf


def test_interface_implies_froth_conditions(params, geom):
    for Q_U in np.linspace(5.0e-5, 6.4e-5, 15):
        report = steady_state.check_conditions(_point(Q_U), params, geom)
        if report.z_fr is not None:
            assert report.froth1_ok and report.froth3_ok


def test_report_round_trip(params, geom, diamond):
    report = steady_state.check_conditions(diamond, params, geom)
    data = report.to_dict()
    assert data["feasible"] is True
    assert steady_state.FeasibilityReport.from_dict(data) == report


def test_desired_steady_state(params, geom, example_point):
    profile = steady_state.desired_steady_state(example_point, params, geom)
    z, phi, psi = profile.z, profile.phi, profile.psi
    assert z.size == 3200
    assert np.all(phi[z < geom.z_F] == 0)
    assert np.all(psi[z >= geom.z_F] == 0)
    assert np.all(phi[z >= geom.z_E] == profile.phi_E)
    pulp = (z >= geom.z_F) & (z < profile.z_fr)
    assert np.all(phi[pulp] == profile.report.phi_bar2)
    froth = (z >= profile.z_fr) & (z < geom.z_E)
    assert np.all(np.diff(phi[froth]) > 0)
    assert np.all(psi[z < geom.z_U] == profile.varphi_U)
    assert set(profile.to_dataframe().columns) == set(profile.describe())


def test_desired_steady_state_infeasible(params, geom):
    with pytest.raises(Infeasible, match="froth1"):
        steady_state.desired_steady_state(OperatingPoint(**SQUARE), params, geom)


def _marginal_point(params, geom, phi_E=0.8, gap=5e-15):
    # choose Q_W so that j_2(phi_E) - s_F = phi_E * (vtilde(phi_E) - Q_W / A_E)
    # is a few ulps above zero
    Q_F, phi_F = 1e-5, 0.1
    Q_E = Q_F * phi_F / phi_E
    Q_W = geom.A_E * (float(vtilde(phi_E, params)) - gap / phi_E)
    return OperatingPoint(
        Q_U=Q_F + Q_W - Q_E, Q_F=Q_F, Q_W=Q_W, phi_F=phi_F, psi_F=0.0
    )


def test_marginal_froth_integral(params, geom):
    op = _marginal_point(params, geom)
    v = bulk_velocities(geom, op)
    phi_E = steady_state.effluent_fraction(op)
    top = v.q_2 * phi_E + float(_jb(phi_E, params)) - v.s_F
    assert 0 < top < steady_state.MARGINAL_DENOMINATOR

    with pytest.warns(MarginalIntegralWarning):
        by_quad = steady_state.z_fr(op, params, geom)
    with pytest.warns(MarginalIntegralWarning):
        by_ode = steady_state.z_fr(op, params, geom, method="ode")
    assert geom.z_F < by_quad < geom.z_E
    assert by_quad == pytest.approx(by_ode, abs=1e-3)

    report = steady_state.check_conditions(op, params, geom)
    assert report.froth1_ok and report.froth3_ok
    assert report.z_fr == by_quad
    assert any(note.startswith("marginal") for note in report.notes)
