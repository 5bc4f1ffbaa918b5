import dataclasses

import numpy as np
import pytest

from .. import constitutive, scheme
from ..column import ColumnGeometry, OperatingPoint
from ..errors import CflViolation, DomainError, GridTooCoarse, IndexOutOfRange
from ..simulation import CLOSED_VESSEL
from ..steady_state import desired_steady_state


def _random_state(rng, N):
    phi = rng.uniform(0, 1, N)
    psi = rng.uniform(0, 1, N) * (1 - phi)
    return scheme.State(phi=phi, psi=psi)


def _random_point(rng):
    Q_F = rng.uniform(1e-5, 1e-4)
    phi_F = rng.uniform(0, 1)
    return OperatingPoint(
        Q_U=rng.uniform(0, 0.9) * Q_F,
        Q_F=Q_F,
        Q_W=rng.uniform(0, 5e-6),
        phi_F=phi_F,
        psi_F=rng.uniform(0, 1 - phi_F),
    )


def _settling_flux(psi, psi_max, p):
    u = psi / psi_max if psi_max > 0 else 1.0
    return psi * p.v_inf * max(1.0 - u, 0.0) ** p.n_RZ


def test_smallest_grid():
    grid = scheme.build_grid(ColumnGeometry(), 4)
    assert grid.dz == 0.5
    assert grid.z_internal[1] == 0.5
    assert grid.z_internal[3] == 1.5
    assert list(grid.z) == [-0.5, 0.0, 0.5, 1.0, 1.5]
    with pytest.raises(GridTooCoarse):
        scheme.build_grid(ColumnGeometry(), 3)


def test_uniform_area_ratios(uniform_geom):
    grid = scheme.build_grid(uniform_geom, 52)
    assert grid.M1 == pytest.approx(1.0, rel=1e-12)
    assert grid.M2 / 2 == pytest.approx(1.0, rel=1e-12)


def test_feed_level_on_a_boundary():
    grid = scheme.build_grid(ColumnGeometry(z_F=0.5), 4)
    assert grid.feed_cell == 2
    assert grid.z[grid.feed_cell] <= 0.5 < grid.z[grid.feed_cell + 1]


def test_cell_areas_follow_geometry(geom):
    grid = scheme.build_grid(geom, 202)
    assert grid.z[1] == geom.z_U
    assert grid.z[grid.N - 1] == geom.z_E
    assert grid.A_cell[0] == pytest.approx(geom.A_U)
    assert grid.A_cell[-1] == pytest.approx(geom.A_E)
    # the cell cut by z_F has the exact average of both areas
    f = grid.feed_cell
    below = (geom.z_F - grid.z[f]) / grid.dz
    assert grid.A_cell[f] == pytest.approx(below * geom.A_U + (1 - below) * geom.A_E)
    assert grid.total(np.ones(grid.N)) == pytest.approx(
        geom.A_U * (geom.z_F - geom.z_U + grid.dz)
        + geom.A_E * (geom.z_E - geom.z_F + grid.dz)
    )


def test_time_step_without_capillarity(params, uniform_geom):
    p = dataclasses.replace(params, d_cap=0.0)
    coarse = scheme.cfl_dt(scheme.build_grid(uniform_geom, 102), p, 1e-4)
    fine = scheme.cfl_dt(scheme.build_grid(uniform_geom, 202), p, 1e-4)
    assert coarse.dt_max / fine.dt_max == pytest.approx(2.0, rel=1e-12)


def test_time_step_with_capillarity(params, uniform_geom):
    coarse = scheme.cfl_dt(scheme.build_grid(uniform_geom, 102), params, 1e-4)
    fine = scheme.cfl_dt(scheme.build_grid(uniform_geom, 202), params, 1e-4)
    assert coarse.dt_max / fine.dt_max > 2.0


def test_time_step_matches_sampled_norms(params, geom):
    grid = scheme.build_grid(geom, 100)
    Q_sup = 8.9927e-5 + 2e-6
    cfl = scheme.cfl_dt(grid, params, Q_sup)

    phi = np.append(
        np.linspace(0, 1, 1_000_001), np.nextafter(params.phi_c, 1.0)
    )
    norm_v = np.max(constitutive.vtilde(phi, params))
    norm_vprime = max(
        np.max(np.abs(constitutive.vtilde_prime(phi, params, side="left"))),
        np.max(np.abs(constitutive.vtilde_prime(phi, params, side="right"))),
    )
    norm_d = np.max(constitutive.diffusion_d(phi, params))
    v_hs = constitutive.hindered_settling(phi, params)
    vhs0 = np.max(v_hs)
    norm_vhs_prime = np.max(np.abs(np.diff(v_hs) / np.diff(phi)))

    M1, M2, dz = grid.M1, grid.M2, grid.dz
    beta1 = M1 * norm_v + M2 * norm_d / dz
    beta2 = M1 * max(vhs0, norm_vhs_prime) + M2 * (1 - params.phi_c) * norm_d / dz
    oracle = dz / (2 * Q_sup / grid.A_min + M1 * norm_vprime + max(beta1, beta2))
    assert cfl.dt_max == pytest.approx(oracle, rel=1e-6)
    assert cfl.dt_max > 0


def test_aggregate_flux_of_empty_column(params, geom, example_point):
    grid = scheme.build_grid(geom, 20)
    state = scheme.State.water(grid)
    fluxes = [
        scheme.aggregate_flux(state, grid, example_point, params, i)
        for i in range(grid.N + 1)
    ]
    assert fluxes == [0.0] * (grid.N + 1)


@pytest.mark.parametrize("c", [0.3, 0.85])
def test_aggregate_flux_of_uniform_column(params, uniform_geom, c):
    grid = scheme.build_grid(uniform_geom, 20)
    phi = np.zeros(grid.N)
    phi[1:-1] = c
    state = scheme.State(phi=phi, psi=np.zeros(grid.N))
    expected = c * constitutive.vtilde(c, params)
    for i in range(2, grid.N - 1):
        value = scheme.aggregate_flux(state, grid, CLOSED_VESSEL, params, i)
        assert value == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("left, right", [(0.3, 0.8), (0.8, 0.3), (0.2, 0.6)])
def test_aggregate_flux_at_single_jump(params, geom, example_point, left, right):
    grid = scheme.build_grid(geom, 20)
    i = grid.N - 5
    phi = np.zeros(grid.N)
    phi[: i] = left
    phi[i:] = right
    state = scheme.State(phi=phi, psi=np.zeros(grid.N))

    q = (example_point.Q_F - example_point.Q_U) / geom.A_E
    assert q > 0
    D = constitutive.diffusion_D
    expected = (
        left * q
        + left * constitutive.vtilde(right, params)
        - (D(right, params) - D(left, params)) / grid.dz
    )
    value = scheme.aggregate_flux(state, grid, example_point, params, i)
    assert value == pytest.approx(expected, rel=1e-12)


def test_flux_index_range(params, geom, example_point):
    grid = scheme.build_grid(geom, 10)
    state = scheme.State.water(grid)
    for i in (-1, grid.N + 1):
        with pytest.raises(IndexOutOfRange):
            scheme.aggregate_flux(state, grid, example_point, params, i)
        with pytest.raises(IndexOutOfRange):
            scheme.solids_flux(state, grid, example_point, params, i)


def test_closed_empty_column_is_fixed(params, geom):
    grid = scheme.build_grid(geom, 30)
    state = scheme.State.water(grid)
    dt = scheme.cfl_dt(grid, params, 0.0).dt_max
    assert np.all(scheme.step_phi(state, grid, CLOSED_VESSEL, params, dt) == 0)
    assert np.all(scheme.step_psi(state, grid, CLOSED_VESSEL, params, dt) == 0)


def test_column_full_of_aggregates_is_fixed(params, geom):
    op = OperatingPoint(Q_U=5e-5, Q_F=8e-5, Q_W=0.0, phi_F=1.0, psi_F=0.0)
    grid = scheme.build_grid(geom, 50)
    state = scheme.State(phi=np.ones(grid.N), psi=np.zeros(grid.N))
    dt = scheme.cfl_dt(grid, params, op.Q_F).dt_max
    phi = scheme.step_phi(state, grid, op, params, dt)
    assert np.allclose(phi, 1.0, rtol=0, atol=1e-14)


def test_time_step_above_bound(params, geom, example_point):
    grid = scheme.build_grid(geom, 50)
    state = scheme.State.water(grid)
    dt_max = scheme.cfl_dt(grid, params, example_point.Q_F + example_point.Q_W).dt_max
    scheme.step_phi(state, grid, example_point, params, dt_max)
    with pytest.raises(CflViolation):
        scheme.step_phi(state, grid, example_point, params, 1.01 * dt_max)
    with pytest.raises(CflViolation):
        scheme.step_psi(state, grid, example_point, params, 2 * dt_max, dt_max)


def test_discrete_mass_balance(params, geom, example_point):
    rng = np.random.default_rng(7)
    grid = scheme.build_grid(geom, 60)
    dt = scheme.cfl_dt(grid, params, example_point.Q_F + example_point.Q_W).dt_max
    for _ in range(20):
        state = _random_state(rng, grid.N)
        for new, fluxes, old, feed in (
            (
                scheme.step_phi(state, grid, example_point, params, dt),
                scheme.aggregate_fluxes(state.phi, grid, example_point, params),
                state.phi,
                example_point.Q_F * example_point.phi_F,
            ),
            (
                scheme.step_psi(state, grid, example_point, params, dt),
                scheme.solids_fluxes(
                    state.psi, state.phi, grid, example_point, params
                ),
                state.psi,
                example_point.Q_F * example_point.psi_F,
            ),
        ):
            before = np.sum(grid.A_cell * old * grid.dz)
            after = np.sum(grid.A_cell * new * grid.dz)
            exchanged = dt * (fluxes[0] - fluxes[-1] + feed)
            assert abs(after - before - exchanged) <= 1e-13 * max(before, after)


def test_advance_reports_residuals(params, geom, example_point):
    rng = np.random.default_rng(11)
    grid = scheme.build_grid(geom, 60)
    dt = scheme.cfl_dt(grid, params, example_point.Q_F + example_point.Q_W).dt_max
    state = _random_state(rng, grid.N)
    for _ in range(50):
        result = scheme.advance(state, grid, example_point, params, dt)
        assert result.residual_phi <= 1e-13
        assert result.residual_psi <= 1e-13
        assert result.state.t == pytest.approx(state.t + dt)
        state = result.state


def test_eo_flux_consistency(params):
    rng = np.random.default_rng(3)
    for _ in range(100):
        phi_l, phi_r = rng.uniform(0, 0.9, 2)
        psi_max = 1 - max(phi_l, phi_r)
        a = rng.uniform(0, 1)
        G = scheme.eo_flux(a, a, phi_l, phi_r, params)
        assert G == pytest.approx(_settling_flux(a, psi_max, params), abs=1e-15)


def test_eo_flux_vanishes_on_upper_bound(params):
    rng = np.random.default_rng(5)
    phi_l = np.append(rng.uniform(0, 1, 100), [0.0, 1.0, 0.5])
    phi_r = np.append(rng.uniform(0, 1, 100), [1.0, 0.0, 0.5])
    G = scheme.eo_flux(1 - phi_l, 1 - phi_r, phi_l, phi_r, params)
    assert np.all(G == 0.0)


def test_eo_flux_matches_godunov(params):
    rng = np.random.default_rng(9)
    checked = 0
    while checked < 100:
        phi_l, phi_r = rng.uniform(0, 0.9, 2)
        psi_max = 1 - max(phi_l, phi_r)
        hat = psi_max / (1 + params.n_RZ)
        psi_l, psi_r = rng.uniform(0, psi_max, 2)
        # the flux differs from the Godunov one only across the maximum
        if psi_r <= hat < psi_l:
            continue
        lo, hi = sorted((psi_l, psi_r))
        samples = np.linspace(lo, hi, 10_001)
        samples = np.append(samples, [lo, hi] + ([hat] if lo < hat < hi else []))
        f = np.array([_settling_flux(s, psi_max, params) for s in samples])
        # settling is downward, so the upper state plays the upwind role
        godunov = f.min() if psi_r <= psi_l else f.max()
        G = scheme.eo_flux(psi_l, psi_r, phi_l, phi_r, params)
        assert G == pytest.approx(godunov, abs=1e-10)
        checked += 1


def test_eo_flux_domain(params):
    with pytest.raises(DomainError):
        scheme.eo_flux(1.5, 0.1, 0.2, 0.2, params)
    with pytest.raises(DomainError):
        scheme.eo_flux(0.1, 0.1, -0.2, 0.2, params)


def test_solids_free_column_stays_free(params, geom, example_point):
    op = dataclasses.replace(example_point, psi_F=0.0)
    grid = scheme.build_grid(geom, 40)
    rng = np.random.default_rng(2)
    state = scheme.State(phi=rng.uniform(0, 1, grid.N), psi=np.zeros(grid.N))
    dt = scheme.cfl_dt(grid, params, op.Q_F + op.Q_W).dt_max
    assert np.all(scheme.step_psi(state, grid, op, params, dt) == 0)


def test_solids_upper_bound_is_attained(params, geom):
    op = OperatingPoint(Q_U=5e-5, Q_F=8e-5, Q_W=0.0, phi_F=0.3, psi_F=0.7)
    grid = scheme.build_grid(geom, 50)
    dt = scheme.cfl_dt(grid, params, op.Q_F).dt_max
    rng = np.random.default_rng(4)
    for _ in range(20):
        phi = rng.uniform(0, 1, grid.N)
        state = scheme.State(phi=phi, psi=1 - phi)
        new_phi = scheme.step_phi(state, grid, op, params, dt)
        new_psi = scheme.step_psi(state, grid, op, params, dt)
        assert np.allclose(new_psi, 1 - new_phi, rtol=0, atol=1e-12)


def _check_bounds(n_scenarios, n_steps, N, seed, params, geom):
    rng = np.random.default_rng(seed)
    grid = scheme.build_grid(geom, N)
    for _ in range(n_scenarios):
        op = _random_point(rng)
        dt = scheme.cfl_dt(grid, params, op.Q_F + op.Q_W).dt_max
        state = _random_state(rng, grid.N)
        for _ in range(n_steps):
            state = scheme.advance(state, grid, op, params, dt).state
            phi, psi = state.phi, state.psi
            assert np.all(phi >= -1e-12) and np.all(phi <= 1 + 1e-12)
            assert np.all(psi >= -1e-12) and np.all(psi <= 1 - phi + 1e-12)


def test_bounds_are_preserved(params, geom):
    _check_bounds(5, 500, 50, 13, params, geom)


@pytest.mark.slow
def test_bounds_are_preserved_long(params, geom):
    _check_bounds(100, 10_000, 100, 17, params, geom)


def test_aggregate_step_is_monotone(params, geom, example_point):
    rng = np.random.default_rng(21)
    grid = scheme.build_grid(geom, 30)
    dt = scheme.cfl_dt(grid, params, example_point.Q_F + example_point.Q_W).dt_max
    zeros = np.zeros(grid.N)
    for _ in range(1000):
        a = rng.uniform(0, 1, grid.N)
        b = a + rng.uniform(0, 1, grid.N) * (1 - a)
        new_a = scheme.step_phi(scheme.State(a, zeros), grid, example_point, params, dt)
        new_b = scheme.step_phi(scheme.State(b, zeros), grid, example_point, params, dt)
        assert np.all(new_a <= new_b + 1e-14)


def test_solids_step_is_monotone(params, geom, example_point):
    rng = np.random.default_rng(23)
    grid = scheme.build_grid(geom, 30)
    dt = scheme.cfl_dt(grid, params, example_point.Q_F + example_point.Q_W).dt_max
    for _ in range(1000):
        phi = rng.uniform(0, 1, grid.N)
        a = rng.uniform(0, 1, grid.N) * (1 - phi)
        b = a + rng.uniform(0, 1, grid.N) * (1 - phi - a)
        new_a = scheme.step_psi(scheme.State(phi, a), grid, example_point, params, dt)
        new_b = scheme.step_psi(scheme.State(phi, b), grid, example_point, params, dt)
        assert np.all(new_a <= new_b + 1e-14)


def _one_step_error(params, geom, N):
    grid = scheme.build_grid(geom, N)
    centers = grid.centers

    def profile(z):
        return 0.3 + 0.1 * np.sin(2 * np.pi * z)

    phi = np.zeros(grid.N)
    phi[1:-1] = profile(centers[1:-1])
    state = scheme.State(phi=phi, psi=np.zeros(grid.N))
    dt = scheme.cfl_dt(grid, params, 0.0).dt_max
    rate = (scheme.step_phi(state, grid, CLOSED_VESSEL, params, dt) - phi) / dt

    slope = 0.2 * np.pi * np.cos(2 * np.pi * centers)
    exact = -constitutive.jb_prime(profile(centers), params) * slope
    middle = (centers > 0.3) & (centers < 0.7)
    return np.max(np.abs(rate[middle] - exact[middle]))


def test_first_order_consistency(params, uniform_geom):
    coarse = _one_step_error(params, uniform_geom, 102)
    fine = _one_step_error(params, uniform_geom, 202)
    assert fine < 0.6 * coarse


def test_outlets_of_empty_column(geom):
    grid = scheme.build_grid(geom, 20)
    assert scheme.outlets(scheme.State.water(grid), grid) == (0.0, 0.0, 0.0, 0.0)


def test_outlets_of_desired_steady_state(params, geom, example_point):
    grid = scheme.build_grid(geom, 200)
    profile = desired_steady_state(example_point, params, geom, grid=grid.centers)
    state = scheme.State(phi=profile.phi, psi=profile.psi)
    phi_U, phi_E, psi_U, psi_E = scheme.outlets(state, grid)
    assert abs(phi_U) < 1e-6
    assert abs(psi_E) < 1e-6
    assert phi_E == pytest.approx(profile.phi_E)
    assert psi_U == pytest.approx(profile.varphi_U)


def test_interface_height(params, geom):
    grid = scheme.build_grid(geom, 40)
    state = scheme.State.water(grid)
    assert scheme.interface_height(state, grid, params) is None
    phi = np.zeros(grid.N)
    phi[30:] = 0.8
    state = scheme.State(phi=phi, psi=np.zeros(grid.N))
    assert scheme.interface_height(state, grid, params) == grid.z[30]


def test_state_shape_check():
    with pytest.raises(DomainError):
        scheme.State(phi=np.zeros(3), psi=np.zeros(4))
