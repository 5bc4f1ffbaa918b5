"""
Explicit monotone finite-volume scheme for the column.

The vessel is covered by ``N`` cells of width ``dz = H/(N - 2)``: one below
``z_U`` that represents the underflow, ``N - 2`` inside the column and one
above ``z_E`` for the effluent.  Boundary ``i`` sits at internal coordinate
``i*dz``; cell ``j`` (``I_{j+1/2}`` in half-index notation) spans
boundaries ``j`` and ``j + 1``.  Both phases are advanced from the same
time level: fluxes are assembled from level ``n`` before either array is
replaced.

Flux arrays returned by `aggregate_fluxes` and `solids_fluxes` are volumetric
(area times flux, m³/s) and indexed by boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .column import ColumnGeometry, Flows
from .constitutive import ConstitutiveParams, _D, _check_fraction, _vtilde
from .errors import CflViolation, DomainError, GridTooCoarse, IndexOutOfRange

logger = logging.getLogger(__name__)

#: below this value of 1 - phi the suspension ratio psi/(1 - phi) is taken as 0
SUSPENSION_GUARD = 1e-12
CFL_SAFETY = 0.95


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Cell layout of the vessel.

    Attributes
    ----------
    z : ndarray, shape (N + 1,)
        Physical heights of the cell boundaries; ``z[1] = z_U`` and
        ``z[N - 1] = z_E``.
    A_cell : ndarray, shape (N,)
        Cell averages of the cross-sectional area.
    A_boundary : ndarray, shape (N + 1,)
        Averages of the area over ``[z_i - dz/2, z_i + dz/2)``.
    gamma : ndarray, shape (N + 1,)
        1 at boundaries inside ``[z_U, z_E)``, else 0.
    feed_cell : int
        The cell whose half-open interval contains ``z_F``.
    """

    geom: ColumnGeometry
    N: int
    dz: float
    z: np.ndarray
    A_cell: np.ndarray
    A_boundary: np.ndarray
    gamma: np.ndarray
    feed_cell: int

    @property
    def z_internal(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dz

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.z[:-1] + self.z[1:])

    @cached_property
    def M1(self) -> float:
        return float(
            max(
                np.max(self.A_boundary[:-1] / self.A_cell),
                np.max(self.A_boundary[1:] / self.A_cell),
            )
        )

    @cached_property
    def M2(self) -> float:
        return float(np.max((self.A_boundary[:-1] + self.A_boundary[1:]) / self.A_cell))

    @cached_property
    def A_min(self) -> float:
        return float(min(self.A_cell.min(), self.A_boundary.min()))

    def total(self, values: np.ndarray) -> float:
        """Volume integral of cell averages over the whole vessel [m³]."""
        return float(np.sum(self.A_cell * values) * self.dz)


def build_grid(geom: ColumnGeometry, N: int) -> Grid:
    """
    Cover the vessel with ``N`` cells.

    Raises
    ------
    GridTooCoarse
        For ``N < 4``.
    """
    if N < 4:
        raise GridTooCoarse(f"need at least 4 cells, got N={N!r}")
    dz = geom.H / (N - 2)
    z = geom.z_U + (np.arange(N + 1) - 1) * dz
    z[1], z[N - 1] = geom.z_U, geom.z_E
    gamma = np.zeros(N + 1)
    gamma[1 : N - 1] = 1.0
    feed_cell = int(np.searchsorted(z, geom.z_F, side="right")) - 1
    grid = Grid(
        geom=geom,
        N=N,
        dz=dz,
        z=z,
        A_cell=np.asarray(geom.mean_area(z[:-1], z[1:])),
        A_boundary=np.asarray(geom.mean_area(z - dz / 2, z + dz / 2)),
        gamma=gamma,
        feed_cell=feed_cell,
    )
    logger.debug("grid N=%d dz=%.6g m feed_cell=%d", N, dz, feed_cell)
    return grid


@dataclass(frozen=True)
class State:
    phi: np.ndarray
    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if np.shape(self.phi) != np.shape(self.psi):
            raise DomainError(
                f"phi and psi must have the same shape, got "
                f"{np.shape(self.phi)} and {np.shape(self.psi)}"
            )

    @classmethod
    def water(cls, grid: Grid) -> "State":
        """Column filled with clean water."""
        return cls(phi=np.zeros(grid.N), psi=np.zeros(grid.N))


@dataclass(frozen=True)
class CflData:
    M1: float
    M2: float
    A_min: float
    Q_sup: float
    norm_v: float
    norm_vprime: float
    norm_d: float
    vhs0: float
    norm_vhs_prime: float
    beta1: float
    beta2: float
    dt_max: float


def sup_norms(p: ConstitutiveParams) -> Tuple[float, float, float, float, float]:
    """
    Closed-form sup-norms used by the CFL bound.

    Returns ``(|vtilde|, |vtilde'|, |d|, v_hs(0), |v_hs'|)``.
    """
    norm_v = p.v_term
    norm_vprime = max(
        p.v_term * p.n_b,
        p.v_drain * (2.0 * p.n_S + 1.0) * (1.0 - p.phi_c) ** (2.0 * p.n_S),
    )
    # phi*(1 - phi)**n_S peaks at 1/(1 + n_S)
    peak = max(p.phi_c, 1.0 / (1.0 + p.n_S))
    norm_d = p.v_drain * p.d_cap * peak * (1.0 - peak) ** p.n_S
    return norm_v, norm_vprime, norm_d, p.v_inf, p.v_inf * p.n_RZ


def cfl_dt(grid: Grid, p: ConstitutiveParams, Q_sup: float) -> CflData:
    """
    Largest time step allowed by the CFL condition.

    Parameters
    ----------
    grid : Grid
    p : ConstitutiveParams
    Q_sup : float
        Maximum of ``Q_F + Q_W`` over the simulated horizon [m³/s].
    """
    norm_v, norm_vprime, norm_d, vhs0, norm_vhs_prime = sup_norms(p)
    M1, M2, A_min, dz = grid.M1, grid.M2, grid.A_min, grid.dz
    beta1 = M1 * norm_v + M2 * norm_d / dz
    beta2 = M1 * max(vhs0, norm_vhs_prime) + M2 * (1.0 - p.phi_c) * norm_d / dz
    dt_max = dz / (2.0 * Q_sup / A_min + M1 * norm_vprime + max(beta1, beta2))
    return CflData(
        M1=M1,
        M2=M2,
        A_min=A_min,
        Q_sup=Q_sup,
        norm_v=norm_v,
        norm_vprime=norm_vprime,
        norm_d=norm_d,
        vhs0=vhs0,
        norm_vhs_prime=norm_vhs_prime,
        beta1=beta1,
        beta2=beta2,
        dt_max=dt_max,
    )


def boundary_flows(grid: Grid, op: Flows) -> np.ndarray:
    """Upward volumetric bulk flow through every boundary [m³/s]."""
    Q = np.empty(grid.N + 1)
    f = grid.feed_cell
    Q[: f + 1] = -op.Q_U
    Q[f + 1 : grid.N - 1] = op.Q_F - op.Q_U
    Q[grid.N - 1 :] = op.Q_W + op.Q_F - op.Q_U
    return Q


def _padded(values: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], values, [0.0]))


def _suspension_ratio(psi: np.ndarray, phi: np.ndarray) -> np.ndarray:
    room = 1.0 - phi
    return np.divide(
        psi, room, out=np.zeros_like(psi), where=room >= SUSPENSION_GUARD
    )


def aggregate_fluxes(
    phi: np.ndarray, grid: Grid, op: Flows, p: ConstitutiveParams
) -> np.ndarray:
    """Volumetric aggregate flux ``A_i*Phi_i`` at every boundary [m³/s]."""
    ext = _padded(phi)
    left, right = ext[:-1], ext[1:]
    Q = boundary_flows(grid, op)
    D = _D(ext, p)
    drift = left * _vtilde(right, p) - (D[1:] - D[:-1]) / grid.dz
    return (
        left * np.maximum(Q, 0.0)
        + right * np.minimum(Q, 0.0)
        + grid.gamma * grid.A_boundary * drift
    )


def _settling(psi, psi_max, p: ConstitutiveParams):
    u = np.divide(psi, psi_max, out=np.ones_like(psi), where=psi_max > 0)
    return psi * p.v_inf * np.clip(1.0 - u, 0.0, None) ** p.n_RZ


def _eo_flux(psi_left, psi_right, phi_left, phi_right, p: ConstitutiveParams):
    psi_left = np.asarray(psi_left, dtype=float)
    psi_right = np.asarray(psi_right, dtype=float)
    psi_max = 1.0 - np.maximum(phi_left, phi_right)
    hat = psi_max / (1.0 + p.n_RZ)
    f_hat = _settling(hat, psi_max, p)
    increasing = _settling(np.minimum(psi_right, hat), psi_max, p)
    decreasing = _settling(np.maximum(psi_left, hat), psi_max, p) - f_hat
    return increasing + decreasing


def eo_flux(psi_left, psi_right, phi_left, phi_right, p: ConstitutiveParams):
    """
    Engquist-Osher flux for the downward settling of solids [m/s].

    The batch settling flux between two cells is
    ``f(psi) = psi*v_hs(psi/psi_max)`` with ``psi_max = 1 - max(phi_left,
    phi_right)``; ``v_hs`` vanishes once its argument reaches 1.  ``f`` has a
    single maximum at ``psi_max/(1 + n_RZ)``.  Settling is downward, so the
    right (upper) state is upwind on the increasing branch.
    """
    args = [
        _check_fraction(x, name)
        for x, name in (
            (psi_left, "psi_left"),
            (psi_right, "psi_right"),
            (phi_left, "phi_left"),
            (phi_right, "phi_right"),
        )
    ]
    G = _eo_flux(*args, p)
    return float(G) if G.ndim == 0 else G


def solids_fluxes(
    psi: np.ndarray,
    phi: np.ndarray,
    grid: Grid,
    op: Flows,
    p: ConstitutiveParams,
) -> np.ndarray:
    """Volumetric solids flux ``A_i*Psi_i`` at every boundary [m³/s]."""
    ps, ph = _padded(psi), _padded(phi)
    psi_l, psi_r = ps[:-1], ps[1:]
    phi_l, phi_r = ph[:-1], ph[1:]
    Q = boundary_flows(grid, op)
    D = _D(ph, p)
    dD = (D[1:] - D[:-1]) / grid.dz
    # bubbles moving up carry suspension down from the upper cell and vice versa
    upward = phi_l * _vtilde(phi_r, p) - np.minimum(dD, 0.0)
    inner = (
        _eo_flux(psi_l, psi_r, phi_l, phi_r, p)
        + _suspension_ratio(psi_r, phi_r) * upward
        - _suspension_ratio(psi_l, phi_l) * np.maximum(dD, 0.0)
    )
    return (
        psi_l * np.maximum(Q, 0.0)
        + psi_r * np.minimum(Q, 0.0)
        - grid.gamma * grid.A_boundary * inner
    )


def _boundary_index(grid: Grid, i: int) -> int:
    if not 0 <= i <= grid.N:
        raise IndexOutOfRange(f"boundary index must lie in [0, {grid.N}], got {i!r}")
    return i


def aggregate_flux(
    state: State, grid: Grid, op: Flows, p: ConstitutiveParams, i: int
) -> float:
    """Total aggregate flux ``Phi_i`` through boundary ``i`` [m/s]."""
    i = _boundary_index(grid, i)
    return float(aggregate_fluxes(state.phi, grid, op, p)[i] / grid.A_boundary[i])


def solids_flux(
    state: State, grid: Grid, op: Flows, p: ConstitutiveParams, i: int
) -> float:
    """Total solids flux ``Psi_i`` through boundary ``i`` [m/s]."""
    i = _boundary_index(grid, i)
    fluxes = solids_fluxes(state.psi, state.phi, grid, op, p)
    return float(fluxes[i] / grid.A_boundary[i])


def _check_dt(
    dt: float, grid: Grid, op: Flows, p: ConstitutiveParams, dt_max: Optional[float]
) -> None:
    if dt_max is None:
        dt_max = cfl_dt(grid, p, op.Q_F + op.Q_W).dt_max
    if dt > dt_max * (1.0 + 1e-12):
        raise CflViolation(f"dt={dt!r} s exceeds the CFL bound {dt_max!r} s")


def _update(values, fluxes, feed, grid: Grid, dt: float) -> np.ndarray:
    change = fluxes[:-1] - fluxes[1:]
    change[grid.feed_cell] += feed
    return values + dt / (grid.A_cell * grid.dz) * change


def step_phi(
    state: State,
    grid: Grid,
    op: Flows,
    p: ConstitutiveParams,
    dt: float,
    dt_max: Optional[float] = None,
) -> np.ndarray:
    """
    Advance the aggregate fractions by one step.

    ``dt_max`` defaults to the CFL bound for ``Q_sup = Q_F + Q_W`` of ``op``.

    Raises
    ------
    CflViolation
    """
    _check_dt(dt, grid, op, p, dt_max)
    fluxes = aggregate_fluxes(state.phi, grid, op, p)
    return _update(state.phi, fluxes, op.Q_F * op.phi_F, grid, dt)


def step_psi(
    state: State,
    grid: Grid,
    op: Flows,
    p: ConstitutiveParams,
    dt: float,
    dt_max: Optional[float] = None,
) -> np.ndarray:
    """
    Advance the solids fractions by one step.

    Uses the aggregate fractions of ``state``, that is the old time level.

    Raises
    ------
    CflViolation
    """
    _check_dt(dt, grid, op, p, dt_max)
    fluxes = solids_fluxes(state.psi, state.phi, grid, op, p)
    return _update(state.psi, fluxes, op.Q_F * op.psi_F, grid, dt)


class StepResult(NamedTuple):
    state: State
    residual_phi: float
    residual_psi: float


def _residual(grid: Grid, old, new, fluxes, feed, dt) -> float:
    before, after = grid.total(old), grid.total(new)
    exchanged = dt * (fluxes[0] - fluxes[-1] + feed)
    through = dt * (abs(fluxes[0]) + abs(fluxes[-1]) + feed)
    scale = max(abs(before), abs(after), through)
    if scale == 0:
        return 0.0
    return abs(after - before - exchanged) / scale


def advance(
    state: State, grid: Grid, op: Flows, p: ConstitutiveParams, dt: float
) -> StepResult:
    """
    One full step of both phases with mass-balance residuals.

    The caller is responsible for ``dt`` respecting the CFL bound.
    """
    F = aggregate_fluxes(state.phi, grid, op, p)
    S = solids_fluxes(state.psi, state.phi, grid, op, p)
    feed_phi, feed_psi = op.Q_F * op.phi_F, op.Q_F * op.psi_F
    phi = _update(state.phi, F, feed_phi, grid, dt)
    psi = _update(state.psi, S, feed_psi, grid, dt)
    return StepResult(
        state=State(phi=phi, psi=psi, t=state.t + dt),
        residual_phi=_residual(grid, state.phi, phi, F, feed_phi, dt),
        residual_psi=_residual(grid, state.psi, psi, S, feed_psi, dt),
    )


def outlets(state: State, grid: Grid) -> Tuple[float, float, float, float]:
    """``(phi_U, phi_E, psi_U, psi_E)`` from the two outermost cells."""
    return (
        float(state.phi[0]),
        float(state.phi[grid.N - 1]),
        float(state.psi[0]),
        float(state.psi[grid.N - 1]),
    )


def interface_height(
    state: State, grid: Grid, p: ConstitutiveParams
) -> Optional[float]:
    """
    Lower boundary of the first cell above the feed cell holding froth.

    Returns None when no interior cell above the feed reaches ``phi_c``.
    """
    above = state.phi[grid.feed_cell + 1 : grid.N - 1]
    hits = np.flatnonzero(above >= p.phi_c)
    if not hits.size:
        return None
    return float(grid.z[grid.feed_cell + 1 + hits[0]])
