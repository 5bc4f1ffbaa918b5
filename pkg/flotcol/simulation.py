"""
Scenario runner: a piecewise-constant control schedule driven through the
finite-volume scheme with a fixed time step.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import logging
import math
from typing import Any, Callable, Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .column import DEFAULT_GEOMETRY, ColumnGeometry, Flows, OperatingPoint
from .constitutive import ConstitutiveParams, default_params
from .containers import OUTLET_COLUMNS, TimeSeries
from .errors import InvalidScenario, InvalidSchedule, ValidationError
from .scheme import CFL_SAFETY, Grid, State, advance, build_grid, cfl_dt, outlets
from .steady_state import desired_steady_state

logger = logging.getLogger(__name__)

#: admissible overshoot of user-supplied initial data
INITIAL_SLACK = 1e-12

CONTROL_FIELDS = ("Q_U", "Q_F", "Q_W", "phi_F", "psi_F")


class Controls(NamedTuple):
    """Control variables of one time step; unlike `OperatingPoint` unchecked."""

    Q_U: float
    Q_F: float
    Q_W: float
    phi_F: float
    psi_F: float


CLOSED_VESSEL = Controls(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ScheduleEntry:
    """Controls applied from ``t_start`` [s] until the next entry starts."""

    t_start: float
    Q_U: float
    Q_F: float
    Q_W: float
    phi_F: float
    psi_F: float

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(
            Q_U=self.Q_U,
            Q_F=self.Q_F,
            Q_W=self.Q_W,
            phi_F=self.phi_F,
            psi_F=self.psi_F,
        )

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in CONTROL_FIELDS)


InitialState = Union[str, Dict[str, Sequence[float]]]


@dataclass(frozen=True)
class Scenario:
    """
    Everything needed to reproduce a simulation.

    Parameters
    ----------
    schedule : sequence of ScheduleEntry
        Strictly increasing start times, the first one at 0 s.
    initial_state : {"water", "steady"} or dict
        ``"steady"`` starts from the desired steady state of the first entry;
        a dict supplies cell values under ``"phi"`` and ``"psi"``.
    N : int
        Number of cells.
    T_end, output_every : float
        Simulated horizon and snapshot spacing [s].
    """

    schedule: Tuple[ScheduleEntry, ...]
    params: ConstitutiveParams = field(default_factory=default_params)
    geometry: ColumnGeometry = DEFAULT_GEOMETRY
    initial_state: InitialState = "water"
    N: int = 200
    T_end: float = 1000.0
    output_every: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(self.schedule))
        if not self.schedule:
            raise InvalidSchedule("the schedule must hold at least one entry")
        starts = [entry.t_start for entry in self.schedule]
        if starts[0] != 0:
            raise InvalidSchedule(f"the schedule must start at t=0, got {starts[0]!r}")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvalidSchedule(
                f"schedule start times must increase strictly, got {starts!r}"
            )
        for entry in self.schedule:
            try:
                entry.operating_point()
            except ValidationError as exc:
                raise InvalidSchedule(
                    f"entry starting at t={entry.t_start!r}: {exc}"
                ) from exc
        if not self.T_end > 0:
            raise InvalidScenario(f"T_end must be positive, got {self.T_end!r}")
        if not self.output_every > 0:
            raise InvalidScenario(
                f"output_every must be positive, got {self.output_every!r}"
            )
        if isinstance(self.initial_state, str):
            if self.initial_state not in ("water", "steady"):
                raise InvalidScenario(
                    "initial_state must be 'water', 'steady' or a dict of arrays, "
                    f"got {self.initial_state!r}"
                )
        elif not {"phi", "psi"} <= set(self.initial_state):
            raise InvalidScenario("custom initial_state needs 'phi' and 'psi' arrays")

    @property
    def Q_sup(self) -> float:
        """Largest ``Q_F + Q_W`` of the schedule [m³/s]."""
        return max(entry.Q_F + entry.Q_W for entry in self.schedule)


def initial_state(scenario: Scenario, grid: Grid) -> State:
    """Cell values at ``t = 0``."""
    spec = scenario.initial_state
    if spec == "water":
        return State.water(grid)
    if spec == "steady":
        first = scenario.schedule[0].operating_point()
        profile = desired_steady_state(
            first, scenario.params, scenario.geometry, grid=grid.centers
        )
        return State(phi=profile.phi.copy(), psi=profile.psi.copy())
    assert isinstance(spec, dict)
    phi = np.asarray(spec["phi"], dtype=float)
    psi = np.asarray(spec["psi"], dtype=float)
    if phi.shape != (grid.N,) or psi.shape != (grid.N,):
        raise InvalidScenario(
            f"initial arrays must hold N={grid.N} values, got "
            f"{phi.shape} and {psi.shape}"
        )
    if (
        np.any(phi < -INITIAL_SLACK)
        or np.any(phi > 1 + INITIAL_SLACK)
        or np.any(psi < -INITIAL_SLACK)
        or np.any(psi > 1 - phi + INITIAL_SLACK)
    ):
        raise InvalidScenario(
            "initial data must satisfy 0 <= phi and 0 <= psi <= 1 - phi"
        )
    return State(phi=phi, psi=psi)


def interval_averages(
    schedule: Sequence[ScheduleEntry], dt: float, n_steps: int
) -> np.ndarray:
    """
    Average every control over each time step ``[n*dt, (n + 1)*dt]``.

    Returns an array of shape ``(n_steps, 5)`` ordered as `CONTROL_FIELDS`.
    Steps lying inside one schedule interval get the entry values exactly.
    """
    starts = np.array([entry.t_start for entry in schedule])
    values = np.array([entry.values() for entry in schedule])
    durations = np.diff(starts)
    cumulative = np.zeros_like(values)
    cumulative[1:] = np.cumsum(values[:-1] * durations[:, None], axis=0)

    t = np.arange(n_steps + 1) * dt
    t_lo, t_hi = t[:-1], t[1:]
    k_lo = np.searchsorted(starts, t_lo, side="right") - 1
    k_hi = np.searchsorted(starts, t_hi, side="left") - 1

    def integral(k, s):
        return cumulative[k] + values[k] * (s - starts[k])[:, None]

    averaged = (integral(k_hi, t_hi) - integral(k_lo, t_lo)) / dt
    return np.where((k_lo == k_hi)[:, None], values[k_lo], averaged)


def _snapshot_steps(t_end: float, output_every: float, dt: float, n_steps: int):
    count = math.floor(t_end / output_every + 1e-9) + 1
    wanted = np.arange(count) * output_every / dt
    return np.minimum(np.rint(wanted).astype(int), n_steps)


def _march(
    state: State,
    grid: Grid,
    p: ConstitutiveParams,
    controls: Callable[[int], Flows],
    dt: float,
    n_steps: int,
    snapshot_steps: np.ndarray,
    metadata: Dict[str, Any],
) -> TimeSeries:
    snap_phi: List[np.ndarray] = []
    snap_psi: List[np.ndarray] = []
    snap_t: List[float] = []
    wanted = list(snapshot_steps)

    def take(n: int, current: State):
        while wanted and wanted[0] == n:
            wanted.pop(0)
            snap_t.append(n * dt)
            snap_phi.append(current.phi.copy())
            snap_psi.append(current.psi.copy())

    trace = np.empty((n_steps, len(OUTLET_COLUMNS)))
    take(0, state)
    report_every = max(n_steps // 10, 1)
    for n in range(n_steps):
        result = advance(state, grid, controls(n), p, dt)
        state = State(phi=result.state.phi, psi=result.state.psi, t=(n + 1) * dt)
        trace[n, 0] = state.t
        trace[n, 1:5] = outlets(state, grid)
        trace[n, 5] = result.residual_phi
        trace[n, 6] = result.residual_psi
        take(n + 1, state)
        if (n + 1) % report_every == 0:
            logger.info("step %d/%d t=%.6g s", n + 1, n_steps, state.t)

    return TimeSeries.from_arrays(
        times=snap_t,
        z=grid.centers,
        phi=snap_phi,
        psi=snap_psi,
        outlets=pd.DataFrame(trace, columns=list(OUTLET_COLUMNS)),
        metadata=metadata,
    )


def _metadata(grid: Grid, cfl, dt: float, n_steps: int, t_end, output_every):
    return {
        "N": grid.N,
        "dz": grid.dz,
        "feed_cell": grid.feed_cell,
        "dt": dt,
        "dt_max": cfl.dt_max,
        "safety_factor": CFL_SAFETY,
        "n_steps": n_steps,
        "T_end": t_end,
        "output_every": output_every,
        "cfl": asdict(cfl),
    }


def _step_count(t_end: float, dt_max: float) -> int:
    return max(math.ceil(t_end / (CFL_SAFETY * dt_max)), 1)


def run(scenario: Scenario) -> TimeSeries:
    """
    Simulate ``scenario`` from ``t = 0`` to ``T_end``.

    The time step is the CFL bound for the largest ``Q_F + Q_W`` of the
    schedule, reduced by `CFL_SAFETY` and shortened so that a whole number
    of steps reaches ``T_end``.  Controls are averaged over each step.
    """
    grid = build_grid(scenario.geometry, scenario.N)
    p = scenario.params
    cfl = cfl_dt(grid, p, scenario.Q_sup)
    n_steps = _step_count(scenario.T_end, cfl.dt_max)
    dt = scenario.T_end / n_steps
    logger.info(
        "N=%d dz=%.6g m dt=%.6g s (dt_max=%.6g s) steps=%d",
        grid.N,
        grid.dz,
        dt,
        cfl.dt_max,
        n_steps,
    )
    for entry in scenario.schedule[1:]:
        logger.info(
            "control change at t=%g s applied from step %d",
            entry.t_start,
            math.floor(entry.t_start / dt),
        )
    averages = interval_averages(scenario.schedule, dt, n_steps)
    state = initial_state(scenario, grid)
    return _march(
        state,
        grid,
        p,
        lambda n: Controls(*averages[n]),
        dt,
        n_steps,
        _snapshot_steps(scenario.T_end, scenario.output_every, dt, n_steps),
        _metadata(grid, cfl, dt, n_steps, scenario.T_end, scenario.output_every),
    )


def run_batch(
    state: State,
    grid: Grid,
    p: ConstitutiveParams,
    t_end: float,
    output_every: float,
) -> TimeSeries:
    """
    Drainage and settling in a closed vessel.

    All bulk flows and the feed are zero, so both phases only redistribute
    and their totals are conserved.
    """
    if not t_end > 0 or not output_every > 0:
        raise InvalidScenario(
            f"t_end and output_every must be positive, got {t_end!r}, {output_every!r}"
        )
    cfl = cfl_dt(grid, p, 0.0)
    n_steps = _step_count(t_end, cfl.dt_max)
    dt = t_end / n_steps
    logger.info("closed vessel: dt=%.6g s steps=%d", dt, n_steps)
    return _march(
        state,
        grid,
        p,
        lambda n: CLOSED_VESSEL,
        dt,
        n_steps,
        _snapshot_steps(t_end, output_every, dt, n_steps),
        _metadata(grid, cfl, dt, n_steps, t_end, output_every),
    )
