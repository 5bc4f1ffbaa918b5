"""
Operating charts: the necessary conditions for a desired steady state
evaluated over a grid of underflow and feed flows.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math
import os
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd
from skimage import measure
import xarray as xr

from .column import DEFAULT_GEOMETRY, ColumnGeometry, OperatingPoint
from .constitutive import ConstitutiveParams, default_params
from .errors import DomainError, GridTooCoarse, ValidationError
from .plotting import chart_svg
from .steady_state import FeasibilityReport, check_conditions

logger = logging.getLogger(__name__)

CONDITIONS = ("fib", "fias", "froth1", "froth2", "froth3")
CSV_COLUMNS = ("Q_U", "Q_F") + CONDITIONS + ("feasible", "z_fr")
THREADS_ENV = "FLOTCOL_THREADS"


def default_threads() -> int:
    """Worker count from ``FLOTCOL_THREADS``, else the number of CPUs."""
    raw = os.environ.get(THREADS_ENV)
    if raw is not None:
        try:
            return max(int(raw), 1)
        except ValueError:
            logger.warning("ignoring %s=%r: not an integer", THREADS_ENV, raw)
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ChartSpec:
    """
    A rectangular grid in the ``(Q_U, Q_F)`` plane at fixed wash water and
    feed composition.
    """

    qU_range: Tuple[float, float]
    qF_range: Tuple[float, float]
    Q_W: float
    phi_F: float
    psi_F: float
    nU: int = 101
    nF: int = 101
    geometry: ColumnGeometry = DEFAULT_GEOMETRY
    params: ConstitutiveParams = field(default_factory=default_params)

    def __post_init__(self):
        for name in ("qU_range", "qF_range"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise DomainError(f"{name} must have positive length, got {(lo, hi)!r}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.nU < 2 or self.nF < 2:
            raise GridTooCoarse(
                "a chart needs at least 2 nodes per axis, "
                f"got nU={self.nU}, nF={self.nF}"
            )

    @property
    def Q_U(self) -> np.ndarray:
        return np.linspace(*self.qU_range, self.nU)

    @property
    def Q_F(self) -> np.ndarray:
        return np.linspace(*self.qF_range, self.nF)


@dataclass(frozen=True, eq=False)
class ChartResult:
    """
    Per-node outcome of an operating chart.

    Attributes
    ----------
    reports : tuple of tuples
        ``reports[i][j]`` belongs to ``(Q_U[i], Q_F[j])``; None where the
        flows do not form a valid operating point (for instance ``Q_E <= 0``).
    data : xarray.Dataset
        Condition flags, ``feasible``, encoded ``z_fr`` and the margins of
        every condition over dimensions ``("Q_U", "Q_F")``.
    boundaries : dict
        Zero level sets of the margins, one list of ``(k, 2)`` arrays of
        ``(Q_U, Q_F)`` points per condition.
    """

    spec: ChartSpec
    reports: Tuple[Tuple[Optional[FeasibilityReport], ...], ...]
    data: xr.Dataset
    boundaries: Dict[str, List[np.ndarray]]

    @property
    def feasible(self) -> np.ndarray:
        return self.data["feasible"].values

    def to_dataframe(self) -> pd.DataFrame:
        frame = self.data[list(CSV_COLUMNS[2:])].to_dataframe().reset_index()
        return frame[list(CSV_COLUMNS)]


class Wedge(NamedTuple):
    """The region ``phi_c < phi_E <= 1`` as ``Q_U = Q_W + slope*Q_F`` lines."""

    vertex: Tuple[float, float]
    slope_low: float
    slope_high: float

    @property
    def opening(self) -> float:
        return self.slope_high - self.slope_low


def froth1_wedge(Q_W: float, phi_F: float, phi_c: float) -> Wedge:
    """
    Boundary lines of the effluent-fraction condition.

    ``phi_E > phi_c`` holds right of ``Q_U = Q_W + (1 - phi_F/phi_c)*Q_F`` and
    ``phi_E <= 1`` left of ``Q_U = Q_W + (1 - phi_F)*Q_F``.
    """
    return Wedge(
        vertex=(Q_W, 0.0),
        slope_low=1.0 - phi_F / phi_c,
        slope_high=1.0 - phi_F,
    )


def _evaluate_node(
    spec: ChartSpec, Q_U: float, Q_F: float
) -> Optional[FeasibilityReport]:
    try:
        op = OperatingPoint(
            Q_U=Q_U, Q_F=Q_F, Q_W=spec.Q_W, phi_F=spec.phi_F, psi_F=spec.psi_F
        )
    except ValidationError:
        return None
    return check_conditions(op, spec.params, spec.geometry)


def _margin(report: Optional[FeasibilityReport], name: str) -> float:
    if report is None:
        return math.nan
    value = getattr(report, f"{name}_margin")
    return math.nan if value is None else value


def _contours(margin: np.ndarray, Q_U: np.ndarray, Q_F: np.ndarray):
    finite = np.isfinite(margin)
    if finite.sum() < 4:
        return []
    filled = np.where(finite, margin, 0.0)
    rows = np.arange(len(Q_U))
    cols = np.arange(len(Q_F))
    return [
        np.column_stack((np.interp(c[:, 0], rows, Q_U), np.interp(c[:, 1], cols, Q_F)))
        for c in measure.find_contours(filled, 0.0, mask=finite)
    ]


def evaluate_chart(
    spec: ChartSpec, max_workers: Optional[int] = None
) -> ChartResult:
    """
    Evaluate the necessary conditions at every node of ``spec``.

    Nodes are independent and run on a thread pool of ``max_workers``
    threads (default `default_threads`); the result does not depend on the
    number of threads.
    """
    Q_U, Q_F = spec.Q_U, spec.Q_F
    nodes = [(u, f) for u in Q_U for f in Q_F]
    workers = max_workers or default_threads()
    logger.info("chart: %d nodes on %d threads", len(nodes), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        flat = list(pool.map(lambda node: _evaluate_node(spec, *node), nodes))
    reports = tuple(
        tuple(flat[i * spec.nF : (i + 1) * spec.nF]) for i in range(spec.nU)
    )

    shape = (spec.nU, spec.nF)
    variables = {}
    for name in CONDITIONS:
        variables[name] = np.array(
            [r is not None and getattr(r, f"{name}_ok") for r in flat]
        ).reshape(shape)
        variables[f"{name}_margin"] = np.array(
            [_margin(r, name) for r in flat]
        ).reshape(shape)
    variables["feasible"] = np.array(
        [r is not None and r.feasible for r in flat]
    ).reshape(shape)
    variables["z_fr"] = np.array(
        [math.nan if r is None else r.z_fr_code for r in flat]
    ).reshape(shape)

    data = xr.Dataset(
        {name: (("Q_U", "Q_F"), values) for name, values in variables.items()},
        coords={"Q_U": Q_U, "Q_F": Q_F},
        attrs={"Q_W": spec.Q_W, "phi_F": spec.phi_F, "psi_F": spec.psi_F},
    )
    boundaries = {
        name: _contours(variables[f"{name}_margin"], Q_U, Q_F) for name in CONDITIONS
    }
    logger.info(
        "chart: %d of %d nodes feasible", int(variables["feasible"].sum()), len(nodes)
    )
    return ChartResult(spec=spec, reports=reports, data=data, boundaries=boundaries)


def export_chart(result: ChartResult, path: Union[str, Path]) -> Dict[str, Path]:
    """
    Write the chart as CSV to ``path`` and as an SVG heatmap next to it.

    The CSV has one row per node, ``Q_U`` varying slowest.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    result.to_dataframe().to_csv(path, index=False)
    logger.info("wrote %s", path)
    svg = chart_svg(result, path.with_suffix(".svg"))
    return {"csv": path, "svg": svg}
