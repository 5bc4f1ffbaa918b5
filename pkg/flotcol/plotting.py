"""
Static SVG views of simulation, steady-state and chart results.

Figures are built with the object API and an Agg canvas so nothing here
touches pyplot state; the functions are safe to call from worker threads.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Union

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .containers import TimeSeries

if TYPE_CHECKING:
    from .chart import ChartResult
    from .steady_state import SteadyProfile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

BOUNDARY_COLORS = {
    "fib": "tab:blue",
    "fias": "tab:orange",
    "froth1": "tab:green",
    "froth2": "tab:red",
    "froth3": "tab:purple",
}


def _figure(ncols: int = 1) -> Figure:
    fig = Figure(figsize=(4.0 * ncols, 4.5), layout="constrained")
    FigureCanvasAgg(fig)
    return fig


def _save(fig: Figure, path: PathLike) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg")
    logger.info("wrote %s", path)
    return path


def profiles_svg(series: TimeSeries, path: PathLike, max_profiles: int = 6) -> Path:
    """Aggregate and solids profiles of up to ``max_profiles`` snapshots."""
    fig = _figure(2)
    ax_phi, ax_psi = fig.subplots(1, 2, sharey=True)
    snaps = series.snapshots
    picks = np.unique(
        np.linspace(0, snaps.sizes["t"] - 1, min(max_profiles, snaps.sizes["t"]))
        .round()
        .astype(int)
    )
    z = snaps["z"].values
    for k in picks:
        label = f"t = {float(snaps['t'][k]):g} s"
        ax_phi.plot(snaps["phi"].values[k], z, label=label)
        ax_psi.plot(snaps["psi"].values[k], z, label=label)
    ax_phi.set_xlabel(r"$\phi$")
    ax_psi.set_xlabel(r"$\psi$")
    ax_phi.set_ylabel("z [m]")
    ax_phi.legend(fontsize="small")
    return _save(fig, path)


def outlets_svg(series: TimeSeries, path: PathLike) -> Path:
    fig = _figure()
    ax = fig.subplots()
    frame = series.outlets
    for name in ("phi_U", "phi_E", "psi_U", "psi_E"):
        ax.plot(frame["t"], frame[name], label=name)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("volume fraction")
    ax.legend(fontsize="small")
    return _save(fig, path)


def profile_svg(profile: "SteadyProfile", path: PathLike) -> Path:
    fig = _figure()
    ax = fig.subplots()
    ax.plot(profile.phi, profile.z, label=r"$\phi$")
    ax.plot(profile.psi, profile.z, label=r"$\psi$")
    if profile.z_fr is not None:
        ax.axhline(profile.z_fr, color="0.5", linestyle=":", label=r"$z_{fr}$")
    ax.set_xlabel("volume fraction")
    ax.set_ylabel("z [m]")
    ax.legend(fontsize="small")
    return _save(fig, path)


def chart_svg(result: "ChartResult", path: PathLike) -> Path:
    """Heatmap of the froth-interface height with condition boundaries."""
    fig = _figure()
    ax = fig.subplots()
    data = result.data
    Q_U, Q_F = data["Q_U"].values, data["Q_F"].values
    z_fr = np.where(data["feasible"].values, data["z_fr"].values, np.nan)
    mesh = ax.pcolormesh(Q_U, Q_F, z_fr.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$z_{fr}$ [m]")
    for name, lines in result.boundaries.items():
        for k, line in enumerate(lines):
            ax.plot(
                line[:, 0],
                line[:, 1],
                color=BOUNDARY_COLORS[name],
                linewidth=1.0,
                label=name if k == 0 else None,
            )
    ax.set_xlim(Q_U[0], Q_U[-1])
    ax.set_ylim(Q_F[0], Q_F[-1])
    ax.set_xlabel(r"$Q_U$ [m³/s]")
    ax.set_ylabel(r"$Q_F$ [m³/s]")
    if any(result.boundaries.values()):
        ax.legend(fontsize="small")
    return _save(fig, path)
