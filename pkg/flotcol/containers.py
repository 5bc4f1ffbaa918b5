from dataclasses import dataclass, field
from typing import Any, Dict, Protocol, Tuple, Union

import numpy as np
import pandas as pd
import xarray as xr


@dataclass(frozen=True)
class Desc:
    shape: Tuple[Union[str, int], ...]
    dtype: np.dtype
    # "1" for volume fractions
    units: str = "naive"


class ResultContainer(Protocol):
    def describe(self) -> Dict[str, Desc]:
        """
        Describe the arrays the container holds.

        Returns
        -------
        Dict[str, Desc]
        """

    def to_dataframe(self) -> pd.DataFrame:
        ...


OUTLET_COLUMNS = (
    "t",
    "phi_U",
    "phi_E",
    "psi_U",
    "psi_E",
    "mass_residual_phi",
    "mass_residual_psi",
)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    Output of a simulation run.

    Attributes
    ----------
    snapshots : xarray.Dataset
        ``phi`` and ``psi`` over dimensions ``("t", "z")``; ``z`` holds the
        cell-centre heights [m].
    outlets : pandas.DataFrame
        One row per time step with the columns of `OUTLET_COLUMNS`.
    metadata : dict
        Grid and time-step information of the run.
    """

    snapshots: xr.Dataset
    outlets: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_arrays(
        cls,
        times,
        z,
        phi,
        psi,
        outlets: pd.DataFrame,
        metadata: Dict[str, Any],
    ) -> "TimeSeries":
        snapshots = xr.Dataset(
            {
                "phi": (("t", "z"), np.asarray(phi, dtype=float)),
                "psi": (("t", "z"), np.asarray(psi, dtype=float)),
            },
            coords={"t": np.asarray(times, dtype=float), "z": np.asarray(z)},
        )
        snapshots["t"].attrs["units"] = "s"
        snapshots["z"].attrs["units"] = "m"
        return cls(snapshots=snapshots, outlets=outlets, metadata=dict(metadata))

    @property
    def times(self) -> np.ndarray:
        return self.snapshots["t"].values

    def describe(self) -> Dict[str, Desc]:
        nt, nz = self.snapshots.sizes["t"], self.snapshots.sizes["z"]
        desc = {
            "t": Desc((nt,), np.dtype(float), "s"),
            "z": Desc((nz,), np.dtype(float), "m"),
            "phi": Desc((nt, nz), np.dtype(float), "1"),
            "psi": Desc((nt, nz), np.dtype(float), "1"),
        }
        for name in OUTLET_COLUMNS[1:]:
            desc[name] = Desc((len(self.outlets),), np.dtype(float), "1")
        return desc

    def to_dataframe(self) -> pd.DataFrame:
        """Snapshots in long format with columns ``t, z, phi, psi``."""
        frame = self.snapshots[["phi", "psi"]].to_dataframe().reset_index()
        return frame[["t", "z", "phi", "psi"]]

    def snapshot(self, t: float) -> xr.Dataset:
        return self.snapshots.sel(t=t, method="nearest")
