"""
JSON inputs and CSV/JSON outputs.

All files use SI units and the field names of the corresponding value types.
Constitutive parameters are given either directly (``v_drain`` may be left
out, the compatible value is then used) or as ``{"physical": {...}, ...}``
from which they are derived.
"""
from __future__ import annotations

from dataclasses import asdict, fields
import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Tuple, TypeVar, Union

from .chart import ChartSpec
from .column import DEFAULT_GEOMETRY, ColumnGeometry, OperatingPoint
from .constitutive import (
    DEFAULT_INPUTS,
    ConstitutiveParams,
    PhysicalParams,
    default_params,
    derive_params,
)
from .containers import TimeSeries
from .errors import InvalidScenario
from .simulation import Scenario, ScheduleEntry
from .steady_state import FeasibilityReport, SteadyProfile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")

SERIES_FILE = "series.csv"
OUTLETS_FILE = "outlets.csv"
METADATA_FILE = "metadata.json"
PROFILE_FILE = "profile.csv"
REPORT_FILE = "report.json"

_OPERATING_FIELDS = ("Q_U", "Q_F", "Q_W", "phi_F", "psi_F")


def read_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidScenario(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidScenario(f"{path} must hold a JSON object")
    return data


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def dumps(payload: Mapping[str, Any]) -> str:
    """Deterministic JSON text; non-finite floats become strings."""
    return json.dumps(_jsonable(dict(payload)), sort_keys=True, indent=2)


def write_json(path: PathLike, payload: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.write_text(dumps(payload) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def _build(factory: Callable[..., T], data: Mapping[str, Any], what: str) -> T:
    if not isinstance(data, Mapping):
        raise InvalidScenario(f"{what} must be a JSON object, got {data!r}")
    try:
        return factory(**data)
    except TypeError as exc:
        raise InvalidScenario(f"bad {what}: {exc}") from exc


def _unknown(data: Mapping[str, Any], allowed, what: str) -> None:
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise InvalidScenario(f"unknown {what} fields: {', '.join(extra)}")


def params_from_dict(data: Mapping[str, Any]) -> ConstitutiveParams:
    data = dict(data)
    if "physical" in data:
        phys = _build(PhysicalParams, data.pop("physical"), "physical parameters")
        _unknown(data, DEFAULT_INPUTS, "parameter")
        return derive_params(phys, **{**DEFAULT_INPUTS, **data})
    if "v_drain" in data:
        return _build(ConstitutiveParams, data, "constitutive parameters")
    return _build(ConstitutiveParams.compatible, data, "constitutive parameters")


def derived_params_from_dict(
    data: Mapping[str, Any]
) -> Tuple[PhysicalParams, ConstitutiveParams]:
    """
    Physical constants plus the remaining inputs of `derive_params`.

    Any of ``v_term, n_b, phi_c, v_inf, n_RZ`` missing from ``data`` takes its
    default value.
    """
    physical_names = {f.name for f in fields(PhysicalParams)}
    _unknown(data, physical_names | set(DEFAULT_INPUTS), "parameter")
    phys = _build(
        PhysicalParams,
        {k: v for k, v in data.items() if k in physical_names},
        "physical parameters",
    )
    overrides = {k: v for k, v in data.items() if k in DEFAULT_INPUTS}
    inputs = {**DEFAULT_INPUTS, **overrides}
    return phys, derive_params(phys, **inputs)


def geometry_from_dict(data: Mapping[str, Any]) -> ColumnGeometry:
    return _build(ColumnGeometry, data, "geometry")


def operating_point_from_dict(data: Mapping[str, Any]) -> OperatingPoint:
    return _build(
        OperatingPoint,
        {k: data[k] for k in _OPERATING_FIELDS if k in data},
        "operating point",
    )


def _context(data: Mapping[str, Any]) -> Tuple[ConstitutiveParams, ColumnGeometry]:
    p = params_from_dict(data["params"]) if "params" in data else default_params()
    geom = (
        geometry_from_dict(data["geometry"]) if "geometry" in data else DEFAULT_GEOMETRY
    )
    return p, geom


def point_from_dict(
    data: Mapping[str, Any]
) -> Tuple[OperatingPoint, ConstitutiveParams, ColumnGeometry]:
    """An operating point file, optionally with ``params`` and ``geometry``."""
    _unknown(data, set(_OPERATING_FIELDS) | {"params", "geometry"}, "point")
    p, geom = _context(data)
    return operating_point_from_dict(data), p, geom


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    allowed = {
        "schedule",
        "params",
        "geometry",
        "initial_state",
        "N",
        "T_end",
        "output_every",
    }
    _unknown(data, allowed, "scenario")
    p, geom = _context(data)
    schedule = [
        _build(ScheduleEntry, entry, "schedule entry")
        for entry in data.get("schedule", [])
    ]
    options = {
        k: data[k]
        for k in ("initial_state", "N", "T_end", "output_every")
        if k in data
    }
    return Scenario(schedule=tuple(schedule), params=p, geometry=geom, **options)


def chart_spec_from_dict(data: Mapping[str, Any]) -> ChartSpec:
    allowed = {
        "qU_range",
        "qF_range",
        "nU",
        "nF",
        "Q_W",
        "phi_F",
        "psi_F",
        "params",
        "geometry",
    }
    _unknown(data, allowed, "chart spec")
    p, geom = _context(data)
    options = {k: data[k] for k in allowed - {"params", "geometry"} if k in data}
    return _build(ChartSpec, {**options, "params": p, "geometry": geom}, "chart spec")


def load_scenario(path: PathLike) -> Scenario:
    return scenario_from_dict(read_json(path))


def load_point(
    path: PathLike,
) -> Tuple[OperatingPoint, ConstitutiveParams, ColumnGeometry]:
    return point_from_dict(read_json(path))


def params_to_dict(p: ConstitutiveParams) -> Dict[str, float]:
    return asdict(p)


def report_to_json(report: FeasibilityReport) -> str:
    return dumps(report.to_dict())


def write_series(series: TimeSeries, out_dir: PathLike) -> Dict[str, Path]:
    """
    Write ``series.csv``, ``outlets.csv`` and ``metadata.json``.

    ``series.csv`` holds the snapshots in long format ``t,z,phi,psi``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "series": out_dir / SERIES_FILE,
        "outlets": out_dir / OUTLETS_FILE,
    }
    series.to_dataframe().to_csv(paths["series"], index=False)
    series.outlets.to_csv(paths["outlets"], index=False)
    logger.info("wrote %s and %s", paths["series"], paths["outlets"])
    paths["metadata"] = write_json(out_dir / METADATA_FILE, series.metadata)
    return paths


def write_steady(profile: SteadyProfile, out_dir: PathLike) -> Dict[str, Path]:
    """Write the steady profile as ``profile.csv`` and its report as ``report.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"profile": out_dir / PROFILE_FILE}
    profile.to_dataframe().to_csv(paths["profile"], index=False)
    logger.info("wrote %s", paths["profile"])
    paths["report"] = write_json(out_dir / REPORT_FILE, profile.report.to_dict())
    return paths
