"""
Vessel geometry, operating points and zone fluxes.

Heights are measured upward.  Zone membership uses half-open intervals closed
at their lower end: the underflow region lies below ``z_U``, zone 1 is
``[z_U, z_F)``, zone 2 is ``[z_F, z_E)`` and the effluent region starts at
``z_E``.  Aggregate fluxes are counted positive upward, solids fluxes positive
downward.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Protocol, Union

import numpy as np

from .constitutive import (
    ArrayLike,
    ConstitutiveParams,
    _check_fraction,
    _fb,
    _jb,
    _like,
)
from .errors import DomainError, NonPositiveEffluentFlow, NonPositiveParameter


class Zone(str, Enum):
    E = "E"
    TWO = "2"
    ONE = "1"
    U = "U"


class Flows(Protocol):
    """Anything carrying the five control variables of the column."""

    Q_U: float
    Q_F: float
    Q_W: float
    phi_F: float
    psi_F: float


@dataclass(frozen=True)
class ColumnGeometry:
    """
    Heights [m] and cross-sectional areas [m²] of the column.

    The area is ``A_E`` from the feed level upward and ``A_U`` below it.
    """

    z_U: float = 0.0
    z_F: float = 0.33
    z_E: float = 1.0
    A_U: float = 8.365e-3
    A_E: float = 7.225e-3

    def __post_init__(self):
        if not self.z_U < self.z_F < self.z_E:
            raise DomainError(
                f"heights must satisfy z_U < z_F < z_E, got "
                f"z_U={self.z_U!r}, z_F={self.z_F!r}, z_E={self.z_E!r}"
            )
        for name in ("A_U", "A_E"):
            value = getattr(self, name)
            if not value > 0:
                raise NonPositiveParameter(
                    f"{name} must be strictly positive, got {value!r}"
                )

    @property
    def H(self) -> float:
        return self.z_E - self.z_U

    def area(self, z: ArrayLike) -> ArrayLike:
        z = np.asarray(z, dtype=float)
        return _like(np.where(z >= self.z_F, self.A_E, self.A_U), z)

    def mean_area(self, lo: ArrayLike, hi: ArrayLike) -> ArrayLike:
        """Exact average of the two-piece area over ``[lo, hi)``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        below = np.clip((self.z_F - lo) / (hi - lo), 0.0, 1.0)
        return _like(below * self.A_U + (1.0 - below) * self.A_E, lo)


DEFAULT_GEOMETRY = ColumnGeometry()


@dataclass(frozen=True)
class OperatingPoint:
    """
    Control variables of the column.

    Parameters
    ----------
    Q_U, Q_F, Q_W : float
        Underflow, feed and wash-water volumetric flows [m³/s].
    phi_F, psi_F : float
        Aggregate and solids volume fractions of the feed.
    """

    Q_U: float
    Q_F: float
    Q_W: float
    phi_F: float
    psi_F: float

    def __post_init__(self):
        if not self.Q_U >= 0:
            raise NonPositiveParameter(f"Q_U must be non-negative, got {self.Q_U!r}")
        if not self.Q_F > 0:
            raise NonPositiveParameter(
                f"Q_F must be strictly positive, got {self.Q_F!r}"
            )
        if not self.Q_W >= 0:
            raise NonPositiveParameter(f"Q_W must be non-negative, got {self.Q_W!r}")
        if not self.Q_E > 0:
            raise NonPositiveEffluentFlow(
                f"Q_E = Q_W + Q_F - Q_U must be positive, got {self.Q_E!r}"
            )
        if not (
            self.phi_F >= 0 and self.psi_F >= 0 and self.phi_F + self.psi_F <= 1
        ):
            raise DomainError(
                "feed fractions must satisfy phi_F, psi_F >= 0 and "
                f"phi_F + psi_F <= 1, got phi_F={self.phi_F!r}, psi_F={self.psi_F!r}"
            )

    @property
    def Q_E(self) -> float:
        return self.Q_W + self.Q_F - self.Q_U


class BulkVelocities(NamedTuple):
    q_E: float
    q_2: float
    q_1: float
    s_F: float


def bulk_velocities(geom: ColumnGeometry, op: Flows) -> BulkVelocities:
    """Zone bulk velocities and the feed flux per unit area [m/s]."""
    return BulkVelocities(
        q_E=(op.Q_W + op.Q_F - op.Q_U) / geom.A_E,
        q_2=(op.Q_F - op.Q_U) / geom.A_E,
        q_1=-op.Q_U / geom.A_U,
        s_F=op.Q_F * op.phi_F / geom.A_E,
    )


def bulk_velocity(z: ArrayLike, geom: ColumnGeometry, op: Flows) -> ArrayLike:
    """Upward bulk velocity of the mixture at height ``z`` [m/s]."""
    z = np.asarray(z, dtype=float)
    v = bulk_velocities(geom, op)
    return _like(
        np.where(z >= geom.z_E, v.q_E, np.where(z >= geom.z_F, v.q_2, v.q_1)), z
    )


def zone_velocity(zone: Union[Zone, str], geom: ColumnGeometry, op: Flows) -> float:
    v = bulk_velocities(geom, op)
    return {Zone.E: v.q_E, Zone.TWO: v.q_2, Zone.ONE: v.q_1, Zone.U: v.q_1}[
        Zone(zone)
    ]


def zone_flux_aggregate(
    phi: ArrayLike,
    zone: Union[Zone, str],
    op: Flows,
    p: ConstitutiveParams,
    geom: ColumnGeometry = DEFAULT_GEOMETRY,
) -> ArrayLike:
    """
    Upward aggregate flux of a zone [m/s].

    ``q_k*phi + j_b(phi)`` inside the column, pure bulk transport in the
    underflow and effluent regions.
    """
    zone = Zone(zone)
    arr = _check_fraction(phi)
    q = zone_velocity(zone, geom, op)
    if zone in (Zone.TWO, Zone.ONE):
        return _like(q * arr + _jb(arr, p), arr)
    return _like(q * arr, arr)


def zone_flux_solids(
    varphi: ArrayLike,
    phi: ArrayLike,
    zone: Union[Zone, str],
    op: Flows,
    p: ConstitutiveParams,
    geom: ColumnGeometry = DEFAULT_GEOMETRY,
) -> ArrayLike:
    """
    Downward solids flux of a zone [m/s].

    ``varphi`` is the solids fraction of the suspension between the bubbles,
    so the solids fraction of the mixture is ``(1 - phi)*varphi``.
    """
    zone = Zone(zone)
    s = _check_fraction(varphi, "varphi")
    a = _check_fraction(phi)
    q = zone_velocity(zone, geom, op)
    if zone in (Zone.TWO, Zone.ONE):
        value = (1.0 - a) * _fb(s, p) + (_jb(a, p) - (1.0 - a) * q) * s
    else:
        value = -(1.0 - a) * q * s
    value = np.asarray(value)
    return _like(value, value)
