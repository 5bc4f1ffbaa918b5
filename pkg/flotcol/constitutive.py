"""
Closed-form constitutive functions.

Gas-phase drift velocity, the batch drift flux, degenerate capillary diffusion,
hindered settling of solids and the critical points of zone fluxes.  Every
function accepts a scalar or an array of volume fractions; scalars give back
floats.  The critical fraction ``phi_c`` belongs to the low (pulp) branch of
every piecewise definition.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
import logging
import math
import threading
from typing import Callable, Optional, Tuple, Union

from cachetools import LFUCache, cached
from cachetools.keys import hashkey
import numpy as np
from scipy.optimize import bisect

from .errors import (
    DomainError,
    HindranceExponentTooSmall,
    NonPositiveParameter,
    ValidationError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

#: absolute tolerance on volume fractions for every bracketing root find
ROOT_XTOL = 1e-12
#: relative tolerance of the drainage compatibility condition
COMPATIBILITY_RTOL = 1e-12


class FluxKind(str, Enum):
    AGGREGATE = "aggregate"
    SOLIDS = "solids"


@dataclass(frozen=True)
class PhysicalParams:
    """
    Material constants of the liquid and the bubbles.

    Parameters
    ----------
    rho_f : float
        Fluid density [kg/m³].
    mu : float
        Fluid viscosity [Pa·s].
    r_b : float
        Bubble radius [m].
    C_PB : float
        Plateau-border drag coefficient.
    gamma_w : float
        Surface tension [N/m].
    g : float
        Acceleration of gravity [m/s²].
    m_fit, n_S : float
        Coefficient and exponent of the power-law fit of the channel radius.
    """

    rho_f: float = 1.0e3
    mu: float = 1.0e-3
    r_b: float = 4.13e-4
    C_PB: float = 50.0
    gamma_w: float = 3.5e-2
    g: float = 9.81
    m_fit: float = 1.28
    n_S: float = 0.46

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise NonPositiveParameter(
                    f"{f.name} must be strictly positive, got {value!r}"
                )
        if not self.n_S < 1:
            raise DomainError(f"n_S must lie in (0, 1), got {self.n_S!r}")


@dataclass(frozen=True)
class ConstitutiveParams:
    """
    Coefficients of the constitutive functions.

    ``d_cap = 0`` is admitted and switches capillarity off.  Use
    `ConstitutiveParams.compatible` or `derive_params` to get a ``v_drain``
    satisfying the continuity of the drift flux at ``phi_c``.
    """

    v_term: float
    n_b: float
    n_S: float
    phi_c: float
    v_drain: float
    d_cap: float
    v_inf: float
    n_RZ: float

    def __post_init__(self):
        if not 0 < self.phi_c < 1:
            raise DomainError(f"phi_c must lie in (0, 1), got {self.phi_c!r}")
        for name in ("v_term", "v_drain", "v_inf", "n_S"):
            value = getattr(self, name)
            if not value > 0:
                raise NonPositiveParameter(
                    f"{name} must be strictly positive, got {value!r}"
                )
        if not self.d_cap >= 0:
            raise NonPositiveParameter(
                f"d_cap must be non-negative, got {self.d_cap!r}"
            )
        if not self.n_RZ > 1:
            raise HindranceExponentTooSmall(f"n_RZ must exceed 1, got {self.n_RZ!r}")
        if not self.n_b >= 1 + 2 * self.n_S:
            raise HindranceExponentTooSmall(
                f"n_b must be at least 1 + 2*n_S = {1 + 2 * self.n_S!r}, "
                f"got {self.n_b!r}"
            )
        expected = compatible_drainage_velocity(
            self.v_term, self.n_b, self.n_S, self.phi_c
        )
        if abs(self.v_drain - expected) > COMPATIBILITY_RTOL * expected:
            raise ValidationError(
                f"v_drain={self.v_drain!r} violates the compatibility condition, "
                f"which requires v_drain={expected!r}"
            )

    @classmethod
    def compatible(
        cls,
        *,
        v_term: float,
        n_b: float,
        n_S: float,
        phi_c: float,
        d_cap: float,
        v_inf: float,
        n_RZ: float,
    ) -> "ConstitutiveParams":
        """Build a parameter set whose drainage velocity is the compatible one."""
        return cls(
            v_term=v_term,
            n_b=n_b,
            n_S=n_S,
            phi_c=phi_c,
            v_drain=compatible_drainage_velocity(v_term, n_b, n_S, phi_c),
            d_cap=d_cap,
            v_inf=v_inf,
            n_RZ=n_RZ,
        )

    @property
    def phi_infl(self) -> float:
        """Inflection point of the batch drift flux."""
        return min(2.0 / (self.n_b + 1.0), self.phi_c)

    @property
    def varphi_infl(self) -> float:
        """Inflection point of the batch settling flux."""
        return 2.0 / (self.n_RZ + 1.0)


def compatible_drainage_velocity(
    v_term: float, n_b: float, n_S: float, phi_c: float
) -> float:
    return v_term * (1.0 - phi_c) ** (n_b - 1.0 - 2.0 * n_S)


def capillarity_length(phys: PhysicalParams) -> float:
    """``d_cap = n_S*gamma_w / (m*r_b*rho_f*g)`` [m]."""
    return phys.n_S * phys.gamma_w / (phys.m_fit * phys.r_b * phys.rho_f * phys.g)


def physical_drainage_velocity(phys: PhysicalParams) -> float:
    """
    Drainage velocity from the Plateau-border force balance [m/s].

    Diagnostic only; computations use the compatible value so that the drift
    flux stays continuous at ``phi_c``.
    """
    C2 = math.sqrt(3.0) - math.pi / 2.0
    return (
        phys.m_fit**2
        * C2
        * phys.r_b**2
        * phys.rho_f
        * phys.g
        / (3.0 * phys.C_PB * phys.mu)
    )


def derive_params(
    phys: PhysicalParams,
    v_term: float,
    n_b: float,
    phi_c: float,
    v_inf: float,
    n_RZ: float,
) -> ConstitutiveParams:
    """
    Derive the constitutive coefficients from physical constants.

    Parameters
    ----------
    phys : PhysicalParams
    v_term : float
        Terminal rise velocity of a single bubble [m/s].
    n_b : float
        Bubble hindrance exponent, at least ``1 + 2*phys.n_S``.
    phi_c : float
        Critical aggregate fraction where bubbles start to deform.
    v_inf, n_RZ : float
        Stokes velocity [m/s] and Richardson-Zaki exponent of the solids.

    Returns
    -------
    ConstitutiveParams
        With ``d_cap`` from `capillarity_length` and ``v_drain`` from the
        compatibility condition.

    Raises
    ------
    HindranceExponentTooSmall
    NonPositiveParameter
    """
    if not n_b >= 1 + 2 * phys.n_S:
        raise HindranceExponentTooSmall(
            f"n_b must be at least 1 + 2*n_S = {1 + 2 * phys.n_S:.6g}, got {n_b!r}"
        )
    params = ConstitutiveParams.compatible(
        v_term=v_term,
        n_b=n_b,
        n_S=phys.n_S,
        phi_c=phi_c,
        d_cap=capillarity_length(phys),
        v_inf=v_inf,
        n_RZ=n_RZ,
    )
    logger.debug(
        "derived v_drain=%.6g m/s (physical estimate %.6g m/s), d_cap=%.6g m",
        params.v_drain,
        physical_drainage_velocity(phys),
        params.d_cap,
    )
    return params


DEFAULT_PHYSICAL = PhysicalParams()
DEFAULT_INPUTS = {
    "v_term": 2.7e-2,
    "n_b": 2.5,
    "phi_c": 0.74,
    "v_inf": 5.0e-3,
    "n_RZ": 1.5,
}


def default_params() -> ConstitutiveParams:
    """The desk-scale parameter set of a laboratory flotation column."""
    return derive_params(DEFAULT_PHYSICAL, **DEFAULT_INPUTS)


def _check_fraction(x: ArrayLike, name: str = "phi") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0) & (arr <= 1))):
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")
    return arr


def _like(value: np.ndarray, template: np.ndarray) -> ArrayLike:
    if template.ndim == 0:
        return float(value)
    return value


# The underscored evaluators skip validation and clip to [0, 1]; the scheme
# calls them on every step.


def _vtilde(phi, p: ConstitutiveParams):
    phi = np.clip(phi, 0.0, 1.0)
    one = 1.0 - phi
    return np.where(
        phi <= p.phi_c,
        p.v_term * one**p.n_b,
        p.v_drain * one ** (2.0 * p.n_S + 1.0),
    )


def _vtilde_high(phi, p: ConstitutiveParams):
    return p.v_drain * (1.0 - np.clip(phi, 0.0, 1.0)) ** (2.0 * p.n_S + 1.0)


def _vtilde_prime(phi, p: ConstitutiveParams, side: str = "left"):
    phi = np.clip(phi, 0.0, 1.0)
    one = 1.0 - phi
    low = phi <= p.phi_c if side == "left" else phi < p.phi_c
    return np.where(
        low,
        -p.v_term * p.n_b * one ** (p.n_b - 1.0),
        -p.v_drain * (2.0 * p.n_S + 1.0) * one ** (2.0 * p.n_S),
    )


def _jb(phi, p: ConstitutiveParams):
    return np.clip(phi, 0.0, 1.0) * _vtilde(phi, p)


def _jb_prime(phi, p: ConstitutiveParams, side: str = "left"):
    phi = np.clip(phi, 0.0, 1.0)
    one = 1.0 - phi
    low = phi <= p.phi_c if side == "left" else phi < p.phi_c
    return np.where(
        low,
        p.v_term * one ** (p.n_b - 1.0) * (1.0 - (1.0 + p.n_b) * phi),
        p.v_drain * one ** (2.0 * p.n_S) * (1.0 - (2.0 + 2.0 * p.n_S) * phi),
    )


def _d_high(phi, p: ConstitutiveParams):
    phi = np.clip(phi, 0.0, 1.0)
    return p.v_drain * p.d_cap * phi * (1.0 - phi) ** p.n_S


def _d(phi, p: ConstitutiveParams):
    return np.where(np.asarray(phi) > p.phi_c, _d_high(phi, p), 0.0)


def _omega(phi, n_S: float):
    return (1.0 - phi) ** (n_S + 1.0) * ((n_S + 1.0) * phi + 1.0)


def _D(phi, p: ConstitutiveParams):
    phi = np.clip(phi, 0.0, 1.0)
    scale = p.v_drain * p.d_cap / ((p.n_S + 1.0) * (p.n_S + 2.0))
    return np.where(
        phi > p.phi_c,
        scale * (_omega(p.phi_c, p.n_S) - _omega(phi, p.n_S)),
        0.0,
    )


def _vhs(varphi, p: ConstitutiveParams):
    return p.v_inf * (1.0 - np.clip(varphi, 0.0, 1.0)) ** p.n_RZ


def _vhs_prime(varphi, p: ConstitutiveParams):
    return -p.v_inf * p.n_RZ * (1.0 - np.clip(varphi, 0.0, 1.0)) ** (p.n_RZ - 1.0)


def _fb(varphi, p: ConstitutiveParams):
    return np.clip(varphi, 0.0, 1.0) * _vhs(varphi, p)


def _fb_prime(varphi, p: ConstitutiveParams):
    varphi = np.clip(varphi, 0.0, 1.0)
    return (
        p.v_inf
        * (1.0 - varphi) ** (p.n_RZ - 1.0)
        * (1.0 - (1.0 + p.n_RZ) * varphi)
    )


def vtilde(phi: ArrayLike, p: ConstitutiveParams) -> ArrayLike:
    """Rise velocity of aggregates relative to the mixture [m/s]."""
    arr = _check_fraction(phi)
    return _like(_vtilde(arr, p), arr)


def vtilde_prime(
    phi: ArrayLike, p: ConstitutiveParams, side: str = "left"
) -> ArrayLike:
    arr = _check_fraction(phi)
    return _like(_vtilde_prime(arr, p, side), arr)


def batch_flux_jb(phi: ArrayLike, p: ConstitutiveParams) -> ArrayLike:
    """Batch drift flux ``j_b = phi * vtilde(phi)`` [m/s]."""
    arr = _check_fraction(phi)
    return _like(_jb(arr, p), arr)


def jb_prime(phi: ArrayLike, p: ConstitutiveParams, side: str = "left") -> ArrayLike:
    """
    Derivative of the batch drift flux.

    The derivative jumps at ``phi_c``; ``side="left"`` (default) returns the
    pulp-branch value there and ``side="right"`` the froth-branch value.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    arr = _check_fraction(phi)
    return _like(_jb_prime(arr, p, side), arr)


def diffusion_d(phi: ArrayLike, p: ConstitutiveParams) -> ArrayLike:
    """Capillary diffusion coefficient, zero on ``[0, phi_c]`` [m/s]."""
    arr = _check_fraction(phi)
    return _like(_d(arr, p), arr)


def diffusion_D(phi: ArrayLike, p: ConstitutiveParams) -> ArrayLike:
    """Primitive of `diffusion_d` vanishing at ``phi_c`` [m²/s]."""
    arr = _check_fraction(phi)
    return _like(_D(arr, p), arr)


def hindered_settling(varphi: ArrayLike, p: ConstitutiveParams) -> ArrayLike:
    """Richardson-Zaki settling velocity of solids [m/s]."""
    arr = _check_fraction(varphi, "varphi")
    return _like(_vhs(arr, p), arr)


def fb(varphi: ArrayLike, p: ConstitutiveParams) -> ArrayLike:
    """Batch settling flux of solids [m/s]."""
    arr = _check_fraction(varphi, "varphi")
    return _like(_fb(arr, p), arr)


def fb_prime(varphi: ArrayLike, p: ConstitutiveParams) -> ArrayLike:
    arr = _check_fraction(varphi, "varphi")
    return _like(_fb_prime(arr, p), arr)


def convective_flux(
    x: ArrayLike, q: float, p: ConstitutiveParams, flux_kind="aggregate"
) -> ArrayLike:
    """
    Batch flux plus bulk transport, ``j_b(x) + q*x`` or ``f_b(x) + q*x``.

    For aggregates ``q`` is the upward bulk velocity of a zone.  For solids
    ``q`` is counted positive downward, so zone 1 uses ``q = -q_1``.
    """
    kind = FluxKind(flux_kind)
    arr = _check_fraction(x, "phi" if kind is FluxKind.AGGREGATE else "varphi")
    batch = _jb if kind is FluxKind.AGGREGATE else _fb
    return _like(batch(arr, p) + q * arr, arr)


@dataclass(frozen=True)
class CriticalPoints:
    """
    Characteristic points of ``x -> batch(x) + q*x``.

    Attributes
    ----------
    phi_infl : float
        Inflection point of the batch flux.
    q_neg, q_bar : float
        ``-batch'(0)`` and ``-batch'(phi_infl)``.
    phi_sup_M : float
        Location of the local maximum on ``[0, phi_infl]``.
    phi_Z : float or None
        Positive zero of the flux, present for ``q_neg < q < 0``.
    phi_sub_M : float or None
        Local minimum above the inflection point, present for ``q >= 0``.
    phi_m : float or None
        Point below ``phi_sup_M`` with the same flux as ``phi_sub_M``.
    """

    q: float
    phi_infl: float
    q_neg: float
    q_bar: float
    phi_sup_M: float
    phi_Z: Optional[float]
    phi_sub_M: Optional[float]
    phi_m: Optional[float]


def _kind_functions(
    p: ConstitutiveParams, kind: FluxKind
) -> Tuple[Callable, Callable, Callable, float]:
    if kind is FluxKind.AGGREGATE:
        return (
            lambda x: float(_jb(x, p)),
            lambda x: float(_jb_prime(x, p)),
            lambda x: float(_vtilde(x, p)),
            p.phi_infl,
        )
    return (
        lambda x: float(_fb(x, p)),
        lambda x: float(_fb_prime(x, p)),
        lambda x: float(_vhs(x, p)),
        p.varphi_infl,
    )


def _critical_key(q, p, flux_kind="aggregate"):
    return hashkey(float(q), p, FluxKind(flux_kind))


@cached(cache=LFUCache(maxsize=1024), key=_critical_key, lock=threading.Lock())
def critical_points(
    q: float, p: ConstitutiveParams, flux_kind="aggregate"
) -> CriticalPoints:
    """
    Critical points of a zone flux with bulk velocity ``q``.

    Parameters
    ----------
    q : float
        Bulk velocity [m/s].  See `convective_flux` for the sign convention
        of the solids kind.
    p : ConstitutiveParams
    flux_kind : {"aggregate", "solids"}

    Returns
    -------
    CriticalPoints
    """
    kind = FluxKind(flux_kind)
    q = float(q)
    flux, dflux, velocity, infl = _kind_functions(p, kind)
    q_neg = -dflux(0.0)
    q_bar = -dflux(infl)

    if q <= q_neg:
        sup_M = 0.0
    elif q < q_bar:
        sup_M = bisect(lambda x: dflux(x) + q, 0.0, infl, xtol=ROOT_XTOL)
    else:
        sup_M = infl

    phi_Z = None
    if q_neg < q < 0:
        phi_Z = bisect(lambda x: velocity(x) + q, 0.0, 1.0, xtol=ROOT_XTOL)

    sub_M = None
    phi_m = None
    if q >= q_bar:
        sub_M = phi_m = infl
    elif q >= 0:
        sub_M = bisect(lambda x: dflux(x) + q, infl, 1.0, xtol=ROOT_XTOL)
        target = flux(sub_M) + q * sub_M
        phi_m = bisect(
            lambda x: flux(x) + q * x - target, 0.0, sup_M, xtol=ROOT_XTOL
        )

    logger.debug(
        "critical points (%s, q=%.6g): sup_M=%s Z=%s sub_M=%s m=%s",
        kind.value,
        q,
        sup_M,
        phi_Z,
        sub_M,
        phi_m,
    )
    return CriticalPoints(
        q=q,
        phi_infl=infl,
        q_neg=q_neg,
        q_bar=q_bar,
        phi_sup_M=sup_M,
        phi_Z=phi_Z,
        phi_sub_M=sub_M,
        phi_m=phi_m,
    )
